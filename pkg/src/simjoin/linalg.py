"""Cosine-similarity kernels: scalar, vector-matrix, and blocked tiles.

The scalar kernel accumulates sequentially over the dimension in fp32 and
defines the canonical similarity value.  The tile kernel blocks over rows
for register and cache reuse but preserves the per-pair accumulation
order, so a tile cell is bitwise equal to the scalar kernel on the same
two rows regardless of how the pair grid was partitioned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import EmbeddedRelation, MatchSink, Threshold, check_dims
from .errors import BufferTooSmall, ZeroVector


@dataclass(frozen=True)
class Tile:
    """Rectangular sub-range of left rows x right rows."""

    left_row_start: int
    left_row_count: int
    right_row_start: int
    right_row_count: int

    def __post_init__(self):
        if self.left_row_count < 1 or self.right_row_count < 1:
            raise ValueError("tile row counts must be >= 1")
        if self.left_row_start < 0 or self.right_row_start < 0:
            raise ValueError("tile offsets must be >= 0")

    @property
    def area(self) -> int:
        return self.left_row_count * self.right_row_count


def _as_f32_vector(a) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float32)
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    return arr


def dot(a, b) -> np.float32:
    """Sequential fp32 dot product (the canonical accumulation order)."""
    va, vb = _as_f32_vector(a), _as_f32_vector(b)
    check_dims(va.shape[0], vb.shape[0])
    return np.float32(kernels.dot_seq(va, vb))


def _norm(v: np.ndarray) -> np.float32:
    return kernels.row_norms(v.reshape(1, -1))[0]


def cosine_vv(a, b) -> np.float32:
    """dot(a, b) / (||a|| * ||b||); raises ZeroVector on zero-norm input."""
    va, vb = _as_f32_vector(a), _as_f32_vector(b)
    check_dims(va.shape[0], vb.shape[0])
    na, nb = _norm(va), _norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine of a zero-norm vector")
    d = kernels.dot_seq(va, vb)
    return np.float32(d / np.float32(na * nb))


def cosine_vm(a, m: EmbeddedRelation) -> np.ndarray:
    """Cosine of `a` against every row of `m`; element i = cosine_vv(a, row i)."""
    va = _as_f32_vector(a)
    check_dims(va.shape[0], m.dim)
    na = _norm(va)
    if na == 0.0:
        raise ZeroVector("cosine of a zero-norm vector")
    if len(m) == 0:
        return np.empty(0, dtype=np.float32)
    norms = kernels.row_norms(m.data)
    if np.any(norms == 0.0):
        raise ZeroVector("relation contains a zero-norm row")
    dots = kernels.dots_vm(va, m.data)
    denom = np.multiply(np.float32(na), norms, dtype=np.float32)
    return np.divide(dots, denom, dtype=np.float32)


def normalize_rows(er: EmbeddedRelation) -> EmbeddedRelation:
    """Scale every row to unit L2 norm; zero rows are repaired and counted.

    A zero row gets component 0 set to 1.0 before scaling, per the
    synthetic-model repair rule.
    """
    if er.normalized:
        raise ValueError("relation is already normalized")
    data = er.data.copy()
    repaired = kernels.normalize_rows_inplace(data)
    return EmbeddedRelation(data, er.dim, True, er.source_name,
                            repaired_rows=repaired)


def normalize_vector(v: np.ndarray) -> np.ndarray:
    """Unit-normalize one vector with exactly the row-normalization rule."""
    row = np.ascontiguousarray(v, dtype=np.float32).reshape(1, -1).copy()
    kernels.normalize_rows_inplace(row)
    return row[0]


def _check_tile(left: EmbeddedRelation, right: EmbeddedRelation, tile: Tile):
    check_dims(left.dim, right.dim)
    if tile.left_row_start + tile.left_row_count > len(left):
        raise ValueError("tile exceeds left relation")
    if tile.right_row_start + tile.right_row_count > len(right):
        raise ValueError("tile exceeds right relation")


def tile_similarity(left: EmbeddedRelation, right: EmbeddedRelation,
                    tile: Tile, out: np.ndarray,
                    packed_right: np.ndarray | None = None) -> None:
    """Fill `out` with pairwise dots of the tile's rows.

    Both relations must be normalized so the dot is the cosine.  `out` is
    a caller-owned fp32 buffer of capacity >= tile area, reused across
    tiles.  `packed_right` optionally supplies the transposed right
    relation (dim x |S|) to avoid repacking per tile.
    """
    _check_tile(left, right, tile)
    if not (left.normalized and right.normalized):
        raise ValueError("tile_similarity requires normalized relations")
    if out.dtype != np.float32 or out.ndim != 1 or out.size < tile.area:
        if out.dtype != np.float32 or out.ndim != 1:
            raise BufferTooSmall("out buffer must be a 1-D float32 array")
        raise BufferTooSmall(
            f"buffer holds {out.size} cells, tile needs {tile.area}"
        )
    ls, lc = tile.left_row_start, tile.left_row_count
    rs, rc = tile.right_row_start, tile.right_row_count
    if packed_right is None:
        packed_right = kernels.pack_transpose(right.data[rs:rs + rc])
        bt = packed_right
    else:
        bt = packed_right[:, rs:rs + rc]
    view = out[:tile.area].reshape(lc, rc)
    kernels.tile_dot(left.data[ls:ls + lc], bt, view)


def threshold_scan(out: np.ndarray, tile: Tile, theta, sink: MatchSink) -> None:
    """Append (global left, global right, sim) for every cell >= theta."""
    t = Threshold.of(theta)
    view = out[:tile.area].reshape(tile.left_row_count, tile.right_row_count)
    lefts, rights, sims = kernels.scan_hits(
        view, np.float32(t.value), tile.left_row_start, tile.right_row_start
    )
    sink.add(lefts, rights, sims)
