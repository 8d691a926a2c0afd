"""Pure-numpy kernel backend.

Mirrors the compiled backend's interface so it can be swapped in when the
extension is unavailable.  Canonical similarities here are fp32 multiply
then fp32 add, accumulated sequentially over the dimension axis; the tile
kernel realizes that order with one vectorized outer-product update per
dimension, so cells are bitwise equal to ``dot_seq`` of the same rows and
results do not depend on tiling or thread count.  (The compiled backend
fuses the multiply-add, so similarities may differ from this backend in
the last bits; each backend is internally exact.)

Slower than the compiled backend by roughly an order of magnitude on the
join kernels; intended for portability, not throughput.
"""

import math

import numpy as np

NAME = "python"

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def _splitmix64(stream_seed: int, count: int) -> np.ndarray:
    idx = np.arange(1, count + 1, dtype=np.uint64)
    state = np.uint64(stream_seed & _U64) + idx * _GAMMA
    z = (state ^ (state >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _normalize_row_inplace(row: np.ndarray) -> int:
    # sequential fp64 sum of squares, matching the compiled backend bitwise
    sq = np.multiply(row.astype(np.float64), row.astype(np.float64))
    ss = float(np.cumsum(sq)[-1]) if sq.size else 0.0
    norm = math.sqrt(ss)
    repaired = 0
    if norm < 1e-12:
        row[0] = np.float32(1.0)
        sq = np.multiply(row.astype(np.float64), row.astype(np.float64))
        ss = float(np.cumsum(sq)[-1])
        norm = math.sqrt(ss)
        repaired = 1
    row[:] = (row.astype(np.float64) / norm).astype(np.float32)
    return repaired


def synthetic_fill(stream_seed: int, out: np.ndarray) -> None:
    dim = out.shape[0]
    if dim == 0:
        return
    u = _splitmix64(stream_seed, dim)
    v = (u.astype(np.float64) * 2.0**-64) * 2.0 - 1.0
    out[:] = v.astype(np.float32)
    _normalize_row_inplace(out)


def synthetic_fill_many(seeds: np.ndarray, out: np.ndarray) -> None:
    for i in range(out.shape[0]):
        synthetic_fill(int(seeds[i]), out[i])


def normalize_rows_inplace(m: np.ndarray) -> int:
    n, dim = m.shape
    if n == 0 or dim == 0:
        return 0
    m64 = m.astype(np.float64)
    ss = np.cumsum(np.multiply(m64, m64), axis=1, dtype=np.float64)[:, -1]
    norms = np.sqrt(ss)
    bad = np.nonzero(norms < 1e-12)[0]
    for i in bad:
        m[i, 0] = np.float32(1.0)
        r64 = m[i].astype(np.float64)
        norms[i] = math.sqrt(float(np.cumsum(r64 * r64)[-1]))
    m64 = m.astype(np.float64)
    m[:, :] = (m64 / norms[:, None]).astype(np.float32)
    return int(bad.size)


def row_norms(m: np.ndarray) -> np.ndarray:
    n, dim = m.shape
    if n == 0:
        return np.empty(0, dtype=np.float32)
    if dim == 0:
        return np.zeros(n, dtype=np.float32)
    m64 = m.astype(np.float64)
    ss = np.cumsum(np.multiply(m64, m64), axis=1, dtype=np.float64)[:, -1]
    return np.sqrt(ss).astype(np.float32)


def dot_seq(a: np.ndarray, b: np.ndarray) -> float:
    prod = np.multiply(a, b, dtype=np.float32)
    if prod.size == 0:
        return 0.0
    return float(np.cumsum(prod, dtype=np.float32)[-1])


def dots_vm(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    n, dim = m.shape
    if n == 0:
        return np.empty(0, dtype=np.float32)
    if dim == 0:
        return np.zeros(n, dtype=np.float32)
    prods = np.multiply(a[None, :], m, dtype=np.float32)
    return np.cumsum(prods, axis=1, dtype=np.float32)[:, -1]


def pack_transpose(m: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(m.T)


def tile_dot(left: np.ndarray, bt: np.ndarray, out: np.ndarray) -> None:
    nl = left.shape[0]
    nr = bt.shape[1]
    if nl == 0 or nr == 0:
        return
    out[:, :] = 0.0
    tmp = np.empty((nl, nr), dtype=np.float32)
    for d in range(left.shape[1]):
        np.multiply(left[:, d, None], bt[d, None, :], out=tmp)
        out += tmp


def scan_hits(buf: np.ndarray, theta: float, left0: int, right0: int):
    ii, jj = np.nonzero(buf >= np.float32(theta))
    lefts = ii.astype(np.uint64) + np.uint64(left0)
    rights = jj.astype(np.uint64) + np.uint64(right0)
    return lefts, rights, buf[ii, jj]


def nlj_rows(left: np.ndarray, i0: int, i1: int, right: np.ndarray,
             theta: float, band: float):
    chunks = []
    ns = right.shape[0]
    if ns == 0 or i0 >= i1:
        return chunks
    cutoff = np.float32(theta) - np.float32(band)
    t32 = np.float32(theta)
    for i in range(i0, i1):
        approx = right @ left[i]
        cand = np.nonzero(approx >= cutoff)[0]
        if cand.size == 0:
            continue
        prods = np.multiply(left[i][None, :], right[cand], dtype=np.float32)
        sims = np.cumsum(prods, axis=1, dtype=np.float32)[:, -1]
        keep = sims >= t32
        if not keep.any():
            continue
        kept = cand[keep]
        chunks.append((np.full(kept.size, i, dtype=np.uint64),
                       kept.astype(np.uint64), sims[keep]))
    return chunks
