"""Threshold-join operators: naive NLJ, prefetch NLJ, and the blocked
tensor formulation, plus the memory-budgeted batch planner.

All three formulations emit the same canonical per-pair similarity (the
sequential fp32 kernel), so their match sets are bitwise identical on the
same inputs, across any thread count and any batch budget.  They differ
in where model cost and compute locality land:

- naive: embeds the outer tuple once per outer iteration and the inner
  tuple once per pair; Theta(|R| x |S|) model invocations.
- prefetch: embeds each relation exactly once, then row-at-a-time
  pairwise similarity.
- tensor: embeds once, normalizes, and computes pairwise similarity as a
  blocked matrix product scanned against the threshold, under an explicit
  per-worker memory budget.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import kernels
from .core import (
    EmbeddedRelation,
    MatchSet,
    MatchSink,
    RawRelation,
    Threshold,
)
from .embedding import EmbeddingModel, embed_relation
from .errors import BudgetTooSmall
from .linalg import Tile, cosine_vm, normalize_rows, threshold_scan, tile_similarity

# Prefilter slack for the row-at-a-time kernel: candidates this close to
# the threshold are re-evaluated with the canonical kernel.  Must bound
# |reassociated - sequential| for fp32 dots at supported dims (<= ~1e-5
# for dim <= 1024); decisions are therefore always canonical.
PREFILTER_BAND = 1e-4

# Executed tiles are split along left rows so a worker's buffer stays
# cache-resident; purely an execution refinement of the planned grid.
_EXEC_CHUNK_ELEMS = 1 << 19


@dataclass(frozen=True)
class BatchPlan:
    """Tile grid realizing the buffer constraint |part(R)| x |part(S)|."""

    left_block_rows: int
    right_block_rows: int
    tiles: Tuple[Tile, ...]
    buffer_elems: int
    budget_bytes: int


@dataclass(frozen=True)
class JoinStats:
    wall_nanos: int
    model_calls_left: int
    model_calls_right: int
    pairs_compared: int
    matches: int
    peak_buffer_bytes: int
    threads: int
    algo: str
    inner_relation: str

    def to_dict(self) -> dict:
        return {
            "wall_nanos": self.wall_nanos,
            "model_calls_left": self.model_calls_left,
            "model_calls_right": self.model_calls_right,
            "pairs_compared": self.pairs_compared,
            "matches": self.matches,
            "peak_buffer_bytes": self.peak_buffer_bytes,
            "threads": self.threads,
            "algo": self.algo,
            "inner_relation": self.inner_relation,
        }


def plan_batches(left_rows: int, right_rows: int, dim: int,
                 budget_bytes: int) -> BatchPlan:
    """Exact-cover tile grid with blocks as close to square as the budget
    allows; only trailing tiles may be smaller than the block size."""
    if budget_bytes < 4:
        raise BudgetTooSmall(
            f"budget {budget_bytes} bytes cannot hold one fp32 cell"
        )
    budget_elems = budget_bytes // 4
    b = math.isqrt(budget_elems)
    left_block = max(1, min(b, left_rows))
    right_block = max(1, min(budget_elems // left_block, right_rows))
    tiles = []
    for ls in range(0, left_rows, left_block):
        lc = min(left_block, left_rows - ls)
        for rs in range(0, right_rows, right_block):
            rc = min(right_block, right_rows - rs)
            tiles.append(Tile(ls, lc, rs, rc))
    buffer_elems = max((t.area for t in tiles), default=0)
    return BatchPlan(left_block, right_block, tuple(tiles), buffer_elems,
                     budget_bytes)


def _pick_inner(left: RawRelation, right: RawRelation,
                inner: Optional[str]) -> str:
    if inner is None:
        # smaller relation inside for locality; ties keep right inside
        return "right" if len(right) <= len(left) else "left"
    if inner not in ("left", "right"):
        raise ValueError(f"inner must be 'left', 'right', or None, got {inner!r}")
    return inner


def _run_workers(n_workers: int, target) -> None:
    if n_workers <= 1:
        target(0)
        return
    failures: List[BaseException] = []

    def run(w):
        try:
            target(w)
        except BaseException as exc:  # noqa: BLE001 - re-raised below
            failures.append(exc)

    threads = [
        threading.Thread(target=run, args=(w,), name=f"simjoin-w{w}")
        for w in range(n_workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        raise failures[0]


def e_selection(raw: RawRelation, model: EmbeddingModel, probe: str,
                theta) -> Tuple[MatchSet, JoinStats]:
    """Offsets of tuples whose cosine to the embedded probe is >= theta.

    Scans and embeds the relation once plus one probe embedding: exactly
    |R| + 1 model calls.
    """
    t = Threshold.of(theta)
    t0 = time.perf_counter_ns()
    probe_vec = model.embed(probe)
    er = embed_relation(model, raw)
    if len(er):
        sims = cosine_vm(probe_vec, er)
        hits = np.nonzero(sims >= np.float32(t.value))[0]
        matches = MatchSet(
            raw.name, "probe",
            hits.astype(np.uint64),
            np.zeros(len(hits), dtype=np.uint64),
            np.ascontiguousarray(sims[hits]),
        )
    else:
        matches = MatchSet(raw.name, "probe")
    wall = time.perf_counter_ns() - t0
    stats = JoinStats(
        wall_nanos=wall,
        model_calls_left=len(raw),
        model_calls_right=1,
        pairs_compared=len(raw),
        matches=len(matches),
        peak_buffer_bytes=0,
        threads=1,
        algo="e_selection",
        inner_relation="right",
    )
    return matches, stats


def nlj_naive(left: RawRelation, right: RawRelation, model: EmbeddingModel,
              theta, inner: Optional[str] = None) -> Tuple[MatchSet, JoinStats]:
    """Nested-loop join that invokes the model inside the pair loop.

    The outer tuple is embedded once per outer iteration, the inner tuple
    once per pair: |outer| + |outer| * |inner| model calls in total.  No
    embedding is cached anywhere.
    """
    t = Threshold.of(theta)
    inner_name = _pick_inner(left, right, inner)
    t0 = time.perf_counter_ns()
    if inner_name == "right":
        outer_rel, inner_rel = left, right
    else:
        outer_rel, inner_rel = right, left
    theta32 = np.float32(t.value)
    dot = kernels.dot_seq
    norm_inplace = kernels.normalize_rows_inplace
    rows: List[Tuple[int, int, float]] = []
    for i, outer_tok in enumerate(outer_rel.tokens):
        v_out = model.embed(outer_tok)
        norm_inplace(v_out.reshape(1, -1))
        for j, inner_tok in enumerate(inner_rel.tokens):
            v_in = model.embed(inner_tok)
            norm_inplace(v_in.reshape(1, -1))
            sim = dot(v_out, v_in)
            if sim >= theta32:
                if inner_name == "right":
                    rows.append((i, j, sim))
                else:
                    rows.append((j, i, sim))
    sink = MatchSink()
    if rows:
        sink.add(
            np.array([r[0] for r in rows], dtype=np.uint64),
            np.array([r[1] for r in rows], dtype=np.uint64),
            np.array([r[2] for r in rows], dtype=np.float32),
        )
    matches = MatchSink.merge([sink], left.name, right.name)
    wall = time.perf_counter_ns() - t0
    outer_calls = len(outer_rel)
    inner_calls = len(outer_rel) * len(inner_rel)
    stats = JoinStats(
        wall_nanos=wall,
        model_calls_left=outer_calls if inner_name == "right" else inner_calls,
        model_calls_right=inner_calls if inner_name == "right" else outer_calls,
        pairs_compared=len(left) * len(right),
        matches=len(matches),
        peak_buffer_bytes=0,
        threads=1,
        algo="naive_nlj",
        inner_relation=inner_name,
    )
    return matches, stats


def nlj_prefetch(left: RawRelation, right: RawRelation, model: EmbeddingModel,
                 theta, threads: int = 1,
                 inner: Optional[str] = None) -> Tuple[MatchSet, JoinStats]:
    """NLJ with prefetched embeddings: each relation embedded exactly once
    (|R| + |S| model calls), then row-at-a-time pairwise similarity with
    the smaller relation in the inner loop.  The outer relation is
    row-partitioned across up to `threads` workers; the result is
    canonical and independent of the thread count.
    """
    t = Threshold.of(theta)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    inner_name = _pick_inner(left, right, inner)
    t0 = time.perf_counter_ns()
    er_left = embed_relation(model, left)
    er_right = embed_relation(model, right)
    n_left = normalize_rows(er_left)
    n_right = normalize_rows(er_right)
    if inner_name == "right":
        outer_mat, inner_mat = n_left.data, n_right.data
    else:
        outer_mat, inner_mat = n_right.data, n_left.data
    n_outer = outer_mat.shape[0]
    n_inner = inner_mat.shape[0]
    theta32 = float(t.value)
    n_workers = max(1, min(threads, n_outer))
    bounds = [n_outer * w // n_workers for w in range(n_workers + 1)]
    sinks = [MatchSink() for _ in range(n_workers)]
    nlj_rows = kernels.nlj_rows

    def work(w: int) -> None:
        chunks = nlj_rows(outer_mat, bounds[w], bounds[w + 1], inner_mat,
                          theta32, PREFILTER_BAND)
        sink = sinks[w]
        for i_arr, j_arr, s_arr in chunks:
            if inner_name == "right":
                sink.add(i_arr, j_arr, s_arr)
            else:
                sink.add(j_arr, i_arr, s_arr)

    if n_outer and n_inner:
        _run_workers(n_workers, work)
    matches = MatchSink.merge(sinks, left.name, right.name)
    wall = time.perf_counter_ns() - t0
    hit_buffer = max(4 * n_inner, 32768) * 20  # u64 + u64 + f32 per slot
    stats = JoinStats(
        wall_nanos=wall,
        model_calls_left=len(left),
        model_calls_right=len(right),
        pairs_compared=len(left) * len(right),
        matches=len(matches),
        peak_buffer_bytes=n_workers * hit_buffer,
        threads=threads,
        algo="prefetch_nlj",
        inner_relation=inner_name,
    )
    return matches, stats


def _exec_tiles(plan: BatchPlan) -> List[Tile]:
    """Split planned tiles along left rows for cache residency and
    parallelism; an exact cover of the same pair grid.  Chunk rows are
    kept a multiple of 12 so the blocked kernel's register rows divide
    them evenly."""
    out: List[Tile] = []
    for tile in plan.tiles:
        rows_cap = max(1, _EXEC_CHUNK_ELEMS // tile.right_row_count)
        if rows_cap > 12:
            rows_cap -= rows_cap % 12
        if rows_cap >= tile.left_row_count:
            out.append(tile)
            continue
        ls_end = tile.left_row_start + tile.left_row_count
        for ls in range(tile.left_row_start, ls_end, rows_cap):
            out.append(Tile(ls, min(rows_cap, ls_end - ls),
                            tile.right_row_start, tile.right_row_count))
    return out


def tensor_join(left: RawRelation, right: RawRelation, model: EmbeddingModel,
                theta, budget_bytes: int,
                threads: int = 1) -> Tuple[MatchSet, JoinStats]:
    """Blocked tensor formulation: embed once per relation, normalize so
    cosine becomes a plain dot, then run the planned tile grid through the
    blocked kernel and threshold scan.

    Tiles (split into row ranges when a tile is larger than a cache-sized
    chunk) are distributed across up to `threads` workers, each owning one
    reusable similarity buffer bounded by the budget; total transient
    memory is at most threads x budget_bytes.
    """
    t = Threshold.of(theta)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    t0 = time.perf_counter_ns()
    plan = plan_batches(len(left), len(right), model.dim, budget_bytes)
    er_left = embed_relation(model, left)
    er_right = embed_relation(model, right)
    n_left = normalize_rows(er_left)
    n_right = normalize_rows(er_right)
    tiles = _exec_tiles(plan)
    n_workers = max(1, min(threads, len(tiles)))
    assignments = [tiles[w::n_workers] for w in range(n_workers)]
    sinks = [MatchSink() for _ in range(n_workers)]
    packed_right = kernels.pack_transpose(n_right.data) if tiles else None
    buffer_bytes = [0] * n_workers

    def work(w: int) -> None:
        mine = assignments[w]
        if not mine:
            return
        cap = max(tile.area for tile in mine)
        buf = np.empty(cap, dtype=np.float32)
        buffer_bytes[w] = buf.nbytes
        sink = sinks[w]
        for tile in mine:
            tile_similarity(n_left, n_right, tile, buf,
                            packed_right=packed_right)
            threshold_scan(buf, tile, t, sink)

    if tiles:
        _run_workers(n_workers, work)
    matches = MatchSink.merge(sinks, left.name, right.name)
    wall = time.perf_counter_ns() - t0
    stats = JoinStats(
        wall_nanos=wall,
        model_calls_left=len(left),
        model_calls_right=len(right),
        pairs_compared=len(left) * len(right),
        matches=len(matches),
        peak_buffer_bytes=sum(buffer_bytes),
        threads=threads,
        algo="tensor",
        inner_relation="right",
    )
    return matches, stats
