"""Benchmark harness: run records and the desk-scale experiment suite.

Experiments (desk scale caps runtime at minutes; paper scale needs server
hardware and is never part of the test suite):

- e1: naive vs prefetch NLJ under an expensive (latency-injected) model.
- e2: prefetch NLJ thread scaling.
- e3: input ordering (smaller vs larger relation in the inner loop).
- e4: tensor-join batch sweep over shrinking memory budgets.
- e5: prefetch NLJ vs tensor join across sizes and dimensionalities.
- backends: compiled vs pure-Python kernel backend on the same joins.

Every configuration runs >= 3 repetitions; the reported row carries the
median wall time plus min/max and a derived per-FP32-element time.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import List, Optional, Sequence

from . import kernels
from .core import RawRelation
from .embedding import SyntheticModel
from .join import JoinStats, nlj_naive, nlj_prefetch, tensor_join

RUN_RECORD_FIELDS = (
    "algo",
    "left_rows",
    "right_rows",
    "dim",
    "theta",
    "threads",
    "budget_bytes",
    "model_spec",
    "seed",
    "inner_relation",
    "wall_nanos",
    "model_calls_left",
    "model_calls_right",
    "pairs_compared",
    "matches",
    "peak_buffer_bytes",
    "timestamp",
)

BENCH_CSV_FIELDS = (
    ("experiment", "scale", "reps")
    + RUN_RECORD_FIELDS
    + ("wall_nanos_min", "wall_nanos_max", "per_fp32_ns")
)


@dataclass(frozen=True)
class RunRecord:
    """Flat, serializable record of one join run: config echo + stats."""

    algo: str
    left_rows: int
    right_rows: int
    dim: int
    theta: float
    threads: int
    budget_bytes: Optional[int]
    model_spec: str
    seed: Optional[int]
    inner_relation: str
    wall_nanos: int
    model_calls_left: int
    model_calls_right: int
    pairs_compared: int
    matches: int
    peak_buffer_bytes: int
    timestamp: str

    @classmethod
    def from_stats(cls, stats: JoinStats, *, left_rows: int, right_rows: int,
                   dim: int, theta: float, model_spec: str,
                   seed: Optional[int],
                   budget_bytes: Optional[int]) -> "RunRecord":
        return cls(
            algo=stats.algo,
            left_rows=left_rows,
            right_rows=right_rows,
            dim=dim,
            theta=theta,
            threads=stats.threads,
            budget_bytes=budget_bytes,
            model_spec=model_spec,
            seed=seed,
            inner_relation=stats.inner_relation,
            wall_nanos=stats.wall_nanos,
            model_calls_left=stats.model_calls_left,
            model_calls_right=stats.model_calls_right,
            pairs_compared=stats.pairs_compared,
            matches=stats.matches,
            peak_buffer_bytes=stats.peak_buffer_bytes,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in RUN_RECORD_FIELDS}


def generate_tokens(rows: int, seed: int) -> List[str]:
    """Deterministic synthetic tokens, the cmd-gen format."""
    return [f"tok_{seed}_{i}" for i in range(rows)]


def _relation(name: str, rows: int, seed: int) -> RawRelation:
    return RawRelation(name, generate_tokens(rows, seed))


@dataclass(frozen=True)
class BenchConfig:
    algo: str  # naive | prefetch | tensor
    left_rows: int
    right_rows: int
    dim: int
    theta: float
    threads: int = 1
    budget_bytes: Optional[int] = None
    latency_ns: int = 0
    model_seed: int = 7
    left_seed: int = 101
    right_seed: int = 202
    inner: Optional[str] = None

    @property
    def model_spec(self) -> str:
        spec = f"synthetic:seed={self.model_seed}:dim={self.dim}"
        if self.latency_ns:
            spec += f":latency_ns={self.latency_ns}"
        return spec


def run_algo(cfg: BenchConfig, left: RawRelation,
             right: RawRelation) -> JoinStats:
    model = SyntheticModel(cfg.dim, seed=cfg.model_seed,
                           latency_ns=cfg.latency_ns)
    if cfg.algo == "naive":
        _, stats = nlj_naive(left, right, model, cfg.theta, inner=cfg.inner)
    elif cfg.algo == "prefetch":
        _, stats = nlj_prefetch(left, right, model, cfg.theta,
                                threads=cfg.threads, inner=cfg.inner)
    elif cfg.algo == "tensor":
        budget = cfg.budget_bytes
        if budget is None:
            budget = max(4, cfg.left_rows * cfg.right_rows * 4)
        _, stats = tensor_join(left, right, model, cfg.theta, budget,
                               threads=cfg.threads)
    else:
        raise ValueError(f"unknown algo {cfg.algo!r}")
    return stats


def run_config(cfg: BenchConfig, reps: int = 3,
               backend: Optional[str] = None) -> dict:
    """Run one configuration `reps` times; returns a bench CSV row dict
    carrying the median-wall run plus min/max."""
    left = _relation("left", cfg.left_rows, cfg.left_seed)
    right = _relation("right", cfg.right_rows, cfg.right_seed)
    prev_backend = kernels.active_backend()
    if backend is not None:
        kernels.set_backend(backend)
    try:
        runs = [run_algo(cfg, left, right) for _ in range(reps)]
    finally:
        if backend is not None:
            kernels.set_backend(prev_backend)
    walls = sorted(s.wall_nanos for s in runs)
    median_wall = walls[len(walls) // 2]
    median_stats = next(s for s in runs if s.wall_nanos == median_wall)
    record = RunRecord.from_stats(
        median_stats,
        left_rows=cfg.left_rows,
        right_rows=cfg.right_rows,
        dim=cfg.dim,
        theta=cfg.theta,
        model_spec=cfg.model_spec,
        seed=cfg.model_seed,
        budget_bytes=cfg.budget_bytes,
    )
    row = record.to_dict()
    row["reps"] = reps
    row["wall_nanos_min"] = walls[0]
    row["wall_nanos_max"] = walls[-1]
    fp32 = cfg.left_rows * cfg.right_rows * cfg.dim
    row["per_fp32_ns"] = median_wall / fp32 if fp32 else ""
    return row


def median_wall_nanos(cfg: BenchConfig, reps: int) -> int:
    left = _relation("left", cfg.left_rows, cfg.left_seed)
    right = _relation("right", cfg.right_rows, cfg.right_seed)
    walls = [run_algo(cfg, left, right).wall_nanos for _ in range(reps)]
    return int(statistics.median(walls))


_THETA = 0.4  # sparse but non-empty matches for synthetic cross-relation tokens


def _e1(sizes) -> List[BenchConfig]:
    out = []
    for n in sizes:
        for algo in ("naive", "prefetch"):
            out.append(BenchConfig(algo, n, n, 100, _THETA, threads=1,
                                   latency_ns=1000))
    return out


def _e2(sizes) -> List[BenchConfig]:
    return [
        BenchConfig("prefetch", n, n, 100, _THETA, threads=t)
        for n in sizes
        for t in (1, 2, 4, 8)
    ]


def _e3(sizes) -> List[BenchConfig]:
    out = []
    for big, small in sizes:
        for inner in ("right", "left"):  # right = smaller inner here
            out.append(BenchConfig("prefetch", big, small, 100, _THETA,
                                   threads=8, inner=inner))
    return out


def _e4(sizes_budgets) -> List[BenchConfig]:
    out = []
    for n, budgets in sizes_budgets:
        for budget in budgets:
            actual = n * n * 4 if budget == "whole" else budget
            out.append(BenchConfig("tensor", n, n, 100, _THETA, threads=8,
                                   budget_bytes=actual))
    return out


def _e5(sizes, dims) -> List[BenchConfig]:
    out = []
    for n in sizes:
        for algo in ("prefetch", "tensor"):
            out.append(BenchConfig(algo, n, n, 100, _THETA, threads=8,
                                   budget_bytes=64_000_000))
    for d in dims:
        for algo in ("prefetch", "tensor"):
            out.append(BenchConfig(algo, 1024, 1024, d, _THETA, threads=8,
                                   budget_bytes=64_000_000))
    return out


_DESK = {
    "e1": lambda: _e1([256, 512, 1024]),
    "e2": lambda: _e2([2048]),
    "e3": lambda: _e3([(4096, 1024)]),
    "e4": lambda: _e4([(4096, ["whole", 64_000_000, 16_000_000, 4_000_000,
                               1_000_000])]),
    "e5": lambda: _e5([1024, 2048, 4096], [4, 64, 256]),
}

_PAPER = {
    "e1": lambda: _e1([10_000]),
    "e2": lambda: _e2([10_000]),
    "e3": lambda: _e3([(100_000, 10_000)]),
    "e4": lambda: _e4([(100_000, [1_000_000_000, 256_000_000, 64_000_000])]),
    "e5": lambda: _e5([10_000, 100_000], [4, 64, 256]),
}

EXPERIMENTS = tuple(sorted(_DESK)) + ("backends",)
SCALES = ("desk", "paper")


def _backend_rows(reps: int) -> List[dict]:
    rows = []
    for backend in kernels.available_backends():
        for algo in ("prefetch", "tensor"):
            cfg = BenchConfig(algo, 1024, 1024, 100, _THETA, threads=2,
                              budget_bytes=64_000_000)
            row = run_config(cfg, reps=reps, backend=backend)
            row["experiment"] = f"backends[{backend}]"
            rows.append(row)
    return rows


def run_experiment(experiment: str, scale: str = "desk",
                   reps: int = 3) -> List[dict]:
    """Run one experiment; returns bench CSV row dicts."""
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    if experiment == "backends":
        rows = _backend_rows(reps)
    else:
        table = _DESK if scale == "desk" else _PAPER
        if experiment not in table:
            raise ValueError(f"unknown experiment {experiment!r}")
        rows = [run_config(cfg, reps=reps) for cfg in table[experiment]()]
        for row in rows:
            row["experiment"] = experiment
    for row in rows:
        row["scale"] = scale
    return rows


def write_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_CSV_FIELDS,
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            out = {k: ("" if row.get(k) is None else row.get(k, ""))
                   for k in BENCH_CSV_FIELDS}
            writer.writerow(out)
