"""Analytic cost model for the join formulations and plan selection.

Per-tuple constants: A (data access), M (model invocation), and a
comparison cost affine in the dimensionality, C(dim) = c0 + c1*dim.  The
blocked formulation gets a calibrated per-element efficiency factor kappa
(<= 1) plus a per-tile overhead for re-touching input rows.  Estimates
are advisory: the engine asserts their algebraic relationships, never
wall-clock agreement.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from . import kernels
from .join import plan_batches

_FIELDS = (
    "access_ns",
    "model_ns",
    "compare_base_ns",
    "compare_per_dim_ns",
    "tensor_efficiency",
)


@dataclass(frozen=True)
class CostParams:
    access_ns: float
    model_ns: float
    compare_base_ns: float
    compare_per_dim_ns: float
    tensor_efficiency: float = 1.0

    def __post_init__(self):
        for name in _FIELDS[:4]:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (0.0 < self.tensor_efficiency <= 1.0):
            raise ValueError("tensor_efficiency must be in (0, 1]")

    def compare_ns(self, dim: int) -> float:
        return self.compare_base_ns + self.compare_per_dim_ns * dim

    def to_dict(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in _FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: Dict[str, float]) -> "CostParams":
        missing = [k for k in _FIELDS if k not in d]
        if missing:
            raise ValueError(f"missing cost parameter(s): {missing}")
        return cls(**{k: float(d[k]) for k in _FIELDS})

    @classmethod
    def from_json(cls, text: str) -> "CostParams":
        return cls.from_dict(json.loads(text))


def estimate_selection(n_rows: int, dim: int, p: CostParams) -> float:
    """|R| * (A + M + C): scan, embed, and compare every tuple once."""
    return n_rows * (p.access_ns + p.model_ns + p.compare_ns(dim))


def estimate_nlj_naive(left_rows: int, right_rows: int, dim: int,
                       p: CostParams) -> float:
    """|R| * |S| * (A + M + C): the model is invoked per processed pair."""
    return left_rows * right_rows * (
        p.access_ns + p.model_ns + p.compare_ns(dim)
    )


def estimate_nlj_prefetch(left_rows: int, right_rows: int, dim: int,
                          p: CostParams) -> float:
    """|R| * |S| * (A + C) + (|R| + |S|) * M: model cost turns linear."""
    return (
        left_rows * right_rows * (p.access_ns + p.compare_ns(dim))
        + (left_rows + right_rows) * p.model_ns
    )


def estimate_tensor(left_rows: int, right_rows: int, dim: int,
                    budget_bytes: int, p: CostParams) -> float:
    """Prefetch-style model cost, blocked compute scaled by kappa, plus a
    per-tile overhead for re-touching the block's input rows."""
    plan = plan_batches(left_rows, right_rows, dim, budget_bytes)
    tile_overhead = len(plan.tiles) * p.access_ns * (
        plan.left_block_rows + plan.right_block_rows
    )
    return (
        left_rows * right_rows
        * (p.access_ns + p.tensor_efficiency * p.compare_ns(dim))
        + (left_rows + right_rows) * p.model_ns
        + tile_overhead
    )


_PLAN_ORDER = ("tensor", "prefetch_nlj", "naive_nlj")  # tie-break preference


def choose_plan(left_rows: int, right_rows: int, dim: int, budget_bytes: int,
                p: CostParams) -> Tuple[str, Dict[str, float]]:
    """Argmin of the three join estimates; exact ties prefer the more
    optimized formulation (tensor > prefetch > naive)."""
    estimates = {
        "naive_nlj": estimate_nlj_naive(left_rows, right_rows, dim, p),
        "prefetch_nlj": estimate_nlj_prefetch(left_rows, right_rows, dim, p),
        "tensor": estimate_tensor(left_rows, right_rows, dim, budget_bytes, p),
    }
    best = min(estimates.values())
    for name in _PLAN_ORDER:
        if estimates[name] == best:
            return name, estimates
    raise AssertionError("unreachable")


def _median_of(fn, reps: int = 5) -> float:
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    samples.sort()
    return float(samples[len(samples) // 2])


def calibrate(model, dim: int,
              sample_sizes: Sequence[int] = (1000,)) -> CostParams:
    """Measure the cost constants on this machine.

    A: per-row cost of a sequential scan over an embedded matrix.
    M: per-call cost of the model, including injected latency.
    c0, c1: affine fit of the scalar-kernel comparison cost at two dims.
    kappa: blocked-kernel vs scalar-kernel time per pair on a 1024x1024
    block.  All values are medians of >= 5 repetitions and are reported,
    not asserted; noisy hosts yield noisy params.
    """
    for n in sample_sizes:
        if n < 100:
            raise ValueError("sample sizes must be >= 100")
    n = max(sample_sizes)
    rng = np.random.default_rng(0xC057)

    mat = rng.standard_normal((n, dim)).astype(np.float32)
    access_ns = _median_of(lambda: kernels.row_norms(mat)) / n

    n_embed = min(n, 2000)
    tokens = [f"cal_{i}" for i in range(n_embed)]
    def embed_pass():
        for tok in tokens:
            model.embed(tok)
    model_ns = _median_of(embed_pass) / n_embed

    d1, d2 = 8, 256
    per_pair = {}
    for d in (d1, d2):
        m = rng.standard_normal((n, d)).astype(np.float32)
        a = rng.standard_normal(d).astype(np.float32)
        loops = max(1, 2_000_000 // (n * d))
        def compare_pass():
            for _ in range(loops):
                kernels.dots_vm(a, m)
        per_pair[d] = _median_of(compare_pass) / (loops * n)
    c1 = max((per_pair[d2] - per_pair[d1]) / (d2 - d1), 1e-6)
    c0 = max(per_pair[d1] - c1 * d1, 0.0)

    nb = 1024
    lb = rng.standard_normal((nb, dim)).astype(np.float32)
    rb = rng.standard_normal((nb, dim)).astype(np.float32)
    kernels.normalize_rows_inplace(lb)
    kernels.normalize_rows_inplace(rb)
    bt = kernels.pack_transpose(rb)
    buf = np.empty((nb, nb), dtype=np.float32)
    tile_ns = _median_of(lambda: kernels.tile_dot(lb, bt, buf)) / (nb * nb)
    def scalar_pass():
        for i in range(nb):
            kernels.dots_vm(lb[i], rb)
    scalar_ns = _median_of(scalar_pass) / (nb * nb)
    kappa = min(max(tile_ns / scalar_ns, 1e-9), 1.0)

    return CostParams(
        access_ns=access_ns,
        model_ns=model_ns,
        compare_base_ns=c0,
        compare_per_dim_ns=c1,
        tensor_efficiency=kappa,
    )
