"""Embedding models and the operators that move tokens into vector space.

Models are deterministic token -> fp32 vector functions with an exact
invocation counter.  Models never memoize: repeated embeddings of the
same token are recomputed and each counts, which is what makes the
quadratic model cost of the naive join observable.  Caching, where it is
wanted, belongs to the operators (prefetching), not the model.
"""

from __future__ import annotations

import math
import threading
import time
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import kernels
from .core import EmbeddedRelation, RawRelation
from .errors import OffsetOutOfRange, OutOfVocabulary, ParseError

_U64 = (1 << 64) - 1


def _busy_wait(ns: int) -> None:
    deadline = time.perf_counter_ns() + ns
    while time.perf_counter_ns() < deadline:
        pass


class EmbeddingModel:
    """Base model: deterministic embed with atomic call accounting."""

    kind = "abstract"

    def __init__(self, dim: int, latency_ns: int = 0):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        if latency_ns < 0:
            raise ValueError("latency_ns must be >= 0")
        self.dim = dim
        self.latency_ns = latency_ns
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def _count(self, n: int = 1) -> None:
        with self._lock:
            self._calls += n

    def _vector(self, token: str) -> np.ndarray:
        raise NotImplementedError

    def embed(self, token: str) -> np.ndarray:
        """Embed one token; always costs one model invocation."""
        vec = self._vector(token)
        self._count()
        if self.latency_ns:
            _busy_wait(self.latency_ns)
        return vec

    def _embed_into(self, tokens: Sequence[str], out: np.ndarray) -> None:
        for i, token in enumerate(tokens):
            out[i] = self.embed(token)


class SyntheticModel(EmbeddingModel):
    """Deterministic pseudo-random unit vectors, reproducible cross-language.

    Per token: stream seed = FNV-1a 64 of the UTF-8 bytes XOR the model
    seed; dim splitmix64 outputs mapped to [-1, 1) in fp64, truncated to
    fp32, then L2-normalized (fp64 accumulator, fp64 divide).  An optional
    per-call busy-wait emulates expensive models.
    """

    kind = "synthetic"

    def __init__(self, dim: int, seed: int = 0, latency_ns: int = 0):
        super().__init__(dim, latency_ns)
        self.seed = seed & _U64

    def _stream_seed(self, token: str) -> int:
        return kernels.fnv1a64(token.encode("utf-8")) ^ self.seed

    def _vector(self, token: str) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float32)
        kernels.synthetic_fill(self._stream_seed(token), out)
        return out

    def _embed_into(self, tokens: Sequence[str], out: np.ndarray) -> None:
        if self.latency_ns:
            super()._embed_into(tokens, out)
            return
        fnv = kernels.fnv1a64
        seed = self.seed
        seeds = np.fromiter(
            (fnv(t.encode("utf-8")) ^ seed for t in tokens),
            dtype=np.uint64,
            count=len(tokens),
        )
        kernels.synthetic_fill_many(seeds, out)
        self._count(len(tokens))


class LookupModel(EmbeddingModel):
    """Table-backed model loaded from a .vec file.

    Out-of-vocabulary policy: 'error' raises OutOfVocabulary; 'synthetic'
    falls back to the synthetic recipe seeded with the model seed, which
    emulates models that can embed unseen tokens.
    """

    kind = "lookup"

    def __init__(self, table: Dict[str, np.ndarray], dim: int,
                 oov: str = "error", seed: int = 0, latency_ns: int = 0):
        super().__init__(dim, latency_ns)
        if oov not in ("error", "synthetic"):
            raise ValueError(f"unknown OOV policy {oov!r}")
        self.oov = oov
        self.seed = seed & _U64
        self._table = {}
        for token, vec in table.items():
            arr = np.ascontiguousarray(vec, dtype=np.float32)
            if arr.shape != (dim,):
                raise ValueError(
                    f"vector for {token!r} has shape {arr.shape}, want ({dim},)"
                )
            arr.flags.writeable = False
            self._table[token] = arr

    def __contains__(self, token: str) -> bool:
        return token in self._table

    def __len__(self) -> int:
        return len(self._table)

    def _vector(self, token: str) -> np.ndarray:
        hit = self._table.get(token)
        if hit is not None:
            return hit.copy()
        if self.oov == "error":
            raise OutOfVocabulary(token)
        out = np.empty(self.dim, dtype=np.float32)
        stream = kernels.fnv1a64(token.encode("utf-8")) ^ self.seed
        kernels.synthetic_fill(stream, out)
        return out


def embed_relation(model: EmbeddingModel, r: RawRelation) -> EmbeddedRelation:
    """Embed every tuple once, in offset order; exactly |R| model calls.

    The result is not normalized; normalization is a separate explicit
    step so the join formulations can differ in where they pay for it.
    """
    out = np.empty((len(r), model.dim), dtype=np.float32)
    model._embed_into(r.tokens, out)
    return EmbeddedRelation(out, model.dim, False, r.name)


def decode(r: RawRelation, offset: int) -> str:
    """Recover the original token for a tuple offset (the lookup-table
    realization of inverse embedding)."""
    if not 0 <= offset < len(r):
        raise OffsetOutOfRange(f"offset {offset} outside relation of {len(r)}")
    return r.tokens[offset]


def load_vec_file(path, oov: str = "error", seed: int = 0) -> LookupModel:
    """Load a word2vec text format file: header "<count> <dim>", then one
    "<token> <f1> ... <fdim>" line per vector.  Duplicate tokens keep the
    last occurrence."""
    table: Dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        header = fh.readline()
        if not header:
            raise ParseError(1, "empty file, expected '<count> <dim>' header")
        parts = header.rstrip("\n").split(" ")
        if len(parts) != 2:
            raise ParseError(1, f"malformed header {header.rstrip()!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(1, f"malformed header {header.rstrip()!r}")
        if count < 0 or dim < 1:
            raise ParseError(1, f"invalid header values {count} {dim}")
        for lineno in range(2, count + 2):
            line = fh.readline()
            if not line:
                raise ParseError(
                    lineno, f"expected {count} vectors, file ended early"
                )
            fields = line.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise ParseError(
                    lineno,
                    f"expected {dim} components, got {len(fields) - 1}",
                )
            token = fields[0]
            try:
                values = [float(x) for x in fields[1:]]
            except ValueError:
                raise ParseError(lineno, "unparseable float component")
            if not all(math.isfinite(v) for v in values):
                raise ParseError(lineno, "non-finite float component")
            table[token] = np.array(values, dtype=np.float32)
        extra = fh.readline()
        if extra.strip():
            raise ParseError(count + 2, "trailing data after declared count")
    return LookupModel(table, dim, oov=oov, seed=seed)


def top_k(model: EmbeddingModel, er: EmbeddedRelation, raw: RawRelation,
          probe: str, k: int) -> List[Tuple[str, float]]:
    """The k most cosine-similar tokens to the probe, ties broken by
    lower offset."""
    from .linalg import cosine_vm

    if k < 1:
        raise ValueError("k must be >= 1")
    if len(er) != len(raw):
        raise ValueError("embedded and raw relations disagree on cardinality")
    probe_vec = model.embed(probe)
    sims = cosine_vm(probe_vec, er)
    order = np.argsort(-sims, kind="stable")[:k]
    return [(raw.tokens[i], float(sims[i])) for i in order]
