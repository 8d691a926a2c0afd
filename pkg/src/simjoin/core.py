"""Domain types: relations, thresholds, and join results.

All types are immutable after construction and safe to share across
threads read-only.  Offsets are 64-bit unsigned, similarities fp32.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RawRelation:
    """Ordered collection of tokens addressed by dense 0-based offset.

    Retained for the lifetime of a pipeline so matched offsets can be
    decoded back to the original strings.
    """

    name: str
    tokens: Tuple[str, ...]

    def __init__(self, name: str, tokens: Sequence[str]):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "tokens", tuple(tokens))

    def __len__(self) -> int:
        return len(self.tokens)


def make_raw_relation(name: str, tokens: Sequence[str]) -> RawRelation:
    return RawRelation(name, tokens)


@dataclass(frozen=True, eq=False)
class EmbeddedRelation:
    """Dense row-major |R| x dim fp32 matrix, one row per tuple.

    Rows are contiguous (offset i occupies data[i]); `normalized` records
    whether rows have been scaled to unit L2 norm.  `repaired_rows` counts
    zero-norm rows that were repaired during normalization.
    """

    data: np.ndarray
    dim: int
    normalized: bool
    source_name: str
    repaired_rows: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.data.dtype != np.float32:
            raise ValueError("embedding matrix must be float32")
        if self.data.ndim != 2 or self.data.shape[1] != self.dim:
            raise ValueError(
                f"matrix shape {self.data.shape} inconsistent with dim {self.dim}"
            )
        if not self.data.flags.c_contiguous:
            raise ValueError("embedding matrix must be row-major contiguous")
        _readonly(self.data)

    def __len__(self) -> int:
        return self.data.shape[0]

    def row(self, offset: int) -> np.ndarray:
        return self.data[offset]


@dataclass(frozen=True)
class Threshold:
    """Cosine-similarity cut; a pair matches iff similarity >= value."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (-1.0 <= v <= 1.0):
            raise ValueError(f"threshold out of range [-1, 1]: {v}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, value) -> "Threshold":
        return value if isinstance(value, Threshold) else cls(float(value))


_EMPTY_U64 = _readonly(np.empty(0, dtype=np.uint64))
_EMPTY_F32 = _readonly(np.empty(0, dtype=np.float32))


@dataclass(frozen=True, eq=False)
class MatchSet:
    """Sparse join result: (left offset, right offset, similarity) triples.

    Canonical form is sorted lexicographically by (left, right) with no
    duplicate pairs; construct through :func:`canonicalize` or the join
    operators to guarantee it.
    """

    left_name: str
    right_name: str
    lefts: np.ndarray = field(default=_EMPTY_U64)
    rights: np.ndarray = field(default=_EMPTY_U64)
    sims: np.ndarray = field(default=_EMPTY_F32)

    def __post_init__(self):
        if not (len(self.lefts) == len(self.rights) == len(self.sims)):
            raise ValueError("match columns must have equal length")
        for arr, dt in ((self.lefts, np.uint64), (self.rights, np.uint64),
                        (self.sims, np.float32)):
            if arr.dtype != dt:
                raise ValueError(f"expected {dt}, got {arr.dtype}")
            _readonly(arr)

    @classmethod
    def from_rows(cls, left_name: str, right_name: str,
                  rows: Sequence[Tuple[int, int, float]]) -> "MatchSet":
        if not rows:
            return cls(left_name, right_name)
        lefts = np.array([r[0] for r in rows], dtype=np.uint64)
        rights = np.array([r[1] for r in rows], dtype=np.uint64)
        sims = np.array([r[2] for r in rows], dtype=np.float32)
        return cls(left_name, right_name, lefts, rights, sims)

    def __len__(self) -> int:
        return len(self.lefts)

    def __iter__(self) -> Iterator[Tuple[int, int, float]]:
        for l, r, s in zip(self.lefts, self.rights, self.sims):
            yield int(l), int(r), float(s)

    def as_tuples(self):
        return list(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatchSet):
            return NotImplemented
        return (
            self.left_name == other.left_name
            and self.right_name == other.right_name
            and np.array_equal(self.lefts, other.lefts)
            and np.array_equal(self.rights, other.rights)
            and np.array_equal(self.sims, other.sims)
        )


class MatchSink:
    """Append-only accumulator for match triples, one per worker.

    Not thread-safe; each worker owns a private sink and the results are
    merged and canonicalized once at the end.
    """

    def __init__(self):
        self._lefts = []
        self._rights = []
        self._sims = []

    def add(self, lefts: np.ndarray, rights: np.ndarray, sims: np.ndarray):
        if len(lefts):
            self._lefts.append(lefts)
            self._rights.append(rights)
            self._sims.append(sims)

    def __len__(self) -> int:
        return sum(len(c) for c in self._lefts)

    @staticmethod
    def merge(sinks: Sequence["MatchSink"], left_name: str,
              right_name: str) -> MatchSet:
        lefts = [c for s in sinks for c in s._lefts]
        if not lefts:
            return MatchSet(left_name, right_name)
        rights = [c for s in sinks for c in s._rights]
        sims = [c for s in sinks for c in s._sims]
        raw = MatchSet(
            left_name,
            right_name,
            np.concatenate(lefts),
            np.concatenate(rights),
            np.concatenate(sims),
        )
        return canonicalize(raw)


def canonicalize(m: MatchSet) -> MatchSet:
    """Sort by (left, right) and drop duplicate pairs, keeping the first.

    Idempotent; makes parallel join output independent of worker
    scheduling.
    """
    if len(m) == 0:
        return m
    order = np.lexsort((m.rights, m.lefts))  # stable: ties keep input order
    lefts = m.lefts[order]
    rights = m.rights[order]
    sims = m.sims[order]
    keep = np.ones(len(lefts), dtype=bool)
    keep[1:] = (lefts[1:] != lefts[:-1]) | (rights[1:] != rights[:-1])
    return MatchSet(m.left_name, m.right_name,
                    np.ascontiguousarray(lefts[keep]),
                    np.ascontiguousarray(rights[keep]),
                    np.ascontiguousarray(sims[keep]))


def check_dims(dim_a: int, dim_b: int) -> None:
    if dim_a != dim_b:
        raise DimensionMismatch(f"dimension mismatch: {dim_a} vs {dim_b}")
