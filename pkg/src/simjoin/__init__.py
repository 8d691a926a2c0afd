"""simjoin: a cosine-threshold similarity join engine.

Embeds context-rich tokens into fixed-dimension fp32 vectors through
pluggable models and joins relations on cosine-similarity predicates,
with three physical formulations (naive nested-loop, prefetched
nested-loop, and a memory-budgeted blocked tensor join) under an explicit
cost model.
"""

from .core import (
    EmbeddedRelation,
    MatchSet,
    RawRelation,
    Threshold,
    canonicalize,
    make_raw_relation,
)
from .cost import (
    CostParams,
    calibrate,
    choose_plan,
    estimate_nlj_naive,
    estimate_nlj_prefetch,
    estimate_selection,
    estimate_tensor,
)
from .embedding import (
    EmbeddingModel,
    LookupModel,
    SyntheticModel,
    decode,
    embed_relation,
    load_vec_file,
    top_k,
)
from .errors import (
    BudgetTooSmall,
    BufferTooSmall,
    DimensionMismatch,
    OffsetOutOfRange,
    OutOfVocabulary,
    ParseError,
    SimjoinError,
    ZeroVector,
)
from .join import (
    BatchPlan,
    JoinStats,
    e_selection,
    nlj_naive,
    nlj_prefetch,
    plan_batches,
    tensor_join,
)
from .linalg import (
    Tile,
    cosine_vm,
    cosine_vv,
    dot,
    normalize_rows,
    threshold_scan,
    tile_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "BatchPlan",
    "BudgetTooSmall",
    "BufferTooSmall",
    "CostParams",
    "DimensionMismatch",
    "EmbeddedRelation",
    "EmbeddingModel",
    "JoinStats",
    "LookupModel",
    "MatchSet",
    "OffsetOutOfRange",
    "OutOfVocabulary",
    "ParseError",
    "RawRelation",
    "SimjoinError",
    "SyntheticModel",
    "Threshold",
    "Tile",
    "ZeroVector",
    "calibrate",
    "canonicalize",
    "choose_plan",
    "cosine_vm",
    "cosine_vv",
    "decode",
    "dot",
    "e_selection",
    "embed_relation",
    "estimate_nlj_naive",
    "estimate_nlj_prefetch",
    "estimate_selection",
    "estimate_tensor",
    "load_vec_file",
    "make_raw_relation",
    "nlj_naive",
    "nlj_prefetch",
    "normalize_rows",
    "plan_batches",
    "tensor_join",
    "threshold_scan",
    "tile_similarity",
    "top_k",
]
