"""Cross-lingual consistency harness for multilingual text-to-image benchmarks.

Measures how translation corrections change a model's per-concept correctness
scores: cross-consistency over image-embedding populations, text-domain
correction significance, pseudocorrection simulation, and the correlation
statistics linking them, plus benchmark revision tooling.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateSeriesError,
    HarnessError,
    InputError,
    MissingEmbeddingsError,
    ProviderError,
    RevisionConflictError,
)
from .inventory import (
    ConceptInventory,
    CorrectionRecord,
    ErrorType,
    diff_inventories,
    load_corrections,
    load_inventory,
    revise_benchmark,
    save_inventory,
    validate_inventory,
)
from .pseudo import PseudoCorrectionSample, evaluate_pseudocorrections, generate_pseudocorrections
from .similarity import (
    ConceptResult,
    ImagePopulation,
    cosine_similarity,
    cross_consistency,
    delta_sem,
    delta_xc,
    score_concepts,
)
from .stats import FitStats, PairedSeries, linear_fit, p_value, pearson, regression_ci, summarize
from .store import EmbeddingKey, EmbeddingStore, Modality, load_store, save_store

__all__ = [
    "ConceptInventory",
    "ConceptResult",
    "CorrectionRecord",
    "DegenerateSeriesError",
    "EmbeddingKey",
    "EmbeddingStore",
    "ErrorType",
    "FitStats",
    "HarnessError",
    "ImagePopulation",
    "InputError",
    "MissingEmbeddingsError",
    "Modality",
    "PairedSeries",
    "ProviderError",
    "PseudoCorrectionSample",
    "RevisionConflictError",
    "cosine_similarity",
    "cross_consistency",
    "delta_sem",
    "delta_xc",
    "diff_inventories",
    "evaluate_pseudocorrections",
    "generate_pseudocorrections",
    "linear_fit",
    "load_corrections",
    "load_inventory",
    "load_store",
    "p_value",
    "pearson",
    "regression_ci",
    "revise_benchmark",
    "save_inventory",
    "save_store",
    "score_concepts",
    "summarize",
    "validate_inventory",
]
