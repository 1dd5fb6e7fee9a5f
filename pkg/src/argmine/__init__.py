"""Argument mining over visually rich, free-form documents.

The pipeline: ingest HTML into segment-level documents, train a model
that fuses character/word text views with style and position signals,
predict per-segment component classes plus pairwise relations, and decode
those predictions into claim/premise structures.
"""

from .documents import (
    CLAIM,
    NON_ARGUMENT,
    PREMISE,
    REL_AFFILIATION,
    REL_CO_OCCURRENCE,
    REL_CO_RELEVANCE,
    REL_OTHER,
    ArgumentStructure,
    Component,
    Document,
    Segment,
    StyleMarks,
    read_corpus,
    validate_structure,
    write_corpus,
)
from .evaluation import EvalReport, evaluate, f1_scores, major_density
from .ingest import IngestConfig, parse_html
from .labels import (
    DecodeThresholds,
    SegmentLabels,
    SegmentPredictions,
    decode_structure,
    derive_labels,
    structures_equivalent,
)
from .model import ModelConfig, SegmentModel, TokenModel, TokenModelConfig
from .synth import GeneratorPriors, generate, render_html
from .training import DivergedError, FitResult, TrainConfig, fit, fit_token_model

__version__ = "0.1.0"

__all__ = [
    "ArgumentStructure",
    "CLAIM",
    "Component",
    "DecodeThresholds",
    "DivergedError",
    "Document",
    "EvalReport",
    "FitResult",
    "GeneratorPriors",
    "IngestConfig",
    "ModelConfig",
    "NON_ARGUMENT",
    "PREMISE",
    "REL_AFFILIATION",
    "REL_CO_OCCURRENCE",
    "REL_CO_RELEVANCE",
    "REL_OTHER",
    "Segment",
    "SegmentLabels",
    "SegmentModel",
    "SegmentPredictions",
    "StyleMarks",
    "TokenModel",
    "TokenModelConfig",
    "TrainConfig",
    "decode_structure",
    "derive_labels",
    "evaluate",
    "f1_scores",
    "fit",
    "fit_token_model",
    "generate",
    "major_density",
    "parse_html",
    "read_corpus",
    "render_html",
    "structures_equivalent",
    "validate_structure",
    "write_corpus",
    "__version__",
]
