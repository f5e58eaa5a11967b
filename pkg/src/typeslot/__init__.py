"""Predict argument and return types for Python code and insert only the
annotations a type checker accepts."""

from .checker import BuiltinChecker, CheckerReport, ExternalChecker, make_checker
from .extract import FunctionRecord, SlotId, extract_corpus, extract_functions
from .model import ModelConfig, PredictionSet, TypePredictor
from .rewrite import apply_assignment, strip_annotations
from .search import GREEDY, NON_GREEDY, assign_types, two_phase_annotate
from .vocab import EmbeddingTable, TypeVocabulary, build_type_vocabulary, train_embeddings

__all__ = [
    "BuiltinChecker",
    "CheckerReport",
    "EmbeddingTable",
    "ExternalChecker",
    "FunctionRecord",
    "GREEDY",
    "ModelConfig",
    "NON_GREEDY",
    "PredictionSet",
    "SlotId",
    "TypePredictor",
    "TypeVocabulary",
    "apply_assignment",
    "assign_types",
    "build_type_vocabulary",
    "extract_corpus",
    "extract_functions",
    "make_checker",
    "strip_annotations",
    "train_embeddings",
    "two_phase_annotate",
]
