"""Masked-LM inference backends: serialized-graph and deterministic reference."""

from ..vocabulary import Vocabulary
from .base import MaskedLMBackend, PredictionOutcome, outcomes_from_logits
from .bundle import OnnxBackend, load_bundle
from .reference import UnigramBackend, load_reference_lexicon

REFERENCE_BACKEND_NAME = "reference"


def get_backend(spec: str, batch_size: int = 8) -> MaskedLMBackend:
    """Resolve a CLI backend spec: the literal "reference" or a bundle path."""
    if spec == REFERENCE_BACKEND_NAME:
        return UnigramBackend()
    return load_bundle(spec, batch_size=batch_size)


__all__ = [
    "MaskedLMBackend",
    "OnnxBackend",
    "PredictionOutcome",
    "REFERENCE_BACKEND_NAME",
    "UnigramBackend",
    "Vocabulary",
    "get_backend",
    "load_bundle",
    "load_reference_lexicon",
    "outcomes_from_logits",
]
