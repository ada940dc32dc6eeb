"""Export pretrained BERT-style masked LMs into scoring bundles."""

from .bundle import (
    BundleManifest,
    ExportVerificationFailed,
    ModelSourceError,
    export_bundle,
    verify_bundle,
)
from .graph_emit import UnsupportedArchitecture

__version__ = "0.1.0"
