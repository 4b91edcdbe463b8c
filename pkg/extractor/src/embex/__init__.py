"""Image embedding extractor producing EMB1 files."""

from .backbones import available_backbones, load_backbone
from .emb1 import write_emb1
from .extract import ExtractionJob, extract
from .manifest import Manifest, ManifestError, load_manifest

__version__ = "0.1.0"

__all__ = [
    "ExtractionJob",
    "Manifest",
    "ManifestError",
    "available_backbones",
    "extract",
    "load_backbone",
    "load_manifest",
    "write_emb1",
    "__version__",
]
