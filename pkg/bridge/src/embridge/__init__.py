"""Bridge from real face photos to the matchdodge interchange file formats.

The bridge only exports: it detects and crops faces, embeds them with a
pluggable backend, and writes embedding-set and pair-list files that the
attack pipeline consumes by path. It never runs search or inversion.
"""

from .backends import EmbeddingBackend, SeededToyBackend, load_backend
from .detect import CenterSquareDetector, FaceDetector, load_detector
from .errors import BridgeError, ExportError, PairSpecError
from .export import ExportManifest, ExportResult, export_embeddings, export_pairs
from .formats import read_embedding_ids, write_embedding_file, write_pair_file

__all__ = [
    "BridgeError",
    "CenterSquareDetector",
    "EmbeddingBackend",
    "ExportError",
    "ExportManifest",
    "ExportResult",
    "FaceDetector",
    "PairSpecError",
    "SeededToyBackend",
    "export_embeddings",
    "export_pairs",
    "load_backend",
    "load_detector",
    "read_embedding_ids",
    "write_embedding_file",
    "write_pair_file",
]
