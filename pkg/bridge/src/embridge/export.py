"""Export pipelines: photo corpus -> embedding-set file, pair spec -> CSV.

Corpus layout is one directory per identity; the directory name becomes the
identity label. Input paths are processed in sorted order so reruns over the
same corpus produce byte-identical files.

Crops are resized with PIL BOX resampling. The resampling filter changes the
pixel values a real model sees, hence its embeddings; BOX is the documented
choice and anyone recalibrating against another export should keep it fixed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .backends import EmbeddingBackend, load_backend
from .detect import FaceDetector, load_detector
from .errors import ExportError, PairSpecError
from .formats import write_embedding_file, write_pair_file

logger = logging.getLogger("embridge")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp")


@dataclass
class ExportManifest:
    image_dir: str
    out_path: str
    backend: str = "toy"
    detector: str = "center-square"
    policy: str = "first"          # images per identity: "first" | "all"
    image_size: int = 160
    embed_dim: int = 128
    seed: int = 0
    role: str = "match"

    def __post_init__(self):
        if self.policy not in ("first", "all"):
            raise ExportError(f"policy must be 'first' or 'all', got {self.policy!r}")
        if self.image_size < 1:
            raise ExportError("image_size must be >= 1")


@dataclass
class ExportResult:
    out_path: str
    exported: int
    skipped: list[str] = field(default_factory=list)


def _corpus_paths(root: Path, policy: str) -> list[tuple[str, Path]]:
    """(identity label, image path) in deterministic sorted order."""
    if not root.is_dir():
        raise ExportError(f"image directory {root} does not exist")
    out = []
    for ident_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        images = sorted(p for p in ident_dir.iterdir()
                        if p.suffix.lower() in IMAGE_SUFFIXES)
        if policy == "first":
            images = images[:1]
        out.extend((ident_dir.name, img) for img in images)
    return out


def _preprocess(face: Image.Image, size: int) -> np.ndarray:
    """Resize to size x size (BOX), scale to [-1, 1], channel-first."""
    resized = face.resize((size, size), resample=Image.Resampling.BOX)
    arr = np.asarray(resized, dtype=np.float64) / 127.5 - 1.0
    return np.transpose(arr, (2, 0, 1))


def export_embeddings(manifest: ExportManifest,
                      backend: EmbeddingBackend | None = None,
                      detector: FaceDetector | None = None) -> ExportResult:
    backend = backend or load_backend(manifest.backend,
                                      dimension=manifest.embed_dim,
                                      side=manifest.image_size,
                                      seed=manifest.seed)
    detector = detector or load_detector(manifest.detector)

    records = []
    skipped = []
    for label, path in _corpus_paths(Path(manifest.image_dir), manifest.policy):
        try:
            with Image.open(path) as img:
                face = detector.detect(img)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("unreadable image %s: %s", path, exc)
            skipped.append(str(path))
            continue
        if face is None:
            logger.warning("no face detected in %s; skipped", path)
            skipped.append(str(path))
            continue
        batch = _preprocess(face, manifest.image_size)[None, :]
        vec = backend.embed(batch)[0]
        records.append((f"{label}/{path.name}", label, vec))

    if not records:
        raise ExportError(
            f"no images in {manifest.image_dir} produced embeddings "
            f"({len(skipped)} skipped)")
    write_embedding_file(records, manifest.out_path, role=manifest.role)
    return ExportResult(out_path=manifest.out_path, exported=len(records),
                        skipped=skipped)


def load_pair_spec(path) -> dict:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except ValueError as exc:
            raise PairSpecError(f"bad pair spec {path}: {exc}") from exc
    if not isinstance(spec, dict) or not {"match", "mismatch"} <= set(spec):
        raise PairSpecError(
            f"pair spec {path} must be an object with 'match' and 'mismatch' lists")
    return spec


def export_pairs(spec: dict, out_path, known_ids: set[str] | None = None) -> int:
    """Write a pair-list CSV; returns the number of rows written."""
    pairs = []
    unresolved = []
    for label in ("match", "mismatch"):
        for entry in spec[label]:
            if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
                raise PairSpecError(f"bad {label} entry {entry!r}; expected [id_a, id_b]")
            id_a, id_b = str(entry[0]), str(entry[1])
            if known_ids is not None:
                unresolved += [i for i in (id_a, id_b) if i not in known_ids]
            pairs.append((id_a, id_b, label))
    if unresolved:
        raise PairSpecError(
            f"{len(unresolved)} unresolvable ids", unresolved=sorted(set(unresolved)))
    if not pairs:
        logger.warning("empty pair spec; writing header-only file to %s", out_path)
    write_pair_file(pairs, out_path)
    return len(pairs)
