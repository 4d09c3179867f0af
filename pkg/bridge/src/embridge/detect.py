"""Face detection and cropping, pluggable.

The offline default takes the largest centered square, rejecting images with
no usable signal (near-constant pixels cannot contain a face). An MTCNN
detector plugs in through the same interface when facenet-pytorch is
installed.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np
from PIL import Image

from .errors import BridgeError


class FaceDetector(Protocol):
    name: str

    def detect(self, image: Image.Image) -> Image.Image | None:
        """Cropped face region, or None when no face is found."""
        ...


class CenterSquareDetector:
    """Largest centered square crop; near-constant images count as faceless."""

    def __init__(self, min_side: int = 8, min_std: float = 1.0):
        self.name = "center-square"
        self.min_side = min_side
        self.min_std = min_std

    def detect(self, image: Image.Image) -> Image.Image | None:
        w, h = image.size
        side = min(w, h)
        if side < self.min_side:
            return None
        arr = np.asarray(image.convert("RGB"), dtype=np.float64)
        if arr.std() < self.min_std:
            return None
        left = (w - side) // 2
        top = (h - side) // 2
        return image.convert("RGB").crop((left, top, left + side, top + side))


def load_detector(name: str) -> FaceDetector:
    if name == "center-square":
        return CenterSquareDetector()
    if name == "mtcnn":
        try:
            from facenet_pytorch import MTCNN
        except ImportError as exc:
            raise BridgeError(
                "mtcnn detector needs the facenet-pytorch package") from exc

        class _MtcnnDetector:
            def __init__(self):
                self.name = "mtcnn"
                self._mtcnn = MTCNN(image_size=160, margin=0)

            def detect(self, image: Image.Image) -> Image.Image | None:
                boxes, _ = self._mtcnn.detect(image.convert("RGB"))
                if boxes is None or len(boxes) == 0:
                    return None
                left, top, right, bottom = (int(round(v)) for v in boxes[0])
                return image.convert("RGB").crop((max(left, 0), max(top, 0),
                                                  right, bottom))

        return _MtcnnDetector()
    raise BridgeError(f"unknown detector {name!r}; "
                      "expected 'center-square' or 'mtcnn'")
