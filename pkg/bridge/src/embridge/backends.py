"""Embedding backends: preprocessed face crop -> unit-norm embedding.

The default backend is an offline deterministic stand-in (a fixed random
projection with a tanh nonlinearity) so the export pipeline, file contract,
and calibration flow are testable without pretrained weights. A real model
(e.g. an InceptionResnet trained on VGGFace2 via facenet-pytorch) plugs in
through the same two-method interface when its weights are available.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .errors import BridgeError


class EmbeddingBackend(Protocol):
    name: str
    dimension: int

    def embed(self, batch: np.ndarray) -> np.ndarray:
        """(n, 3, side, side) images in [-1, 1] -> (n, dimension) unit-norm."""
        ...


class SeededToyBackend:
    """Deterministic projection backend for offline use.

    Nearby images map to nearby embeddings (the projection is Lipschitz), so
    same-identity photo pairs land closer than unrelated ones on synthetic
    corpora — enough to exercise calibration end to end.
    """

    def __init__(self, dimension: int = 128, side: int = 160, seed: int = 0):
        if dimension < 2 or side < 1:
            raise BridgeError("dimension must be >= 2 and side >= 1")
        self.name = f"toy-{dimension}d-seed{seed}"
        self.dimension = dimension
        self.side = side
        rng = np.random.default_rng(seed)
        n_in = 3 * side * side
        self.W = rng.standard_normal((dimension, n_in)) / np.sqrt(n_in)

    def embed(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 4 or batch.shape[1:] != (3, self.side, self.side):
            raise BridgeError(
                f"expected batch shape (n, 3, {self.side}, {self.side}), "
                f"got {batch.shape}")
        z = np.tanh(batch.reshape(batch.shape[0], -1) @ self.W.T)
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise BridgeError("degenerate zero embedding")
        return z / norms


def load_backend(name: str, dimension: int = 128, side: int = 160,
                 seed: int = 0) -> EmbeddingBackend:
    if name == "toy":
        return SeededToyBackend(dimension=dimension, side=side, seed=seed)
    if name == "facenet":
        try:
            from facenet_pytorch import InceptionResnetV1
            import torch
        except ImportError as exc:
            raise BridgeError(
                "facenet backend needs the facenet-pytorch package") from exc

        class _FaceNetBackend:
            def __init__(self):
                self.name = "facenet-vggface2"
                self.dimension = 512
                self._model = InceptionResnetV1(pretrained="vggface2").eval()
                self._torch = torch

            def embed(self, batch: np.ndarray) -> np.ndarray:
                with self._torch.no_grad():
                    t = self._torch.as_tensor(batch, dtype=self._torch.float32)
                    z = self._model(t).numpy().astype(np.float64)
                return z / np.linalg.norm(z, axis=1, keepdims=True)

        return _FaceNetBackend()
    raise BridgeError(f"unknown backend {name!r}; expected 'toy' or 'facenet'")
