"""Small differentiable image-to-embedding mapper.

A single hidden layer tanh network with L2-normalized output stands in for a
real face-embedding model at desk scale. Weights are fixed random (seeded),
never trained. Both the forward pass and the gradient of the embedding
distance loss with respect to the input pixels are analytic, including the
Jacobian of the output normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embedding import l2_normalize
from .errors import ConfigError, FormatError

MAPPER_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ImageTensor:
    """3 x m x m real image with values in [-1, +1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] != 3 or v.shape[1] != v.shape[2]:
            raise ConfigError(f"expected shape (3, m, m), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("image has non-finite values")
        if v.min() < -1.0 or v.max() > 1.0:
            raise ConfigError("image values must lie in [-1, +1]")
        object.__setattr__(self, "values", v)

    @property
    def side(self) -> int:
        return self.values.shape[1]


def _as_image_array(x) -> np.ndarray:
    if isinstance(x, ImageTensor):
        return x.values
    return ImageTensor(np.asarray(x, dtype=np.float64)).values


class ToyMapper:
    """Seeded random tanh network: (3*m*m) -> hidden -> unit vector in R^p."""

    def __init__(self, side: int = 16, embed_dim: int = 64,
                 hidden: int = 256, seed: int = 0):
        if side < 1 or embed_dim < 2 or hidden < 1:
            raise ConfigError("mapper dimensions must be positive (embed_dim >= 2)")
        self.side = side
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.seed = seed
        n_in = 3 * side * side
        rng = np.random.default_rng(seed)
        self.W1 = rng.standard_normal((hidden, n_in)) / np.sqrt(n_in)
        self.b1 = rng.standard_normal(hidden) * 0.1
        self.W2 = rng.standard_normal((embed_dim, hidden)) / np.sqrt(hidden)
        self.b2 = rng.standard_normal(embed_dim) * 0.1

    def forward(self, x) -> np.ndarray:
        """Unit-norm embedding of the image."""
        flat = _as_image_array(x).ravel()
        h = np.tanh(self.W1 @ flat + self.b1)
        u = self.W2 @ h + self.b2
        return l2_normalize(u)

    def input_gradient(self, x, target) -> np.ndarray:
        """Gradient of dist(forward(x), target) w.r.t. every pixel.

        Defined as the zero tensor at distance exactly 0 (the loss minimum).
        """
        img = _as_image_array(x)
        target = np.asarray(target, dtype=np.float64)
        if target.shape != (self.embed_dim,):
            raise ConfigError(
                f"target has shape {target.shape}, expected ({self.embed_dim},)")
        flat = img.ravel()
        h = np.tanh(self.W1 @ flat + self.b1)
        u = self.W2 @ h + self.b2
        u_norm = np.linalg.norm(u)
        e = u / u_norm
        diff = e - target
        dist = np.linalg.norm(diff)
        if dist == 0.0:
            return np.zeros_like(img)
        g_e = diff / dist
        # normalization Jacobian: (I - e e^T) / ||u||
        g_u = (g_e - e * (e @ g_e)) / u_norm
        g_h = self.W2.T @ g_u
        g_pre = g_h * (1.0 - h ** 2)
        g_flat = self.W1.T @ g_pre
        return g_flat.reshape(img.shape)

    def save(self, path) -> None:
        header = {"fmt": "mapper", "v": MAPPER_FORMAT_VERSION, "side": self.side,
                  "embed_dim": self.embed_dim, "hidden": self.hidden,
                  "seed": self.seed}
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for arr in (self.W1, self.b1, self.W2, self.b2):
                for v in arr.ravel():
                    fh.write(json.dumps(float(v)) + "\n")

    @classmethod
    def load(cls, path) -> "ToyMapper":
        path = str(path)
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise FormatError("empty file", path=path, line=1)
        try:
            header = json.loads(lines[0])
            if header.get("fmt") != "mapper" or header.get("v") != MAPPER_FORMAT_VERSION:
                raise ValueError(f"bad header {header!r}")
            mapper = cls(side=int(header["side"]), embed_dim=int(header["embed_dim"]),
                         hidden=int(header["hidden"]), seed=int(header["seed"]))
        except (ValueError, KeyError) as exc:
            raise FormatError(f"bad mapper header: {exc}", path=path, line=1) from exc
        shapes = [mapper.W1.shape, mapper.b1.shape, mapper.W2.shape, mapper.b2.shape]
        total = sum(int(np.prod(s)) for s in shapes)
        body = [ln for ln in lines[1:] if ln.strip()]
        if len(body) != total:
            raise FormatError(f"expected {total} weights, found {len(body)}", path=path)
        flat = np.array([float(v) for v in body])
        if not np.all(np.isfinite(flat)):
            raise FormatError("non-finite weight", path=path)
        offset = 0
        arrays = []
        for s in shapes:
            size = int(np.prod(s))
            arrays.append(flat[offset:offset + size].reshape(s))
            offset += size
        mapper.W1, mapper.b1, mapper.W2, mapper.b2 = arrays
        return mapper
