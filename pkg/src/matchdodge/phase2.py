"""Bounded image inversion: perturb a source image so its embedding
approaches a target point.

Each iteration evaluates the embedding distance loss, takes an Adam step on
the analytic input gradient, then projects back into the intersection of the
infinity-norm epsilon ball around the cropped source and the [-1, +1] image
domain. The ball is anchored at the cropped source, not the moving iterate,
so the total per-pixel change stays bounded. The best-loss iterate is
returned, not the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, CropperDivergenceError
from .mapper import ImageTensor, ToyMapper, _as_image_array

Cropper = Callable[[ImageTensor], ImageTensor]


def identity_cropper(x: ImageTensor) -> ImageTensor:
    return x


@dataclass
class InversionConfig:
    epsilon: float = 0.1
    iterations: int = 1000
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 2.0):
            raise ConfigError(f"epsilon must lie in [0, 2], got {self.epsilon}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be > 0")


@dataclass
class InversionResult:
    image: ImageTensor
    final_distance: float
    loss_trace: list[float] = field(default_factory=list)
    max_deviation: float = 0.0  # infinity-norm distance from the cropped source


def crop_stabilize(x: ImageTensor, cropper: Cropper,
                   max_applications: int = 10) -> ImageTensor:
    """Apply the cropper until it returns its input unchanged."""
    current = x
    for _ in range(max_applications):
        nxt = cropper(current)
        if np.array_equal(nxt.values, current.values):
            return current
        current = nxt
    raise CropperDivergenceError(
        f"cropper reached no fixed point within {max_applications} applications")


def generate_attack_face(source: ImageTensor, target, mapper: ToyMapper,
                         cropper: Cropper = identity_cropper,
                         config: InversionConfig | None = None) -> InversionResult:
    """Invert a target embedding into a bounded perturbation of the source."""
    config = config or InversionConfig()
    target = np.asarray(target, dtype=np.float64)
    base = _as_image_array(crop_stabilize(source, cropper))

    lo = np.maximum(base - config.epsilon, -1.0)
    hi = np.minimum(base + config.epsilon, 1.0)

    x = base.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace: list[float] = []
    best_loss = float(np.linalg.norm(mapper.forward(x) - target))
    best_x = x.copy()

    for t in range(1, config.iterations + 1):
        loss = float(np.linalg.norm(mapper.forward(x) - target))
        trace.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_x = x.copy()
        g = mapper.input_gradient(x, target)
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g ** 2
        m_hat = m / (1.0 - config.beta1 ** t)
        v_hat = v / (1.0 - config.beta2 ** t)
        x = x - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        x = np.clip(x, lo, hi)

    final_loss = float(np.linalg.norm(mapper.forward(x) - target))
    trace.append(final_loss)
    if final_loss < best_loss:
        best_loss = final_loss
        best_x = x.copy()

    return InversionResult(
        image=ImageTensor(best_x),
        final_distance=best_loss,
        loss_trace=trace,
        max_deviation=float(np.max(np.abs(best_x - base))),
    )
