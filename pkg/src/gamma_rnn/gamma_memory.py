"""Classic gamma memory: a cascade of first-order leaky integrators.

Level 0 mirrors the current input; level k blends its own previous value
with the previous value of level k-1 under a fixed leak coefficient mu.
With mu=1 the cascade degenerates to a pure delay line, which makes this
module a convenient exact oracle for the gated cell variant. A linear
per-level readout combines the levels into one memory vector.

Everything here is a pure function over immutable state; mu is fixed
(the adaptive, gated version lives in :mod:`gamma_rnn.cells`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ndmath import ShapeError, as_tensor

__all__ = [
    "GammaMemoryConfig",
    "GammaMemoryState",
    "GammaReadoutWeights",
    "zero_state",
    "gamma_step",
    "gamma_readout",
    "impulse_response",
]


@dataclass(frozen=True)
class GammaMemoryConfig:
    """Cascade shape: memory order ``K``, leak ``mu``, channel width ``dim``."""

    K: int
    mu: float
    dim: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"memory order must be >= 1, got {self.K}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class GammaMemoryState:
    """Levels c_0..c_K, each a vector of width ``dim``."""

    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = {lv.shape for lv in self.levels}
        if len(shapes) != 1:
            raise ShapeError(f"levels must share one shape, got {sorted(shapes)}")


@dataclass(frozen=True)
class GammaReadoutWeights:
    """Per-level elementwise readout weights W_0..W_K."""

    W: tuple[np.ndarray, ...]


def zero_state(cfg: GammaMemoryConfig) -> GammaMemoryState:
    return GammaMemoryState(tuple(np.zeros(cfg.dim) for _ in range(cfg.K + 1)))


def gamma_step(state: GammaMemoryState, x, cfg: GammaMemoryConfig) -> GammaMemoryState:
    """Advance the cascade one step: all updates read the old state."""
    x = as_tensor(x)
    if x.shape != (cfg.dim,):
        raise ShapeError(f"input width {x.shape} does not match dim ({cfg.dim},)")
    if len(state.levels) != cfg.K + 1:
        raise ShapeError(f"state has {len(state.levels)} levels, config wants {cfg.K + 1}")
    old = state.levels
    new = [x]
    for k in range(1, cfg.K + 1):
        new.append((1.0 - cfg.mu) * old[k] + cfg.mu * old[k - 1])
    return GammaMemoryState(tuple(new))


def gamma_readout(state: GammaMemoryState, w: GammaReadoutWeights) -> np.ndarray:
    """Weighted sum of levels: sum_i W_i * c_i, elementwise per level."""
    if len(w.W) != len(state.levels):
        raise ShapeError(f"{len(w.W)} weights for {len(state.levels)} levels")
    out = np.zeros_like(state.levels[0])
    for wi, ci in zip(w.W, state.levels):
        if wi.shape != ci.shape:
            raise ShapeError(f"weight shape {wi.shape} vs level shape {ci.shape}")
        out = out + wi * ci
    return out


def impulse_response(k: int, mu: float, t: int) -> float:
    """Value of level ``k`` at time ``t`` after a unit impulse at t=0.

    Level 0 is the input itself; deeper levels follow the discrete gamma
    kernel C(t-1, k-1) * mu^k * (1-mu)^(t-k).
    """
    if k == 0:
        return 1.0 if t == 0 else 0.0
    if t < k:
        return 0.0
    from math import comb

    return comb(t - 1, k - 1) * mu**k * (1.0 - mu) ** (t - k)
