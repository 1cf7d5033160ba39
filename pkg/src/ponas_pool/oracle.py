"""Deterministic surrogate reward landscape and an exhaustive-search oracle.

The surrogate replaces "train for 30 epochs and report test accuracy". A
configuration's reward is built from three parts, all deterministic in the
landscape seed:

* a smooth base term preferring moderate kernels, small strides, more
  kernels and wider bit-widths;
* Gaussian bumps centred on seed-derived configurations, so some subspaces
  contain much better designs than others;
* per-configuration hash noise.

The sum is clamped to [0, 1] and then scaled by an epoch curve that
saturates at 30 epochs. All randomness goes through SplitMix64 so values are
identical on every platform.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Protocol

from .hw import HardwareConstraints, estimate
from .space import FULL_SPACE, Configuration, SearchSpace, Subspace

MASK64 = (1 << 64) - 1
SATURATION_EPOCHS = 30
MAX_EXHAUSTIVE = 1 << 20

# Reward composition. BASE_* spans the smooth term, bumps add on top.
BASE_FLOOR = 0.10
BASE_SPAN = 0.75
BITS_FLOOR = 0.35
STRIDE_PENALTY = 0.4
PEAK_HEIGHT = 0.08
PEAK_DECAY = 0.7
PEAK_WIDTH = 0.7
EPOCH_TAU = 8.0


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(*parts: int) -> int:
    """Fold integers into one 64-bit hash."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = splitmix64(h ^ (p & MASK64))
    return h


def unit(h: int) -> float:
    """Map a 64-bit hash to [0, 1) using its top 53 bits."""
    return (h >> 11) * (1.0 / (1 << 53))


def derive_seed(seed: int, *labels: str | int) -> int:
    parts = [seed]
    for label in labels:
        if isinstance(label, str):
            parts.extend(label.encode())
            parts.append(0xFF)
        else:
            parts.append(label)
    return mix(*parts)


class SpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class LandscapeParams:
    seed: int
    optimum_count: int = 4
    noise_amplitude: float = 0.04
    space: SearchSpace = field(default=FULL_SPACE, compare=True)

    def __post_init__(self) -> None:
        if self.optimum_count < 1:
            raise ValueError("optimum_count must be at least 1")
        if not 0.0 <= self.noise_amplitude <= 0.1:
            raise ValueError("noise_amplitude must lie in [0, 0.1]")


@dataclass(frozen=True)
class RewardSample:
    config: Configuration
    reward: float
    epochs_budget: int


class Trainer(Protocol):
    """Anything that scores a configuration like :func:`surrogate_reward`."""

    def __call__(self, c: Configuration, p: LandscapeParams, epochs: int) -> float: ...


def _factor(name: str, seed: int, index: int) -> Callable[[float], float]:
    """Multiplicative quality factor in (0, 1] for one hyperparameter."""
    if name.startswith("kernel_"):
        return lambda x: 1.0 - 0.5 * (2.0 * x - 1.0) ** 2
    if name.startswith("stride_"):
        return lambda x: 1.0 - STRIDE_PENALTY * x
    if name == "num_kernels":
        return lambda x: 0.5 + 0.5 * math.sqrt(x)
    if name.endswith("_bits"):
        return lambda x: BITS_FLOOR + (1.0 - BITS_FLOOR) * (1.0 - (1.0 - x) ** 2)
    if name == "pool_size":
        return lambda x: 1.0 - 0.15 * x
    centre = unit(mix(seed, 0xB0, index))
    return lambda x: 1.0 - 0.5 * (x - centre) ** 2


@dataclass(frozen=True)
class _Landscape:
    positions: tuple[tuple[tuple[int, ...], tuple[float, ...]], ...]
    factors: tuple[Callable[[float], float], ...]
    optima: tuple[tuple[float, ...], ...]
    optimum_configs: tuple[Configuration, ...]
    heights: tuple[float, ...]


@lru_cache(maxsize=64)
def _landscape(p: LandscapeParams) -> _Landscape:
    specs = p.space.specs
    positions = []
    for spec in specs:
        k = len(spec.values)
        pos = tuple(i / (k - 1) if k > 1 else 0.5 for i in range(k))
        positions.append((spec.values, pos))
    factors = tuple(_factor(s.name, p.seed, i) for i, s in enumerate(specs))
    optima, configs, heights = [], [], []
    for k in range(p.optimum_count):
        idx = [int(unit(mix(p.seed, 0xC0, k, j)) * len(s.values)) for j, s in enumerate(specs)]
        configs.append(Configuration(tuple(s.values[i] for s, i in zip(specs, idx))))
        optima.append(tuple(positions[j][1][i] for j, i in enumerate(idx)))
        heights.append(PEAK_HEIGHT * PEAK_DECAY**k)
    return _Landscape(
        tuple(positions), factors, tuple(optima), tuple(configs), tuple(heights)
    )


def _position(values: tuple[int, ...], pos: tuple[float, ...], v: int) -> float:
    # Values outside the range (the fixture has a few) are interpolated
    # linearly between neighbours and clamped at the ends.
    i = bisect.bisect_left(values, v)
    if i < len(values) and values[i] == v:
        return pos[i]
    if i == 0:
        return pos[0]
    if i == len(values):
        return pos[-1]
    lo, hi = values[i - 1], values[i]
    return pos[i - 1] + (pos[i] - pos[i - 1]) * (v - lo) / (hi - lo)


def planted_optima(p: LandscapeParams) -> tuple[Configuration, ...]:
    """Bump centres, highest bump first."""
    return _landscape(p).optimum_configs


def epoch_factor(epochs: int) -> float:
    e = min(epochs, SATURATION_EPOCHS)
    return (1.0 - math.exp(-e / EPOCH_TAU)) / (1.0 - math.exp(-SATURATION_EPOCHS / EPOCH_TAU))


class RewardTerms(NamedTuple):
    base: float
    bonus: float
    noise: float


def reward_terms(c: Configuration, p: LandscapeParams) -> RewardTerms:
    """The three additive parts of the saturated, unclamped reward of ``c``.

    ``base`` is the smooth architecture prior, ``bonus`` the sum of the
    planted Gaussian bumps and ``noise`` the per-configuration hash noise.
    """
    land = _landscape(p)
    if len(c) != len(land.positions):
        raise ValueError(f"configuration arity {len(c)} != landscape arity {len(land.positions)}")
    x = [_position(vals, pos, v) for (vals, pos), v in zip(land.positions, c.values)]

    quality = 1.0
    for f, xi in zip(land.factors, x):
        quality *= f(xi)
    base = BASE_FLOOR + BASE_SPAN * quality

    bonus = 0.0
    two_sigma_sq = 2.0 * PEAK_WIDTH**2
    for centre, height in zip(land.optima, land.heights):
        d2 = sum((a - b) ** 2 for a, b in zip(x, centre))
        bonus += height * math.exp(-d2 / two_sigma_sq)

    noise = 0.0
    if p.noise_amplitude:
        noise = p.noise_amplitude * (2.0 * unit(mix(p.seed, 0xD0, *c.values)) - 1.0)
    return RewardTerms(base, bonus, noise)


def surrogate_reward(c: Configuration, p: LandscapeParams, epochs: int = SATURATION_EPOCHS) -> float:
    """Ungated surrogate test accuracy of ``c`` after ``epochs`` epochs."""
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    base, bonus, noise = reward_terms(c, p)
    raw = min(1.0, max(0.0, base + bonus + noise))
    return raw * epoch_factor(epochs)


def gated_reward(
    c: Configuration, p: LandscapeParams, hc: HardwareConstraints, epochs: int = SATURATION_EPOCHS
) -> float:
    """Zero for designs over the LUT budget or under the throughput floor."""
    if not estimate(c, hc).feasible:
        return 0.0
    return surrogate_reward(c, p, epochs)


def exhaustive_best(
    sub: Subspace, p: LandscapeParams, hc: HardwareConstraints, epochs: int = SATURATION_EPOCHS
) -> tuple[Configuration, float]:
    """Best gated configuration by full enumeration.

    Enumeration runs in lexicographic order and only strictly better values
    replace the incumbent, so ties resolve to the smallest configuration.
    """
    if sub.size > MAX_EXHAUSTIVE:
        raise SpaceTooLarge(f"subspace has {sub.size} configurations (limit {MAX_EXHAUSTIVE})")
    best_cfg, best = None, -1.0
    for cfg in sorted(sub.configurations(), key=lambda c: c.values):
        r = gated_reward(cfg, p, hc, epochs)
        if r > best:
            best_cfg, best = cfg, r
    assert best_cfg is not None
    return best_cfg, best
