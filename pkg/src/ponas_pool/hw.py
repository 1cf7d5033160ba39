"""Analytic FPGA cost model and the hardware constraint gate.

The cost model is a stand-in for synthesis. For a single conv layer on a
32x32 input with configuration ``(kh, kw, nk, sh, sw, pool, ai, af, wi, wf)``::

    lut_count  = kh * kw * nk * (wi + wf) * (ai + af)
    throughput = 1e7 / (ceil(32 / sh) * ceil(32 / sw) * kh * kw * nk * pool)

Zero stride or pool size, and zero total weight or activation bits, are
degenerate designs: they are reported infeasible instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .space import Configuration

INPUT_SIZE = 32
THROUGHPUT_SCALE = 10**7


class InvalidStride(ValueError):
    """Stride or pool size of zero. Only raised by :func:`output_pixels`."""


@dataclass(frozen=True)
class HardwareConstraints:
    lut_max: float = 100_000
    throughput_min: float = 10

    def __post_init__(self) -> None:
        if self.lut_max <= 0 or self.throughput_min <= 0:
            raise ValueError(f"constraints must be positive: {self}")


@dataclass(frozen=True)
class HardwareEstimate:
    lut_count: int
    throughput: float
    feasible: bool


DEFAULT_CONSTRAINTS = HardwareConstraints()


def output_pixels(sh: int, sw: int) -> int:
    if sh <= 0 or sw <= 0:
        raise InvalidStride(f"stride must be positive, got ({sh}, {sw})")
    return ceil(INPUT_SIZE / sh) * ceil(INPUT_SIZE / sw)


def estimate(c: Configuration, hc: HardwareConstraints = DEFAULT_CONSTRAINTS) -> HardwareEstimate:
    if len(c) != 10:
        raise ValueError(f"cost model expects 10 hyperparameters, got {len(c)}")
    kh, kw, nk, sh, sw, pool, ai, af, wi, wf = c.values
    if sh <= 0 or sw <= 0 or pool <= 0:
        return HardwareEstimate(0, 0.0, False)
    lut = kh * kw * nk * (wi + wf) * (ai + af)
    work = output_pixels(sh, sw) * kh * kw * nk * pool
    throughput = THROUGHPUT_SCALE / work if work > 0 else 0.0
    feasible = lut > 0 and lut <= hc.lut_max and throughput >= hc.throughput_min
    return HardwareEstimate(lut, throughput, feasible)


def gate(c: Configuration, hc: HardwareConstraints, raw_reward: float) -> float:
    """Pass ``raw_reward`` through for feasible designs, otherwise 0."""
    if not 0.0 <= raw_reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {raw_reward}")
    return raw_reward if estimate(c, hc).feasible else 0.0
