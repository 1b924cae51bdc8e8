"""Uplink sum rate of a centralized circular LIS with matched filtering.

The closed form ``sum_k log2(1 + p_k * eps_k * pi * r**2 / noise)`` is a
large-aperture approximation; nothing here checks that the aperture is
large enough for it to hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UsageError

__all__ = ["UserLink", "LisConfig", "SumRate", "lis_sum_rate"]


@dataclass(frozen=True)
class UserLink:
    p: float
    eps: float
    label: str = ""

    def __post_init__(self):
        if not (self.p >= 0 and self.eps >= 0):
            raise UsageError("user power and path-loss factor must be nonnegative")


@dataclass(frozen=True)
class LisConfig:
    radius: float
    noise: float

    def __post_init__(self):
        if not (self.radius > 0 and self.noise > 0):
            raise UsageError("LIS radius and noise power must be positive")


@dataclass(frozen=True)
class SumRate:
    total: float
    terms: tuple[float, ...]
    labels: tuple[str, ...]


def lis_sum_rate(users, lis: LisConfig) -> SumRate:
    users = list(users)
    if not users:
        raise UsageError("at least one user is required")
    gain = math.pi * lis.radius**2 / lis.noise
    terms = tuple(math.log2(1.0 + u.p * u.eps * gain) for u in users)
    labels = tuple(u.label or f"user{k}" for k, u in enumerate(users))
    return SumRate(math.fsum(terms), terms, labels)
