"""Scaling parameters shared by every module, and the ring-size rule."""
from __future__ import annotations

import math
from dataclasses import dataclass


class SizingError(ValueError):
    """A requested horizon or grid does not fit the available lattice."""


def time_exponent(b: float) -> float:
    """Observation time scale exponent: min(3/2 + 3b/2, 2)."""
    return min(1.5 + 1.5 * b, 2.0)


@dataclass(frozen=True)
class ScalingParams:
    n: int
    b: float
    gamma: float = 1.0
    beta: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.b >= 0:
            raise ValueError(f"b must be >= 0, got {self.b!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta!r}")
        if not math.isfinite(self.rho):
            raise ValueError(f"rho must be finite, got {self.rho!r}")

    @property
    def kappa(self) -> float:
        return self.gamma * float(self.n) ** (-self.b)

    @property
    def a(self) -> float:
        return time_exponent(self.b)

    def horizon(self, t: float) -> float:
        """Microscopic time t * n^a for a macroscopic time t."""
        return t * float(self.n) ** self.a

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "b": self.b,
            "gamma": self.gamma,
            "beta": self.beta,
            "rho": self.rho,
            "kappa": self.kappa,
            "a": self.a,
        }


def min_ring_size(horizon: float, kappa: float, support_diameter: int = 0) -> int:
    """Smallest ring that keeps wrap-around below statistical noise.

    `horizon` is the microscopic simulated time. The bound adds room for
    ballistic transport at speed of order kappa and for diffusive spreading.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    return (
        4 * int(support_diameter)
        + 8 * math.ceil(math.sqrt(horizon))
        + 4 * math.ceil(kappa * horizon)
    )


def check_ring_size(N: int, horizon: float, kappa: float, support_diameter: int = 0) -> None:
    need = min_ring_size(horizon, kappa, support_diameter)
    if N < need:
        raise SizingError(
            f"ring of {N} sites is too small for horizon {horizon:.4g} "
            f"(kappa={kappa:.4g}, support diameter {support_diameter}); need N >= {need}"
        )
