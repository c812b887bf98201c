"""Crossover multipliers and their semigroup kernels by characteristic-function inversion.

Continuum transform convention: F(xi) = integral f(x) exp(+2 i pi x xi) dx,
f(x) = integral F(xi) exp(-2 i pi x xi) d xi. Under it the gradient has
multiplier -2 i pi xi, so the skew part of the 3/2-stable generator carries
the factor (1 + i sgn xi).

Two orientations of the kernel are exposed. The fundamental solution of
d/dt u = L u is integral exp(t psi) exp(-2 i pi x xi) d xi. The energy
correlation profile S(d), with d the displacement from the time-zero site
to the time-t site, evolves under the adjoint and matches the reflected
kernel integral exp(t psi) exp(+2 i pi x xi) d xi; that is the default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .params import SizingError

ONE_THIRD = 1.0 / 3.0
CONVENTIONS = ("stated", "measured")
ORIENTATIONS = ("correlation", "fundamental")


def levy_coefficient(gamma: float, convention: str = "stated") -> float:
    """Coefficient of |2 pi xi|^{3/2} in the skew stable part.

    "stated" uses sqrt(gamma/2); "measured" uses gamma^{3/2}/sqrt(2), the
    constant the discrete multiplier converges to. They agree at gamma = 1.
    """
    if convention == "stated":
        return math.sqrt(gamma) / math.sqrt(2.0)
    if convention == "measured":
        return gamma ** 1.5 / math.sqrt(2.0)
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def multiplier_psi(b: float, gamma: float, xi, convention: str = "stated"):
    """psi(xi) = -1{b>=1/3}(2 pi xi)^2 - 1{b<=1/3} c |2 pi xi|^{3/2}(1 + i sgn xi)."""
    if b < 0 or gamma <= 0:
        raise ValueError("need b >= 0 and gamma > 0")
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    w = 2.0 * np.pi * xi
    if b >= ONE_THIRD - 1e-12:
        out -= w * w
    if b <= ONE_THIRD + 1e-12:
        out -= levy_coefficient(gamma, convention) * np.abs(w) ** 1.5 * (1.0 + 1j * np.sign(xi))
    return out if out.ndim else complex(out)


@dataclass
class KernelGrid:
    t: float
    x: np.ndarray
    P: np.ndarray
    cutoff: float
    dxi: float
    b: float = 1.0
    gamma: float = 1.0
    orientation: str = "correlation"

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def mass(self) -> float:
        return float(np.sum(self.P) * self.dx)

    def at(self, x) -> np.ndarray:
        """Linear interpolation on the grid (zero outside)."""
        return np.interp(x, self.x, self.P, left=0.0, right=0.0)

    def central_moment(self, order: int, window: float | None = None) -> float:
        m = np.ones_like(self.x, dtype=bool) if window is None else np.abs(self.x) <= window
        w = self.P[m] * self.dx
        mean = np.sum(w * self.x[m]) / np.sum(w)
        return float(np.sum(w * (self.x[m] - mean) ** order) / np.sum(w))

    def to_csv(self, path=None, clip_for_plot: bool = False) -> str:
        P = np.maximum(self.P, 0.0) if clip_for_plot else self.P
        lines = [
            "# schema=kernel-grid/1",
            f"# t={float(self.t)!r}", f"# b={float(self.b)!r}", f"# gamma={float(self.gamma)!r}",
            f"# orientation={self.orientation}", f"# cutoff={float(self.cutoff)!r}",
            f"# dxi={float(self.dxi)!r}",
            "x,P",
        ]
        lines += [f"{a!r},{p!r}" for a, p in zip(self.x.tolist(), P.tolist())]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def kernel_P(b: float, gamma: float, t: float, half_width: float = 256.0, dx: float = 1.0 / 64,
             orientation: str = "correlation", convention: str = "stated", tail: float = 1e-12) -> KernelGrid:
    """Kernel on the symmetric grid [-half_width, half_width) by FFT inversion.

    The grid is one full period of length 2 * half_width, so the frequency
    spacing is 1/(2 * half_width) and the cutoff is the Nyquist frequency
    1/(2 dx). A cutoff where exp(t Re psi) still exceeds `tail` is a sizing error.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    M = int(round(2 * half_width / dx))
    if M < 8 or M % 2:
        raise ValueError("grid must contain an even number (>= 8) of points")
    cutoff = 0.5 / dx
    edge = math.exp(t * multiplier_psi(b, gamma, cutoff, convention).real)
    if edge > tail:
        raise SizingError(
            f"frequency cutoff {cutoff:.4g} too small: exp(t Re psi) = {edge:.3g} > {tail:.0e}; refine dx"
        )
    period = M * dx
    dxi = 1.0 / period
    xi = np.fft.fftfreq(M, d=dx)
    phi = np.exp(t * multiplier_psi(b, gamma, xi, convention))
    if orientation == "correlation":
        vals = np.fft.ifft(phi) * M * dxi
    else:
        vals = np.fft.fft(phi) * dxi
    P = np.fft.fftshift(vals.real)
    x = (np.arange(M) - M // 2) * dx
    return KernelGrid(t, x, P, cutoff, dxi, b, gamma, orientation)


def heat_kernel(t: float, x) -> np.ndarray:
    """(4 pi t)^{-1/2} exp(-x^2 / 4t)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def stable_parameters(gamma: float, t: float, orientation: str = "correlation", convention: str = "stated"):
    """(alpha, beta, scale) of the b = 0 kernel in the S1 parameterization."""
    scale = (t * levy_coefficient(gamma, convention)) ** (2.0 / 3.0)
    skew = -1.0 if orientation == "correlation" else 1.0
    return 1.5, skew, scale


def semigroup_defect(b: float, gamma: float, t: float, s: float, **grid) -> float:
    """L1 distance between P_{t+s} and the grid convolution P_t * P_s."""
    Pt = kernel_P(b, gamma, t, **grid)
    Ps = kernel_P(b, gamma, s, **grid)
    Pts = kernel_P(b, gamma, t + s, **grid)
    M = Pt.x.size
    # x_k - x_j sits at index k - j + M/2, so the full convolution is read from M/2
    conv = fftconvolve(Pt.P, Ps.P, mode="full")[M // 2: M // 2 + M] * Pt.dx
    return float(np.sum(np.abs(conv - Pts.P)) * Pt.dx)


def kernel_predict(f, g, b: float, gamma: float, t: float, grid: KernelGrid | None = None,
                   support: float | None = None, convention: str = "stated", **grid_kw) -> float:
    """Continuum prediction  integral g(x) f(y) K_t(y - x) dx dy  for callables f, g.

    K_t is the correlation-oriented kernel, so this is the limit of
    observables.field_S(profile, f, g). `support` bounds the supports of f, g.
    """
    if grid is None:
        grid = kernel_P(b, gamma, t, convention=convention, **grid_kw)
    if support is None:
        support = grid.x[-1] / 4
    if 2 * support > grid.x[-1]:
        raise ValueError("kernel grid does not cover the test-function supports")
    dx = grid.dx
    m = int(math.ceil(support / dx))
    u = np.arange(-m, m + 1) * dx
    fv = np.asarray(f(u), dtype=float)
    gv = np.asarray(g(u), dtype=float)
    if not np.any(fv) or not np.any(gv):
        return 0.0
    c = grid.x.size // 2
    if c - 2 * m < 0:
        raise ValueError("kernel grid does not cover the test-function supports")
    # K at displacements -2m..2m grid steps, reversed so that a convolution
    # gives  sum_l f(u_l) K(u_l - u_i)  at index i + 2m
    krev = grid.P[c - 2 * m: c + 2 * m + 1][::-1]
    inner = fftconvolve(fv, krev, mode="full")[2 * m: 4 * m + 1] * dx
    return float(np.sum(gv * inner) * dx)


def gaussian_pair_heat(mu_f: float, s_f: float, mu_g: float, s_g: float, t: float) -> float:
    """Closed form of  integral g(x) f(y) K_t(y - x) for unnormalized Gaussians under the heat kernel."""
    var = s_f ** 2 + s_g ** 2 + 2.0 * t
    return math.sqrt(2.0 * math.pi) * s_f * s_g / math.sqrt(var) * math.exp(-((mu_f - mu_g) ** 2) / (2.0 * var))
