"""Functions on the 1/n-lattice, their Fourier transforms and discrete operators.

Transform convention: f_hat(k) = n^-d sum_x f(x/n) exp(+2 i pi k.x/n), with
inverse f(x/n) = integral over [-n/2, n/2]^d of f_hat(k) exp(-2 i pi k.x/n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LatticeFunction1D:
    """values[i] is f((start + i) / n)."""

    values: np.ndarray
    n: int
    start: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("1D lattice function needs a vector of values")
        self.start = int(self.start)

    @classmethod
    def from_callable(cls, f, n: int, lo: float, hi: float) -> "LatticeFunction1D":
        """Sample f at every site x with lo <= x/n <= hi."""
        a, b = int(np.ceil(lo * n)), int(np.floor(hi * n))
        x = np.arange(a, b + 1)
        return cls(np.asarray(f(x / n), dtype=float), n, a)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.values.size)

    @property
    def points(self) -> np.ndarray:
        return self.sites / self.n

    @property
    def stop(self) -> int:
        return self.start + self.values.size

    def norm(self) -> float:
        return l2n_norm(self.values, self.n, 1)

    def padded(self, left: int, right: int) -> "LatticeFunction1D":
        return LatticeFunction1D(np.pad(self.values, (left, right)), self.n, self.start - left)

    def at(self, sites) -> np.ndarray:
        """Values at arbitrary integer sites, zero outside the window."""
        sites = np.asarray(sites)
        i = sites - self.start
        ok = (i >= 0) & (i < self.values.size)
        out = np.zeros(sites.shape)
        out[ok] = self.values[i[ok]]
        return out

    def to_ring(self, N: int) -> np.ndarray:
        if self.values.size > N:
            raise ValueError("support exceeds the ring")
        ring = np.zeros(N)
        np.add.at(ring, self.sites % N, self.values)
        return ring


@dataclass
class LatticeFunction2D:
    """values[i, j] is h((sx + i) / n, (sy + j) / n)."""

    values: np.ndarray
    n: int
    start: tuple = (0, 0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("2D lattice function needs a matrix of values")
        self.start = (int(self.start[0]), int(self.start[1]))

    @classmethod
    def from_callable(cls, h, n: int, lo: float, hi: float) -> "LatticeFunction2D":
        a, b = int(np.ceil(lo * n)), int(np.floor(hi * n))
        x = np.arange(a, b + 1) / n
        return cls(np.asarray(h(x[:, None], x[None, :]), dtype=float), n, (a, a))

    @property
    def is_symmetric(self) -> bool:
        return (
            self.start[0] == self.start[1]
            and self.values.shape[0] == self.values.shape[1]
            and np.array_equal(self.values, self.values.T)
        )

    def norm(self) -> float:
        return l2n_norm(self.values, self.n, 2)

    def padded(self, p: int) -> "LatticeFunction2D":
        return LatticeFunction2D(np.pad(self.values, p), self.n, (self.start[0] - p, self.start[1] - p))

    def square(self) -> "LatticeFunction2D":
        """Embed into a square window with a common start, so the diagonal is a matrix diagonal."""
        lo = min(self.start)
        hi = max(self.start[0] + self.values.shape[0], self.start[1] + self.values.shape[1])
        out = np.zeros((hi - lo, hi - lo))
        i0, j0 = self.start[0] - lo, self.start[1] - lo
        out[i0:i0 + self.values.shape[0], j0:j0 + self.values.shape[1]] = self.values
        return LatticeFunction2D(out, self.n, (lo, lo))

    def with_diagonal(self, diag) -> "LatticeFunction2D":
        sq = self.square()
        v = sq.values.copy()
        np.fill_diagonal(v, diag)
        return LatticeFunction2D(v, self.n, sq.start)

    def diagonal_band(self, d: int) -> LatticeFunction1D:
        """The function x -> h(x, x + d) on the sites where it is stored."""
        sq = self.square().padded(abs(d) + 1)
        v = np.diagonal(sq.values, offset=d)
        start = sq.start[0] + max(0, -d)
        return LatticeFunction1D(v.copy(), self.n, start)

    def to_ring(self, N: int) -> np.ndarray:
        if max(self.values.shape) > N:
            raise ValueError("support exceeds the ring")
        ring = np.zeros((N, N))
        i = (self.start[0] + np.arange(self.values.shape[0])) % N
        j = (self.start[1] + np.arange(self.values.shape[1])) % N
        np.add.at(ring, (i[:, None], j[None, :]), self.values)
        return ring


def l2n_norm(f, n: int, d: int = 1) -> float:
    """sqrt(n^-d sum f(x/n)^2)."""
    v = f.values if isinstance(f, (LatticeFunction1D, LatticeFunction2D)) else np.asarray(f)
    return float(np.sqrt(np.sum(np.abs(v) ** 2) / float(n) ** d))


# transforms --------------------------------------------------------------

@dataclass
class SpectralGrid:
    """Samples of a lattice Fourier transform on the uniform nodes
    k_j = -n/2 + n j / M of [-n/2, n/2)^d. For a finitely supported input of
    width L <= M these samples determine the transform exactly."""

    k: np.ndarray
    values: np.ndarray
    n: int
    d: int
    start: tuple
    shape: tuple

    @property
    def M(self) -> int:
        return self.k.size

    def norm(self) -> float:
        """L2 norm over the period; exact when M >= 2L - 1 in every direction."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * (self.n / self.M) ** self.d))


def _grid_size(L: int) -> int:
    return int(2 ** np.ceil(np.log2(max(2 * L, 2))))


def _forward_axis(values, start, n, M, axis):
    L = values.shape[axis]
    sign = np.where((start + np.arange(L)) % 2 == 0, 1.0, -1.0)
    shape = [1] * values.ndim
    shape[axis] = L
    g = values * sign.reshape(shape)
    spec = np.fft.ifft(g, n=M, axis=axis) * M
    j = np.arange(M)
    shape[axis] = M
    return spec * np.exp(2j * np.pi * j * start / M).reshape(shape) / n


def dft_lattice(f, n: int | None = None, d: int | None = None, M: int | None = None) -> SpectralGrid:
    """Exact lattice Fourier transform of a finitely supported function."""
    if isinstance(f, LatticeFunction1D):
        vals, starts, n, d = f.values, (f.start,), f.n, 1
    elif isinstance(f, LatticeFunction2D):
        vals, starts, n, d = f.values, f.start, f.n, 2
    else:
        vals = np.asarray(f, dtype=float)
        d = vals.ndim if d is None else d
        starts = (0,) * d
        if n is None:
            raise ValueError("n is required for raw arrays")
    if not np.all(np.isfinite(vals)):
        raise ValueError("input must be finite (summable)")
    if M is None:
        M = _grid_size(max(vals.shape))
    if M < max(vals.shape):
        raise ValueError("grid must have at least as many nodes as the support width")
    spec = vals.astype(complex)
    for axis in range(d):
        spec = _forward_axis(spec, starts[axis], n, M, axis)
    k = -n / 2 + n * np.arange(M) / M
    return SpectralGrid(k, spec, n, d, tuple(starts), vals.shape)


def dft_at(f, k) -> np.ndarray:
    """Direct evaluation of the 1D transform at arbitrary frequencies."""
    k = np.asarray(k, dtype=float)
    phase = np.exp(2j * np.pi * np.multiply.outer(k, f.sites) / f.n)
    return phase @ f.values / f.n


def dft2_at(h: LatticeFunction2D, k, l) -> np.ndarray:
    """Direct evaluation of the 2D transform at paired frequencies (k_i, l_i)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    l = np.atleast_1d(np.asarray(l, dtype=float))
    x = h.start[0] + np.arange(h.values.shape[0])
    y = h.start[1] + np.arange(h.values.shape[1])
    px = np.exp(2j * np.pi * np.multiply.outer(k, x) / h.n)
    py = np.exp(2j * np.pi * np.multiply.outer(l, y) / h.n)
    return np.einsum("ix,xy,iy->i", px, h.values, py) / h.n ** 2


def idft_lattice(F: SpectralGrid):
    """Inverse transform back to lattice values on the original window."""
    vals = F.values
    M, n = F.M, F.n
    for axis in range(F.d):
        L = F.shape[axis]
        s = F.start[axis]
        x = s + np.arange(L)
        j = np.arange(M)
        # integral over one period by the trapezoid rule, exact for these trigonometric polynomials
        kern = np.exp(-2j * np.pi * np.multiply.outer(-n / 2 + n * j / M, x) / n) * (n / M)
        vals = np.moveaxis(np.tensordot(np.moveaxis(vals, axis, -1), kern, axes=([-1], [0])), -1, axis)
    real = vals.real
    if F.d == 1:
        return LatticeFunction1D(real, n, F.start[0])
    return LatticeFunction2D(real, n, F.start)


# discrete operators ------------------------------------------------------

def _check_mesh(*fs):
    ns = {f.n for f in fs}
    if len(ns) != 1:
        raise ValueError(f"mesh mismatch: {sorted(ns)}")


def gradient_n(f: LatticeFunction1D) -> LatticeFunction1D:
    """n (f(x+1) - f(x))."""
    p = f.padded(1, 1)
    v = p.n * (np.roll(p.values, -1) - p.values)
    return LatticeFunction1D(v[:-1], f.n, p.start)


def laplacian_n(f: LatticeFunction1D) -> LatticeFunction1D:
    p = f.padded(1, 1)
    v = p.values
    out = np.empty_like(v)
    out[1:-1] = v[2:] + v[:-2] - 2 * v[1:-1]
    out[0] = v[1] - 2 * v[0]
    out[-1] = v[-2] - 2 * v[-1]
    return LatticeFunction1D(f.n ** 2 * out, f.n, p.start)


def _shift2(v, dx, dy):
    """out[i, j] = v[i + dx, j + dy] with zeros outside."""
    out = np.zeros_like(v)
    Lx, Ly = v.shape
    xs = slice(max(0, -dx), min(Lx, Lx - dx))
    ys = slice(max(0, -dy), min(Ly, Ly - dy))
    xt = slice(max(0, dx), min(Lx, Lx + dx))
    yt = slice(max(0, dy), min(Ly, Ly + dy))
    out[xs, ys] = v[xt, yt]
    return out


def laplacian_n_2d(h: LatticeFunction2D) -> LatticeFunction2D:
    p = h.padded(1)
    v = p.values
    out = _shift2(v, 1, 0) + _shift2(v, -1, 0) + _shift2(v, 0, 1) + _shift2(v, 0, -1) - 4 * v
    return LatticeFunction2D(h.n ** 2 * out, h.n, p.start)


def skew_n(h: LatticeFunction2D) -> LatticeFunction2D:
    """n (h(x, y-1) + h(x-1, y) - h(x, y+1) - h(x+1, y))."""
    p = h.padded(1)
    v = p.values
    out = _shift2(v, 0, -1) + _shift2(v, -1, 0) - _shift2(v, 0, 1) - _shift2(v, 1, 0)
    return LatticeFunction2D(h.n * out, h.n, p.start)


def gradient_tensor_delta(f: LatticeFunction1D) -> LatticeFunction2D:
    """Discrete f'(x) times a delta on the diagonal, supported on |x - y| = 1."""
    p = f.padded(2, 2)
    v = p.values
    L = v.size
    out = np.zeros((L, L))
    i = np.arange(L - 1)
    half = p.n ** 2 / 2.0
    out[i, i + 1] = half * (v[i + 1] - v[i])
    out[i + 1, i] = half * (v[i + 1] - v[i])
    return LatticeFunction2D(out, f.n, (p.start, p.start))


def diagonal_derivative(h: LatticeFunction2D) -> LatticeFunction1D:
    """n (h(x, x+1) - h(x-1, x))."""
    band = h.diagonal_band(1).padded(1, 1)
    v = band.values
    out = v - np.concatenate([[0.0], v[:-1]])
    return LatticeFunction1D(h.n * out, h.n, band.start)


def e_tilde(h: LatticeFunction2D) -> LatticeFunction1D:
    """h(x, x+1) - h(x, x)."""
    up = h.diagonal_band(1)
    dg = h.diagonal_band(0)
    lo = min(up.start, dg.start)
    hi = max(up.stop, dg.stop)
    x = np.arange(lo, hi)
    return LatticeFunction1D(up.at(x) - dg.at(x), h.n, lo)


def f_tilde(h: LatticeFunction2D) -> LatticeFunction1D:
    """h(x+1, x+1) - h(x, x), read as a function of x alone."""
    dg = h.diagonal_band(0).padded(1, 1)
    x = dg.sites
    return LatticeFunction1D(dg.at(x + 1) - dg.at(x), h.n, dg.start)


def d_tilde(h: LatticeFunction2D, kappa: float) -> LatticeFunction2D:
    """Symmetric function on |x - y| = 1 with value n^2 [E h - (1-kappa)/2 F h](x) at (x, x+1)."""
    e = e_tilde(h)
    f = f_tilde(h)
    lo = min(e.start, f.start) - 1
    hi = max(e.stop, f.stop) + 1
    x = np.arange(lo, hi)
    val = h.n ** 2 * (e.at(x) - 0.5 * (1.0 - kappa) * f.at(x))
    L = x.size + 1
    out = np.zeros((L, L))
    i = np.arange(x.size)
    out[i, i + 1] = val
    out[i + 1, i] = val
    return LatticeFunction2D(out, h.n, (lo, lo))
