"""Exact spectral solutions of the corrector equations and their diagnostics.

The three correctors solve, on the infinite lattice,

    Delta_n u + gamma n^{1-b} A_n u = rhs,

with rhs = 2 gamma n^{1/2-b} grad_n f (x) delta for h, D~_n h for v and D~_n v
for w. Their transforms are closed-form densities on [-n/2, n/2]^2; with
D = Lambda - i c Omega, c = gamma n^-b, xi = k + l and y = xi / n,

    h^(k, l) =  n^{-1/2} i Omega / (Lambda / c - i Omega) f^(xi)
    v^(k, l) =  n^{-1/2} (e_k + e_l) / D * rho(y) f^(xi)
    w^(k, l) = -n^{-1/2} (e_k + e_l) / D * rho(y) sigma(y) f^(xi)

where e_k = exp(2 i pi k / n), rho = I - (1-kappa)/2 (1 - e^{-2 i pi y}) I~ and
sigma = K + (1-kappa)/2 (1 - e^{-2 i pi y}) K~ come from the integral families.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import integrals
from .lattice import LatticeFunction1D, LatticeFunction2D, dft2_at, dft_at, gradient_tensor_delta
from .levy import multiplier_psi
from .params import ScalingParams

KINDS = ("h", "v", "w")
NORM_NAMES = ("h", "v", "D_v", "w", "D_w", "Dtilde_w")


def spectral_symbols(k, l, n: float):
    """(Lambda, Omega) at (k/n, l/n)."""
    return integrals.symbol_lambda(np.asarray(k) / n, np.asarray(l) / n), \
        integrals.symbol_omega(np.asarray(k) / n, np.asarray(l) / n)


def omega_bound_holds(xi, l, n: float) -> np.ndarray:
    """Omega((xi - l)/n, l/n)^2 <= 16 sin^2(pi xi / n), with a rounding allowance."""
    xi = np.asarray(xi, dtype=float)
    _, om = spectral_symbols(xi - l, l, n)
    rhs = 16.0 * np.sin(np.pi * xi / n) ** 2
    return om * om <= rhs * (1 + 1e-12) + 1e-15


def _source_lattice(f, n: int) -> LatticeFunction1D:
    if isinstance(f, LatticeFunction1D):
        if f.n != n:
            raise ValueError(f"mesh mismatch: source on n={f.n}, parameters on n={n}")
        return f
    if hasattr(f, "lattice"):
        return f.lattice(n)
    raise TypeError("source must be a LatticeFunction1D or provide .lattice(n)")


def diagonal_factors(y, params: ScalingParams):
    """(rho(y), sigma(y)) that carry h into v and v into w."""
    y = np.asarray(y, dtype=float)
    n, b, g = params.n, params.b, params.gamma
    weight = 0.5 * (1.0 - params.kappa)
    edge = 1.0 - np.exp(-2j * np.pi * y)
    rho = integrals.residue_integral("I", y, n, b, g) - weight * edge * integrals.residue_integral("I_tilde", y, n, b, g)
    sigma = np.zeros(y.shape, dtype=complex)
    nz = y != 0
    # at y = 0 rho vanishes and the product rho * sigma with it
    if np.any(nz):
        yz = y[nz]
        sigma[nz] = integrals.residue_integral("K", yz, n, b, g) + weight * edge[nz] * \
            integrals.residue_integral("K_tilde", yz, n, b, g)
    return rho, sigma


@dataclass
class CorrectorSolution:
    """Frequency-side closed form of one corrector for a given source f."""

    which: str
    params: ScalingParams
    source: LatticeFunction1D

    def __post_init__(self):
        if self.which not in KINDS:
            raise ValueError(f"which must be one of {KINDS}")

    @property
    def n(self) -> int:
        return self.params.n

    def source_transform(self, xi) -> np.ndarray:
        return dft_at(self.source, xi)

    def hat(self, k, l) -> np.ndarray:
        """Transform at paired frequencies (broadcast)."""
        k, l = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(l, dtype=float))
        n = self.n
        c = integrals.coupling(n, self.params.b, self.params.gamma)
        lam, om = spectral_symbols(k, l, n)
        xi = k + l
        fh = self.source_transform(xi.ravel()).reshape(xi.shape)
        singular = lam == 0
        safe = np.where(singular, 1.0, lam)
        if self.which == "h":
            val = 1j * om / (safe / c - 1j * om) * fh / math.sqrt(n)
        else:
            # fold y into [-1/2, 1/2]; the factors are 1-periodic
            y = xi / n
            y = y - np.round(y)
            rho, sigma = diagonal_factors(y.ravel(), self.params)
            factor = rho.reshape(y.shape)
            if self.which == "w":
                factor = -factor * sigma.reshape(y.shape)
            pair = np.exp(2j * np.pi * k / n) + np.exp(2j * np.pi * l / n)
            val = pair / (safe - 1j * c * om) * factor * fh / math.sqrt(n)
        # Lambda = 0 only at the origin mod n, where the numerators vanish too
        return np.where(singular, 0.0, val)

    def symmetry_defect(self, k, l) -> float:
        return float(np.max(np.abs(self.hat(k, l) - self.hat(l, k))))

    def uniform_grid(self, M: int):
        """Nodes k_j = n (j - M/2) / M and the M x M array of transform values."""
        k = self.n * (np.arange(M) - M // 2) / M
        return k, self.hat(k[:, None], k[None, :])

    def lattice_values(self, M: int) -> LatticeFunction2D:
        """Lattice values on the sites -M/2 .. M/2-1 of the M-periodized corrector.

        The periodic trapezoid rule on the uniform grid returns exactly the
        sum of the translates of u by multiples of M, so the result is u itself
        up to the tail beyond distance M/2.
        """
        if M % 2:
            raise ValueError("M must be even")
        _, vals = self.uniform_grid(M)
        box = np.fft.fft2(vals) * (self.n / M) ** 2
        x = np.arange(M) - M // 2
        sign = np.where(x % 2 == 0, 1.0, -1.0)
        out = box[np.ix_(x % M, x % M)] * np.outer(sign, sign)
        return LatticeFunction2D(out.real, self.n, (-(M // 2), -(M // 2)))


def solve_h(f, params: ScalingParams) -> CorrectorSolution:
    """Corrector h solving Delta_n h + gamma n^{1-b} A_n h = 2 gamma n^{1/2-b} grad_n f (x) delta."""
    return CorrectorSolution("h", params, _source_lattice(f, params.n))


def solve_corrector(previous: CorrectorSolution, params: ScalingParams | None = None) -> CorrectorSolution:
    """Next corrector in the chain: v from h, w from v (right-hand side D~_n of the previous one)."""
    if params is not None and params != previous.params:
        raise ValueError("parameters differ from those of the supplied corrector")
    nxt = {"h": "v", "v": "w"}.get(previous.which)
    if nxt is None:
        raise ValueError("w is the last corrector in the chain")
    return CorrectorSolution(nxt, previous.params, previous.source)


# residual check ----------------------------------------------------------

def _complex_quad(fun, lo, hi, points):
    out = []
    err = 0.0
    for take in (np.real, np.imag):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            v, e = quad(lambda t, take=take: float(take(fun(t))), lo, hi, points=points,
                        limit=400, epsabs=1e-14, epsrel=1e-12)
        out.append(v)
        err += e
    return complex(out[0], out[1]), err


def _diagonal_transforms(sol: CorrectorSolution, xi: float):
    """Transforms at xi of x -> u(x, x+1) - u(x, x) and x -> u(x+1, x+1) - u(x, x), by quadrature."""
    n = sol.n
    pts = [p for p in (xi / 2, xi / 2 - n / 2, xi / 2 + n / 2) if -n / 2 < p < n / 2]

    def dens(l, weight):
        return complex(sol.hat(xi - l, l)) * weight(l)

    up, _ = _complex_quad(lambda l: dens(l, lambda t: np.exp(-2j * np.pi * t / n) - 1.0), -n / 2, n / 2, pts)
    dg, _ = _complex_quad(lambda l: dens(l, lambda t: 1.0), -n / 2, n / 2, pts)
    return up, (np.exp(-2j * np.pi * xi / n) - 1.0) * dg


@dataclass
class ResidualReport:
    which: str
    k: np.ndarray
    l: np.ndarray
    residual: np.ndarray
    rhs: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def norm_estimate(self) -> float:
        """Frequency-side L2 norm over the checkpoints, scaled to the square [-n/2, n/2]^2."""
        return float(np.sqrt(np.mean(np.abs(self.residual) ** 2)))

    @property
    def relative(self) -> float:
        return float(np.linalg.norm(self.residual) / max(np.linalg.norm(self.rhs), 1e-300))


def default_checkpoints(n: int, count: int = 32, band: float = 6.0, seed: int = 0):
    """Frequency pairs with k + l inside the band where the source lives, l anywhere."""
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-min(band, n / 2), min(band, n / 2), count)
    l = rng.uniform(-n / 2, n / 2, count)
    return xi - l, l


def poisson_residual(sol: CorrectorSolution, previous: CorrectorSolution | None = None,
                     k=None, l=None) -> ResidualReport:
    """Pointwise residual of the defining equation on frequency checkpoints.

    The right-hand side is computed independently of the closed form of
    `sol`: for h, by direct transform of grad_n f (x) delta; for v and w,
    by quadrature of the previous corrector along the antidiagonal.
    """
    if k is None:
        k, l = default_checkpoints(sol.n)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    l = np.atleast_1d(np.asarray(l, dtype=float))
    p = sol.params
    n = p.n
    lam, om = spectral_symbols(k, l, n)
    lhs = (-n * n * lam + 1j * p.gamma * n ** (2 - p.b) * om) * sol.hat(k, l)
    if sol.which == "h":
        grad = gradient_tensor_delta(sol.source)
        rhs = 2.0 * p.gamma * n ** (0.5 - p.b) * dft2_at(grad, k, l)
    else:
        if previous is None:
            previous = CorrectorSolution({"v": "h", "w": "v"}[sol.which], p, sol.source)
        if previous.params != p or previous.which != {"v": "h", "w": "v"}[sol.which]:
            raise ValueError("previous corrector does not match")
        weight = 0.5 * (1.0 - p.kappa)
        rhs = np.empty(k.shape, dtype=complex)
        for i, (kk, ll) in enumerate(zip(k, l)):
            up, diag = _diagonal_transforms(previous, kk + ll)
            pair = np.exp(2j * np.pi * kk / n) + np.exp(2j * np.pi * ll / n)
            rhs[i] = n * pair * (up - weight * diag)
    return ResidualReport(sol.which, k, l, lhs - rhs, rhs)


# norms -------------------------------------------------------------------

def pair_weight(y: float, n: float, b: float, gamma: float) -> float:
    """integral over x of |e^{2 i pi (y-x)} + e^{2 i pi x}|^2 / |Lambda - i c Omega|^2 (y != 0)."""
    c = integrals.coupling(n, b, gamma)

    def f(x):
        lam = integrals.symbol_lambda(y - x, x)
        om = integrals.symbol_omega(y - x, x)
        return (2.0 + 2.0 * math.cos(2 * math.pi * (y - 2 * x))) / (lam * lam + c * c * om * om)

    half = y / 2
    pts = [half, half - 0.5 if half > 0 else half + 0.5]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return quad(f, -0.5, 0.5, points=pts, limit=500, epsabs=0.0, epsrel=1e-11)[0]


def xi_quadrature(xi_max: float, panels: int = 40, order: int = 12, smallest: float = 1e-4):
    """Composite Gauss-Legendre rule on [-xi_max, xi_max], geometrically graded towards 0."""
    edges = np.concatenate([[0.0], np.geomspace(min(smallest, xi_max / 10), xi_max, panels)])
    t, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (lo + (hi - lo) * (t + 1) / 2).ravel()
    weights = ((hi - lo) / 2 * w).ravel()
    return np.concatenate([-nodes[::-1], nodes]), np.concatenate([weights[::-1], weights])


def _band(f, n: int) -> float:
    band = f.band() if hasattr(f, "band") else np.inf
    return float(min(band, n / 2))


def corrector_norms(f, params: ScalingParams, which=NORM_NAMES, panels: int = 40, order: int = 12) -> dict:
    """Squared l2(n) norms of the correctors and derived quantities, by Parseval.

    Keys: h, v, w for the correctors themselves; D_v and D_w for
    n^{a-b-3/2} D_n applied to v and w; Dtilde_w for n^{a-2} D~_n w.
    """
    unknown = set(which) - set(NORM_NAMES)
    if unknown:
        raise ValueError(f"unknown norms {sorted(unknown)}")
    n, b, g, a = params.n, params.b, params.gamma, params.a
    src = _source_lattice(f, n)
    xi, wt = xi_quadrature(_band(f, n), panels, order)
    y = xi / n
    F2 = np.abs(dft_at(src, xi)) ** 2
    out = {}
    if "h" in which:
        out["h"] = float(np.sum(wt * F2 * -integrals.residue_integral("I_tilde", y, n, b, g).real))
    if set(which) - {"h"}:
        rho, sigma = diagonal_factors(y, params)
        s2 = 4.0 * np.sin(np.pi * y) ** 2
        need_pair = {"v", "w"} & set(which)
        V = np.array([pair_weight(t, n, b, g) for t in y]) if need_pair else None
        J2 = np.abs(integrals.residue_integral("J", y, n, b, g)) ** 2 if {"D_v", "D_w"} & set(which) else None
        r2, rs2 = np.abs(rho) ** 2, np.abs(rho * sigma) ** 2
        terms = {
            "v": lambda: F2 * r2 * V,
            "D_v": lambda: n ** (2 * (a - b)) * s2 * F2 * r2 * J2,
            "w": lambda: F2 * rs2 * V,
            "D_w": lambda: n ** (2 * (a - b)) * s2 * F2 * rs2 * J2,
            "Dtilde_w": lambda: 2.0 * n ** (2 * a) * F2 * r2 * np.abs(sigma) ** 4,
        }
        for name in which:
            if name != "h":
                out[name] = float(np.sum(wt * terms[name]()))
    return {name: out[name] for name in which}


def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


@dataclass
class NormDecayReport:
    b: float
    gamma: float
    ns: list
    norms: dict
    slopes: dict = field(default_factory=dict)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "b", "gamma", "norm", "value"])
        for name, vals in self.norms.items():
            for n, v in zip(self.ns, vals):
                wr.writerow([n, repr(self.b), repr(self.gamma), name, repr(v)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def norm_decay(f, ns, b: float, gamma: float = 1.0, which=NORM_NAMES) -> NormDecayReport:
    rows = [corrector_norms(f, ScalingParams(int(n), b, gamma), which) for n in ns]
    norms = {name: [r[name] for r in rows] for name in which}
    slopes = {name: loglog_slope(ns, vals) for name, vals in norms.items()}
    return NormDecayReport(b, gamma, [int(n) for n in ns], norms, slopes)


# effective multiplier and the generator residual ------------------------

def effective_multiplier(n: int, b: float, gamma: float, xi, method: str = "residue") -> np.ndarray:
    """Multiplier of f -> n^{a-2} Delta_n f - 2 gamma n^{a-b-3/2} D_n h_n[f].

    Equal to -4 n^a sin^2(pi xi/n) - 4 gamma n^{a-b} G(xi/n); `method`
    selects the closed form or adaptive quadrature for G.
    """
    xi = np.asarray(xi, dtype=float)
    a = ScalingParams(n, b, gamma).a
    y = xi / n
    if method == "residue":
        G = integrals.residue_integral("G", y, n, b, gamma)
    elif method == "quad":
        G = np.array([integrals.quad_integral("G", t, n, b, gamma).value for t in y.ravel()]).reshape(y.shape)
    else:
        raise ValueError("method must be 'residue' or 'quad'")
    return -4.0 * float(n) ** a * np.sin(np.pi * y) ** 2 - 4.0 * gamma * float(n) ** (a - b) * G


def multiplier_trace_csv(xi, values, path=None) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["xi", "re", "im"])
    for x, v in zip(np.asarray(xi, float), np.asarray(values, complex)):
        wr.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


@dataclass
class StableFit:
    """Least-squares fit M(xi) ~ c_stable |2 pi xi|^{3/2} + c_heat (2 pi xi)^2 on xi > 0."""

    n: int
    real: tuple
    imag: tuple

    @property
    def stable_coefficient(self) -> float:
        return self.real[0]


def fit_stable_coefficient(n: int, b: float, gamma: float, xi=None) -> StableFit:
    xi = np.linspace(0.25, 4.0, 60) if xi is None else np.asarray(xi, dtype=float)
    m = effective_multiplier(n, b, gamma, xi)
    w = 2 * np.pi * xi
    design = np.column_stack([w ** 1.5, w ** 2])
    re = np.linalg.lstsq(design, m.real, rcond=None)[0]
    im = np.linalg.lstsq(design, m.imag, rcond=None)[0]
    return StableFit(n, tuple(map(float, re)), tuple(map(float, im)))


def lemma3_residual(f, n: int, b: float, gamma: float = 1.0, convention: str = "stated",
                    panels: int = 40, order: int = 12) -> float:
    """(1/n) sum_x |(n^{a-2} Delta_n f - 2 gamma n^{a-b-3/2} D_n h_n)(x/n) - L f(x/n)|^2, by Parseval.

    The limit operator L acts through its symbol from the levy module on the
    continuum transform of f, which equals the lattice transform up to
    aliasing far below double precision for the bundled test functions.
    """
    src = _source_lattice(f, n)
    if not hasattr(f, "transform"):
        raise TypeError("f must provide its continuum transform")
    xi, wt = xi_quadrature(_band(f, n), panels, order)
    lat = dft_at(src, xi)
    cont = f.transform(xi)
    diff = effective_multiplier(n, b, gamma, xi) * lat - multiplier_psi(b, gamma, xi, convention) * cont
    return float(np.sum(wt * np.abs(diff) ** 2))
