"""Special integrals over one period of the two-site frequency torus.

Each family is an integral over x in [-1/2, 1/2] of a rational function of
Lambda(y - x, x) = 4[sin^2 pi(y-x) + sin^2 pi x] and
Omega(y - x, x) = 2[sin 2 pi(y-x) + sin 2 pi x], with c = gamma n^-b:

    G        (1/4) Omega^2 / (Lambda/c - i Omega)
    I        (1 - e^{-2 i pi x}) i Omega / (Lambda/c - i Omega)
    I_tilde  i Omega / (Lambda/c - i Omega)
    J        (1 + e^{2 i pi (y - 2x)}) / (Lambda - i c Omega)
    K        (e^{-2 i pi x} - 1)(e^{2 i pi (y-x)} + e^{2 i pi x}) / (Lambda - i c Omega)
    K_tilde  (e^{2 i pi (y-x)} + e^{2 i pi x}) / (Lambda - i c Omega)
    W        1 / (Lambda^2 + c^2 Omega^2)

Two independent routes are provided: adaptive quadrature (`quad_integral`)
and closed forms obtained by residues on the unit circle (`residue_integral`).
The closed forms are written through s = sqrt(1 - w u^2), evaluated as
sqrt((1 + c^2) sin^2(pi y) - i c sin(2 pi y)) to avoid cancellation near y = 0.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

FAMILIES = ("G", "I", "I_tilde", "J", "K", "K_tilde", "W")
# families that blow up as y -> 0; the others vanish there
SINGULAR_AT_ZERO = ("J", "K_tilde", "W")
DEGENERATE_DELTA = 1e-14


def symbol_lambda(k, l):
    """4 [sin^2(pi k) + sin^2(pi l)]."""
    return 4.0 * (np.sin(np.pi * k) ** 2 + np.sin(np.pi * l) ** 2)


def symbol_omega(k, l):
    """2 [sin(2 pi k) + sin(2 pi l)]."""
    return 2.0 * (np.sin(2.0 * np.pi * k) + np.sin(2.0 * np.pi * l))


def coupling(n: float, b: float, gamma: float) -> float:
    return gamma * float(n) ** (-b)


def _check_family(family: str) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def integrand(family: str, x, y: float, n: float, b: float, gamma: float):
    """Complex integrand of `family` at x (vectorized in x)."""
    _check_family(family)
    c = coupling(n, b, gamma)
    lam = symbol_lambda(y - x, x)
    om = symbol_omega(y - x, x)
    if family == "W":
        return 1.0 / (lam * lam + c * c * om * om)
    if family in ("G", "I", "I_tilde"):
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = 1j * om / (lam / c - 1j * om)
        # Lambda = Omega = 0 only at x = y = 0 mod 1, where the numerator vanishes too
        ratio = np.where(lam == 0, 0.0, ratio)
        if family == "G":
            return -0.25j * om * ratio
        if family == "I":
            return (1.0 - np.exp(-2j * np.pi * x)) * ratio
        return ratio
    den = lam - 1j * c * om
    pair = np.exp(2j * np.pi * (y - x)) + np.exp(2j * np.pi * x)
    if family == "J":
        return (1.0 + np.exp(2j * np.pi * (y - 2 * x))) / den
    if family == "K":
        return (np.exp(-2j * np.pi * x) - 1.0) * pair / den
    return pair / den


@dataclass
class QuadResult:
    value: complex
    error: float
    converged: bool


def quad_integral(family: str, y: float, n: float, b: float, gamma: float = 1.0,
                  epsabs: float = 1e-10, limit: int = 500) -> QuadResult:
    """Adaptive quadrature (QUADPACK) of one family at a single y.

    Breakpoints are placed at x = y/2 and its antipode, where Lambda is
    smallest and the integrands are sharpest. The tolerance is absolute for
    bounded families and relative for W, whose values grow like |y|^-3/2.
    """
    _check_family(family)
    y = float(y)
    if not -0.5 <= y <= 0.5:
        raise ValueError("y must lie in [-1/2, 1/2]")
    if y == 0.0 and family in SINGULAR_AT_ZERO:
        raise ValueError(f"{family} is singular at y = 0")
    half = y / 2
    anti = half - 0.5 if half > 0 else half + 0.5
    points = sorted({half, anti} - {-0.5, 0.5})
    parts, errs, ok = [], 0.0, True
    for take in (np.real, np.imag):
        def f(x, take=take):
            return float(take(integrand(family, x, y, n, b, gamma)))
        with np.errstate(all="ignore"), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            val, err = quad(f, -0.5, 0.5, points=points, limit=limit, epsabs=epsabs * 1e-2, epsrel=1e-13)
        ok = ok and not caught
        parts.append(val)
        errs += err
    value = complex(parts[0], parts[1])
    scale = max(1.0, abs(value)) if family == "W" else 1.0
    return QuadResult(value, errs, ok and errs <= epsabs * scale)


@dataclass
class ResidueData:
    """Root data of P_w(z) = z^2 - (4/a) z + w on which the closed forms rest.

    a = (1 + conj w) + c (1 - conj w), delta = 4 - w a^2 and the roots are
    z = (2 -+ sqrt(delta)) / a with the principal square root.
    """

    y: np.ndarray
    w: np.ndarray
    a: np.ndarray
    delta: np.ndarray
    sqrt_delta: np.ndarray
    z_minus: np.ndarray
    z_plus: np.ndarray

    @classmethod
    def at(cls, y, n: float, b: float, gamma: float = 1.0) -> "ResidueData":
        y = np.asarray(y, dtype=float)
        c = coupling(n, b, gamma)
        w = np.exp(2j * np.pi * y)
        a = (1.0 + np.conj(w)) + c * (1.0 - np.conj(w))
        s = _small_root(y, c)
        delta = 4.0 * s * s
        sq = 2.0 * s
        with np.errstate(invalid="ignore", divide="ignore"):
            zm = (2.0 - sq) / a
            zp = (2.0 + sq) / a
        return cls(y, w, a, delta, sq, zm, zp)

    def polynomial(self, z):
        return z * z - (4.0 / self.a) * z + self.w


def _small_root(y, c):
    """sqrt(1 - w u^2) with u = a/2, in a cancellation-free form."""
    S = np.sin(np.pi * y)
    return np.sqrt((1.0 + c * c) * S * S - 1j * c * np.sin(2.0 * np.pi * y))


def _closed_form(family: str, y, c: float):
    w = np.exp(2j * np.pi * y)
    wb = np.conj(w)
    u = 0.5 * ((1.0 + wb) + c * (1.0 - wb))
    s = _small_root(y, c)
    d = s * (1.0 + s)
    if family == "G":
        return -(c / 4.0) * (1.0 - wb) ** 2 * w / d
    if family == "I":
        return -(c * (1.0 - wb) / 2.0) * (1.0 - w * u) / d
    if family == "I_tilde":
        return c * (1.0 - wb) * w * u / (2.0 * d)
    if family == "J":
        return 1.0 / (2.0 * d)
    if family == "K":
        return (1.0 - w * u) / (2.0 * d)
    if family == "K_tilde":
        return w * u / (2.0 * d)
    # W: difference of the two resolvent residues, with c -> -c for the conjugate factor
    u2 = 0.5 * ((1.0 + wb) - c * (1.0 - wb))
    s2 = _small_root(y, -c)
    return (u / s - u2 / s2) / (16.0 * c * (1.0 - wb))


def residue_integral(family: str, y, n: float, b: float, gamma: float = 1.0,
                     return_error: bool = False):
    """Closed-form value of a family, vectorized in y.

    Where |delta| < 1e-14 the branch of the square root is ambiguous; those
    points are evaluated at a slightly perturbed y, and the reported error is
    the spread between two perturbations. Families that vanish at y = 0 are
    returned as 0 there.
    """
    _check_family(family)
    y = np.asarray(y, dtype=float)
    c = coupling(n, b, gamma)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.asarray(_closed_form(family, y, c), dtype=complex)
    err = np.zeros(y.shape)
    delta = 4.0 * np.abs(_small_root(y, c)) ** 2
    bad = delta < DEGENERATE_DELTA
    if np.any(bad):
        if family in SINGULAR_AT_ZERO:
            raise ValueError(f"{family} is singular at y = 0")
        step = math.sqrt(DEGENERATE_DELTA)
        yb = np.where(y[bad] >= 0, 1.0, -1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            v1 = _closed_form(family, y[bad] + yb * step, c)
            v2 = _closed_form(family, y[bad] + 2 * yb * step, c)
        # every non-singular family tends to 0 at y = 0
        val[bad] = np.where(y[bad] == 0, 0.0, v1)
        err[bad] = np.abs(v2 - v1) + np.abs(v1)
    if val.ndim == 0:
        val, err = complex(val), float(err)
    return (val, err) if return_error else val


def family_table(family: str, ys, n: float, b: float, gamma: float = 1.0, method: str = "residue"):
    """Rows (family, n, b, gamma, y, re, im, method, err) for CSV export."""
    rows = []
    for y in np.asarray(ys, dtype=float):
        if method == "residue":
            v, e = residue_integral(family, y, n, b, gamma, return_error=True)
        elif method == "quad":
            r = quad_integral(family, y, n, b, gamma)
            v, e = r.value, r.error
        else:
            raise ValueError("method must be 'residue' or 'quad'")
        rows.append((family, n, b, gamma, float(y), v.real, v.imag, method, e))
    return rows


def rows_to_csv(rows, path=None) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["family", "n", "b", "gamma", "y", "re", "im", "method", "err"])
    for r in rows:
        wr.writerow([r[0], r[1], repr(float(r[2])), repr(float(r[3]))] + [repr(float(v)) for v in r[4:7]]
                    + [r[7], repr(float(r[8]))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# asymptotic bounds -------------------------------------------------------

def small_y_drift(y, n: float, b: float, gamma: float = 1.0):
    """Leading behaviour of G for b < 1: n^{-b/2} sqrt(gamma/2) |sin pi y|^{3/2} e^{i pi sgn(y)/4}."""
    y = np.asarray(y, dtype=float)
    S = np.abs(np.sin(np.pi * y))
    return float(n) ** (-b / 2) * math.sqrt(gamma / 2.0) * S ** 1.5 * np.exp(0.25j * np.pi * np.sign(y))


def bound_ratio(family: str, y, n: float, b: float, gamma: float = 1.0) -> np.ndarray:
    """|value| (or the asymptotic remainder for G) divided by the bound shape."""
    _check_family(family)
    y = np.asarray(y, dtype=float)
    c = coupling(n, b, gamma)
    S = np.abs(np.sin(np.pi * y))
    v = residue_integral(family, y, n, b, gamma)
    root = np.sqrt(c + S)
    if family == "G":
        if b < 1:
            return np.abs(v - small_y_drift(y, n, b, gamma)) / S ** 2
        return np.abs(v) / (c * S)
    shape = {
        "I": c * S ** 1.5 / root,
        "I_tilde": c * S ** 0.5 / root,
        "J": S ** -0.5 / root,
        "K": S ** 0.5 / root,
        "K_tilde": S ** -0.5 / root,
        "W": float(n) ** (2 * b) * np.abs(y) ** -1.5,
    }[family]
    return np.abs(v) / shape


@dataclass
class BoundReport:
    family: str
    b: float
    gamma: float
    ns: list
    sup_ratio: list
    tolerance: float = 2.0
    meta: dict = field(default_factory=dict)

    @property
    def growth(self) -> float:
        """Largest sup-ratio relative to the one at the smallest n."""
        return float(max(self.sup_ratio) / self.sup_ratio[0])

    @property
    def spread(self) -> float:
        return float(max(self.sup_ratio) / min(self.sup_ratio))

    @property
    def bounded(self) -> bool:
        return self.growth <= self.tolerance


def default_y_grid(count: int = 400, smallest: float = 1e-3) -> np.ndarray:
    return np.geomspace(smallest, 0.5, count)


def verify_bound(family: str, ns, b: float, gamma: float = 1.0, ys=None, tolerance: float = 2.0) -> BoundReport:
    """Sup over a y-grid of the bound ratio, for each n."""
    ys = default_y_grid() if ys is None else np.asarray(ys, dtype=float)
    sups = [float(np.max(bound_ratio(family, ys, n, b, gamma))) for n in ns]
    return BoundReport(family, b, gamma, [int(n) for n in ns], sups, tolerance)


def envelope_exponent(family: str, n: float, b: float, gamma: float = 1.0, lo: float = 1e-3, hi: float = 0.4,
                      count: int = 200) -> float:
    """Log-log slope of |value(y)| against y on [lo, hi]."""
    ys = np.geomspace(lo, hi, count)
    v = np.abs(residue_integral(family, ys, n, b, gamma))
    return float(np.polyfit(np.log(ys), np.log(v), 1)[0])
