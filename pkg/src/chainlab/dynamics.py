"""Swap-noise harmonic chain on a periodic ring.

The drift deta(x)/dt = kappa * (eta(x+1) - eta(x-1)) is a circulant linear
flow, integrated exactly in Fourier space. Each of the N bonds carries a
rate-one clock that exchanges its two endpoint values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import kernels
from .params import ScalingParams

STREAM_INIT = 0
STREAM_DYNAMICS = 1

METHODS = ("event", "splitting")


def replica_generator(seed: int, replica: int, stream: int = STREAM_DYNAMICS) -> np.random.Generator:
    """Counter-based stream keyed by (master seed, replica index, purpose)."""
    if seed is None:
        raise ValueError("an explicit seed is required")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class RingState:
    eta: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        eta = np.array(self.eta, dtype=np.float64)
        if eta.ndim != 1 or eta.size < 2:
            raise ValueError("eta must be a vector with at least two sites")
        if not np.all(np.isfinite(eta)):
            raise ValueError("state contains non-finite values")
        self.eta = eta

    @property
    def N(self) -> int:
        return self.eta.size

    @property
    def volume(self) -> float:
        return float(np.sum(self.eta))

    @property
    def energy(self) -> float:
        return float(np.dot(self.eta, self.eta))

    def copy(self) -> "RingState":
        return RingState(self.eta.copy(), self.t, dict(self.meta))


def _kappa_of(params) -> float:
    return params.kappa if isinstance(params, ScalingParams) else float(params)


def default_dt(kappa: float) -> float:
    return 0.05 / max(1.0, abs(kappa))


def sample_gibbs_rows(rows, N: int, rho: float = 0.0, beta: float = 1.0, seed: int = 0) -> np.ndarray:
    """Gibbs samples for the given replica indices, one stream per replica."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")
    sd = 1.0 / math.sqrt(beta)
    out = np.empty((len(rows), N))
    for i, r in enumerate(rows):
        out[i] = rho + sd * replica_generator(seed, r, STREAM_INIT).standard_normal(N)
    return out


def sample_gibbs(N: int, rho: float = 0.0, beta: float = 1.0, seed: int = 0) -> RingState:
    """Product Gaussian configuration with mean rho and variance 1/beta."""
    eta = sample_gibbs_rows([0], N, rho, beta, seed)[0]
    return RingState(eta, 0.0, {"seed": seed, "rho": rho, "beta": beta})


def flow_multiplier(N: int, kappa: float, dt) -> np.ndarray:
    """rfft-domain multiplier of the exact flow over time dt (scalar or per row)."""
    k = np.arange(N // 2 + 1)
    s = np.sin(2.0 * np.pi * k / N)
    s[0] = 0.0
    if N % 2 == 0:
        s[-1] = 0.0
    # numpy's forward DFT uses exp(-2 i pi k x / N), so a unit right shift is exp(+i theta)
    return np.exp(2j * kappa * np.multiply.outer(np.asarray(dt, dtype=float), s))


def flow_rows(eta: np.ndarray, dt, kappa: float, workers: int = 1) -> np.ndarray:
    N = eta.shape[-1]
    if kappa == 0:
        # no drift: skip the transform so pure swap dynamics stay an exact permutation
        return np.array(eta, dtype=float, order="C")
    spec = sfft.rfft(eta, axis=-1, workers=workers)
    spec *= flow_multiplier(N, kappa, dt)
    return np.ascontiguousarray(sfft.irfft(spec, n=N, axis=-1, workers=workers))


def exact_flow(state: RingState, dt: float, kappa) -> RingState:
    """Exact solution of the drift ODE over time dt."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    kappa = _kappa_of(kappa)
    if dt == 0:
        return RingState(state.eta.copy(), state.t, dict(state.meta))
    eta = flow_rows(state.eta[None, :], dt, kappa)[0]
    return RingState(eta, state.t + dt, dict(state.meta))


def swap(state: RingState, x: int) -> RingState:
    """Exchange the values at x and x+1 (mod N)."""
    N = state.N
    if not 0 <= x < N:
        raise IndexError(f"bond {x} outside 0..{N - 1}")
    eta = state.eta.copy()
    y = (x + 1) % N
    eta[x], eta[y] = eta[y], eta[x]
    return RingState(eta, state.t, dict(state.meta))


def _segments(horizons) -> np.ndarray:
    h = np.asarray(horizons, dtype=float)
    if h.ndim != 1 or np.any(h < 0) or np.any(np.diff(h) < 0):
        raise ValueError("horizons must be a non-decreasing list of non-negative times")
    return np.diff(np.concatenate([[0.0], h]))


def _evolve_splitting(eta, kappa, horizons, dt, gens, workers):
    B, N = eta.shape
    out = np.empty((len(horizons), B, N))
    for i, seg in enumerate(_segments(horizons)):
        if seg > 0:
            m = max(1, math.ceil(seg / dt - 1e-9))
            h = seg / m
            counts = np.empty((B, m), dtype=np.int64)
            chunks = []
            for r, g in enumerate(gens):
                counts[r] = g.poisson(N * h, size=m)
                chunks.append(g.integers(0, N, size=int(counts[r].sum()), dtype=np.int32))
            bonds = np.concatenate(chunks) if chunks else np.empty(0, np.int32)
            offsets = np.zeros((B, m + 1), dtype=np.int64)
            np.cumsum(counts, axis=1, out=offsets[:, 1:])
            base = np.concatenate([[0], np.cumsum(offsets[:, -1])[:-1]])
            offsets += base[:, None]
            for j in range(m):
                eta = flow_rows(eta, h, kappa, workers)
                kernels.apply_swaps(eta, bonds, offsets[:, j], offsets[:, j + 1])
        out[i] = eta
    return out


def _event_times(g: np.random.Generator, N: int, T: float):
    """Event times in [0, T) and their bonds for one replica."""
    times, bonds, now = [], [], 0.0
    chunk = max(16, int(N * T + 6 * math.sqrt(N * T + 1)) + 16)
    while True:
        tau = g.exponential(1.0 / N, size=chunk)
        b = g.integers(0, N, size=chunk, dtype=np.int32)
        t = now + np.cumsum(tau)
        keep = t < T
        times.append(t[keep])
        bonds.append(b[keep])
        if not keep[-1]:
            break
        now = t[-1]
    return np.concatenate(times), np.concatenate(bonds)


def _evolve_event(eta, kappa, horizons, gens, workers):
    B, N = eta.shape
    horizons = np.asarray(horizons, dtype=float)
    _segments(horizons)
    nsnap = len(horizons)
    out = np.empty((nsnap, B, N))
    T = float(horizons[-1]) if nsnap else 0.0
    rows = []
    for g in gens:
        t, b = _event_times(g, N, T)
        # snapshots are pseudo-events with no swap; ties put snapshots first
        allt = np.concatenate([horizons, t])
        allb = np.concatenate([np.full(nsnap, -1, np.int32), b])
        snap = np.concatenate([np.arange(nsnap), np.full(t.size, -1)])
        order = np.lexsort((snap < 0, allt))
        rows.append((allt[order], allb[order], snap[order]))
    L = max(len(r[0]) for r in rows)
    times = np.zeros((B, L))
    bonds = np.full((B, L), -1, np.int32)
    snaps = np.full((B, L), -1, np.int64)
    for r, (t, b, s) in enumerate(rows):
        times[r, : t.size] = t
        times[r, t.size:] = t[-1] if t.size else 0.0
        bonds[r, : t.size] = b
        snaps[r, : t.size] = s
    now = np.zeros(B)
    for j in range(L):
        tau = times[:, j] - now
        if np.any(tau > 0):
            eta = flow_rows(eta, tau, kappa, workers)
        now = times[:, j].copy()
        hit = np.flatnonzero(snaps[:, j] >= 0)
        if hit.size:
            out[snaps[hit, j], hit] = eta[hit]
        kernels.apply_bond_column(eta, np.ascontiguousarray(bonds[:, j]))
    return out


def evolve_rows(eta0, kappa: float, horizons, seed: int, rows, method: str = "splitting",
                dt: float | None = None, workers: int = 1) -> np.ndarray:
    """Evolve a batch of replicas; row i uses the dynamics stream of replica rows[i].

    Returns snapshots of shape (len(horizons), B, N) at the microscopic horizons.
    """
    eta = np.array(eta0, dtype=np.float64, order="C")
    if eta.ndim != 2:
        raise ValueError("eta0 must have shape (B, N)")
    if not np.all(np.isfinite(eta)):
        raise ValueError("state contains non-finite values")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    gens = [replica_generator(seed, r, STREAM_DYNAMICS) for r in rows]
    if method == "splitting":
        dt = default_dt(kappa) if dt is None else float(dt)
        if not dt > 0:
            raise ValueError("splitting needs dt > 0")
        return _evolve_splitting(eta, kappa, horizons, dt, gens, workers)
    return _evolve_event(eta, kappa, horizons, gens, workers)


def simulate(state: RingState, T: float, params, seed: int, method: str = "splitting",
             dt: float | None = None, record=None):
    """Run the process for time T from `state`.

    `params` is a ScalingParams or a bare kappa. With `record` (times in
    [0, T]) the sampled trajectory is returned as well, shape (len(record), N).
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    kappa = _kappa_of(params)
    marks = [] if record is None else sorted(float(r) for r in record)
    if marks and (marks[0] < 0 or marks[-1] > T):
        raise ValueError("record times must lie in [0, T]")
    snaps = evolve_rows(state.eta[None, :], kappa, marks + [T], seed, [0], method, dt)
    final = RingState(snaps[-1, 0], state.t + T, dict(state.meta))
    if record is None:
        return final
    return final, snaps[:-1, 0]


# generator oracles -------------------------------------------------------

def energy_observable(f, eta) -> float:
    return float(np.dot(f, eta * eta))


def generator_energy_direct(f, state, kappa: float) -> float:
    """Swap differences plus the drift applied to the gradient of E(f)."""
    f = np.asarray(f, dtype=float)
    eta = state.eta if isinstance(state, RingState) else np.asarray(state, dtype=float)
    eta2 = eta * eta
    up = np.roll(eta2, -1)
    fu = np.roll(f, -1)
    # E(f) after swapping bond (x, x+1), minus E(f), for every x at once
    swapped = f * up + fu * eta2 - f * eta2 - fu * up
    drift = (np.roll(eta, -1) - np.roll(eta, 1)) * 2.0 * f * eta
    return float(np.sum(swapped) + kappa * np.sum(drift))


def generator_energy_closed(f, state, kappa: float) -> float:
    f = np.asarray(f, dtype=float)
    eta = state.eta if isinstance(state, RingState) else np.asarray(state, dtype=float)
    grad = np.roll(f, -1) - f
    lap = np.roll(f, -1) + np.roll(f, 1) - 2.0 * f
    return float(-2.0 * kappa * np.sum(grad * eta * np.roll(eta, -1)) + np.sum(lap * eta * eta))


def _check_symmetric(h):
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("h must be a square array indexed by ring sites")
    if not np.array_equal(h, h.T):
        raise ValueError("h must be symmetric")
    return h


def q_observable(h, eta) -> float:
    """Sum over x != y of h(x, y) eta(x) eta(y)."""
    h = np.asarray(h, dtype=float)
    return float(eta @ h @ eta - np.dot(np.diag(h), eta * eta))


def generator_q_direct(h, state, kappa: float) -> float:
    h = _check_symmetric(h)
    eta = state.eta if isinstance(state, RingState) else np.asarray(state, dtype=float)
    N = eta.size
    base = q_observable(h, eta)
    total = 0.0
    for x in range(N):
        e = eta.copy()
        y = (x + 1) % N
        e[x], e[y] = e[y], e[x]
        total += q_observable(h, e) - base
    offdiag = h - np.diag(np.diag(h))
    grad = 2.0 * offdiag @ eta
    drift = np.dot(np.roll(eta, -1) - np.roll(eta, 1), grad)
    return float(total + kappa * drift)


def lattice_laplacian_2d(h):
    return (np.roll(h, 1, 0) + np.roll(h, -1, 0) + np.roll(h, 1, 1) + np.roll(h, -1, 1) - 4.0 * h)


def lattice_skew_2d(h):
    """h(x-1,y) + h(x,y-1) - h(x+1,y) - h(x,y+1) on the ring."""
    return np.roll(h, 1, 0) + np.roll(h, 1, 1) - np.roll(h, -1, 0) - np.roll(h, -1, 1)


def diagonal_term(h, eta, kappa: float, beta: float = 1.0) -> float:
    h = np.asarray(h, dtype=float)
    N = eta.size
    x = np.arange(N)
    xp = (x + 1) % N
    xm = (x - 1) % N
    d = np.diag(h)
    first = 2.0 * kappa * np.sum((eta * eta - 1.0 / beta) * (h[xm, x] - h[x, xp]))
    second = 2.0 * np.sum(eta * eta[xp] * (2.0 * h[x, xp] - (1.0 + kappa) * d - (1.0 - kappa) * d[xp]))
    return float(first + second)


def generator_q_closed(h, state, kappa: float, beta: float = 1.0) -> float:
    h = _check_symmetric(h)
    eta = state.eta if isinstance(state, RingState) else np.asarray(state, dtype=float)
    op = lattice_laplacian_2d(h) + kappa * lattice_skew_2d(h)
    return q_observable(op, eta) + diagonal_term(h, eta, kappa, beta)
