"""Monte Carlo estimates of the energy correlation profile and the two rescaled fields."""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .dynamics import evolve_rows, sample_gibbs_rows
from .lattice import LatticeFunction1D, LatticeFunction2D, l2n_norm
from .params import ScalingParams, check_ring_size


@dataclass
class Accumulator:
    """Commutative monoid of (sum, sum of squares, count) over replicas."""

    total: np.ndarray
    sumsq: np.ndarray
    count: int = 0

    @classmethod
    def empty(cls, shape) -> "Accumulator":
        return cls(np.zeros(shape), np.zeros(shape), 0)

    @classmethod
    def of(cls, samples) -> "Accumulator":
        samples = np.asarray(samples, dtype=float)
        return cls(samples.sum(axis=0), (samples * samples).sum(axis=0), samples.shape[0])

    def merge(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(self.total + other.total, self.sumsq + other.sumsq, self.count + other.count)

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count

    @property
    def stderr(self) -> np.ndarray:
        """Jackknife standard error of the mean (equal to the usual one for a mean)."""
        if self.count < 2:
            return np.full(np.shape(self.total), np.inf)
        var = (self.sumsq - self.total ** 2 / self.count) / (self.count - 1)
        return np.sqrt(np.maximum(var, 0.0) / self.count)


def jackknife_stderr(samples, stat=np.mean) -> np.ndarray:
    """Leave-one-out jackknife standard error of `stat` over the first axis."""
    x = np.asarray(samples, dtype=float)
    R = x.shape[0]
    total = x.sum(axis=0)
    if stat is np.mean:
        loo = (total[None] - x) / (R - 1)
    else:
        loo = np.stack([stat(np.delete(x, i, axis=0), axis=0) for i in range(R)])
    return np.sqrt((R - 1) / R * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))


@dataclass
class CorrelationProfile:
    n: int
    b: float
    gamma: float
    t: float
    offsets: np.ndarray
    S: np.ndarray
    stderr: np.ndarray
    replicas: int
    beta: float = 1.0
    a: float = 2.0
    seed: int = 0
    N: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def mass(self) -> float:
        return float(np.sum(self.S))

    def value(self, d) -> np.ndarray:
        d = np.asarray(d)
        return self.S[d - self.offsets[0]]

    def error(self, d) -> np.ndarray:
        d = np.asarray(d)
        return self.stderr[d - self.offsets[0]]

    def metadata(self) -> dict:
        return {
            "n": self.n, "b": self.b, "gamma": self.gamma, "beta": self.beta, "t": self.t,
            "a": self.a, "replicas": self.replicas, "seed": self.seed, "N": self.N,
            **self.meta,
        }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("# schema=correlation-profile/1\n")
        for k, v in self.metadata().items():
            v = v.item() if isinstance(v, np.generic) else v
            buf.write(f"# {k}={v!r}\n")
        buf.write("offset,S,stderr\n")
        for d, s, e in zip(self.offsets.tolist(), self.S.tolist(), self.stderr.tolist()):
            buf.write(f"{int(d)},{s!r},{e!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "CorrelationProfile":
        import ast

        meta, rows = {}, []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    if k != "schema":
                        meta[k] = ast.literal_eval(v)
                elif line[0].isdigit() or line[0] == "-":
                    rows.append([float(c) for c in line.split(",")])
        arr = np.array(rows)
        core = {k: meta.pop(k) for k in ("n", "b", "gamma", "beta", "t", "a", "replicas", "seed", "N")}
        return cls(offsets=arr[:, 0].astype(int), S=arr[:, 1], stderr=arr[:, 2], meta=meta, **core)


@dataclass
class QFieldEstimate:
    n: int
    b: float
    gamma: float
    t: float
    value: float
    stderr: float
    replicas: int
    bound: float

    @property
    def within_bound(self) -> bool:
        return abs(self.value) <= self.bound + 3 * self.stderr


def energy_variance(rho: float, beta: float) -> float:
    """Variance of eta^2 under the Gaussian product measure."""
    return 2.0 / beta ** 2 + 4.0 * rho ** 2 / beta


def _batches(replicas: int, batch: int):
    return [range(i, min(i + batch, replicas)) for i in range(0, replicas, batch)]


def _run_batches(work, replicas, batch, threads):
    chunks = _batches(replicas, batch)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    # merge in batch order so the floating-point result does not depend on scheduling
    acc = parts[0]
    for p in parts[1:]:
        acc = [x.merge(y) for x, y in zip(acc, p)]
    return acc


def _support_diameter(*fs) -> int:
    d = 0
    for f in fs:
        if isinstance(f, LatticeFunction1D):
            d = max(d, f.values.size)
        elif isinstance(f, LatticeFunction2D):
            d = max(d, *f.values.shape)
    return d


def estimate_S_profile(params: ScalingParams, times, replicas: int, seed: int, N: int = 512,
                       g=None, method: str = "splitting", dt: float | None = None,
                       batch: int = 256, threads: int = 1, check_size: bool = True):
    """Translation-averaged estimate of S at each macroscopic time, one profile per time."""
    times = [float(t) for t in times]
    horizons = [params.horizon(t) for t in times]
    if check_size:
        check_ring_size(N, max(horizons), params.kappa, _support_diameter(g))
    center = params.rho ** 2 + 1.0 / params.beta
    norm = 1.0 / (N * energy_variance(params.rho, params.beta))

    def work(rows):
        eta0 = sample_gibbs_rows(rows, N, params.rho, params.beta, seed)
        snaps = evolve_rows(eta0, params.kappa, horizons, seed, rows, method, dt)
        a = sfft.rfft(eta0 * eta0 - center, axis=-1)
        out = []
        for snap in snaps:
            b = sfft.rfft(snap * snap - center, axis=-1)
            corr = sfft.irfft(np.conj(a) * b, n=N, axis=-1) * norm
            out.append(Accumulator.of(np.roll(corr, N // 2, axis=-1)))
        return out

    accs = _run_batches(work, replicas, batch, threads)
    offsets = np.arange(-(N // 2), N - N // 2)
    return [
        CorrelationProfile(
            n=params.n, b=params.b, gamma=params.gamma, t=t, offsets=offsets, S=acc.mean,
            stderr=acc.stderr, replicas=replicas, beta=params.beta, a=params.a, seed=seed, N=N,
            meta={"method": method, "dt": dt},
        )
        for t, acc in zip(times, accs)
    ]


def _pair_weights(f: LatticeFunction1D, g: LatticeFunction1D, offsets):
    """w(d) = (1/n) sum_x g(x/n) f((x+d)/n) for each offset d."""
    lo = min(f.start, g.start)
    hi = max(f.stop, g.stop)
    x = np.arange(lo, hi)
    fv, gv = f.at(x), g.at(x)
    full = np.correlate(fv, gv, mode="full")  # full[k] pairs offset d = k - (len - 1)
    ds = np.arange(-(x.size - 1), x.size)
    w = np.zeros(len(offsets))
    pos = np.asarray(offsets) - offsets[0]
    ok = (ds >= offsets[0]) & (ds <= offsets[-1])
    w[pos[0] + ds[ok] - offsets[0]] = full[ok]
    return w / f.n


def field_S(profile: CorrelationProfile, f: LatticeFunction1D, g: LatticeFunction1D):
    """(1/n) sum g(x/n) f(y/n) S(y-x); returns (value, propagated stderr, a-priori bound).

    The error propagation treats offsets as independent, which is conservative
    enough for the 3-sigma checks it feeds.
    """
    if f.n != profile.n or g.n != profile.n:
        raise ValueError("test functions must live on the profile's mesh")
    span = max(f.stop, g.stop) - min(f.start, g.start)
    if profile.N and span > profile.N // 2:
        raise ValueError("test-function supports exceed the simulated lattice")
    w = _pair_weights(f, g, profile.offsets)
    value = float(np.dot(w, profile.S))
    err = float(np.sqrt(np.dot(w * w, profile.stderr ** 2)))
    bound = l2n_norm(f.values, f.n) * l2n_norm(g.values, g.n)
    return value, err, bound


def estimate_Q_field(params: ScalingParams, g: LatticeFunction1D, h: LatticeFunction2D, times,
                     replicas: int, seed: int, N: int = 512, method: str = "splitting",
                     dt: float | None = None, batch: int = 256, threads: int = 1,
                     check_size: bool = True):
    """Translation-averaged Monte Carlo estimate of the two-point field Q(h)."""
    if not h.square().is_symmetric:
        raise ValueError("h must be symmetric")
    if g.n != params.n or h.n != params.n:
        raise ValueError("test functions must use the mesh n of params")
    times = [float(t) for t in times]
    horizons = [params.horizon(t) for t in times]
    if check_size:
        check_ring_size(N, max(horizons), params.kappa, _support_diameter(g, h))
    n = params.n
    center = params.rho ** 2 + 1.0 / params.beta
    G = np.conj(sfft.rfft(g.to_ring(N)))
    sq = h.square()
    width = sq.values.shape[0]
    bands = []
    for d in range(1, width):
        band = sq.diagonal_band(d)
        if np.any(band.values != 0):
            # h(u, u+d) and h(u+d, u) are equal, so each pair is counted twice
            bands.append((d, np.conj(sfft.rfft(2.0 * band.to_ring(N)))))
    weight = np.full(N // 2 + 1, 2.0)
    weight[0] = 1.0
    if N % 2 == 0:
        weight[-1] = 1.0

    def work(rows):
        eta0 = sample_gibbs_rows(rows, N, params.rho, params.beta, seed)
        snaps = evolve_rows(eta0, params.kappa, horizons, seed, rows, method, dt)
        A = G * sfft.rfft(eta0 * eta0 - center, axis=-1)
        out = []
        for snap in snaps:
            total = np.zeros(len(rows))
            for d, H in bands:
                Bd = H * sfft.rfft(snap * np.roll(snap, -d, axis=-1), axis=-1)
                total += np.sum(weight * (np.conj(A) * Bd).real, axis=-1) / N
            # average over the N translates, with the 1/2, 1/sqrt(n) and 1/n prefactors
            out.append(Accumulator.of((0.5 / N) * total / (math.sqrt(n) * n)))
        return out

    accs = _run_batches(work, replicas, batch, threads)
    bound = 2.0 * g.norm() * h.norm()
    return [
        QFieldEstimate(params.n, params.b, params.gamma, t, float(acc.mean), float(acc.stderr),
                       replicas, bound)
        for t, acc in zip(times, accs)
    ]


def q_field_sample(params: ScalingParams, g: LatticeFunction1D, h: LatticeFunction2D, eta0, etat):
    """Direct (non-averaged over translations) single-replica value, used as a test oracle."""
    N = eta0.size
    n = params.n
    center = params.rho ** 2 + 1.0 / params.beta
    gr = g.to_ring(N)
    hr = h.square().to_ring(N)
    np.fill_diagonal(hr, 0.0)
    vals = []
    for s in range(N):
        gs = np.roll(gr, s)
        hs = np.roll(np.roll(hr, s, 0), s, 1)
        A = np.dot(gs, eta0 * eta0 - center) / math.sqrt(n)
        B = etat @ hs @ etat / n
        vals.append(0.5 * A * B)
    return float(np.mean(vals))
