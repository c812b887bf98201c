"""Fast invariant suites behind `chainlab --verify`; each returns {check name: passed}."""
from __future__ import annotations

import numpy as np

from . import dynamics, integrals, levy, poisson
from .params import ScalingParams
from .testfunctions import GaussianBump


def generator_suite(cases: int = 100, N: int = 32, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst_e = worst_q = 0.0
    for _ in range(cases):
        eta = rng.normal(size=N)
        kappa = rng.uniform(-2, 2)
        f = rng.normal(size=N)
        h = rng.normal(size=(N, N))
        h = h + h.T
        de = dynamics.generator_energy_direct(f, eta, kappa)
        ce = dynamics.generator_energy_closed(f, eta, kappa)
        dq = dynamics.generator_q_direct(h, eta, kappa)
        cq = dynamics.generator_q_closed(h, eta, kappa)
        worst_e = max(worst_e, abs(de - ce) / (1 + abs(ce)))
        worst_q = max(worst_q, abs(dq - cq) / (1 + abs(cq)))
    return {"generator_energy": worst_e <= 1e-9, "generator_q": worst_q <= 1e-9}


def conservation_suite(N: int = 512, T: float = 10.0, seed: int = 0) -> dict:
    state = dynamics.sample_gibbs(N, seed=seed)
    out = {}
    for method in ("splitting", "event"):
        final = dynamics.simulate(state, T, 1.0, seed, method)
        dv = abs(final.volume - state.volume)
        de = abs(final.energy - state.energy)
        out[f"conservation_{method}"] = dv <= 1e-8 * abs(state.volume) + 1e-10 and de <= 1e-8 * state.energy
    return out


def kernel_suite() -> dict:
    heat = levy.kernel_P(1.0, 1.0, 0.25)
    out = {"kernel_heat": float(np.max(np.abs(heat.P - levy.heat_kernel(0.25, heat.x)))) <= 1e-6}
    for b in (0.0, 1 / 3, 1.0):
        out[f"kernel_mass_b={b:.3g}"] = abs(levy.kernel_P(b, 1.0, 0.25).mass - 1) <= 1e-6
        out[f"kernel_semigroup_b={b:.3g}"] = levy.semigroup_defect(b, 1.0, 0.25, 0.125) <= 1e-5
    return out


def integral_suite(points: int = 20, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    for fam in integrals.FAMILIES:
        worst = 0.0
        for _ in range(points):
            y = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-3, np.log10(0.5)))
            n = int(2 ** rng.integers(4, 13))
            b = float(rng.choice([0.0, 1 / 3, 2 / 3, 1.0]))
            q = integrals.quad_integral(fam, y, n, b).value
            r = integrals.residue_integral(fam, y, n, b)
            worst = max(worst, abs(q - r) / max(1.0, abs(r)))
        out[f"agreement_{fam}"] = worst <= 1e-8
    return out


def corrector_suite() -> dict:
    params = ScalingParams(16, 0.5)
    h = poisson.solve_h(GaussianBump(), params)
    v = poisson.solve_corrector(h)
    k, l = poisson.default_checkpoints(16, count=8)
    out = {}
    for sol in (h, v):
        out[f"poisson_residual_{sol.which}"] = poisson.poisson_residual(sol, k=k, l=l).max_abs <= 1e-8
    return out


SUITES = {
    "generator": generator_suite,
    "conservation": conservation_suite,
    "kernel": kernel_suite,
    "integrals": integral_suite,
    "correctors": corrector_suite,
}


def run_all() -> dict:
    results = {}
    for suite in SUITES.values():
        results.update(suite())
    return results
