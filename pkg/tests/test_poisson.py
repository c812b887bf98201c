import math

import numpy as np
import pytest

from chainlab import integrals, poisson
from chainlab.lattice import LatticeFunction1D
from chainlab.params import ScalingParams
from chainlab.testfunctions import GaussianBump
from oracles import box_correctors


class Zero:
    """f = 0 with the interface of a bundled test function."""

    def lattice(self, n):
        return LatticeFunction1D(np.zeros(3), n, -1)

    def transform(self, xi):
        return np.zeros(np.shape(xi), dtype=complex)

    def band(self, tol=1e-18):
        return 4.0


@pytest.fixture(scope="module")
def chain():
    params = ScalingParams(16, 0.5)
    h = poisson.solve_h(GaussianBump(), params)
    v = poisson.solve_corrector(h)
    w = poisson.solve_corrector(v)
    return h, v, w


@pytest.mark.parametrize("idx", [0, 1, 2])
def test_poisson_residuals(chain, idx):
    sol = chain[idx]
    k, l = poisson.default_checkpoints(sol.n, count=12, seed=idx)
    rep = poisson.poisson_residual(sol, k=k, l=l)
    assert rep.max_abs <= 1e-8
    assert rep.norm_estimate <= 1e-8
    assert np.max(np.abs(rep.rhs)) > 1e-3  # the check is not vacuous


@pytest.mark.parametrize("b", [0.0, 1 / 3, 1.0])
def test_h_residual_across_regimes(b):
    sol = poisson.solve_h(GaussianBump(), ScalingParams(64, b))
    assert poisson.poisson_residual(sol).max_abs <= 1e-8


def test_correctors_are_symmetric(chain):
    rng = np.random.default_rng(0)
    k, l = rng.uniform(-8, 8, (2, 40))
    for sol in chain:
        assert sol.symmetry_defect(k, l) <= 1e-12


def test_zero_source_gives_zero_correctors():
    params = ScalingParams(16, 0.3)
    h = poisson.solve_h(Zero(), params)
    rng = np.random.default_rng(1)
    k, l = rng.uniform(-8, 8, (2, 20))
    for sol in (h, poisson.solve_corrector(h), poisson.solve_corrector(poisson.solve_corrector(h))):
        assert np.all(sol.hat(k, l) == 0)


def test_h_vanishes_where_omega_does(chain):
    h = chain[0]
    k = np.linspace(-7.5, 7.5, 31)
    assert np.max(np.abs(h.hat(k, -k))) <= 1e-15


def test_chain_rules():
    params = ScalingParams(16, 0.3)
    h = poisson.solve_h(GaussianBump(), params)
    w = poisson.solve_corrector(poisson.solve_corrector(h))
    with pytest.raises(ValueError):
        poisson.solve_corrector(w)
    with pytest.raises(ValueError):
        poisson.solve_corrector(h, ScalingParams(32, 0.3))
    with pytest.raises(ValueError):
        poisson.solve_h(GaussianBump().lattice(8), params)
    with pytest.raises(ValueError):
        poisson.CorrectorSolution("u", params, GaussianBump().lattice(16))


def test_lattice_values_match_a_periodic_box_solve():
    n, b, M = 8, 0.5, 256
    box_h, _ = box_correctors(GaussianBump(), n, b, 1.0, M)
    ours = poisson.solve_h(GaussianBump(), ScalingParams(n, b)).lattice_values(M)
    np.testing.assert_allclose(ours.values, ours.values.T, atol=1e-15)
    np.testing.assert_allclose(ours.values, box_h, atol=1e-12 * np.max(np.abs(box_h)))


@pytest.mark.parametrize("b", [0.2, 0.8])
def test_norms_match_a_periodic_box_solve(b):
    n, M = 8, 512
    _, box = box_correctors(GaussianBump(), n, b, 1.0, M)
    ours = poisson.corrector_norms(GaussianBump(), ScalingParams(n, b))
    for name in poisson.NORM_NAMES:
        assert ours[name] == pytest.approx(box[name], rel=2e-3), name


def test_omega_bound_on_a_million_pairs():
    rng = np.random.default_rng(2)
    for n in (16, 256, 4096):
        xi = rng.uniform(-n / 2, n / 2, 10 ** 6 // 3 + 1)
        l = rng.uniform(-n / 2, n / 2, xi.size)
        assert np.all(poisson.omega_bound_holds(xi, l, n))


def test_symbols_are_real_and_lambda_nonnegative():
    rng = np.random.default_rng(3)
    k, l = rng.uniform(-32, 32, (2, 1000))
    lam, om = poisson.spectral_symbols(k, l, 64)
    assert lam.dtype.kind == "f" and om.dtype.kind == "f"
    assert np.all(lam >= 0)
    assert poisson.spectral_symbols(0.0, 0.0, 64)[0] == 0


# norms -------------------------------------------------------------------

@pytest.mark.parametrize("b", [0.0, 1 / 3, 1.0])
def test_h_norm_decays_like_inverse_root_n(b):
    rep = poisson.norm_decay(GaussianBump(), [2 ** k for k in range(6, 15)], b, which=("h",))
    assert rep.slopes["h"] == pytest.approx(-0.5, abs=0.1)


def test_h_norm_slope_tracks_the_coupling_exponent():
    # small-y behaviour of I~ gives ||h||^2 ~ (c / n)^{1/2} with c = gamma n^-b
    for b in (0.0, 0.5, 0.9):
        rep = poisson.norm_decay(GaussianBump(), [2 ** k for k in range(8, 15)], b, which=("h",))
        assert rep.slopes["h"] == pytest.approx(-(1 + b) / 2, abs=0.05)


def test_norm_decay_csv():
    rep = poisson.norm_decay(GaussianBump(), [64, 128], 0.5, which=("h", "v"))
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "n,b,gamma,norm,value"
    assert len(lines) == 5
    with pytest.raises(ValueError):
        poisson.corrector_norms(GaussianBump(), ScalingParams(64, 0.5), which=("z",))


# multiplier and generator residual ---------------------------------------

def test_multiplier_vanishes_at_zero():
    for n in (16, 1024):
        for b in (0.0, 1 / 3, 1.0):
            assert poisson.effective_multiplier(n, b, 1.0, 0.0) == 0


def test_multiplier_routes_agree():
    xi = np.array([-3.0, -0.5, 0.25, 2.0])
    for n, b in ((64, 0.0), (1024, 1.0)):
        r = poisson.effective_multiplier(n, b, 1.0, xi)
        q = poisson.effective_multiplier(n, b, 1.0, xi, method="quad")
        assert np.max(np.abs(r - q) / np.abs(r)) <= 1e-7


def test_multiplier_in_heat_regime():
    xi = np.linspace(-4, 4, 33)
    xi = xi[xi != 0]
    m = poisson.effective_multiplier(2 ** 12, 1.0, 1.0, xi)
    target = -(2 * np.pi * xi) ** 2
    assert np.max(np.abs(m - target) / np.abs(target)) <= 0.1


def test_multiplier_trace_csv():
    xi = np.array([0.5, 1.0])
    text = poisson.multiplier_trace_csv(xi, poisson.effective_multiplier(64, 0.0, 1.0, xi))
    assert text.splitlines()[0] == "xi,re,im" and len(text.splitlines()) == 3


def test_stable_fit_recovers_a_synthetic_coefficient(monkeypatch):
    xi = np.linspace(0.25, 4, 60)
    w = 2 * np.pi * xi
    monkeypatch.setattr(poisson, "effective_multiplier",
                        lambda n, b, g, x: -0.3 * w ** 1.5 - 0.01 * w ** 2 + 1j * (0.3 * w ** 1.5))
    fit = poisson.fit_stable_coefficient(64, 0.0, 1.0, xi)
    assert fit.stable_coefficient == pytest.approx(-0.3, rel=1e-10)
    assert fit.imag[0] == pytest.approx(0.3, rel=1e-10)


def test_generator_residual_of_zero_function():
    assert poisson.lemma3_residual(Zero(), 64, 0.0) == 0.0


def test_generator_residual_in_heat_only_limit_decreases():
    res = [poisson.lemma3_residual(GaussianBump(), 2 ** k, 2.0) for k in range(6, 11)]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_generator_residual_needs_a_transform():
    with pytest.raises(TypeError):
        poisson.lemma3_residual(GaussianBump().lattice(64), 64, 0.0)


def test_diagonal_factor_rho_vanishes_at_zero():
    rho, sigma = poisson.diagonal_factors(np.array([0.0, 0.1]), ScalingParams(64, 0.5))
    assert rho[0] == 0 and sigma[0] == 0
    assert abs(rho[1]) > 0
    # rho is built from the two I families with the (1 - kappa)/2 weight
    p = ScalingParams(64, 0.5)
    expected = integrals.residue_integral("I", 0.1, 64, 0.5) - 0.5 * (1 - p.kappa) * \
        (1 - np.exp(-0.2j * math.pi)) * integrals.residue_integral("I_tilde", 0.1, 64, 0.5)
    assert rho[1] == pytest.approx(expected, rel=1e-14)
