import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chainlab import _fallback, dynamics, kernels
from chainlab.dynamics import RingState
from chainlab.params import ScalingParams
from oracles import rk4_flow

finite = st.floats(-10, 10, allow_nan=False)


def ring(N=16, seed=0):
    return dynamics.sample_gibbs(N, seed=seed)


# sampling ----------------------------------------------------------------

def test_gibbs_moments_match_gaussian():
    s = dynamics.sample_gibbs(4096, 0.0, 1.0, seed=11)
    assert abs(s.eta.mean()) <= 3 / np.sqrt(4096)
    # variance of the sample variance is 2/N for a unit Gaussian
    assert abs(s.eta.var() - 1) <= 4 * np.sqrt(2 / 4096)


def test_gibbs_degenerate_variance():
    s = dynamics.sample_gibbs(64, 5.0, 1e8, seed=1)
    np.testing.assert_allclose(s.eta, 5.0, atol=1e-3)


def test_gibbs_second_moment_at_beta_two():
    rows = dynamics.sample_gibbs_rows(range(20000), 2, 0.0, 2.0, seed=3)
    m2 = np.mean(rows ** 2)
    assert abs(m2 - 0.5) <= 3 * np.sqrt(2 * 0.25 / rows.size)


def test_gibbs_rejects_bad_beta_and_size():
    with pytest.raises(ValueError):
        dynamics.sample_gibbs(8, beta=0.0)
    with pytest.raises(ValueError):
        dynamics.sample_gibbs(1)


def test_gibbs_is_deterministic_per_seed():
    a = dynamics.sample_gibbs(32, seed=5).eta
    b = dynamics.sample_gibbs(32, seed=5).eta
    c = dynamics.sample_gibbs(32, seed=6).eta
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_state_validation():
    with pytest.raises(ValueError):
        RingState(np.array([1.0, np.nan, 0.0]))
    with pytest.raises(ValueError):
        RingState(np.zeros((2, 2)))


# flow --------------------------------------------------------------------

def test_flow_zero_time_is_identity():
    s = ring()
    assert np.array_equal(dynamics.exact_flow(s, 0.0, 1.3).eta, s.eta)


def test_flow_negative_time_rejected():
    with pytest.raises(ValueError):
        dynamics.exact_flow(ring(), -0.1, 1.0)


@given(arrays(np.float64, st.sampled_from([4, 8, 32, 64]), elements=finite),
       st.floats(0, 5), st.floats(-3, 3))
def test_flow_conserves_volume_and_energy(eta, dt, kappa):
    s = RingState(eta)
    out = dynamics.exact_flow(s, dt, kappa)
    scale = 1 + np.sum(np.abs(eta))
    assert abs(out.volume - s.volume) <= 1e-12 * scale
    assert abs(out.energy - s.energy) <= 1e-12 * (1 + s.energy)


def test_flow_matches_runge_kutta_to_fifth_order():
    s = ring(32, seed=2)
    errs = []
    for dt in (0.02, 0.01):
        exact = dynamics.exact_flow(s, dt, 1.5).eta
        errs.append(np.max(np.abs(exact - rk4_flow(s.eta, 1.5, dt))))
    # local error of RK4 is O(dt^5): halving dt divides it by about 32
    assert errs[0] / errs[1] == pytest.approx(32, rel=0.15)


def test_flow_direction_is_the_drift_of_the_ode():
    s = ring(32, seed=4)
    dt = 1e-6
    deriv = (dynamics.exact_flow(s, dt, 0.7).eta - s.eta) / dt
    expected = 0.7 * (np.roll(s.eta, -1) - np.roll(s.eta, 1))
    np.testing.assert_allclose(deriv, expected, atol=1e-5)


# swaps -------------------------------------------------------------------

def test_swap_is_an_involution():
    s = ring()
    assert np.array_equal(dynamics.swap(dynamics.swap(s, 15), 15).eta, s.eta)


def test_swap_of_constant_state():
    s = RingState(np.full(8, 2.5))
    assert np.array_equal(dynamics.swap(s, 3).eta, s.eta)


@given(arrays(np.float64, st.integers(2, 40), elements=finite), st.data())
def test_swap_conserves_bitwise(eta, data):
    s = RingState(eta)
    x = data.draw(st.integers(0, eta.size - 1))
    out = dynamics.swap(s, x)
    assert sorted(out.eta.tolist()) == sorted(eta.tolist())
    assert out.volume == pytest.approx(s.volume, abs=0, rel=1e-15) or abs(out.volume - s.volume) < 1e-12


def test_swap_out_of_range():
    with pytest.raises(IndexError):
        dynamics.swap(ring(8), 8)


# simulation --------------------------------------------------------------

def test_zero_coupling_permutes_values():
    s = ring(64, seed=9)
    out = dynamics.simulate(s, 5.0, 0.0, seed=1)
    assert sorted(out.eta.tolist()) == sorted(s.eta.tolist())


def test_zero_horizon_returns_input():
    s = ring(16)
    for method in dynamics.METHODS:
        assert np.array_equal(dynamics.simulate(s, 0.0, 1.0, 4, method).eta, s.eta)


@pytest.mark.parametrize("method", dynamics.METHODS)
def test_simulation_is_deterministic(method):
    s = ring(32)
    a = dynamics.simulate(s, 3.0, 0.8, 17, method).eta
    b = dynamics.simulate(s, 3.0, 0.8, 17, method).eta
    c = dynamics.simulate(s, 3.0, 0.8, 18, method).eta
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("method", dynamics.METHODS)
def test_simulation_conserves(method):
    s = ring(128, seed=3)
    out = dynamics.simulate(s, 10.0, ScalingParams(16, 0.0), 2, method)
    assert abs(out.volume - s.volume) <= 1e-8 * abs(s.volume) + 1e-10
    assert abs(out.energy - s.energy) <= 1e-8 * s.energy


def test_recorded_trajectory_ends_consistently():
    s = ring(32)
    final, traj = dynamics.simulate(s, 2.0, 1.0, 5, record=[0.0, 1.0, 2.0])
    assert traj.shape == (3, 32)
    assert np.array_equal(traj[0], s.eta)
    assert np.array_equal(traj[-1], final.eta)
    assert final.t == 2.0


def test_splitting_rejects_bad_dt():
    with pytest.raises(ValueError):
        dynamics.simulate(ring(), 1.0, 1.0, 0, "splitting", dt=0.0)
    with pytest.raises(ValueError):
        dynamics.simulate(ring(), -1.0, 1.0, 0)


def _neighbour_product(method, replicas, dt=None):
    N = 64
    eta0 = dynamics.sample_gibbs_rows(range(replicas), N, seed=21)
    snap = dynamics.evolve_rows(eta0, 1.0, [10.0], 21, range(replicas), method, dt)[0]
    return np.mean(snap * np.roll(snap, -1, axis=1), axis=1)


@pytest.mark.slow
def test_event_and_splitting_agree_statistically():
    a = _neighbour_product("event", 2000)
    b = _neighbour_product("splitting", 2000, dt=0.01)
    gap = abs(a.mean() - b.mean())
    se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    assert gap <= 3 * se


def test_stationarity_of_energy_observable():
    N, R = 64, 400
    f = np.zeros(N)
    f[10:20] = np.linspace(-1, 2, 10)
    eta0 = dynamics.sample_gibbs_rows(range(R), N, seed=8)
    snap = dynamics.evolve_rows(eta0, 0.5, [20.0], 8, range(R))[0]
    vals = snap ** 2 @ f
    assert abs(vals.mean() - f.sum()) <= 3 * vals.std(ddof=1) / np.sqrt(R)


# generator oracles -------------------------------------------------------

def test_energy_generator_vanishes_for_constant_f():
    s = ring(32)
    f = np.full(32, 1.7)
    assert dynamics.generator_energy_direct(f, s, 0.4) == pytest.approx(0, abs=1e-12)
    assert dynamics.generator_energy_closed(f, s, 0.4) == pytest.approx(0, abs=1e-12)


def test_energy_generator_vanishes_for_constant_state():
    f = np.random.default_rng(0).normal(size=32)
    s = RingState(np.full(32, 1.3))
    assert dynamics.generator_energy_direct(f, s, 0.9) == pytest.approx(0, abs=1e-12)
    assert dynamics.generator_energy_closed(f, s, 0.9) == pytest.approx(0, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-2, 2))
def test_energy_generator_routes_agree(seed, kappa):
    rng = np.random.default_rng(seed)
    eta, f = rng.normal(size=16), rng.normal(size=16)
    d = dynamics.generator_energy_direct(f, eta, kappa)
    c = dynamics.generator_energy_closed(f, eta, kappa)
    assert abs(d - c) <= 1e-9 * (1 + abs(c))


@given(st.integers(0, 2 ** 32 - 1), st.floats(-2, 2))
def test_q_generator_routes_agree(seed, kappa):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(12, 12))
    h = h + h.T
    eta = rng.normal(size=12)
    d = dynamics.generator_q_direct(h, eta, kappa)
    c = dynamics.generator_q_closed(h, eta, kappa)
    assert abs(d - c) <= 1e-9 * (1 + abs(c))


def test_q_generator_far_from_diagonal_has_no_diagonal_term():
    N = 16
    h = np.zeros((N, N))
    h[2, 8] = h[8, 2] = 1.0
    h[3, 12] = h[12, 3] = -0.5
    eta = np.random.default_rng(1).normal(size=N)
    assert dynamics.diagonal_term(h, eta, 0.7) == pytest.approx(0, abs=1e-12)
    op = dynamics.lattice_laplacian_2d(h) + 0.7 * dynamics.lattice_skew_2d(h)
    assert dynamics.generator_q_direct(h, eta, 0.7) == pytest.approx(dynamics.q_observable(op, eta), abs=1e-10)


def test_q_diagonal_term_at_zero_coupling():
    N = 10
    rng = np.random.default_rng(2)
    h = rng.normal(size=(N, N))
    h = h + h.T
    eta = rng.normal(size=N)
    x = np.arange(N)
    xp = (x + 1) % N
    d = np.diag(h)
    expected = 2 * np.sum(eta * eta[xp] * (2 * h[x, xp] - d - d[xp]))
    assert dynamics.diagonal_term(h, eta, 0.0) == pytest.approx(expected, rel=1e-12)


def test_q_observable_ignores_the_diagonal():
    rng = np.random.default_rng(3)
    h = rng.normal(size=(8, 8))
    h = h + h.T
    eta = rng.normal(size=8)
    h2 = h.copy()
    np.fill_diagonal(h2, rng.normal(size=8))
    assert dynamics.q_observable(h, eta) == pytest.approx(dynamics.q_observable(h2, eta), rel=1e-13)


def test_q_generator_rejects_asymmetric():
    h = np.arange(16.0).reshape(4, 4)
    with pytest.raises(ValueError):
        dynamics.generator_q_direct(h, np.ones(4), 0.1)
    with pytest.raises(ValueError):
        dynamics.generator_q_closed(h, np.ones(4), 0.1)


# backends ----------------------------------------------------------------

def test_backends_give_identical_swaps():
    rng = np.random.default_rng(0)
    eta = rng.normal(size=(6, 40))
    counts = rng.integers(0, 50, 6)
    stops = np.cumsum(counts)
    starts = stops - counts
    bonds = rng.integers(0, 40, stops[-1]).astype(np.int32)
    a, b = eta.copy(), eta.copy()
    kernels.apply_swaps(a, bonds, starts, stops)
    kernels.apply_swaps(b, bonds, starts, stops, impl=_fallback)
    assert np.array_equal(a, b)
    col = rng.integers(-1, 40, 6).astype(np.int32)
    kernels.apply_bond_column(a, col)
    kernels.apply_bond_column(b, col, impl=_fallback)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("method", dynamics.METHODS)
def test_backends_give_identical_trajectories(method, monkeypatch):
    s = ring(32, seed=7)
    compiled = dynamics.simulate(s, 4.0, 0.9, 3, method).eta
    monkeypatch.setattr(kernels, "_impl", _fallback)
    pure = dynamics.simulate(s, 4.0, 0.9, 3, method).eta
    assert np.array_equal(compiled, pure)


def test_kernel_input_validation():
    with pytest.raises(ValueError):
        kernels.apply_swaps(np.zeros((2, 4), dtype=np.float32), [0], [0, 0], [1, 0])
    with pytest.raises(ValueError):
        kernels.apply_bond_column(np.zeros((2, 4)), [0])
