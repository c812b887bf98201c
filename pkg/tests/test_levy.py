import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import levy_stable

from chainlab import levy
from chainlab.params import SizingError
from chainlab.testfunctions import GaussianBump

bs = st.sampled_from([0.0, 0.2, 1 / 3, 0.5, 1.0, 3.0])
gammas = st.floats(0.05, 20)


def test_multiplier_vanishes_at_zero():
    for b in (0.0, 1 / 3, 1.0):
        for gamma in (0.1, 1.0, 7.0):
            assert levy.multiplier_psi(b, gamma, 0.0) == 0


def test_multiplier_is_the_laplacian_above_one_third():
    assert levy.multiplier_psi(1.0, 1.0, 1.0) == pytest.approx(-4 * math.pi ** 2, rel=1e-15)
    assert levy.multiplier_psi(0.5, 9.0, 1.0) == pytest.approx(-4 * math.pi ** 2, rel=1e-15)


def test_multiplier_at_one_third_has_both_terms():
    w = 2 * math.pi
    expected = -w * w - math.sqrt(2.0) / math.sqrt(2) * w ** 1.5 * (1 + 1j)
    assert levy.multiplier_psi(1 / 3, 2.0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_crossover_limits_at_one_third():
    small = levy.multiplier_psi(1 / 3, 1e-24, 1.0)
    assert abs(small - levy.multiplier_psi(1.0, 1.0, 1.0)) <= 1e-10
    g = 1e24
    big = levy.multiplier_psi(1 / 3, g, 1.0) / math.sqrt(g)
    assert abs(big - levy.multiplier_psi(0.0, 1.0, 1.0)) <= 1e-10


@given(bs, gammas, st.floats(-50, 50).filter(lambda v: v == 0 or abs(v) > 1e-6))
def test_multiplier_invariants(b, gamma, xi):
    p = levy.multiplier_psi(b, gamma, xi)
    assert p.real <= 0
    if xi != 0:
        assert p.real < 0
    assert levy.multiplier_psi(b, gamma, -xi) == pytest.approx(np.conj(p), rel=1e-14, abs=1e-14)


def test_multiplier_rejects_bad_parameters():
    with pytest.raises(ValueError):
        levy.multiplier_psi(-0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        levy.multiplier_psi(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        levy.levy_coefficient(1.0, "other")


def test_conventions_agree_at_unit_gamma():
    assert levy.levy_coefficient(1.0, "stated") == levy.levy_coefficient(1.0, "measured")
    assert levy.levy_coefficient(4.0, "measured") == pytest.approx(8 / math.sqrt(2))


# kernels -----------------------------------------------------------------

@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.25, 1.0])
def test_heat_regime_is_exact(b, t):
    K = levy.kernel_P(b, 3.0, t)
    assert np.max(np.abs(K.P - levy.heat_kernel(t, K.x))) <= 1e-6


@pytest.mark.parametrize("b,gamma,t", [(0.0, 1.0, 0.25), (0.0, 2.0, 1.0), (1 / 3, 1.0, 0.5),
                                       (0.2, 0.5, 1.0), (1.0, 1.0, 2.0)])
def test_kernel_mass_realness_and_positivity(b, gamma, t):
    K = levy.kernel_P(b, gamma, t)
    assert K.P.dtype.kind == "f"
    assert abs(K.mass - 1) <= 1e-6
    assert K.P.min() >= -1e-6


@pytest.mark.parametrize("b", [0.0, 1 / 3, 1.0])
@pytest.mark.parametrize("t,s", [(0.25, 0.125), (0.5, 0.5)])
def test_semigroup_property(b, t, s):
    assert levy.semigroup_defect(b, 1.0, t, s) <= 1e-5


def test_cutoff_too_small_is_a_sizing_error():
    with pytest.raises(SizingError):
        levy.kernel_P(1.0, 1.0, 0.01, dx=0.5)
    with pytest.raises(ValueError):
        levy.kernel_P(1.0, 1.0, 0.0)


@pytest.mark.parametrize("orientation", levy.ORIENTATIONS)
def test_stable_regime_matches_independent_stable_density(orientation):
    gamma, t = 1.0, 1.0
    K = levy.kernel_P(0.0, gamma, t, orientation=orientation)
    alpha, beta, scale = levy.stable_parameters(gamma, t, orientation)
    x = np.linspace(-10, 10, 81)
    oracle = levy_stable.pdf(x, alpha, beta, scale=scale)
    assert np.max(np.abs(K.at(x) - oracle)) <= 1e-4


def test_orientations_are_mirror_images_with_opposite_skew():
    a = levy.kernel_P(0.0, 1.0, 1.0, orientation="correlation")
    b = levy.kernel_P(0.0, 1.0, 1.0, orientation="fundamental")
    x = np.linspace(-8, 8, 33)
    np.testing.assert_allclose(a.at(x), b.at(-x), atol=1e-12)
    # the correlation kernel has its heavy tail on the left
    assert a.central_moment(3, window=3.0) < 0 < b.central_moment(3, window=3.0)
    left = np.sum(a.P[a.x < -5]) * a.dx
    right = np.sum(a.P[a.x > 5]) * a.dx
    assert left > 5 * right


def test_kernel_csv(tmp_path):
    K = levy.kernel_P(1.0, 1.0, 0.25, half_width=8.0)
    text = K.to_csv(tmp_path / "k.csv")
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0] == "x,P"
    data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
    np.testing.assert_array_equal(data[:, 1], K.P)
    clipped = levy.kernel_P(0.0, 1.0, 0.25).to_csv(clip_for_plot=True)
    body = [r for r in clipped.splitlines()[1:] if not r.startswith("#")][1:]
    assert min(float(r.split(",")[1]) for r in body) >= 0.0


# predictions -------------------------------------------------------------

def test_prediction_matches_gaussian_closed_form():
    f = GaussianBump(0.25, 0.3)
    g = GaussianBump(0.4, -0.2)
    for t in (0.05, 0.25, 1.0):
        pred = levy.kernel_predict(f, g, 1.0, 1.0, t, support=4.0)
        exact = levy.gaussian_pair_heat(0.3, 0.25, -0.2, 0.4, t)
        assert pred == pytest.approx(exact, abs=1e-6)


def test_prediction_at_small_time_is_the_inner_product():
    f = GaussianBump(0.25)
    pred = levy.kernel_predict(f, f, 0.0, 1.0, 1e-4, half_width=8.0, dx=1 / 2048, support=2.0)
    inner = 0.25 * math.sqrt(math.pi)
    assert pred == pytest.approx(inner, rel=0.01)


def test_prediction_of_zero_function():
    f = GaussianBump()
    assert levy.kernel_predict(lambda x: np.zeros_like(x), f, 0.0, 1.0, 0.5, support=2.0) == 0.0


def test_prediction_needs_grid_coverage():
    f = GaussianBump()
    with pytest.raises(ValueError):
        levy.kernel_predict(f, f, 1.0, 1.0, 0.5, half_width=2.0, support=2.0)
