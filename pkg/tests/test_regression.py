import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survcopula.baselines import bernstein, weibull
from survcopula.regression import (
    RegressionSpec,
    density,
    hazard,
    inverse_survival,
    log_yp_survival,
    short_long_ratios,
    survival,
)

YP1 = RegressionSpec("YP", [-0.7, 0.4], [0.8, -0.6])
W1 = weibull(1.2, 0.8)


def test_ratios():
    assert short_long_ratios(YP1, [0.0, 0.0]) == (1.0, 1.0)
    phi_s, _ = short_long_ratios(RegressionSpec("YP", [-0.7, 0.4], [0.0, 0.0]), [1.0, 0.0])
    assert phi_s == pytest.approx(math.exp(-0.7), rel=1e-15)
    assert short_long_ratios(RegressionSpec("PO", [1.0, 2.0]), [0.3, -2.0])[1] == 1.0
    with pytest.raises(ValueError):
        short_long_ratios(YP1, [1.0])


def test_class_constraints():
    with pytest.raises(ValueError):
        RegressionSpec("PH", [1.0], [2.0])
    with pytest.raises(ValueError):
        RegressionSpec("PO", [1.0], [0.5])
    with pytest.raises(ValueError):
        RegressionSpec("YP", [1.0])
    assert np.array_equal(RegressionSpec("PH", [1.0, 2.0]).beta_long, [1.0, 2.0])


def test_survival_examples():
    x0 = [0.0]
    reg = RegressionSpec("YP", [0.3], [-0.2])
    assert survival(reg, x0, weibull(1.0, 1.0), math.log(2.0)) == pytest.approx(0.5, rel=1e-15)
    # PH: S = exp(-phi H0) with phi = 2, H0 = 0.5
    ph = RegressionSpec("PH", [math.log(2.0)])
    assert survival(ph, [1.0], weibull(1.0, 0.5), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    # PO: phi_S = 2 and R0 = 1 -> 1/3
    po = RegressionSpec("PO", [math.log(2.0)])
    assert survival(po, [1.0], weibull(1.0, 1.0), math.log(2.0)) == pytest.approx(1 / 3, rel=1e-14)


def test_hazard_baseline_reduction_and_limits():
    t = np.linspace(0.1, 4, 10)
    assert np.allclose(hazard(YP1, [0.0, 0.0], W1, t), W1.hazard(t), rtol=1e-13)
    x = np.array([1.0, 0.5])
    phi_s, phi_l = short_long_ratios(YP1, x)
    assert hazard(YP1, x, W1, 1e-8) / W1.hazard(1e-8) == pytest.approx(phi_s, rel=1e-4)
    t20 = W1.cum_hazard_inverse(20.0)
    assert hazard(YP1, x, W1, t20) / W1.hazard(t20) == pytest.approx(phi_l, rel=1e-4)


def test_hazard_equivalent_forms():
    x = np.array([1.0, -0.3])
    t = np.linspace(0.1, 5, 25)
    phi_s, phi_l = short_long_ratios(YP1, x)
    R0, r0 = W1.odds(t), W1.odds_deriv(t)
    F0, S0, h0 = 1 - W1.survival(t), W1.survival(t), W1.hazard(t)
    form1 = phi_s * phi_l * r0 / (phi_l + phi_s * R0)
    form2 = phi_s * phi_l * h0 / (phi_s * F0 + phi_l * S0)
    got = hazard(YP1, x, W1, t)
    assert np.allclose(got, form1, rtol=1e-12)
    assert np.allclose(got, form2, rtol=1e-12)


def test_density_examples():
    assert density(RegressionSpec("YP", [0.0], [0.0]), [0.0], weibull(1.0, 1.0), 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    x = np.array([1.0, 0.2])
    for t in (0.3, 1.0, 2.5):
        h = 1e-6
        fd = -(survival(YP1, x, W1, t + h) - survival(YP1, x, W1, t - h)) / (2 * h)
        assert density(YP1, x, W1, t) == pytest.approx(fd, abs=1e-6)


def test_inverse_survival_examples():
    reg0 = RegressionSpec("YP", [0.0], [0.0])
    assert inverse_survival(reg0, [0.0], weibull(1.0, 1.0), 0.5) == pytest.approx(math.log(2), rel=1e-14)
    assert inverse_survival(YP1, [1.0, 0.0], W1, 1 - 1e-12) < 1e-6
    with pytest.raises(ValueError):
        inverse_survival(YP1, [1.0, 0.0], W1, 1.0)


def test_ph_and_po_reductions(rng):
    for _ in range(50):
        x = rng.normal(size=2)
        t = rng.uniform(0.05, 5)
        bS = rng.normal(size=2)
        ph = RegressionSpec("YP", bS, bS)
        po = RegressionSpec("YP", bS, [0.0, 0.0])
        phi = math.exp(x @ bS)
        assert survival(ph, x, W1, t) == pytest.approx(math.exp(-phi * W1.cum_hazard(t)), rel=1e-12)
        assert survival(po, x, W1, t) == pytest.approx(1 / (1 + phi * W1.odds(t)), rel=1e-12)


def test_crossing_condition_single_sign_change():
    # q = 1 with opposite-signed short- and long-term effects
    reg = RegressionSpec("YP", [-0.7], [0.8])
    t = np.geomspace(1e-4, 50, 4000)
    diff = survival(reg, [1.0], W1, t) - survival(reg, [0.0], W1, t)
    signs = np.sign(diff[np.abs(diff) > 1e-14])
    assert np.count_nonzero(np.diff(signs)) == 1


def test_survival_decreasing_and_bounded(rng):
    t = np.linspace(0.01, 8, 300)
    for _ in range(10):
        x = rng.normal(size=2)
        S = survival(YP1, x, W1, t)
        assert np.all(np.diff(S) < 0)
        assert np.all((S > 0) & (S <= 1))


def test_log_survival_matches_high_precision():
    mp.mp.dps = 40
    for H0 in (1e-10, 0.5, 10.0, 29.0, 31.0, 60.0):
        for es, el in ((-0.7, 0.8), (1.2, -0.6), (0.0, 0.0), (-3.0, 2.0)):
            exact = -mp.e**el * mp.log(1 + mp.e ** (es - el) * (mp.e**H0 - 1))
            assert log_yp_survival(np.float64(H0), es, el) == pytest.approx(float(exact), rel=1e-12)


def test_semiparametric_baseline():
    b = bernstein([0.2, 0.5, 1.0, 1.5], 6.0)
    x = np.array([1.0, -0.4])
    u = np.linspace(0.3, 0.95, 10)
    t = inverse_survival(YP1, x, b, u)
    assert np.allclose(survival(YP1, x, b, t), u, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    u=st.floats(1e-6, 1 - 1e-6),
    x1=st.integers(0, 1),
    x2=st.floats(-3, 3),
)
def test_inverse_roundtrip_property(u, x1, x2):
    x = np.array([float(x1), x2])
    t = inverse_survival(YP1, x, W1, u)
    assert survival(YP1, x, W1, t) == pytest.approx(u, abs=1e-9)
