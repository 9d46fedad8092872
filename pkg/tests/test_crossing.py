import math
from dataclasses import replace

import numpy as np
import pytest

from survcopula.baselines import weibull
from survcopula.crossing import NoCrossingError, bootstrap_crossing, crossing_point, default_bracket
from survcopula.estimation import FitOptions, fit
from survcopula.likelihood import ModelSpec, ParamSet
from survcopula.regression import RegressionSpec, survival
from survcopula.simulation import Scenario, generate_dataset, replica_rngs

XC, XT = [0.0, 0.0], [1.0, 0.0]


def bisection_root(g, lo, hi, tol=1e-12):
    glo = g(lo)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def true_margin1_root():
    reg = RegressionSpec("YP", [-0.7, 0.4], [0.8, -0.6])
    base = weibull(1.2, 0.8)
    g = lambda t: survival(reg, XC, base, t) - survival(reg, XT, base, t)
    return bisection_root(g, 1e-6, 20.0)


@pytest.fixture(scope="module")
def data():
    s = Scenario.standard("Clayton", 0.25, n=300, seed=21)
    return generate_dataset(s, replica_rngs(s.seed, 1)[0])


@pytest.fixture(scope="module")
def yp_fit(data):
    return fit(data, ModelSpec("Clayton", "weibull", "YP"))


def test_root_at_true_parameters_matches_bisection(yp_fit):
    truth = ParamSet(2 / 3, (1.2, 0.8), (1.6, 1.2), (-0.7, 0.4), (0.8, -0.6), (-0.9, 0.6), (1.0, -0.8))
    at_truth = replace(yp_fit, params=truth)
    root = crossing_point(at_truth, 1, XC, XT, (1e-6, 20.0))
    oracle = true_margin1_root()
    assert root == pytest.approx(oracle, rel=1e-10)
    # the sign change is where the short-term benefit turns into long-term harm
    assert 1.5 < oracle < 3.5


def test_fitted_root_properties(yp_fit, data):
    root = crossing_point(yp_fit, 1, XC, XT, default_bracket(data, 1))
    base = yp_fit.model.margin_baseline(yp_fit.params, 1)
    reg = yp_fit.model.margin_regression(yp_fit.params, 1)
    assert abs(survival(reg, XC, base, root) - survival(reg, XT, base, root)) < 1e-10
    assert 0 < root < 1.5 * data.y1.max()


def test_identical_rows_raise(yp_fit):
    with pytest.raises(NoCrossingError):
        crossing_point(yp_fit, 1, XC, XC, (1e-6, 10.0))


def test_ph_fit_has_no_crossing(data):
    ph = fit(data, ModelSpec("Clayton", "weibull", "PH"), FitOptions(compute_se=False))
    with pytest.raises(NoCrossingError, match="no crossing"):
        crossing_point(ph, 1, XC, XT, default_bracket(data, 1))


def test_bracket_validation(yp_fit):
    with pytest.raises(ValueError):
        crossing_point(yp_fit, 1, XC, XT, (2.0, 1.0))
    with pytest.raises(ValueError):
        crossing_point(yp_fit, 1, XC, XT, (0.0, 1.0))


def test_bracket_widened_once(yp_fit):
    root = crossing_point(yp_fit, 1, XC, XT, (1e-6, 20.0))
    # an upper end below the root but above half of it is rescued by the doubling
    widened = crossing_point(yp_fit, 1, XC, XT, (1e-6, 0.6 * root))
    assert widened == pytest.approx(root, rel=1e-12)
    with pytest.raises(NoCrossingError):
        crossing_point(yp_fit, 1, XC, XT, (1e-6, 0.3 * root))


def test_bootstrap_single_replicate_is_degenerate(data, yp_fit):
    bs = bootstrap_crossing(data, yp_fit, 1, XC, XT, B=1, seed=3, workers=1)
    if bs.successes == 1:
        assert bs.lower == bs.upper == bs.replicates[0]
    assert bs.B == 1 and bs.successes + bs.failures == 1


def test_bootstrap_deterministic_and_sane(data, yp_fit):
    a = bootstrap_crossing(data, yp_fit, 1, XC, XT, B=8, seed=5, workers=1)
    b = bootstrap_crossing(data, yp_fit, 1, XC, XT, B=8, seed=5, workers=2)
    assert np.array_equal(a.replicates, b.replicates, equal_nan=True)
    assert a.lower <= a.upper
    assert a.failures <= 2
    assert a.point == crossing_point(yp_fit, 1, XC, XT, default_bracket(data, 1))
    assert set(a.to_dict()) >= {"point", "lower", "upper", "failures", "unreliable"}


def test_bootstrap_rejects_zero_b(data, yp_fit):
    with pytest.raises(ValueError):
        bootstrap_crossing(data, yp_fit, 1, XC, XT, B=0)
