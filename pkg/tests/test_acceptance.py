"""Acceptance suite: ten end-to-end criteria, each printing one PASS/FAIL line.

Criteria 1-5 are fast numerical checks. Criteria 6-10 are Monte Carlo studies
(minutes each; about half an hour in total on a single core). They use every
available CPU unless ``SURVCOPULA_WORKERS`` says otherwise.
Run only this module with ``pytest -m acceptance -s``.
"""

from __future__ import annotations

import time
from contextlib import nullcontext

import numpy as np
import pytest
from scipy import stats

from survcopula import copulas
from survcopula.baselines import weibull
from survcopula.copulas import Copula, Family, kendall_tau, log_kernels
from survcopula.crossing import run_crossing_study
from survcopula.likelihood import ModelSpec, ParamSet, SurvivalData, cluster_loglik, marginal_loglik, total_loglik
from survcopula.regression import RegressionSpec, survival
from survcopula.simulation import Scenario, default_workers, run_lr_study, run_mc

from conftest import THETAS, gauss_legendre_grid

pytestmark = pytest.mark.acceptance

WORKERS = default_workers()


def verdict(capsys, number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d} [{title}]: {detail}"
    with capsys.disabled():
        print("\n" + line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. copula axioms


def test_criterion_01_copula_axioms(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_boundary, worst_volume = 0.0, 0.0
    u = np.linspace(0.0, 1.0, 101)
    for fam, thetas in THETAS.items():
        for th in thetas:
            c = Copula(fam, th)
            zeros, ones = np.zeros_like(u), np.ones_like(u)
            checks = [
                c.cdf(np.stack([u, zeros], -1)),
                c.cdf(np.stack([zeros, u], -1)),
                c.cdf(np.stack([u, ones], -1)) - u,
                c.cdf(np.stack([ones, u], -1)) - u,
                # approaching the boundary from inside
                c.cdf(np.stack([u, np.full_like(u, 1 - 1e-14)], -1)) - u,
                c.cdf(np.stack([np.full_like(u, 1e-300), u], -1)),
            ]
            worst_boundary = max(worst_boundary, max(float(np.max(np.abs(x))) for x in checks))
            a = np.sort(rng.uniform(0, 1, (1000, 2)), axis=1)
            b = np.sort(rng.uniform(0, 1, (1000, 2)), axis=1)
            C = lambda x, y: c.cdf(np.stack([x, y], -1))
            vol = C(a[:, 1], b[:, 1]) - C(a[:, 0], b[:, 1]) - C(a[:, 1], b[:, 0]) + C(a[:, 0], b[:, 0])
            worst_volume = min(worst_volume, float(vol.min()))
    elapsed = time.perf_counter() - start
    ok = worst_boundary <= 1e-12 and worst_volume >= -1e-12 and elapsed < 5.0
    verdict(
        capsys, 1, "copula axioms", ok,
        f"max boundary error {worst_boundary:.2e}, min rectangle volume {worst_volume:.2e}, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 2. derivative consistency


def test_criterion_02_derivatives(capsys):
    start = time.perf_counter()
    g = np.linspace(0.05, 0.95, 19)
    U, V = np.meshgrid(g, g, indexing="ij")
    h = 1e-5
    worst_partial = worst_density = worst_mass = 0.0
    GU, GV, GW = gauss_legendre_grid(200)
    for fam, thetas in THETAS.items():
        for th in thetas:
            c = Copula(fam, th)
            C = lambda x, y: c.cdf(np.stack([x, y], -1))
            fd_p = (C(U + h, V) - C(U - h, V)) / (2 * h)
            err_p = np.abs(c.partial(U, V, 1) - fd_p) / np.maximum(1.0, np.abs(fd_p))
            fd_d = (c.partial(U, V + h, 1) - c.partial(U, V - h, 1)) / (2 * h)
            err_d = np.abs(c.density(U, V) - fd_d) / np.maximum(1.0, np.abs(fd_d))
            worst_partial = max(worst_partial, float(err_p.max()))
            worst_density = max(worst_density, float(err_d.max()))
            worst_mass = max(worst_mass, abs(float(np.sum(GW * c.density(GU, GV))) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_partial < 1e-6 and worst_density < 1e-5 and worst_mass < 1e-3 and elapsed < 30.0
    verdict(
        capsys, 2, "derivative consistency", ok,
        f"partial err {worst_partial:.1e}, density err {worst_density:.1e}, |mass-1| {worst_mass:.1e}, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 3. Kendall's tau


def test_criterion_03_kendall_tau(capsys):
    U, V, W = gauss_legendre_grid(200)
    worst = 0.0
    for fam, thetas in THETAS.items():
        for th in thetas:
            lc, _, ld = log_kernels(fam, th, np.log(U), np.log(V))
            oracle = 4.0 * np.sum(W * np.exp(lc + ld)) - 1.0
            worst = max(worst, abs(kendall_tau(fam, th) - oracle))
    closed = max(
        abs(kendall_tau("Clayton", 2.0) - 0.5),
        abs(kendall_tau("GH", 4.0 / 3.0) - 0.25),
        abs(kendall_tau("AMH", 1.0) - 1.0 / 3.0),
    )
    ok = worst < 1e-3 and closed <= 1e-12
    verdict(capsys, 3, "Kendall's tau", ok, f"max |closed form - integral| {worst:.1e}, closed-value error {closed:.1e}")


# ---------------------------------------------------------------------------
# 4. sampler


def test_criterion_04_sampler(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    worst_tau, min_p, notes = 0.0, 1.0, []
    for fam in Family:
        for target in (0.25, 0.5):
            with pytest.warns(UserWarning) if fam is Family.AMH and target > 1 / 3 else nullcontext():
                theta = copulas.tau_inverse(fam, target)
            # AMH cannot reach 0.5: its target is truncated to the upper limit 1/3
            effective = kendall_tau(fam, theta)
            if abs(effective - target) > 1e-9:
                notes.append(f"{fam} {target}->{effective:.4f}")
            uv = Copula(fam, theta).sample(20000, rng)
            emp = stats.kendalltau(uv[:, 0], uv[:, 1]).statistic
            worst_tau = max(worst_tau, abs(emp - effective))
            for j in (0, 1):
                min_p = min(min_p, stats.kstest(uv[:, j], "uniform").pvalue)
    elapsed = time.perf_counter() - start
    ok = worst_tau <= 0.02 and min_p > 0.01 and elapsed < 60.0
    verdict(
        capsys, 4, "sampler", ok,
        f"max |tau_emp - tau| {worst_tau:.4f}, min KS p {min_p:.3f}, {elapsed:.1f}s"
        + (f" (truncated: {', '.join(notes)})" if notes else ""),
    )


# ---------------------------------------------------------------------------
# 5. likelihood oracle

K1, K2 = (1.2, 0.8), (1.6, 1.2)
B1S, B1L, B2S, B2L = (-0.7, 0.4), (0.8, -0.6), (-0.9, 0.6), (1.0, -0.8)
CLUSTERS = [((0.4, 0.7), (1.0, 0.3), (0.0, -0.5)), ((1.1, 0.5), (0.0, 1.2), (1.0, 0.4)), ((0.9, 1.3), (1.0, -0.8), (0.0, 0.0))]


def _joint_survival(fam, th, y1, y2, x1, x2):
    u1 = survival(RegressionSpec("YP", B1S, B1L), x1, weibull(*K1), y1)
    u2 = survival(RegressionSpec("YP", B2S, B2L), x2, weibull(*K2), y2)
    return float(Copula(fam, th).cdf(np.array([u1, u2])))


def _fd_factor(fam, th, y1, y2, x1, x2, pattern, h=1e-4):
    S = lambda a, b: _joint_survival(fam, th, a, b, x1, x2)
    if pattern == (0, 0):
        return S(y1, y2)
    if pattern == (1, 0):
        return -(S(y1 + h, y2) - S(y1 - h, y2)) / (2 * h)
    if pattern == (0, 1):
        return -(S(y1, y2 + h) - S(y1, y2 - h)) / (2 * h)
    return (S(y1 + h, y2 + h) - S(y1 + h, y2 - h) - S(y1 - h, y2 + h) + S(y1 - h, y2 - h)) / (4 * h * h)


def test_criterion_05_likelihood_oracle(capsys):
    worst_rel = 0.0
    for fam, thetas in THETAS.items():
        th = thetas[1]
        p = ParamSet(th, K1, K2, B1S, B1L, B2S, B2L)
        for pattern in ((0, 0), (1, 0), (0, 1), (1, 1)):
            y1 = [c[0][0] for c in CLUSTERS]
            y2 = [c[0][1] for c in CLUSTERS]
            X1 = np.array([c[1] for c in CLUSTERS])
            X2 = np.array([c[2] for c in CLUSTERS])
            data = SurvivalData(y1, [pattern[0]] * 3, y2, [pattern[1]] * 3, X1, X2)
            model = ModelSpec(fam, "weibull", "YP").resolve(data)
            got = np.exp(cluster_loglik(model, p, data))
            for i in range(3):
                want = _fd_factor(fam, th, y1[i], y2[i], X1[i], X2[i], pattern)
                worst_rel = max(worst_rel, abs(got[i] - want) / abs(want))
    # independence: Frank at 0 and GH at 1 factorize into the margins
    rng = np.random.default_rng(55)
    n = 60
    X1, X2 = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    y1, y2 = rng.uniform(0.1, 3, n), rng.uniform(0.1, 3, n)
    d1, d2 = rng.integers(0, 2, n), rng.integers(0, 2, n)
    data = SurvivalData(y1, d1, y2, d2, X1, X2)
    m = marginal_loglik(RegressionSpec("YP", B1S, B1L), weibull(*K1), y1, d1, X1) + marginal_loglik(
        RegressionSpec("YP", B2S, B2L), weibull(*K2), y2, d2, X2
    )
    worst_ind = 0.0
    for fam, th in (("Frank", 0.0), ("GH", 1.0)):
        model = ModelSpec(fam, "weibull", "YP").resolve(data)
        worst_ind = max(worst_ind, abs(total_loglik(model, ParamSet(th, K1, K2, B1S, B1L, B2S, B2L), data) - m))
    ok = worst_rel < 1e-4 and worst_ind < 1e-8
    verdict(capsys, 5, "likelihood oracle", ok, f"max relative FD error {worst_rel:.1e}, independence gap {worst_ind:.1e}")


# ---------------------------------------------------------------------------
# 6-7. Monte Carlo study: self-fit accuracy and AIC copula choice

MC_FAMILIES = ("Clayton", "AMH", "Frank", "GH", "Joe")


@pytest.fixture(scope="module")
def clayton_mc():
    scenario = Scenario.standard("Clayton", 0.25, "weibull", "YP", n=500, seed=2024)
    specs = [ModelSpec(f, "weibull", "YP") for f in MC_FAMILIES]
    start = time.perf_counter()
    report = run_mc(scenario, 100, specs, workers=WORKERS)
    return report, time.perf_counter() - start


def test_criterion_06_mc_self_fit(capsys, clayton_mc):
    report, elapsed = clayton_mc
    lab = "Clayton-weibull-YP"
    beta = report.stat(lab, "beta1S[1]")
    tau = report.stat(lab, "tau")
    nonconv = report.failures[lab] / report.M
    ok = -4 <= beta.ARB <= 6 and 91 <= beta.CR <= 99 and -4 <= tau.ARB <= 6 and nonconv < 0.05
    verdict(
        capsys, 6, "MC self-fit", ok,
        f"ARB(beta1S[1]) {beta.ARB:.2f}%, CR {beta.CR:.1f}%, ARB(tau) {tau.ARB:.2f}%, "
        f"non-converged {100 * nonconv:.1f}%, M={report.M}, {elapsed / 60:.1f} min (shared with 7)",
    )


def test_criterion_07_aic_choice(capsys, clayton_mc):
    report, _ = clayton_mc
    share = report.choice["Clayton-weibull-YP"]
    others = ", ".join(f"{k.split('-')[0]} {v:.2f}" for k, v in report.choice.items() if not k.startswith("Clayton"))
    verdict(capsys, 7, "AIC copula choice", share > 0.60, f"Clayton chosen in {share:.2f} of replicas ({others})")


# ---------------------------------------------------------------------------
# 8. likelihood-ratio behaviour


def test_criterion_08_lr_tests(capsys):
    start = time.perf_counter()
    spec = ModelSpec("Clayton", "weibull", "YP")
    yp = run_lr_study(Scenario.standard("Clayton", 0.25, regression="YP", n=500, seed=808), 50, spec, workers=WORKERS)
    ph = run_lr_study(Scenario.standard("Clayton", 0.25, regression="PH", n=500, seed=809), 50, spec, workers=WORKERS)
    yp_ph, yp_po = yp["PH"].mean_p, yp["PO"].mean_p
    ph_stat, ph_po = ph["PH"].mean_stat, ph["PO"].mean_p
    fails = sum(s.failures for s in (*yp.values(), *ph.values()))
    ok = yp_ph < 1e-3 and yp_po < 1e-3 and 3 <= ph_stat <= 5.5 and ph_po < 0.01
    verdict(
        capsys, 8, "LR tests", ok,
        f"YP data: mean p PH {yp_ph:.1e}, PO {yp_po:.1e}; PH data: mean stat PH-vs-YP {ph_stat:.2f}, "
        f"mean p PO {ph_po:.1e}; failed replicas {fails}; {(time.perf_counter() - start) / 60:.1f} min",
    )


# ---------------------------------------------------------------------------
# 9. crossing time


def _bisection_root(g, lo, hi, tol=1e-12):
    glo = g(lo)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_09_crossing_time(capsys):
    start = time.perf_counter()
    scenario = Scenario.standard("Clayton", 0.25, n=500, seed=909)
    reg, base = scenario.regression_model(1), scenario.baseline_model(1)
    oracle = _bisection_root(lambda t: survival(reg, [0, 0], base, t) - survival(reg, [1, 0], base, t), 1e-6, 50.0)
    study = run_crossing_study(scenario, 50, ModelSpec("Clayton", "weibull", "YP"), B=200, workers=WORKERS)
    arb = 100.0 * float(np.mean((study.points - oracle) / oracle))
    cr = 100.0 * float(np.mean((study.lowers <= oracle) & (oracle <= study.uppers)))
    ok = abs(arb) <= 6 and 89 <= cr <= 99 and abs(study.truth - oracle) < 1e-9 * oracle
    verdict(
        capsys, 9, "crossing time", ok,
        f"true t* {oracle:.6f}, AE {study.AE:.4f}, ARB {arb:.2f}%, CR {cr:.1f}%, replicas {study.count}/50, "
        f"unreliable intervals {study.unreliable}, {(time.perf_counter() - start) / 60:.1f} min",
    )


# ---------------------------------------------------------------------------
# 10. semiparametric robustness


def test_criterion_10_semiparametric_robustness(capsys):
    start = time.perf_counter()
    scenario = Scenario.standard("Clayton", 0.25, "expweibull", "YP", n=500, seed=2024)
    specs = [ModelSpec("Clayton", "pe", "YP"), ModelSpec("Clayton", "weibull", "YP")]
    report = run_mc(scenario, 50, specs, workers=WORKERS)
    pe = report.stat("Clayton-pe-YP", "beta1S[1]")
    wb = report.stat("Clayton-weibull-YP", "beta1S[1]")
    ok = abs(pe.ARB) <= 6 and abs(wb.ARB) > 20
    verdict(
        capsys, 10, "semiparametric robustness", ok,
        f"ARB(beta1S[1]) PE {pe.ARB:.2f}% (n={pe.count}), Weibull {wb.ARB:.2f}% (n={wb.count}), "
        f"{(time.perf_counter() - start) / 60:.1f} min",
    )
