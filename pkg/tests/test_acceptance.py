"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
The summary at the end of the session lists every criterion.
"""

import math

import numpy as np
import pytest

from jumpratio import limit_laws
from jumpratio.cli import main
from jumpratio.mc_stats import ExperimentSpec, run_experiment
from jumpratio.tail_models import LogCorrectedAlpha1, Stable

pytestmark = pytest.mark.slow

SEED = 7
STABLE = "stable(alpha=0.5,c=1)"


@pytest.mark.parametrize("alpha,k", [(0.5, 1), (0.3, 1), (0.5, 2), (0.8, 3)])
def test_criterion_1_consecutive_ratio_beta_law(record, alpha, k):
    spec = ExperimentSpec(model=f"stable(alpha={alpha},c=1)", theorem=2, k=k, t_grid=(1.0,),
                          n=100_000, seed=SEED, ks_tol=0.0065)
    summary = run_experiment(spec)
    ks = summary.per_t[0].ks
    ok = record(1, summary.check("ks").passed, f"alpha={alpha} k={k} ks={ks:.4f}")
    assert ok, summary.check("ks").detail


@pytest.mark.parametrize("k", [0, 1])
def test_criterion_2_trimmed_ratio_laplace(record, k):
    lams = (0.5, 1.0, 2.0)
    spec = ExperimentSpec(model=STABLE, theorem=1, k=k, t_grid=(1.0,), n=100_000, seed=SEED,
                          lambda_grid=lams, max_se=0.002)
    summary = run_experiment(spec)
    c = summary.check("laplace")
    record(2, c.passed, f"k={k} {c.detail}")
    assert c.passed, c.detail
    if k == 0:
        # the target itself, against an independent value
        assert limit_laws.gk_laplace(1.0, 0.5, 0) == pytest.approx(0.19762, abs=1e-5)


def test_criterion_3_quadrature_collapse(record):
    worst = 0.0
    for alpha in (0.3, 0.5, 0.8):
        model = Stable(alpha, 1.0)
        for t in (1e-3, 1.0, 1e3):
            for k in (0, 1, 2):
                for lam in (0.5, 1.0, 2.0):
                    got = limit_laws.finite_t_trimmed_laplace(model, t, lam, k)
                    worst = max(worst, abs(got - limit_laws.gk_laplace(lam, alpha, k)))
            for k in (1, 2, 3):
                for x in (0.2, 0.5, 0.8):
                    got = limit_laws.finite_t_consecutive_cdf(model, t, x, k)
                    worst = max(worst, abs(got - x ** (k * alpha)))
    ok = record(3, worst <= 1e-6, f"max deviation={worst:.2e}")
    assert ok


def test_criterion_4_gamma_trimmed_ratio_near_one(record):
    spec = ExperimentSpec(model="gamma(rate=1)", theorem=1, k=0, t_grid=(0.1, 0.01, 0.001),
                          n=10_000, seed=SEED, delta=0.05, threshold=0.05)
    summary = run_experiment(spec)
    masses = [ts.near_mass for ts in summary.per_t]
    at_001 = masses[1]
    ok = at_001 >= 0.95 and summary.check("mass_trend").passed
    record(4, ok, "mass in [1,1.05] = " + ", ".join(f"{m:.4f}" for m in masses))
    assert ok


def test_criterion_5_gamma_consecutive_ratio_near_zero(record):
    spec = ExperimentSpec(model="gamma(rate=1)", theorem=2, k=1, t_grid=(0.01,), n=10_000,
                          seed=SEED, delta=0.01, threshold=0.01)
    summary = run_experiment(spec)
    outside = 1.0 - summary.per_t[0].near_mass
    ok = record(5, outside <= 0.01, f"P(ratio > 0.01) = {outside:.4f}, required <= 0.01")
    assert ok, summary.check("point_mass").detail


def test_criterion_6_log_corrected_divergence(record):
    t_grid = tuple(10.0 ** -j for j in range(1, 7))
    spec = ExperimentSpec(model="logcorr(p=2)", theorem=1, k=0, t_grid=t_grid, n=10_000,
                          seed=SEED, rel_tol=1e-2)
    summary = run_experiment(spec)
    medians = [ts.median for ts in summary.per_t]
    trend = summary.check("median_trend").passed

    # log grid over the range where the family has its defining form
    model = LogCorrectedAlpha1(2.0)
    xs = np.geomspace(model.x0, math.exp(-10), 15)
    ratios = model.condition_iii_ratio(xs)
    decreasing = bool(np.all(np.diff(ratios) < 0))
    final = float(ratios[-1])
    ok = trend and decreasing and final < 0.15
    record(6, ok, "medians " + ", ".join(f"{m:.3f}" for m in medians)
           + f"; condition ratio at e^-10 = {final:.4f}")
    assert ok


def test_criterion_7_rapid_consecutive_ratio_near_one(record):
    spec = ExperimentSpec(model="rapid0", theorem=2, k=1, t_grid=(1e-4, 1e-6, 1e-8), n=10_000,
                          seed=SEED)
    summary = run_experiment(spec)
    medians = [ts.median for ts in summary.per_t]
    ok = medians[-1] >= 0.9 and summary.check("median_trend").passed
    record(7, ok, "medians " + ", ".join(f"{m:.4f}" for m in medians))
    assert ok


@pytest.mark.parametrize("theorem,k", [(1, 0), (2, 1)])
def test_criterion_8_finite_t_oracles(record, theorem, k):
    spec = ExperimentSpec(model="gamma(rate=1)", theorem=theorem, k=k, t_grid=(0.5,),
                          n=100_000, seed=SEED, lambda_grid=(0.5, 1.0, 2.0),
                          x_grid=(0.2, 0.5, 0.8), oracle=True)
    summary = run_experiment(spec)
    c = summary.check("oracle")
    what = "laplace" if theorem == 1 else "cdf"
    record(8, c.passed, f"{what} {c.detail}")
    assert c.passed, c.detail


def test_criterion_9_determinism(record, tmp_path):
    args = ["verify", "--theorem", "1", "--model", "gamma(rate=1)", "--k", "0",
            "--t", "0.1,0.01", "--n", "5000", "--seed", str(SEED), "--oracle", "true"]
    files = []
    for name, workers in (("a.txt", "1"), ("b.txt", "1"), ("c.txt", "2")):
        out = tmp_path / name
        main(args + ["--workers", workers, "--out", str(out)])
        files.append(out.read_bytes())
    rerun = files[0] == files[1]
    parallel = files[0] == files[2]
    ok = record(9, rerun and parallel,
                f"rerun identical={rerun}, serial vs 2 workers identical={parallel}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
