import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from jumpratio import mc_stats as mc
from jumpratio.errors import DomainError, RegimeUnknownError


def test_ecdf_examples():
    F = mc.ecdf([0.5])
    assert F(0.49) == 0.0 and F(0.5) == 1.0
    assert mc.ecdf([0.1, 0.5, 0.9])(0.5) == pytest.approx(2 / 3)
    with pytest.raises(DomainError):
        mc.ecdf([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.randoms())
def test_ecdf_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert mc.ecdf(xs) == mc.ecdf(ys)
    F = mc.ecdf(xs)
    grid = np.linspace(-1e6, 1e6, 40)
    assert np.all(np.diff(F(grid)) >= 0)


def test_ecdf_quantile():
    F = mc.ecdf([3.0, 1.0, 2.0, 4.0])
    assert F.quantile(0.5) == 2.0
    assert F.quantile(0.51) == 3.0
    assert F.quantile(1.0) == 4.0


def test_ks_examples():
    uniform = lambda x: min(max(x, 0.0), 1.0)
    assert mc.ks_distance([0.1, 0.5, 0.9], uniform) == pytest.approx(7 / 30)
    assert mc.ks_distance([0.5], uniform) == 0.5
    with pytest.raises(DomainError):
        mc.ks_distance([], uniform)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=200))
def test_ks_matches_scipy(xs):
    ours = mc.ks_distance(xs, lambda x: x)
    assert ours == pytest.approx(stats.kstest(xs, "uniform").statistic, abs=1e-12)


def test_ks_exact_sample_is_small():
    n = 100_000
    x = np.random.default_rng(0).beta(0.5, 1.0, n)
    assert mc.ks_distance(x, lambda v: v**0.5) < 1.95 / math.sqrt(n)


def test_empirical_laplace_examples():
    assert mc.empirical_laplace([1, 1, 1], 1.0) == pytest.approx(math.exp(-1))
    assert mc.empirical_laplace([0.0, 5.0], 1.0, capped=[False, True]) == pytest.approx(0.5)
    assert mc.empirical_laplace([0.3, 7.0], 0.0) == 1.0
    with pytest.raises(DomainError):
        mc.empirical_laplace([], 1.0)


def test_laplace_standard_error():
    rng = np.random.default_rng(1)
    x = rng.exponential(size=5000)
    est, se = mc.laplace_estimate(x, 1.0)
    terms = np.exp(-x)
    assert se == pytest.approx(terms.std(ddof=1) / math.sqrt(x.size))
    assert abs(est - 0.5) < 4 * se


def spec(**kw):
    base = dict(model="stable(alpha=0.5,c=1)", theorem=2, k=1, t_grid=(1.0,), n=2000, seed=3)
    base.update(kw)
    return mc.ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(DomainError):
        spec(n=0)
    with pytest.raises(DomainError):
        spec(t_grid=(1.0, 0.1, 1.0))
    with pytest.raises(DomainError):
        spec(theorem=3)
    with pytest.raises(DomainError):
        spec(k=0)
    with pytest.raises(DomainError):
        spec(lambda_grid=())


def test_grid_direction_checked():
    with pytest.raises(DomainError, match="decrease"):
        mc.run_experiment(spec(model="gamma(rate=1)", t_grid=(0.01, 0.1), n=10))


def test_regime_required():
    with pytest.raises(RegimeUnknownError):
        mc.run_experiment(spec(model="steps(1:1,2:1)", n=10))


def test_parallel_equals_serial():
    s = spec(theorem=1, k=1, n=2 * mc.CHUNK + 17, t_grid=(10.0, 1.0))
    serial = mc.run_experiment(s, workers=1)
    parallel = mc.run_experiment(s, workers=2)
    assert serial.to_lines() == parallel.to_lines()


def test_summary_deterministic():
    s = spec(n=3000)
    assert mc.run_experiment(s).to_lines() == mc.run_experiment(s).to_lines()
    assert mc.run_experiment(s).to_lines() != mc.run_experiment(spec(n=3000, seed=4)).to_lines()


def test_summary_invariants():
    summ = mc.run_experiment(spec(theorem=1, k=0, n=3000, t_grid=(5.0, 1.0)))
    for ts in summ.per_t:
        assert list(ts.quantiles) == sorted(ts.quantiles)
        assert 0 <= ts.capped_fraction <= 1
        assert ts.minimum >= 1.0
    assert summ.check("coherence").passed


def test_stable_consecutive_ks_passes():
    summ = mc.run_experiment(spec(n=20_000, ks_tol=1.63 / math.sqrt(20_000)))
    assert summ.check("ks").passed
    assert 0 <= summ.per_t[0].ks <= 1


def test_wrong_law_fails_ks():
    summ = mc.run_experiment(spec(n=5000, ks_tol=1e-4))
    assert not summ.check("ks").passed
    assert not summ.passed


def test_point_mass_and_trend_checks():
    summ = mc.run_experiment(spec(model="rapid0", t_grid=(1e-4, 1e-6, 1e-8), n=2000,
                                  delta=0.1, threshold=0.5))
    assert summ.law == "PointMass(1.0)"
    assert summ.check("point_mass").passed
    assert summ.check("median_trend").passed
    medians = [ts.median for ts in summ.per_t]
    assert medians == sorted(medians)


def test_trend_inversions_counted():
    assert mc._count_inversions([1, 2, 2, 3], strict=False) == 0
    assert mc._count_inversions([1, 2, 2, 3], strict=True) == 1
    assert mc._count_inversions([3, 2, 1], strict=False) == 2


def test_degenerate_draws_excluded():
    s = mc.ExperimentSpec(model="gamma(rate=1)", theorem=2, k=1, t_grid=(0.05,), n=500, seed=1)
    out = mc.run_experiment(s)
    assert out.per_t[0].degenerate == 0
    assert out.per_t[0].valid == 500


def test_oracle_crosscheck_stable():
    points = mc.oracle_crosscheck(spec(n=5000, x_grid=(0.2, 0.5, 0.8)))
    assert [p.arg for p in points] == [0.2, 0.5, 0.8]
    for p in points:
        assert p.exact == pytest.approx(math.sqrt(p.arg), abs=1e-8)
        assert p.passed


def test_oracle_crosscheck_step_measure(tmp_path):
    path = tmp_path / "steps.csv"
    path.write_text("x,tail\n1,2\n2,1\n3,0\n")
    s = mc.ExperimentSpec(model=f"table({path},regime=slow)", theorem=2, k=1, t_grid=(1.0,),
                          n=20_000, seed=5, x_grid=(0.4, 0.6, 0.9), oracle=True)
    summ = mc.run_experiment(s)
    assert summ.per_t[0].degenerate > 0
    assert summ.check("oracle").passed, summ.check("oracle").detail
