import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from jumpratio import jump_sim as js
from jumpratio.errors import TruncationError, UnsupportedOperation
from jumpratio.tail_models import GammaSub, LogCorrectedAlpha1, RapidAtZero, Stable, StepMeasure

STABLE = Stable(0.5, 1.0)
STEPS = StepMeasure(((1.0, 1.0), (2.0, 1.0)))


def test_arrivals_from_spacings():
    np.testing.assert_allclose(js.sample_arrivals(3, spacings=[0.5, 1.2, 0.3]), [0.5, 1.7, 2.0])


def test_arrivals_deterministic_and_positive():
    path = js.SeedPath(11, 4)
    a = js.sample_arrivals(50, path)
    assert np.array_equal(a, js.sample_arrivals(50, path))
    assert a[0] > 0 and np.all(np.diff(a) > 0)
    assert not np.array_equal(a, js.sample_arrivals(50, js.SeedPath(11, 5)))
    assert not np.array_equal(a, js.sample_arrivals(50, js.SeedPath(11, 4, stream=1)))


@given(st.lists(st.integers(1, 40), min_size=1, max_size=8))
def test_arrivals_independent_of_block_sizes(blocks):
    path = js.SeedPath(3, 9)
    stream = js.ArrivalStream(path)
    parts = np.concatenate([stream.next(b) for b in blocks])
    assert np.array_equal(parts, js.sample_arrivals(sum(blocks), path))


def test_ordered_jumps_stable():
    real = js.ordered_jumps(STABLE, 1.0, 3, spacings=[0.25, 0.75, 3.0])
    np.testing.assert_allclose(real.jumps, [16.0, 1.0, 0.0625])
    assert real.tail_bound == pytest.approx(0.25)
    scaled = js.ordered_jumps(STABLE, 2.0, 3, spacings=[0.25, 0.75, 3.0])
    np.testing.assert_allclose(scaled.jumps, 4 * real.jumps)


def test_ordered_jumps_steps():
    real = js.ordered_jumps(STEPS, 1.0, 3, spacings=[0.5, 1.0, 1.0])
    np.testing.assert_array_equal(real.jumps, [2.0, 1.0, 0.0])
    assert real.tail_bound == 0.0


def test_ordered_jumps_non_levy_has_no_bound():
    real = js.ordered_jumps(RapidAtZero(), 1.0, 4, js.SeedPath(1, 0))
    assert real.tail_bound is None
    assert np.all(np.diff(real.jumps) <= 0)


def test_total_value_reports_achieved_bound():
    with pytest.raises(TruncationError) as info:
        js.total_value(STABLE, 1.0, spacings=[0.25, 0.75, 3.0])
    assert info.value.partial == pytest.approx(17.0625)
    assert info.value.bound == pytest.approx(0.25)
    assert info.value.n_terms == 3


def test_total_value_step_is_exact():
    value, real = js.total_value(STEPS, 1.0, spacings=[0.5, 1.0, 1.0, 1.0])
    assert value == 3.0
    assert real.tail_bound == 0.0


def test_total_value_self_refinement():
    # the rule bounds the expected shortfall, so check its average over draws
    gaps = []
    for r in range(20):
        path = js.SeedPath(5, r)
        coarse, _ = js.total_value(GammaSub(1.0), 1.0, 1e-6, path)
        fine, _ = js.total_value(GammaSub(1.0), 1.0, 1e-8, path)
        assert coarse <= fine
        gaps.append((fine - coarse) / fine)
    assert np.mean(gaps) <= 1e-6
    assert max(gaps) <= 1e-5


def test_total_value_mean_remainder_close_to_truncated():
    path = js.SeedPath(5, 1)
    trunc, _ = js.total_value(STABLE, 1.0, 1e-6, path)
    mean, _ = js.total_value(STABLE, 1.0, 1e-3, path, remainder=js.MEAN)
    assert mean == pytest.approx(trunc, rel=1e-2)


def test_non_levy_series_unsupported():
    with pytest.raises(UnsupportedOperation):
        js.total_value(RapidAtZero(), 1.0, seed_path=js.SeedPath(0, 0))


def test_term_cap_raises():
    with pytest.raises(TruncationError) as info:
        js.trimmed_ratio(LogCorrectedAlpha1(2.0), 1e-3, 0, 1e-6, js.SeedPath(0, 0), max_terms=1000)
    assert info.value.n_terms >= 1000
    assert info.value.bound > 0


def test_trimmed_single_jump_is_one():
    s = js.trimmed_ratio(STEPS, 1.0, 1, spacings=[0.5, 1.0, 1.0, 1.0])
    assert s.value == 1.0 and not s.capped and not s.degenerate


def test_trimmed_degenerate_when_no_jump():
    s = js.trimmed_ratio(STEPS, 1.0, 0, spacings=[2.5, 1.0])
    assert s.degenerate and math.isnan(s.value)


def test_trimmed_cap():
    s = js.trimmed_ratio(STABLE, 1.0, 0, spacings=[1.0, 1e-13, 1e-13, 1e-13], cap=1.5,
                         rel_tol=10.0)
    assert s.capped and s.value == 1.5


def test_consecutive_stable_formula():
    S = js.sample_arrivals(4, js.SeedPath(2, 2))
    for t in (1e-3, 1.0, 1e3):
        for k in (1, 2, 3):
            r = js.consecutive_ratio(Stable(0.4, 2.0), t, k, js.SeedPath(2, 2))
            assert r.value == pytest.approx((S[k - 1] / S[k]) ** (1 / 0.4), rel=1e-12)


def test_consecutive_rapid_arithmetic():
    r = js.consecutive_ratio(RapidAtZero(), 1e-8, 1, spacings=[1.0, 1.0])
    assert r.value == pytest.approx(math.log1p(1e8) / math.log1p(2e8), rel=1e-12)


def test_consecutive_gamma_tiny():
    r = js.consecutive_ratio(GammaSub(1.0), 0.01, 1, spacings=[1.0, 1.0])
    assert 0 <= r.value < 1e-40


def test_consecutive_degenerate():
    r = js.consecutive_ratio(STEPS, 1.0, 1, spacings=[3.0, 1.0])
    assert r.degenerate and math.isnan(r.value)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([STABLE, GammaSub(2.0), LogCorrectedAlpha1(3.0), STEPS]),
       st.floats(1e-3, 10.0), st.integers(0, 3), st.integers(0, 10**6))
def test_trimmed_at_least_one(model, t, k, rep):
    s = js.trimmed_ratio(model, t, k, 1e-2, js.SeedPath(1, rep), remainder=js.MEAN)
    assert s.degenerate or s.value >= 1.0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([STABLE, GammaSub(1.0), LogCorrectedAlpha1(2.0), RapidAtZero(), STEPS]),
       st.floats(1e-8, 1e3), st.integers(1, 4), st.integers(0, 10**6))
def test_consecutive_in_unit_interval(model, t, k, rep):
    r = js.consecutive_ratio(model, t, k, js.SeedPath(1, rep))
    assert r.degenerate or 0.0 <= r.value <= 1.0


@pytest.mark.parametrize("kind,k", [(js.TRIMMED, 0), (js.TRIMMED, 2), (js.CONSECUTIVE, 1), (js.CONSECUTIVE, 3)])
def test_batch_matches_single_draws(kind, k):
    model = GammaSub(1.0)
    batch = js.simulate_batch(model, 0.3, k, kind, 42, 2, 10, 40, rel_tol=1e-3, remainder=js.MEAN)
    for i, r in enumerate(range(10, 40)):
        path = js.SeedPath(42, r, 2)
        if kind == js.TRIMMED:
            s = js.trimmed_ratio(model, 0.3, k, 1e-3, path, remainder=js.MEAN)
        else:
            s = js.consecutive_ratio(model, 0.3, k, path)
        assert batch.values[i] == s.value


def test_batch_split_invariance():
    whole = js.simulate_batch(STABLE, 1.0, 1, js.TRIMMED, 7, 0, 0, 60, rel_tol=1e-3, remainder=js.MEAN)
    parts = js.SampleBatch.concat([
        js.simulate_batch(STABLE, 1.0, 1, js.TRIMMED, 7, 0, a, b, rel_tol=1e-3, remainder=js.MEAN)
        for a, b in ((0, 13), (13, 40), (40, 60))])
    assert np.array_equal(whole.values, parts.values)


def test_step_jumps_are_poisson():
    # nonzero jumps of a finite measure: Poisson(t M) count, atoms with probabilities mass/M
    model = StepMeasure(((1.0, 0.5), (2.0, 1.5)))
    t, n = 1.2, 4000
    counts = np.zeros(12, int)
    big = 0
    total = 0
    for r in range(n):
        real = js.ordered_jumps(model, t, 20, js.SeedPath(9, r))
        nz = real.jumps[real.jumps > 0]
        counts[min(len(nz), 11)] += 1
        big += int(np.sum(nz == 2.0))
        total += len(nz)
    mu = t * 2.0
    p = stats.poisson.pmf(np.arange(12), mu)
    p[-1] = stats.poisson.sf(10, mu)
    keep = p * n >= 5
    expected = np.append(p[keep] * n, n - p[keep].sum() * n)
    observed = np.append(counts[keep], n - counts[keep].sum())
    assert stats.chisquare(observed, expected).pvalue > 1e-3
    assert stats.binomtest(big, total, 0.75).pvalue > 1e-3


def test_stable_ratio_law_same_at_all_t():
    a = js.simulate_batch(STABLE, 1.0, 1, js.TRIMMED, 3, 0, 0, 3000, rel_tol=1e-3, remainder=js.MEAN)
    b = js.simulate_batch(STABLE, 100.0, 1, js.TRIMMED, 3, 1, 0, 3000, rel_tol=1e-3, remainder=js.MEAN)
    assert stats.ks_2samp(a.values, b.values).pvalue > 1e-3
