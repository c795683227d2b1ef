"""Replicated ratio experiments over t-grids and their scoring.

A run draws ``n`` replicates per horizon, summarizes them (quantiles,
empirical Laplace transform, KS distance, neighborhood mass of a point
limit) and checks them against the limit law of the model's regime and,
optionally, against the exact finite-t quadrature laws.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jump_sim, limit_laws
from .errors import DomainError
from .tail_models import Direction, Regime, TailModel, parse_model

DEFAULT_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_XS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
QUANTILE_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
CHUNK = 2000


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical distribution function of a sample."""

    points: np.ndarray

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.points.size

    @property
    def n(self):
        return self.points.size

    def quantile(self, q):
        # lower empirical quantile: smallest x with F(x) >= q
        i = np.clip(np.ceil(np.asarray(q) * self.n).astype(int) - 1, 0, self.n - 1)
        return self.points[i]

    def __eq__(self, other):
        return isinstance(other, ECDF) and np.array_equal(self.points, other.points)

    __hash__ = None


def _finite_sample(samples):
    a = np.asarray(samples, dtype=float).ravel()
    if a.size == 0:
        raise DomainError("empty sample")
    if not np.all(np.isfinite(a)):
        raise DomainError("sample contains non-finite values")
    return a


def ecdf(samples) -> ECDF:
    return ECDF(np.sort(_finite_sample(samples)))


def ks_distance(samples, target_cdf: Callable[[float], float]) -> float:
    """Kolmogorov-Smirnov distance between a sample and a target CDF."""
    x = np.sort(_finite_sample(samples))
    n = x.size
    f = np.array([target_cdf(float(v)) for v in x])
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - f)), np.max(np.abs((i - 1) / n - f))))


def laplace_estimate(values, lam, capped=None):
    """Mean of ``exp(-lam * value)`` and its standard error.

    Capped draws stand for the value infinity and contribute 0.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("empty sample")
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    with np.errstate(under="ignore"):
        terms = np.exp(-lam * v)
    if capped is not None:
        terms = np.where(np.asarray(capped, bool).ravel(), 0.0, terms)
    n = terms.size
    mean = math.fsum(terms) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((terms - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def empirical_laplace(values, lam, capped=None) -> float:
    return laplace_estimate(values, lam, capped)[0]


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a run, and nothing else."""

    model: str
    theorem: int
    k: int
    t_grid: tuple
    n: int
    seed: int
    lambda_grid: tuple = DEFAULT_LAMBDAS
    x_grid: tuple = DEFAULT_XS
    cap: float = jump_sim.DEFAULT_CAP
    rel_tol: float = 1e-3
    remainder: str = jump_sim.MEAN
    max_terms: int = 2_000_000
    ks_tol: float = 0.0065
    se_mult: float = 3.0
    abs_tol: float = 1e-6
    max_se: Optional[float] = None
    delta: float = 0.05
    threshold: float = 0.05
    trend_inversions: Optional[int] = None
    max_failed_fraction: float = 1e-3
    oracle: bool = False
    base_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "x_grid", tuple(float(v) for v in self.x_grid))
        if self.theorem not in (1, 2):
            raise DomainError(f"theorem must be 1 or 2, got {self.theorem}")
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if not self.t_grid or not self.lambda_grid or not self.x_grid:
            raise DomainError("grids must be nonempty")
        if any(not t > 0 for t in self.t_grid):
            raise DomainError("horizons must be positive")
        d = np.diff(self.t_grid)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise DomainError("t_grid must be strictly monotone")
        if self.theorem == 1 and self.k < 0 or self.theorem == 2 and self.k < 1:
            raise DomainError(f"k={self.k} is out of range for theorem {self.theorem}")

    @property
    def kind(self):
        return jump_sim.TRIMMED if self.theorem == 1 else jump_sim.CONSECUTIVE

    def build_model(self) -> TailModel:
        return parse_model(self.model, base_dir=self.base_dir)

    def allowed_inversions(self):
        if self.trend_inversions is not None:
            return self.trend_inversions
        return 1 if self.n < 10_000 else 0


@dataclass(frozen=True)
class OraclePoint:
    t: float
    arg: float
    estimate: float
    se: float
    exact: float
    quad_error: float

    @property
    def margin(self):
        """Allowed deviation minus observed deviation; nonnegative means pass."""
        allowed = 3.0 * self.se + 1e-6 + self.quad_error
        return allowed - abs(self.estimate - self.exact)

    @property
    def passed(self):
        return self.margin >= 0


@dataclass(frozen=True)
class TSummary:
    """Statistics of the draws at one horizon."""

    t: float
    n: int
    valid: int
    capped: int
    degenerate: int
    failed: int
    minimum: float
    quantiles: tuple
    laplace: tuple
    ks: Optional[float] = None
    near_mass: Optional[float] = None
    oracle: tuple = ()

    @property
    def median(self):
        return dict(zip(QUANTILE_LEVELS, self.quantiles)).get(0.5, math.nan)

    @property
    def capped_fraction(self):
        return self.capped / self.n


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ExperimentSummary:
    spec: ExperimentSpec
    law: str
    per_t: list
    checks: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_lines(self):
        """Key-value text; excludes wall-clock so reruns are byte-identical."""
        from . import __version__
        s = self.spec
        out = [
            f"version={__version__}",
            f"model={s.model}",
            f"theorem={s.theorem}",
            f"k={s.k}",
            f"statistic={s.kind}",
            f"n={s.n}",
            f"seed={s.seed}",
            f"t_grid={','.join(_num(t) for t in s.t_grid)}",
            f"limit={self.law}",
        ]
        for i, ts in enumerate(self.per_t):
            p = f"t[{i}]"
            out.append(f"{p}.t={_num(ts.t)}")
            out.append(f"{p}.valid={ts.valid}")
            out.append(f"{p}.capped_fraction={_num(ts.capped_fraction)}")
            out.append(f"{p}.degenerate={ts.degenerate}")
            out.append(f"{p}.failed={ts.failed}")
            for q, v in zip(QUANTILE_LEVELS, ts.quantiles):
                out.append(f"{p}.quantile[{q:g}]={_num(v)}")
            for lam, est, se in ts.laplace:
                out.append(f"{p}.laplace[{lam:g}]={_num(est)} se={_num(se)}")
            if ts.ks is not None:
                out.append(f"{p}.ks={_num(ts.ks)}")
            if ts.near_mass is not None:
                out.append(f"{p}.near_mass={_num(ts.near_mass)}")
            for op in ts.oracle:
                out.append(f"{p}.oracle[{op.arg:g}]={_num(op.estimate)} exact={_num(op.exact)} "
                           f"se={_num(op.se)} margin={_num(op.margin)}")
        for c in self.checks:
            out.append(f"check.{c.name}={'pass' if c.passed else 'fail'} {c.detail}")
        out.append(f"result={'pass' if self.passed else 'fail'}")
        return out


def _num(x):
    return format(float(x), ".17g")


def _run_chunk(args):
    spec, ti, start, stop = args
    model = spec.build_model()
    return jump_sim.simulate_batch(
        model, spec.t_grid[ti], spec.k, spec.kind, spec.seed, ti, start, stop,
        rel_tol=spec.rel_tol, remainder=spec.remainder, cap=spec.cap,
        max_terms=spec.max_terms)


def draw_samples(spec: ExperimentSpec, workers=1):
    """Per-horizon ``SampleBatch`` list; identical for any worker count."""
    tasks = [(spec, ti, a, min(a + CHUNK, spec.n))
             for ti in range(len(spec.t_grid)) for a in range(0, spec.n, CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    else:
        results = [_run_chunk(task) for task in tasks]
    by_t = [[] for _ in spec.t_grid]
    # pool.map preserves task order, so chunks concatenate in replicate order
    for (_, ti, _, _), batch in zip(tasks, results):
        by_t[ti].append(batch)
    return [jump_sim.SampleBatch.concat(parts) for parts in by_t]


def _summarize(spec, law, t, batch, model):
    ok = ~(batch.degenerate | batch.failed)
    values, capped = batch.values[ok], batch.capped[ok]
    valid = int(ok.sum())
    if valid == 0:
        return TSummary(t, spec.n, 0, 0, int(batch.degenerate.sum()), int(batch.failed.sum()),
                        math.nan, tuple(math.nan for _ in QUANTILE_LEVELS), ())
    F = ecdf(values)
    quantiles = tuple(float(v) for v in F.quantile(QUANTILE_LEVELS))
    lap = tuple((lam, *laplace_estimate(values, lam, capped)) for lam in spec.lambda_grid)
    ks = ks_distance(values, law.cdf) if law.form == "beta_cdf" else None
    near = None
    c = law.point
    if c is not None and math.isfinite(c):
        near = float(np.mean(np.abs(values - c) <= spec.delta))
    oracle = _crosscheck(spec, model, t, values, capped) if spec.oracle else ()
    return TSummary(t, spec.n, valid, int(capped.sum()), int(batch.degenerate.sum()),
                    int(batch.failed.sum()), float(values.min()), quantiles, lap, ks, near, oracle)


def _crosscheck(spec, model, t, values, capped):
    points = []
    if spec.theorem == 1:
        for lam in spec.lambda_grid:
            est, se = laplace_estimate(values, lam, capped)
            exact, qerr = limit_laws.finite_t_trimmed_laplace(model, t, lam, spec.k, with_error=True)
            points.append(OraclePoint(t, lam, est, se, exact, qerr))
    else:
        F = ecdf(values)
        n = values.size
        for x in spec.x_grid:
            est = float(F(x))
            exact, qerr = limit_laws.finite_t_consecutive_cdf(model, t, x, spec.k, with_error=True)
            p = max(min(max(est, exact), 1.0), 0.0)
            se = math.sqrt(max(p * (1 - p), exact * (1 - exact)) / n)
            points.append(OraclePoint(t, x, est, se, exact, qerr))
    return tuple(points)


def _count_inversions(seq, strict):
    bad = 0
    for a, b in zip(seq, seq[1:]):
        if b < a or (strict and b == a):
            bad += 1
    return bad


def _score(spec, law, per_t, model):
    checks = []
    last = per_t[-1]

    failed = sum(ts.failed for ts in per_t)
    total = spec.n * len(per_t)
    checks.append(Check("truncation", failed <= spec.max_failed_fraction * total,
                        f"failed={failed} of {total}"))

    worst = 0.0
    for ts in per_t:
        if ts.valid:
            for lam, est, _ in ts.laplace:
                worst = max(worst, est - math.exp(-lam * ts.minimum))
    checks.append(Check("coherence", worst <= 1e-12, f"max_excess={_num(worst)}"))

    if law.form == "beta_cdf":
        checks.append(Check("ks", last.ks is not None and last.ks <= spec.ks_tol,
                            f"ks={_num(last.ks)} tol={_num(spec.ks_tol)}"))
    elif law.form == "laplace":
        worst_margin, worst_se = math.inf, 0.0
        for lam, est, se in last.laplace:
            margin = spec.se_mult * se + spec.abs_tol - abs(est - law.laplace(lam))
            worst_margin = min(worst_margin, margin)
            worst_se = max(worst_se, se)
        ok = worst_margin >= 0
        if spec.max_se is not None:
            ok = ok and worst_se <= spec.max_se
        checks.append(Check("laplace", ok,
                            f"min_margin={_num(worst_margin)} max_se={_num(worst_se)}"))
    else:
        c = law.point
        if math.isfinite(c):
            outside = 1.0 - last.near_mass
            checks.append(Check("point_mass", outside <= spec.threshold,
                                f"outside={_num(outside)} delta={_num(spec.delta)} "
                                f"threshold={_num(spec.threshold)}"))
            if len(per_t) > 1:
                masses = [ts.near_mass for ts in per_t]
                inv = _count_inversions(masses, strict=False)
                checks.append(Check("mass_trend", inv <= spec.allowed_inversions(),
                                    f"inversions={inv}"))
        if law.regime in (Regime.COND_III, Regime.RAPID) and len(per_t) > 1:
            medians = [ts.median for ts in per_t]
            inv = _count_inversions(medians, strict=True)
            checks.append(Check("median_trend", inv <= spec.allowed_inversions(),
                                f"inversions={inv}"))

    if spec.oracle:
        pts = [op for ts in per_t for op in ts.oracle]
        margin = min((op.margin for op in pts), default=math.inf)
        checks.append(Check("oracle", all(op.passed for op in pts), f"min_margin={_num(margin)}"))
    return checks


def _check_direction(model, spec):
    if len(spec.t_grid) < 2:
        return
    increasing = spec.t_grid[1] > spec.t_grid[0]
    toward_zero = model.direction is Direction.AT_ZERO
    if increasing == toward_zero:
        raise DomainError(
            f"t_grid must {'decrease' if toward_zero else 'increase'} for direction {model.direction.value}")


def run_experiment(spec: ExperimentSpec, workers=1) -> ExperimentSummary:
    import time
    start = time.perf_counter()
    model = spec.build_model()
    law = limit_laws.limit_law_for(model, spec.theorem, spec.k)
    _check_direction(model, spec)
    batches = draw_samples(spec, workers)
    per_t = [_summarize(spec, law, t, b, model) for t, b in zip(spec.t_grid, batches)]
    summary = ExperimentSummary(spec, law.describe(), per_t, _score(spec, law, per_t, model))
    summary.wall_clock = time.perf_counter() - start
    return summary


def oracle_crosscheck(spec: ExperimentSpec, workers=1) -> list:
    """Monte Carlo versus quadrature at every grid point."""
    if not spec.oracle:
        spec = _replace(spec, oracle=True)
    summary = run_experiment(spec, workers)
    return [op for ts in summary.per_t for op in ts.oracle]


def _replace(spec, **changes):
    from dataclasses import replace
    return replace(spec, **changes)
