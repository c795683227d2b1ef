"""Simulation of ordered jumps through the inverse-tail series.

With ``S_1 < S_2 < ...`` the arrival times of a unit-rate Poisson process,
the ordered jumps of a driftless subordinator on [0, t] are distributed as
``phi(S_1/t) >= phi(S_2/t) >= ...`` and ``V_t`` as their sum.  Sums are
truncated once the expected remainder ``t * tail_phi_integral(S_n/t)`` is
small relative to the partial sum.

All sampling is keyed by a :class:`SeedPath`.  Ratios are computed in log
space relative to the reference jump, so jumps far below the float range
(e.g. ``exp(-S/t)`` for the gamma subordinator at small t) cause no
underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TruncationError, UnsupportedOperation
from .tail_models import TailModel

DEFAULT_REL_TOL = 1e-6
DEFAULT_CAP = 1e12
MAX_TERMS = 10**7
FIRST_BLOCK = 64
MAX_BLOCK = 1 << 16

TRIMMED = "trimmed"
CONSECUTIVE = "consecutive"
# how the series remainder beyond the last simulated term is handled
TRUNCATE = "truncate"
MEAN = "mean"


@dataclass(frozen=True)
class SeedPath:
    """Reproducibility key: ``(master, replicate)`` plus a sub-stream id."""

    master: int
    replicate: int
    stream: int = 0

    def generator(self):
        seq = np.random.SeedSequence(self.master, spawn_key=(self.stream, self.replicate))
        return np.random.Generator(np.random.Philox(seq))


class ArrivalStream:
    """Partial sums of unit exponential spacings, produced in blocks.

    The sums are accumulated strictly left to right, so the arrivals do not
    depend on how the stream is split into blocks.  ``spacings`` replaces
    the random draws by a finite injected sequence.
    """

    def __init__(self, seed_path=None, spacings=None):
        if (seed_path is None) == (spacings is None):
            raise ValueError("give exactly one of seed_path or spacings")
        self._rng = seed_path.generator() if seed_path is not None else None
        self._injected = None if spacings is None else np.asarray(spacings, dtype=float)
        if self._injected is not None and np.any(~(self._injected > 0)):
            raise ValueError("injected spacings must be positive")
        self._pos = 0
        self._last = 0.0

    def next(self, size):
        if self._rng is not None:
            gaps = self._rng.standard_exponential(size)
        else:
            gaps = self._injected[self._pos:self._pos + size]
            self._pos += len(gaps)
        out = np.cumsum(np.concatenate(([self._last], gaps)))[1:]
        if len(out):
            self._last = out[-1]
        return out

    def take(self, n):
        out = self.next(n)
        if len(out) < n:
            raise ValueError(f"injected spacings exhausted after {len(out)} of {n} arrivals")
        return out


def sample_arrivals(n, seed_path=None, spacings=None):
    """First ``n`` arrival times ``S_1 < ... < S_n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return ArrivalStream(seed_path, spacings).take(n)


@dataclass(frozen=True)
class JumpRealization:
    """One simulated horizon: arrivals, ordered jumps and remainder bound.

    ``tail_bound`` is ``t * tail_phi_integral(S_n/t)``, the expected sum of
    all jumps beyond the last one kept (``None`` for non-Levy models).
    """

    t: float
    arrivals: np.ndarray
    jumps: np.ndarray
    tail_bound: Optional[float]
    seed_path: Optional[SeedPath]


@dataclass(frozen=True)
class RatioSample:
    """One draw of a ratio statistic.

    ``capped`` marks values at the infinity cap; ``degenerate`` marks 0/0
    draws (no jumps left, finite measures only), whose ``value`` is nan.
    """

    value: float
    capped: bool
    kind: str
    k: int
    t: float
    degenerate: bool = False


def ordered_jumps(model: TailModel, t, n, seed_path=None, spacings=None):
    """The ``n`` largest jumps on [0, t] as a :class:`JumpRealization`."""
    _check_t(t)
    arrivals = sample_arrivals(n, seed_path, spacings)
    jumps = model.tail_inverse(arrivals / t)
    bound = None
    if model.is_levy:
        bound = t * float(model.tail_phi_integral(arrivals[-1] / t))
    return JumpRealization(t, arrivals, jumps, bound, seed_path)


def _check_t(t):
    if not t > 0:
        raise ValueError(f"time horizon must be positive, got {t}")


def _sum_series(model, t, k, rel_tol, stream, remainder, max_terms, keep=False):
    """Sum ``phi(S_i/t)`` over ``i > k`` relative to ``phi(S_{k+1}/t)``.

    Returns ``(partial, bound, n_terms, log_ref, arrivals)``: the partial sum
    and the remainder bound (the bound's standard-deviation version is used
    as stopping rule when ``remainder == MEAN``) both divided by the
    reference jump ``exp(log_ref)``.  ``log_ref == -inf`` means there is no
    (k+1)-th jump.
    """
    if not model.is_levy:
        raise UnsupportedOperation(f"series for V_t need a Levy measure; {model.name} is not one")
    if remainder not in (TRUNCATE, MEAN):
        raise ValueError(f"unknown remainder mode {remainder!r}")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    log_t = math.log(t)
    log_ref = None
    partial = 0.0
    n = 0
    block = max(FIRST_BLOCK, k + 2)
    kept = []
    bound = math.inf
    while True:
        S = stream.next(block)
        if len(S) == 0:
            raise _truncation("arrival stream exhausted before reaching tolerance",
                              bound, partial, n, log_ref)
        if keep:
            kept.append(S)
        s = S / t
        with np.errstate(divide="ignore", under="ignore"):
            lphi = model._log_tail_inverse(s)
        idx = np.arange(n, n + len(S))
        if log_ref is None and idx[-1] >= k:
            log_ref = lphi[k - n]
            if log_ref == -math.inf:
                arr = np.concatenate(kept) if keep else None
                return 0.0, 0.0, k + 1, log_ref, arr
        if log_ref is not None:
            take = idx >= k
            with np.errstate(under="ignore", divide="ignore", invalid="ignore"):
                rel = np.where(take, np.exp(lphi - log_ref), 0.0)
                csum = np.cumsum(np.concatenate(([partial], rel)))[1:]
                bnd = np.exp(log_t + model._log_phi_integral(s, lphi) - log_ref)
            if remainder == TRUNCATE:
                ok = bnd <= rel_tol * csum
            else:
                # remainder variance <= phi(S_n/t) * t * tail_phi_integral(S_n/t)
                ok = np.sqrt(rel * bnd) <= rel_tol * csum
            ok &= idx >= k + 1
            hit = np.flatnonzero(ok)
            if len(hit):
                j = hit[0]
                arr = None
                if keep:
                    arr = np.concatenate(kept)[: n + j + 1]
                return float(csum[j]), float(bnd[j]), n + j + 1, float(log_ref), arr
            partial = float(csum[-1])
            bound = float(bnd[-1])
        n += len(S)
        if n >= max_terms:
            raise _truncation(f"series not within tolerance after {n} terms",
                              bound, partial, n, log_ref)
        block = min(2 * block, MAX_BLOCK)


def _truncation(message, bound, partial, n, log_ref):
    exc = TruncationError(message, bound, partial, n)
    exc.log_ref = log_ref
    return exc


def total_value(model, t, rel_tol=DEFAULT_REL_TOL, seed_path=None, spacings=None,
                remainder=TRUNCATE, max_terms=MAX_TERMS):
    """Truncated series value of ``V_t`` and the realization it was built from.

    Terms are added until ``t * tail_phi_integral(S_n/t) <= rel_tol *
    partial``; the partial sum then underestimates ``V_t`` by an amount of
    mean at most that bound.  With ``remainder="mean"`` the expected
    remainder is added instead and the stopping rule bounds its standard
    deviation.
    """
    _check_t(t)
    stream = ArrivalStream(seed_path, spacings)
    try:
        partial, bound, n, log_ref, arrivals = _sum_series(
            model, t, 0, rel_tol, stream, remainder, max_terms, keep=True)
    except TruncationError as exc:
        # report the achieved bound in absolute units
        scale = 1.0 if exc.log_ref is None else math.exp(exc.log_ref)
        raise TruncationError(str(exc), exc.bound * scale, exc.partial * scale, exc.n_terms) from None
    scale = math.exp(log_ref) if log_ref > -math.inf else 0.0
    value = partial * scale
    if remainder == MEAN:
        value += bound * scale
    jumps = model.tail_inverse(arrivals / t)
    real = JumpRealization(t, arrivals, jumps, bound * scale, seed_path)
    return value, real


def trimmed_ratio(model, t, k, rel_tol=DEFAULT_REL_TOL, seed_path=None, spacings=None,
                  remainder=TRUNCATE, cap=DEFAULT_CAP, max_terms=MAX_TERMS):
    """One draw of ``V_t^(k) / m_t^(k+1)``."""
    _check_t(t)
    if k < 0:
        raise ValueError("k must be nonnegative")
    stream = ArrivalStream(seed_path, spacings)
    partial, bound, _, log_ref, _ = _sum_series(model, t, k, rel_tol, stream, remainder, max_terms)
    if log_ref == -math.inf:
        return RatioSample(math.nan, False, TRIMMED, k, t, degenerate=True)
    value = partial + bound if remainder == MEAN else partial
    if value > cap:
        return RatioSample(cap, True, TRIMMED, k, t)
    return RatioSample(value, False, TRIMMED, k, t)


def consecutive_ratio(model, t, k, seed_path=None, spacings=None):
    """One draw of ``phi(S_{k+1}/t) / phi(S_k/t)``, ``k >= 1``."""
    _check_t(t)
    if k < 1:
        raise ValueError("the consecutive ratio needs k >= 1")
    S = ArrivalStream(seed_path, spacings).take(k + 1)
    value, degenerate = _consecutive_from_arrivals(model, t, k, S[None, :])
    if degenerate[0]:
        return RatioSample(math.nan, False, CONSECUTIVE, k, t, degenerate=True)
    return RatioSample(float(value[0]), False, CONSECUTIVE, k, t)


def _consecutive_from_arrivals(model, t, k, S):
    with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
        lo = model._log_tail_inverse(S[:, k - 1] / t)
        hi = model._log_tail_inverse(S[:, k] / t)
        degenerate = lo == -np.inf
        value = np.where(degenerate, np.nan, np.exp(hi - np.where(degenerate, 0.0, lo)))
    return value, degenerate


@dataclass
class SampleBatch:
    """Ratio draws for a contiguous block of replicates."""

    values: np.ndarray
    capped: np.ndarray
    degenerate: np.ndarray
    failed: np.ndarray

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("values", "capped", "degenerate", "failed")))


def simulate_batch(model, t, k, kind, master, stream_id, start, stop,
                   rel_tol=DEFAULT_REL_TOL, remainder=TRUNCATE, cap=DEFAULT_CAP,
                   max_terms=MAX_TERMS):
    """Draws for replicates ``start <= r < stop`` on sub-stream ``stream_id``.

    Entry ``r - start`` equals the single-draw functions called with
    ``SeedPath(master, r, stream_id)``, bit for bit.
    """
    _check_t(t)
    n = stop - start
    if kind == CONSECUTIVE:
        if k < 1:
            raise ValueError("the consecutive ratio needs k >= 1")
        S = np.empty((n, k + 1))
        for i, r in enumerate(range(start, stop)):
            gaps = SeedPath(master, r, stream_id).generator().standard_exponential(k + 1)
            S[i] = np.cumsum(np.concatenate(([0.0], gaps)))[1:]
        values, degenerate = _consecutive_from_arrivals(model, t, k, S)
        return SampleBatch(values, np.zeros(n, bool), degenerate, np.zeros(n, bool))
    if kind != TRIMMED:
        raise ValueError(f"unknown statistic {kind!r}")
    values = np.empty(n)
    capped = np.zeros(n, bool)
    degenerate = np.zeros(n, bool)
    failed = np.zeros(n, bool)
    for i, r in enumerate(range(start, stop)):
        try:
            smp = trimmed_ratio(model, t, k, rel_tol, SeedPath(master, r, stream_id),
                                remainder=remainder, cap=cap, max_terms=max_terms)
        except TruncationError:
            values[i] = math.nan
            failed[i] = True
            continue
        values[i] = smp.value
        capped[i] = smp.capped
        degenerate[i] = smp.degenerate
    return SampleBatch(values, capped, degenerate, failed)
