"""Tail functions of Levy-type measures on (0, inf) and their generalized inverses.

A model is described by its tail ``tail(x) = Lambda((x, inf))``, which is
nonincreasing and right-continuous.  The generalized inverse

    phi(s) = sup{y > 0 : tail(y) > s},   sup {} = 0,

maps Poisson arrival levels to jump sizes.  Every model also exposes the
integrals the limit theorems are phrased in: ``min_integral`` (the
integrability condition of a subordinator), ``lower_moment_integral``
(the truncated first moment) and ``tail_phi_integral`` (the expected sum of
jumps beyond a given arrival level, used to truncate series).

All evaluation methods accept a scalar or an array and return the same
shape.  Models are frozen dataclasses: immutable, hashable and picklable.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import special

from .errors import DomainError, RegimeUnknownError, UnsupportedOperation
from .inversion import generalized_inverse

EULER = 0.57721566490153286061


class Direction(str, Enum):
    AT_ZERO = "zero"
    AT_INFINITY = "inf"


class Regime(str, Enum):
    REGVAR = "regvar"
    SLOWVAR = "slow"
    RAPID = "rapid"
    COND_III = "cond3"


@dataclass(frozen=True)
class RegimeLabel:
    """Regime of a tail under one of the two limit theorems."""

    regime: Regime
    alpha: Optional[float] = None

    def __str__(self):
        if self.regime is Regime.REGVAR:
            return f"regvar:{self.alpha!r}"
        return self.regime.value

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text.startswith("regvar"):
            _, _, a = text.partition(":")
            if not a:
                raise ValueError("regvar regime needs an index, e.g. regvar:0.5")
            alpha = float(a)
            if not alpha > 0:
                raise ValueError(f"regular variation index must be positive, got {alpha}")
            return cls(Regime.REGVAR, alpha)
        try:
            regime = Regime(text)
        except ValueError:
            raise ValueError(
                f"unknown regime {text!r}; use regvar:<alpha>, slow, rapid or cond3"
            ) from None
        return cls(regime)


def _arr(x):
    return np.asarray(x, dtype=float)


def _ret(a, like):
    if np.ndim(like) == 0:
        return float(a)
    return a


def _check_positive(a, name):
    if np.any(~(a > 0)):
        raise DomainError(f"{name} must be positive")


def _fmt(x):
    return repr(float(x))


@dataclass(frozen=True)
class TailModel:
    """Base class; subclasses supply the family-specific formulas."""

    direction: Direction = field(default=Direction.AT_ZERO, kw_only=True)

    is_levy = True
    name = "model"

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.direction is Direction.AT_ZERO and math.isfinite(self.total_mass):
            raise DomainError(
                f"{self.name}: a finite measure cannot be studied as t -> 0 "
                "(needs tail(0+) = inf); use direction=inf"
            )

    # -- tail ------------------------------------------------------------

    def tail(self, x):
        a = _arr(x)
        _check_positive(a, "x")
        with np.errstate(over="ignore"):
            return _ret(self._tail(a), x)

    def tail_at_log(self, log_x):
        """``tail(exp(log_x))`` without underflow of the argument."""
        a = _arr(log_x)
        with np.errstate(over="ignore", under="ignore"):
            return _ret(self._tail_at_log(a), log_x)

    def _tail_at_log(self, lx):
        with np.errstate(under="ignore"):
            x = np.exp(lx)
        return np.where(x > 0, self._tail(np.where(x > 0, x, 1.0)), self.total_mass)

    def log_tail_at_log(self, log_x):
        """``log tail(exp(log_x))``; finite where the tail itself would overflow."""
        a = _arr(log_x)
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            return _ret(self._log_tail_at_log(a), log_x)

    def _log_tail_at_log(self, lx):
        return np.log(self._tail_at_log(lx))

    @property
    def total_mass(self):
        """``tail(0+)``."""
        return math.inf

    def jump_points(self):
        """Positions where the tail jumps (atoms of the measure)."""
        return ()

    # -- inverse ---------------------------------------------------------

    def tail_inverse(self, s):
        a = _arr(s)
        _check_positive(a, "s")
        with np.errstate(divide="ignore", under="ignore"):
            return _ret(self._tail_inverse(a), s)

    def log_tail_inverse(self, s):
        """``log(tail_inverse(s))``; stays finite where the inverse underflows."""
        a = _arr(s)
        _check_positive(a, "s")
        with np.errstate(divide="ignore", under="ignore", over="ignore"):
            return _ret(self._log_tail_inverse(a), s)

    def _tail_inverse(self, s):
        with np.errstate(under="ignore"):
            return np.exp(self._log_tail_inverse(s))

    def _log_tail_inverse(self, s):
        tail = lambda y: float(self._tail(np.asarray(y)))
        flat = [generalized_inverse(tail, v) for v in s.ravel()]
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(flat, dtype=float).reshape(s.shape))

    # -- integrals -------------------------------------------------------

    def min_integral(self):
        """Integral of ``min(1, x)`` against the measure, ``inf`` if divergent.

        Equals the integral of the tail over (0, 1].
        """
        raise NotImplementedError

    def lower_moment_integral(self, x):
        """Integral of ``u`` against the measure over (0, x]."""
        a = _arr(x)
        _check_positive(a, "x")
        with np.errstate(under="ignore", over="ignore"):
            return _ret(self._lower_moment(a), x)

    def condition_iii_ratio(self, x):
        """``x * tail(x) / lower_moment_integral(x)``."""
        a = _arr(x)
        _check_positive(a, "x")
        den = self._lower_moment(a)
        if np.any(den == 0):
            raise DomainError("lower moment integral vanishes at x")
        with np.errstate(over="ignore", invalid="ignore"):
            num = a * self._tail(a)
            r = np.where(np.isinf(den), 0.0, num / den)
        return _ret(r, x)

    def tail_phi_integral(self, u):
        """Integral of ``tail_inverse`` over (u, inf).

        By the Galois duality this equals
        ``lower_moment_integral(phi(u)) + phi(u) * (tail(phi(u)) - u)``.
        """
        self._require_levy("tail_phi_integral")
        a = _arr(u)
        _check_positive(a, "u")
        with np.errstate(under="ignore", divide="ignore", over="ignore"):
            return _ret(np.exp(self._log_phi_integral(a, self._log_tail_inverse(a))), u)

    def log_tail_phi_integral(self, u, log_phi=None):
        """Log of :meth:`tail_phi_integral`; ``log_phi`` may be passed if known."""
        self._require_levy("tail_phi_integral")
        a = _arr(u)
        with np.errstate(under="ignore", divide="ignore", over="ignore"):
            lp = self._log_tail_inverse(a) if log_phi is None else _arr(log_phi)
            return _ret(self._log_phi_integral(a, lp), u)

    def _log_phi_integral(self, u, log_phi):
        phi = np.exp(log_phi)
        safe = np.where(phi > 0, phi, 1.0)
        val = self._lower_moment(safe) + safe * (self._tail(safe) - u)
        with np.errstate(divide="ignore"):
            return np.where(phi > 0, np.log(np.maximum(val, 0.0)), -np.inf)

    def _require_levy(self, what):
        if not self.is_levy:
            raise UnsupportedOperation(f"{what} needs a Levy measure; {self.name} is not one")

    # -- regimes ---------------------------------------------------------

    def _regimes(self):
        return {}

    def regime(self, theorem):
        """Declared regime of this tail under ``theorem`` (1 or 2)."""
        if theorem not in (1, 2):
            raise ValueError(f"theorem must be 1 or 2, got {theorem}")
        if theorem == 1 and not self.is_levy:
            raise UnsupportedOperation(
                f"{self.name} is not a Levy measure; the trimmed-sum theorem needs a subordinator"
            )
        label = self._regimes().get((self.direction, theorem))
        if label is None:
            raise RegimeUnknownError(
                f"{self.spec()} has no declared regime for theorem {theorem} "
                f"(direction {self.direction.value}); declare one, e.g. regime=slow"
            )
        return label

    def spec(self):
        raise NotImplementedError

    def _dir_suffix(self, default):
        if self.direction is default:
            return ""
        return f"direction={self.direction.value}"


def _join(*parts):
    return ",".join(p for p in parts if p)


@dataclass(frozen=True)
class Stable(TailModel):
    """``tail(x) = c * x**(-alpha)``, ``0 < alpha < 1``."""

    alpha: float = 0.5
    c: float = 1.0

    name = "stable"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"stable index must lie in (0, 1), got {self.alpha}")
        if not self.c > 0:
            raise DomainError(f"stable scale must be positive, got {self.c}")
        super().__post_init__()

    def _tail(self, x):
        return self.c * x ** (-self.alpha)

    def _tail_at_log(self, lx):
        return self.c * np.exp(-self.alpha * lx)

    def _log_tail_at_log(self, lx):
        return math.log(self.c) - self.alpha * lx

    def _tail_inverse(self, s):
        return (self.c / s) ** (1.0 / self.alpha)

    def _log_tail_inverse(self, s):
        return (math.log(self.c) - np.log(s)) / self.alpha

    def min_integral(self):
        return self.c / (1.0 - self.alpha)

    def _lower_moment(self, x):
        a = self.alpha
        return self.c * a / (1.0 - a) * x ** (1.0 - a)

    def _log_phi_integral(self, u, log_phi):
        a = self.alpha
        return (math.log(self.c) / a + math.log(a / (1.0 - a))
                + (1.0 - 1.0 / a) * np.log(u))

    def _regimes(self):
        label = RegimeLabel(Regime.REGVAR, self.alpha)
        return {(d, th): label for d in Direction for th in (1, 2)}

    def spec(self):
        return f"stable({_join(f'alpha={_fmt(self.alpha)}', f'c={_fmt(self.c)}', self._dir_suffix(Direction.AT_ZERO))})"


def _log_e1(lz):
    """``log(E1(z))`` from ``lz = log(z)``, accurate for tiny and huge z."""
    z = np.exp(np.minimum(lz, 700.0))
    out = np.empty_like(z)
    small = lz < -18.0
    big = z > 500.0
    mid = ~(small | big)
    zs = z[small]
    out[small] = np.log(-EULER - lz[small] + zs)
    zb = z[big]
    # asymptotic series sum_n (-1)^n n! / z^n, truncated where terms are < 1e-17
    corr = np.zeros_like(zb)
    term = np.ones_like(zb)
    for n in range(1, 9):
        term = -term * n / zb
        corr += term
    out[big] = -zb - np.log(zb) + np.log1p(corr)
    out[mid] = np.log(special.exp1(z[mid]))
    return out


@dataclass(frozen=True)
class GammaSub(TailModel):
    """Gamma subordinator: ``tail(x) = E1(rate * x)``, slowly varying at 0."""

    rate: float = 1.0

    name = "gamma"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"gamma rate must be positive, got {self.rate}")
        super().__post_init__()

    def _tail(self, x):
        return special.exp1(self.rate * x)

    def _tail_at_log(self, lx):
        lz = lx + math.log(self.rate)
        z = np.exp(np.minimum(lz, 700.0))
        series = -EULER - lz + z - 0.25 * z * z
        return np.where(lz < -18.0, series, special.exp1(z))

    def _log_tail_inverse(self, s):
        return _e1_log_inverse(s) - math.log(self.rate)

    def min_integral(self):
        b = self.rate
        return float(special.exp1(b) - math.expm1(-b) / b)

    def _lower_moment(self, x):
        return -np.expm1(-self.rate * x) / self.rate

    def _log_phi_integral(self, u, log_phi):
        z = np.exp(log_phi + math.log(self.rate))
        tiny = z < 1e-10
        zz = np.where(tiny, 1.0, z)
        exact = np.log(-np.expm1(-zz)) - math.log(self.rate)
        return np.where(tiny, log_phi + np.log1p(-0.5 * z), exact)

    def _regimes(self):
        return {
            (Direction.AT_ZERO, 1): RegimeLabel(Regime.SLOWVAR),
            (Direction.AT_ZERO, 2): RegimeLabel(Regime.SLOWVAR),
            (Direction.AT_INFINITY, 1): RegimeLabel(Regime.COND_III),
            (Direction.AT_INFINITY, 2): RegimeLabel(Regime.RAPID),
        }

    def spec(self):
        return f"gamma({_join(f'rate={_fmt(self.rate)}', self._dir_suffix(Direction.AT_ZERO))})"


def _e1_log_inverse(s):
    """Solve ``E1(exp(w)) = s`` for w, elementwise.

    ``w -> log E1(exp(w))`` is concave and decreasing, so Newton's method
    started to the right of the root decreases monotonically onto it.
    Converged entries are frozen, which keeps every entry independent of
    the rest of the batch.
    """
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    log_s = np.log(flat)
    # E1(z) < exp(-z)/z and E1(z) < log(1 + 1/z) give a point right of the root
    w = np.where(
        flat <= math.exp(-1.0),
        np.log(-np.log(np.minimum(flat, math.exp(-1.0)))),
        -(flat + np.log(-np.expm1(-np.maximum(flat, math.exp(-1.0))))),
    )
    active = np.ones(flat.shape, dtype=bool)
    for _ in range(200):
        if not active.any():
            break
        wa = w[active]
        z = np.exp(np.minimum(wa, 700.0))
        le = _log_e1(wa)
        # derivative of log E1(exp(w)) in w is -exp(-z)/E1(z)
        slope = np.exp(-z - le)
        step = (le - log_s[active]) / slope
        w_new = wa + step
        # quadratic convergence: after a step this small the error is at rounding level
        done = np.abs(step) <= 1e-13 * np.maximum(1.0, np.abs(wa))
        w[active] = w_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return w.reshape(s.shape)


@dataclass(frozen=True)
class LogCorrectedAlpha1(TailModel):
    """Index -1 at zero with a logarithmic correction.

    ``tail(x) = 1 / (x * log(1/x)**p)`` on (0, x0] with ``x0 = exp(-p-1)``,
    continued by ``tail(x0) * exp(-(x - x0)/x0)`` beyond.  For ``p > 1`` the
    measure is a Levy measure and ``x*tail(x) / lower_moment(x)`` equals
    ``(p-1) / (log(1/x) - (p-1))`` on (0, x0], which tends to 0.
    """

    p: float = 2.0

    name = "logcorr"

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError(f"log-correction power must exceed 1, got {self.p}")
        super().__post_init__()

    @property
    def x0(self):
        return math.exp(-self.p - 1.0)

    @property
    def f0(self):
        p = self.p
        return math.exp(p + 1.0) * (p + 1.0) ** (-p)

    def _tail(self, x):
        return self._tail_at_log(np.log(x))

    def _tail_at_log(self, lx):
        p, x0 = self.p, self.x0
        near = lx <= -p - 1.0
        L = np.where(near, -lx, p + 1.0)
        inner = np.exp(L - p * np.log(L))
        x = np.exp(np.minimum(lx, 700.0))
        outer = self.f0 * np.exp(-(x - x0) / x0)
        return np.where(near, inner, outer)

    def _log_tail_at_log(self, lx):
        p, x0 = self.p, self.x0
        near = lx <= -p - 1.0
        L = np.where(near, -lx, p + 1.0)
        x = np.exp(np.minimum(lx, 700.0))
        return np.where(near, L - p * np.log(L), math.log(self.f0) - (x - x0) / x0)

    def _log_tail_inverse(self, s):
        p, x0, f0 = self.p, self.x0, self.f0
        out = np.empty_like(s)
        far = s < f0
        out[far] = np.log(x0 * (1.0 + np.log(f0 / s[far])))
        out[~far] = -_solve_log_level(np.log(s[~far]), p)
        return out

    def min_integral(self):
        p, x0 = self.p, self.x0
        return (p + 1.0) ** (1.0 - p) / (p - 1.0) + self.f0 * x0 * -math.expm1(-(1.0 - x0) / x0)

    def _lower_near(self, L):
        p = self.p
        return L ** (1.0 - p) / (p - 1.0) - L ** (-p)

    def _lower_moment(self, x):
        p, x0, f0 = self.p, self.x0, self.f0
        near = x <= x0
        L = np.where(near, -np.log(np.where(near, x, x0)), p + 1.0)
        v = np.where(near, 0.0, (x - x0) / x0)
        far = self._lower_near(p + 1.0) + x0 * f0 * (2.0 - np.exp(-v) * (2.0 + v))
        return np.where(near, self._lower_near(L), far)

    def _log_phi_integral(self, u, log_phi):
        p = self.p
        near = log_phi <= -p - 1.0
        L = np.where(near, -log_phi, p + 1.0)
        near_val = (1.0 - p) * np.log(L) - math.log(p - 1.0) + np.log1p(-(p - 1.0) / L)
        phi = np.exp(np.where(near, -p - 1.0, log_phi))
        far_val = np.log(self._lower_moment(phi))
        return np.where(near, near_val, far_val)

    def _regimes(self):
        return {
            (Direction.AT_ZERO, 1): RegimeLabel(Regime.COND_III),
            (Direction.AT_ZERO, 2): RegimeLabel(Regime.REGVAR, 1.0),
            (Direction.AT_INFINITY, 1): RegimeLabel(Regime.COND_III),
            (Direction.AT_INFINITY, 2): RegimeLabel(Regime.RAPID),
        }

    def spec(self):
        return f"logcorr({_join(f'p={_fmt(self.p)}', self._dir_suffix(Direction.AT_ZERO))})"


def _solve_log_level(log_s, p):
    """Solve ``L - p*log(L) = log_s`` for ``L >= p + 1`` (convex, increasing)."""
    h = lambda L: L - p * np.log(L) - log_s
    L = np.maximum(p + 1.0, log_s)
    while True:
        low = h(L) < 0
        if not low.any():
            break
        L = np.where(low, 2.0 * L, L)
    active = np.ones(L.shape, dtype=bool)
    for _ in range(200):
        if not active.any():
            break
        La = L[active]
        step = (La - p * np.log(La) - log_s[active]) / (1.0 - p / La)
        done = np.abs(step) <= 4e-16 * La
        L[active] = La - step
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return np.maximum(L, p + 1.0)


@dataclass(frozen=True)
class RapidAtZero(TailModel):
    """``tail(x) = exp(1/x) - 1``: rapidly varying at 0, not a Levy measure."""

    is_levy = False
    name = "rapid0"

    def _tail(self, x):
        return np.expm1(1.0 / x)

    def _tail_at_log(self, lx):
        return np.expm1(np.exp(np.minimum(-lx, 700.0)))

    def _log_tail_at_log(self, lx):
        z = np.exp(-lx)
        # log(e^z - 1) = z + log1p(-e^-z)
        return z + np.log(-np.expm1(-z))

    def _tail_inverse(self, s):
        return 1.0 / np.log1p(s)

    def _log_tail_inverse(self, s):
        return -np.log(np.log1p(s))

    def min_integral(self):
        return math.inf

    def _lower_moment(self, x):
        return np.full_like(x, math.inf)

    def _regimes(self):
        return {
            (Direction.AT_ZERO, 2): RegimeLabel(Regime.RAPID),
            (Direction.AT_INFINITY, 2): RegimeLabel(Regime.REGVAR, 1.0),
        }

    def spec(self):
        suffix = self._dir_suffix(Direction.AT_ZERO)
        return f"rapid0({suffix})" if suffix else "rapid0"


class _StepTail:
    """Tail of a finite atomic measure; atoms in ``_pos`` (sorted) with ``_mass``."""

    def _setup_atoms(self, atoms):
        if not atoms:
            raise DomainError("a step measure needs at least one atom")
        pos = np.array([float(a) for a, _ in atoms])
        mass = np.array([float(m) for _, m in atoms])
        if np.any(~(pos > 0)) or np.any(~(mass > 0)) or not np.all(np.isfinite(mass)):
            raise DomainError("atoms need positive positions and positive finite masses")
        order = np.argsort(pos, kind="stable")
        pos, mass = pos[order], mass[order]
        if np.any(np.diff(pos) == 0):
            raise DomainError("atom positions must be distinct")
        # suffix[j] = mass of atoms j, j+1, ...; suffix[n] = 0
        suffix = np.append(np.cumsum(mass[::-1])[::-1], 0.0)
        object.__setattr__(self, "_pos", pos)
        object.__setattr__(self, "_mass", mass)
        object.__setattr__(self, "_suffix", suffix)

    @property
    def total_mass(self):
        return float(self._suffix[0])

    def jump_points(self):
        return tuple(float(a) for a in self._pos)

    def _tail(self, x):
        return self._suffix[np.searchsorted(self._pos, x, side="right")]

    def _tail_at_log(self, lx):
        return self._suffix[np.searchsorted(np.log(self._pos), lx, side="right")]

    def _tail_inverse(self, s):
        # largest atom a_j whose level suffix[j] exceeds s
        levels = self._suffix[:-1][::-1]
        count = len(levels) - np.searchsorted(levels, s, side="right")
        return np.where(count > 0, self._pos[np.maximum(count - 1, 0)], 0.0)

    def _log_tail_inverse(self, s):
        with np.errstate(divide="ignore"):
            return np.log(self._tail_inverse(s))

    def min_integral(self):
        return float(np.sum(np.minimum(1.0, self._pos) * self._mass))

    def _lower_moment(self, x):
        cum = np.concatenate([[0.0], np.cumsum(self._pos * self._mass)])
        return cum[np.searchsorted(self._pos, x, side="right")]


@dataclass(frozen=True, eq=False)
class StepMeasure(_StepTail, TailModel):
    """Finite measure with atoms ``((position, mass), ...)``."""

    atoms: tuple = ((1.0, 1.0), (2.0, 1.0))
    direction: Direction = field(default=Direction.AT_INFINITY, kw_only=True)

    name = "steps"

    def __post_init__(self):
        atoms = tuple((float(a), float(m)) for a, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        self._setup_atoms(atoms)
        super().__post_init__()

    def __eq__(self, other):
        return type(other) is type(self) and (self.atoms, self.direction) == (other.atoms, other.direction)

    def __hash__(self):
        return hash((type(self).__name__, self.atoms, self.direction))

    def spec(self):
        body = ",".join(f"{_fmt(a)}:{_fmt(m)}" for a, m in self.atoms)
        return f"steps({_join(body, self._dir_suffix(Direction.AT_INFINITY))})"


@dataclass(frozen=True, eq=False)
class UserTable(_StepTail, TailModel):
    """Tail tabulated on a grid, read as a right-continuous step function.

    ``tail(x) = values[i]`` for ``xs[i] <= x < xs[i+1]``, ``values[0]`` below
    ``xs[0]``; the last value holds on ``[xs[-1], inf)`` and must be 0.
    """

    xs: tuple = ()
    values: tuple = ()
    declared: Optional[RegimeLabel] = None
    source: str = ""
    direction: Direction = field(default=Direction.AT_INFINITY, kw_only=True)

    name = "table"

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vals)
        if len(xs) != len(vals) or len(xs) < 2:
            raise DomainError("a tail table needs at least two (x, tail) rows")
        if xs[0] <= 0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("table x values must be positive and strictly increasing")
        if any(b > a for a, b in zip(vals, vals[1:])) or vals[-1] < 0:
            raise DomainError("table tail values must be nonnegative and nonincreasing")
        if vals[-1] != 0:
            raise DomainError("the last tabulated tail value must be 0 (tail vanishes at infinity)")
        atoms = tuple((x, a - b) for x, a, b in zip(xs[1:], vals, vals[1:]) if a > b)
        self._setup_atoms(atoms)
        super().__post_init__()

    def __eq__(self, other):
        return type(other) is type(self) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return (self.xs, self.values, self.declared, self.direction)

    def _regimes(self):
        if self.declared is None:
            return {}
        return {(self.direction, th): self.declared for th in (1, 2)}

    def spec(self):
        regime = f"regime={self.declared}" if self.declared else ""
        return f"table({_join(self.source or '<inline>', regime, self._dir_suffix(Direction.AT_INFINITY))})"


def read_table(path, declared=None, direction=Direction.AT_INFINITY):
    """Load a two-column ``x,tail`` file into a :class:`UserTable`.

    Blank lines, ``#`` comments and a non-numeric header row are skipped.
    """
    xs, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if xs:
                    raise DomainError(f"{path}: malformed row {row!r}") from None
                continue
            xs.append(x)
            vals.append(v)
    return UserTable(tuple(xs), tuple(vals), declared=declared, source=str(path), direction=direction)


_SPEC_RE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*(?:\((.*)\))?\s*$", re.S)


def parse_model(text, base_dir=None):
    """Build a model from its text form.

    ``stable(alpha=0.5,c=1)``, ``gamma(rate=1)``, ``logcorr(p=2)``,
    ``rapid0``, ``steps(1:1,2:1)``, ``table(path[,regime=slow])``.  Every
    family also accepts ``direction=zero|inf``.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse model spec {text!r}")
    family, body = m.group(1).lower(), (m.group(2) or "").strip()
    positional, kwargs = [], {}
    for part in (p.strip() for p in body.split(",")) if body else ():
        if not part:
            continue
        key, eq, value = part.partition("=")
        if eq:
            kwargs[key.strip().lower()] = value.strip()
        else:
            positional.append(part)

    common = {}
    if "direction" in kwargs:
        common["direction"] = Direction(kwargs.pop("direction"))

    def num(key, default):
        try:
            return float(kwargs.pop(key, default))
        except ValueError:
            raise ValueError(f"{family}: parameter {key!r} must be a number") from None

    if family == "stable":
        model = Stable(num("alpha", 0.5), num("c", 1.0), **common)
    elif family == "gamma":
        model = GammaSub(num("rate", 1.0), **common)
    elif family == "logcorr":
        model = LogCorrectedAlpha1(num("p", 2.0), **common)
    elif family == "rapid0":
        model = RapidAtZero(**common)
    elif family == "steps":
        atoms = []
        for p in positional:
            a, colon, w = p.partition(":")
            if not colon:
                raise ValueError(f"steps: atom {p!r} must be position:mass")
            atoms.append((float(a), float(w)))
        positional = []
        model = StepMeasure(tuple(atoms), **common)
    elif family == "table":
        if len(positional) != 1:
            raise ValueError("table(...) needs exactly one file path")
        path = Path(positional.pop())
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        declared = RegimeLabel.parse(kwargs.pop("regime")) if "regime" in kwargs else None
        model = read_table(path, declared=declared, **common)
    else:
        raise ValueError(f"unknown model family {family!r}")

    if positional or kwargs:
        extra = positional + sorted(kwargs)
        raise ValueError(f"{family}: unexpected arguments {extra}")
    return model
