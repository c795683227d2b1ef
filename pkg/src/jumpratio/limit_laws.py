"""Limit laws of the two ratio statistics and their exact finite-t counterparts.

The trimmed ratio ``V_t^(k) / m_t^(k+1)`` has, for every fixed t, the
Laplace transform

    E exp(-lam W) = t^(k+1)/k! * exp(-lam) * int_0^inf u^k exp(-t Psi(u, lam)) du
    Psi(u, lam)   = u + int_u^inf (1 - exp(-lam phi(x)/phi(u))) dx,

and the consecutive ratio ``phi(S_{k+1}/t) / phi(S_k/t)`` the distribution
function

    P{r <= x} = t^k/(k-1)! * int_0^inf u^(k-1) exp(-t tail(x psi(u))) du.

Both are evaluated by nested adaptive quadrature (QUADPACK via scipy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError, RegimeUnknownError
from .tail_models import Regime, TailModel

INNER_ABS_TOL = 1e-10
OUTER_ABS_TOL = 1e-8
SERIES_MAX_LAMBDA = 10.0
HEAD_Y = 50.0


def _quad(f, a, b, epsabs, epsrel=1e-10, points=None, limit=200):
    kwargs = {"points": points} if points is not None and len(points) else {}
    val, err, info = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel,
                                    limit=limit, full_output=1, **kwargs)[:3]
    if not math.isfinite(val):
        raise QuadratureError("quadrature produced a non-finite value", err)
    if err > 100 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(f"quadrature tolerance not met (error estimate {err:.3g})", err)
    return val, err



def stable_inner_integral(lam, alpha):
    """``int_0^1 (1 - exp(-lam y)) y^(-alpha-1) dy`` for ``0 < alpha < 1``."""
    if lam == 0:
        return 0.0
    if lam <= SERIES_MAX_LAMBDA:
        return _alternating_series(lam, alpha)
    # on (0, 1/lam] rescale to the lam = 1 series; the rest is smooth
    head = lam**alpha * _alternating_series(1.0, alpha)
    body, _ = _quad(lambda y: -math.expm1(-lam * y) * y ** (-alpha - 1.0),
                    1.0 / lam, 1.0, epsabs=INNER_ABS_TOL / 10)
    return head + body


def _alternating_series(lam, alpha):
    # sum_{n>=1} (-1)^(n+1) lam^n / (n! (n - alpha)); error below first omitted term
    terms = []
    a = 1.0
    n = 0
    while True:
        n += 1
        a *= lam / n
        term = a / (n - alpha)
        terms.append(term if n % 2 else -term)
        if n > lam and term < 1e-18:
            break
    return math.fsum(terms)


def gk_laplace(lam, alpha, k):
    """Laplace transform of the trimmed-ratio limit in the regularly varying case.

    ``exp(-lam) / (1 + alpha * int_0^1 (1 - e^{-lam y}) y^{-alpha-1} dy)^(k+1)``
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    base = 1.0 + alpha * stable_inner_integral(lam, alpha)
    return math.exp(-lam) / base ** (k + 1)


def beta_cdf(x, alpha, k):
    """``x^(k alpha)`` on [0, 1]: the Beta(k alpha, 1) distribution function."""
    if not 0 <= x <= 1:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if not alpha * k > 0:
        raise DomainError("k * alpha must be positive")
    return x ** (k * alpha)


def beta_quantile(q, alpha, k):
    if not 0 <= q <= 1:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if not alpha * k > 0:
        raise DomainError("k * alpha must be positive")
    return q ** (1.0 / (k * alpha))


def _psi_excess(model: TailModel, log_phi_u, u, lam):
    """``(Psi(u, lam) - u) / u`` and its error estimate.

    Computed on the tail side: with ``v = exp(-y)``,
    ``int_u^inf (1 - e^{-lam phi(x)/phi(u)}) dx
       = lam * int_0^1 e^{-lam v} (tail(phi(u) v) - u) dv``.
    """
    log_u = math.log(u)

    def f(y):
        a = -lam * math.exp(-y) - y
        d = float(model.log_tail_at_log(log_phi_u - y)) - log_u
        if d > 1.0:
            return math.exp(a + d) - math.exp(a)
        return math.exp(a) * math.expm1(d)

    # jumps of the tail below phi(u), in the y variable
    breaks = sorted(log_phi_u - math.log(a) for a in model.jump_points()
                    if math.log(a) < log_phi_u)
    # QAGI alone misjudges slowly decaying (y^-p) integrands; integrate a finite head first
    head = max(HEAD_Y, breaks[-1] + 1.0) if breaks else HEAD_Y
    v1, e1 = _quad(f, 0.0, head, INNER_ABS_TOL, points=breaks)
    v2, e2 = _quad(f, head, math.inf, INNER_ABS_TOL)
    return lam * (v1 + v2), lam * (e1 + e2)


def psi_exponent(model: TailModel, u, lam):
    """``Psi(u, lam) = u + int_u^inf (1 - exp(-lam phi(x)/phi(u))) dx``."""
    model._require_levy("psi_exponent")
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    log_phi = float(model.log_tail_inverse(u))
    if log_phi == -math.inf:
        raise DomainError(f"tail_inverse({u}) = 0; Psi is undefined")
    excess, _ = _psi_excess(model, log_phi, u, lam)
    return u * (1.0 + excess)


def _outer(integrand, t, mass, k, scale_points):
    """``int_0^{t*mass} integrand(w) dw``, normalized when the mass is finite.

    The normalization conditions on ``S_k < t * mass``, i.e. on the draw
    not being degenerate.
    """
    if math.isfinite(mass):
        top = t * mass
        pts = sorted(p for p in scale_points if 0 < p < top)
        val, err = _quad(integrand, 0.0, top, OUTER_ABS_TOL, points=pts)
        norm = special.gammainc(k, top)
        return val / norm, err / norm
    # w = v / (1 - v) maps (0, inf) onto (0, 1)
    def g(v):
        if v >= 1.0:
            return 0.0
        w = v / (1.0 - v)
        return integrand(w) / (1.0 - v) ** 2
    return _quad(g, 0.0, 1.0, OUTER_ABS_TOL)


def finite_t_trimmed_laplace(model: TailModel, t, lam, k, with_error=False):
    """Exact ``E exp(-lam V_t^(k) / m_t^(k+1))`` at horizon ``t``.

    For finite measures the expectation is conditional on ``m_t^(k+1) > 0``.
    """
    model._require_levy("finite_t_trimmed_laplace")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    if lam == 0:
        return (1.0, 0.0) if with_error else 1.0
    lg = math.lgamma(k + 1)
    inner_err = [0.0]

    def integrand(w):
        if w <= 0.0:
            return 0.0
        u = w / t
        log_phi = float(model.log_tail_inverse(u))
        if log_phi == -math.inf:
            return 0.0
        excess, e = _psi_excess(model, log_phi, u, lam)
        inner_err[0] = max(inner_err[0], e)
        # t * Psi(w/t) = w * (1 + excess)
        return math.exp(k * math.log(w) - w * (1.0 + excess) - lg)

    steps = [t * c for c in _step_levels(model)]
    val, err = _outer(integrand, t, model.total_mass, k + 1, steps)
    value = min(max(math.exp(-lam) * val, 0.0), 1.0)
    total_err = math.exp(-lam) * err + inner_err[0] * (k + 1)
    return (value, total_err) if with_error else value


def _step_levels(model):
    """Tail levels at which the generalized inverse jumps."""
    pts = model.jump_points()
    if not pts:
        return []
    return sorted(set(float(model.tail(a * (1 - 1e-15))) for a in pts))


def finite_t_consecutive_cdf(model: TailModel, t, x, k, with_error=False):
    """Exact ``P{phi(S_{k+1}/t) / phi(S_k/t) <= x}`` for ``0 < x < 1``.

    For finite measures the probability is conditional on the draw not
    being degenerate (``S_k < t * total_mass``).
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not 0 < x < 1:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    log_x = math.log(x)
    lg = math.lgamma(k)

    def integrand(w):
        if w <= 0.0:
            return 0.0 if k > 1 else math.exp(-t * model.total_mass) if math.isfinite(model.total_mass) else 0.0
        u = w / t
        log_psi = float(model.log_tail_inverse(u))
        if log_psi == -math.inf:
            return 0.0
        with np.errstate(over="ignore"):
            level = t * float(model.tail_at_log(log_x + log_psi))
        if not math.isfinite(level):
            return 0.0
        return math.exp((k - 1) * math.log(w) - level - lg)

    steps = [t * c for c in _step_levels(model)]
    val, err = _outer(integrand, t, model.total_mass, k, steps)
    value = min(max(val, 0.0), 1.0)
    return (value, err) if with_error else value


@dataclass(frozen=True)
class LimitLaw:
    """Limit of a ratio statistic: a transform, a Beta law or a point mass."""

    theorem: int
    regime: Regime
    k: int
    alpha: Optional[float] = None

    @property
    def form(self):
        if self.regime is Regime.REGVAR:
            return "laplace" if self.theorem == 1 else "beta_cdf"
        return "point_mass"

    @property
    def point(self):
        """Location of the point mass, or ``None``."""
        return {
            (1, Regime.SLOWVAR): 1.0,
            (1, Regime.COND_III): math.inf,
            (2, Regime.SLOWVAR): 0.0,
            (2, Regime.RAPID): 1.0,
        }.get((self.theorem, self.regime))

    def laplace(self, lam):
        if self.form == "laplace":
            return gk_laplace(lam, self.alpha, self.k)
        if self.form == "point_mass":
            c = self.point
            if c == math.inf:
                return 1.0 if lam == 0 else 0.0
            return math.exp(-lam * c)
        raise NotImplementedError("no closed-form transform for the Beta limit")

    def cdf(self, x):
        if self.form == "beta_cdf":
            return beta_cdf(min(max(x, 0.0), 1.0), self.alpha, self.k)
        if self.form == "point_mass":
            return 1.0 if x >= self.point else 0.0
        raise NotImplementedError("the trimmed-ratio limit is given by its Laplace transform")

    def describe(self):
        if self.form == "laplace":
            return f"g_k(alpha={self.alpha!r}, k={self.k})"
        if self.form == "beta_cdf":
            return f"Beta({self.k * self.alpha!r}, 1)"
        return f"PointMass({self.point!r})"


def limit_law_for(model: TailModel, theorem, k):
    """The limit law of the ratio targeted by ``theorem`` for this model."""
    label = model.regime(theorem)
    r = label.regime
    if theorem == 1:
        if k < 0:
            raise DomainError("k must be nonnegative")
        if r is Regime.REGVAR:
            if not 0 < label.alpha < 1:
                raise DomainError(
                    f"trimmed-ratio limits need an index in (0, 1), got {label.alpha}")
            return LimitLaw(1, r, k, label.alpha)
        if r in (Regime.SLOWVAR, Regime.COND_III):
            return LimitLaw(1, r, k)
        raise RegimeUnknownError(
            f"regime {label} has no trimmed-ratio limit; declare regvar, slow or cond3")
    if k < 1:
        raise DomainError("the consecutive ratio needs k >= 1")
    if r is Regime.REGVAR:
        return LimitLaw(2, r, k, label.alpha)
    if r in (Regime.SLOWVAR, Regime.RAPID):
        return LimitLaw(2, r, k)
    raise RegimeUnknownError(
        f"regime {label} has no consecutive-ratio limit; declare regvar, slow or rapid")
