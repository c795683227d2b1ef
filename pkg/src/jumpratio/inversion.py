"""Generalized inverse of a nonincreasing tail by bracketed bisection.

Used for tail functions without a closed-form inverse, and as a slow,
independent reference for the closed forms.
"""
import math

REL_WIDTH = 1e-12
_TINY = 1e-300
_HUGE = 1e300


def generalized_inverse(tail, s, x0=1.0, rel_width=REL_WIDTH):
    """Return ``sup{y > 0 : tail(y) > s}``, with ``sup {} = 0``.

    ``tail`` must be nonincreasing and right-continuous on (0, inf). The
    bracket is grown geometrically from ``x0`` and then bisected on a
    log scale until its relative width is below ``rel_width``.
    """
    if not s > 0:
        raise ValueError(f"level must be positive, got {s}")

    lo = hi = x0
    if tail(x0) > s:
        # push hi up until the tail drops to s or below
        while tail(hi) > s:
            lo = hi
            hi *= 2.0
            if hi > _HUGE:
                return math.inf
    else:
        while tail(lo) <= s:
            hi = lo
            lo *= 0.5
            if lo < _TINY:
                return 0.0

    # invariant: tail(lo) > s >= tail(hi)
    while hi - lo > rel_width * hi:
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
        if tail(mid) > s:
            lo = mid
        else:
            hi = mid
    return lo
