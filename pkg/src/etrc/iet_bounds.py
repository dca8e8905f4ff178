"""Analytic lower bounds on the time between two events.

Static rule: the ratio ``r = ||e|| / ||x||`` obeys the comparison ODE
``r' = L1 + (L1 + L2) r + L2 r^2 = (L2 r + L1)(r + 1)``, ``r(0) = 0``.
The time for r to reach mu has a closed form.

Dynamic rule: the bound is the integral
``int_0^mu dg / (L1/mu + (L2 + lam) g + (1/theta + L2 mu) g^2)``,
evaluated by adaptive Simpson quadrature.
"""

from dataclasses import dataclass
import math
import warnings
from typing import Optional

from .errors import InvalidConstants


@dataclass(frozen=True)
class IetBound:
    kind: str          # "static" | "dynamic"
    tau: float
    l1: float
    l2: float
    l3: float
    mu: float
    theta: Optional[float] = None
    lam: Optional[float] = None


def _check(l1, l2, mu):
    if not (math.isfinite(l1) and l1 > 0):
        raise InvalidConstants(f"L1 must be positive and finite, got {l1}")
    if not (math.isfinite(l2) and l2 >= 0):
        raise InvalidConstants(f"L2 must be non-negative and finite, got {l2}")
    if not (math.isfinite(mu) and mu > 0):
        raise InvalidConstants(f"mu must be positive and finite, got {mu}")


def static_tau(l1, l2, mu):
    """Time for ``r' = (L2 r + L1)(r + 1)`` to climb from 0 to mu.

    Equal to ``ln[L1 (1 + mu) / (L2 mu + L1)] / (L1 - L2)``, written with
    ``log1p`` so the ``L1 -> L2`` limit ``mu / (L1 (1 + mu))`` is reached
    without cancellation.
    """
    _check(l1, l2, mu)
    c = l2 * mu + l1
    z = (l1 - l2) * mu / c          # L1 (1 + mu) / c - 1
    if z == 0.0:
        return mu / (l1 * (1.0 + mu))
    return (mu / c) * math.log1p(z) / z


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def dynamic_tau(l1, l2, mu, theta, lam, tol=1e-10):
    """Inter-event lower bound for the dynamic rule.

    ``theta = inf`` drops the ``1/theta`` term. A warning is issued when
    ``theta > 1 / (L1 - lam)``; the integral is still returned.
    """
    _check(l1, l2, mu)
    if not theta > 0:
        raise InvalidConstants(f"theta must be positive, got {theta}")
    if not (math.isfinite(lam) and lam >= 0):
        raise InvalidConstants(f"lambda must be non-negative, got {lam}")
    if l1 > lam and theta > 1.0 / (l1 - lam):
        warnings.warn(f"theta={theta:g} exceeds 1/(L1 - lambda) = {1.0 / (l1 - lam):.4g}",
                      RuntimeWarning, stacklevel=2)
    c0 = l1 / mu
    c1 = l2 + lam
    c2 = (0.0 if math.isinf(theta) else 1.0 / theta) + l2 * mu
    return adaptive_simpson(lambda g: 1.0 / (c0 + c1 * g + c2 * g * g), 0.0, mu, tol)


def static_bound(l1, l2, mu):
    return IetBound("static", static_tau(l1, l2, mu), l1, l2, l1 + l2, mu)


def dynamic_bound(l1, l2, mu, theta, lam):
    return IetBound("dynamic", dynamic_tau(l1, l2, mu, theta, lam), l1, l2, l1 + l2, mu,
                    theta=theta, lam=lam)
