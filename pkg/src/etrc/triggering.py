"""Event-triggering rules.

Static rule: fire when ``||e|| >= mu ||x||``.
Dynamic rule: an internal variable follows
``eta' = -lam * eta + (mu ||x|| - ||e||)`` and the rule fires when
``eta + theta (mu ||x|| - ||e||) <= 0``.
Periodic rule: fire every ``period`` seconds (the non-event-triggered baseline).
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import ValidationError
from .linalg import TOL, vector_norm

KINDS = ("periodic", "static", "dynamic")


@dataclass(frozen=True)
class TriggerRule:
    kind: str
    mu: float = 0.0
    sigma: float = 0.5
    theta: float = 1.0
    lam: float = 0.0
    eta0: float = 0.0
    period: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown trigger kind {self.kind!r}")
        if self.kind in ("static", "dynamic") and not self.mu > 0:
            raise ValidationError("event-triggered rules need mu > 0")
        if self.kind == "dynamic":
            if not self.theta > 0:
                raise ValidationError("theta must be positive")
            if self.lam < 0 or self.eta0 < 0:
                raise ValidationError("lambda and eta0 must be non-negative")
        if self.kind == "periodic" and not self.period > 0:
            raise ValidationError("period must be positive")

    @classmethod
    def dynamic_from_k(cls, mu, sigma, theta, k, eta0):
        """Dynamic rule with ``lam = (1 - sigma) k``."""
        return cls("dynamic", mu=mu, sigma=sigma, theta=theta, lam=(1.0 - sigma) * k, eta0=eta0)

    def check_theta(self, l1):
        """Warn when theta lies outside ``(0, 1 / (L1 - lam)]``."""
        if self.kind == "dynamic" and l1 > self.lam and self.theta > 1.0 / (l1 - self.lam):
            warnings.warn(
                f"theta={self.theta:g} exceeds 1/(L1 - lambda) = {1.0 / (l1 - self.lam):.4g}; "
                "the dynamic inter-event bound is outside its stated validity range",
                RuntimeWarning, stacklevel=2)
            return False
        return True


@dataclass
class TriggerState:
    x_held: np.ndarray
    eta: float = 0.0
    last_event_time: float = 0.0


def _at_origin(nx, ne):
    return nx < TOL.origin and ne < TOL.origin


def static_should_fire(x, e, mu):
    """True iff ``||e|| >= mu ||x||``, except when both norms vanish."""
    nx, ne = vector_norm(x), vector_norm(e)
    if _at_origin(nx, ne):
        return False
    return ne >= mu * nx


def eta_rk4(eta, drives, lam, dt):
    """One RK4 step of ``eta' = -lam eta + d`` with stage drives (d1, d2, d3, d4).

    ``d2`` and ``d3`` are both evaluated at the half step; callers holding the
    drive constant pass the same value four times.
    """
    d1, d2, d3, d4 = drives
    k1 = -lam * eta + d1
    k2 = -lam * (eta + 0.5 * dt * k1) + d2
    k3 = -lam * (eta + 0.5 * dt * k2) + d3
    k4 = -lam * (eta + dt * k3) + d4
    return eta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dynamic_fires(eta, nx, ne, mu, theta):
    if _at_origin(nx, ne):
        return False
    if math.isinf(theta):
        return mu * nx - ne <= 0.0
    return eta + theta * (mu * nx - ne) <= 0.0


def dynamic_step(state, x, e, rule, dt):
    """Advance eta by one step with ``(x, e)`` held, then evaluate the rule.

    Returns ``(fire, new_eta)``; ``state`` is not modified.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    nx, ne = vector_norm(x), vector_norm(e)
    d = rule.mu * nx - ne
    new_eta = eta_rk4(state.eta, (d, d, d, d), rule.lam, dt)
    return dynamic_fires(new_eta, nx, ne, rule.mu, rule.theta), new_eta


def periodic_should_fire(t, last_event, period):
    if not period > 0:
        raise ValidationError("period must be positive")
    return t - last_event >= period - 1e-12
