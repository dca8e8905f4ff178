"""Continuous algebraic Riccati equations and robust gain synthesis.

The CARE ``S A + A^T S + Q - S B R^{-1} B^T S = 0`` is solved by
Newton-Kleinman iteration. Each Newton step is a Lyapunov equation, solved
directly through its Kronecker form, which is cheap at the sizes used here.
"""

from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np

from . import linalg
from .errors import (
    ConvergenceError,
    HypothesisViolated,
    IndefiniteWeights,
    NotStabilizable,
    RobustnessCheckFailed,
    ValidationError,
)
from .linalg import TOL
from .uncertainty import q2_matrix

log = logging.getLogger(__name__)

L_FORMULAS = ("derived", "printed")


def solve_lyapunov(a, c):
    """Solve ``a^T X + X a + c = 0`` for X."""
    n = a.shape[0]
    eye = np.eye(n)
    op = np.kron(a.T, eye) + np.kron(eye, a.T)
    x = np.linalg.solve(op, -np.asarray(c, dtype=float).reshape(-1)).reshape(n, n)
    return 0.5 * (x + x.T)


def care_residual(s, a, b, q, r):
    """Frobenius norm of the CARE residual."""
    res = s @ a + a.T @ s + q - s @ b @ np.linalg.solve(r, b.T @ s)
    return float(np.linalg.norm(res))


def _is_stable(m):
    return linalg.spectral_abscissa(m) < 0.0


def stabilizing_gain(a, b, r):
    """A gain K (u = K x) with ``a + b K`` Hurwitz.

    Tries ``K = -c R^{-1} B^T`` for growing c, then falls back to the
    shifted-Lyapunov construction of Bass, which stabilizes any controllable
    pair once ``a + shift I`` has all its eigenvalues in the right half plane.
    """
    n, m = b.shape
    if _is_stable(a):
        return np.zeros((m, n))
    base = -np.linalg.solve(r, b.T)
    c = 1.0
    for _ in range(24):
        k = c * base
        if _is_stable(a + b @ k):
            return k
        c *= 2.0
    shift = linalg.spectral_norm(a) + 1.0
    shifted = -(a + shift * np.eye(n))
    brb = b @ np.linalg.solve(r, b.T)
    try:
        # shifted Z + Z shifted^T + 2 B R^-1 B^T = 0
        z = solve_lyapunov(shifted.T, 2.0 * brb)
        k = -np.linalg.solve(r, b.T) @ np.linalg.inv(z)
    except np.linalg.LinAlgError as exc:
        raise NotStabilizable("no stabilizing initial gain found") from exc
    if not _is_stable(a + b @ k):
        raise NotStabilizable("no stabilizing initial gain found")
    return k


def _check_weights(q, r):
    q = linalg.symmetrize(q)
    r = linalg.symmetrize(r)
    if linalg.min_eigenvalue(q) < -TOL.psd * max(1.0, float(np.max(np.abs(q)))):
        raise IndefiniteWeights("state weight must be positive semidefinite")
    if not linalg.is_positive_definite(r):
        raise IndefiniteWeights("input weight must be positive definite")
    return q, r


def solve_care(a, b, q, r, k0=None, max_iter=100):
    """Stabilizing solution of ``S a + a^T S + q - S b r^{-1} b^T S = 0``.

    Parameters
    ----------
    k0 : ndarray, optional
        Initial stabilizing gain (u = k0 x). Found automatically if omitted.

    Returns
    -------
    ndarray
        Symmetric positive semidefinite S with ``a - b r^{-1} b^T S`` Hurwitz.
    """
    a = linalg.as_matrix(a, "a")
    b = linalg.as_matrix(b, "b")
    q, r = _check_weights(q, r)
    if b.shape[0] != a.shape[0] or q.shape != a.shape or r.shape[0] != b.shape[1]:
        raise ValidationError("inconsistent CARE dimensions")

    k = stabilizing_gain(a, b, r) if k0 is None else np.asarray(k0, dtype=float)
    if not _is_stable(a + b @ k):
        raise NotStabilizable("initial gain is not stabilizing")
    s = None
    for _ in range(max_iter):
        acl = a + b @ k
        s_new = solve_lyapunov(acl, q + k.T @ r @ k)
        k = -np.linalg.solve(r, b.T @ s_new)
        done = s is not None and np.linalg.norm(s_new - s) <= 1e-14 * (1.0 + np.linalg.norm(s_new))
        s = s_new
        if done:
            break
        if not _is_stable(a + b @ k):
            raise NotStabilizable("Newton iterate lost stability")

    scale = 1.0 + float(np.linalg.norm(s)) ** 2
    res = care_residual(s, a, b, q, r)
    if res > TOL.riccati_residual * scale:
        raise ConvergenceError(f"CARE residual {res:.3g} above tolerance")
    if not _is_stable(a - b @ np.linalg.solve(r, b.T @ s)):
        raise NotStabilizable("Riccati solution is not stabilizing")
    return s


@dataclass
class RobustSynthesis:
    kind: str                 # "matched" | "unmatched"
    s: np.ndarray             # S (matched) or S-hat (unmatched)
    k: np.ndarray             # K1 or K2, u = K x
    residual: float
    closed_loop_spectral_abscissa: float
    a_eff: np.ndarray
    b_eff: np.ndarray
    q_eff: np.ndarray
    r_eff: np.ndarray
    l: Optional[np.ndarray] = None        # auxiliary gain (unmatched)
    q2: Optional[np.ndarray] = None       # beta^2 I - 2 rho^2 L^T L (unmatched)
    q2_lambda_min: Optional[float] = None
    l_formula: Optional[str] = None
    robustness_margin: Optional[float] = None  # matched: max_p lambda_max(2 sym(S A_cl(p)) + I)

    @property
    def k1(self):
        return self.k if self.kind == "matched" else None

    @property
    def k2(self):
        return self.k if self.kind == "unmatched" else None

    @property
    def residual_ok(self):
        return self.residual <= TOL.riccati_residual * (1.0 + float(np.linalg.norm(self.s)) ** 2)


def matched_decrease_margin(s, k1, plant, p_grid):
    """Largest eigenvalue of ``2 sym(S (A(p) + B K1)) + I`` over the grid.

    Non-positive means ``dV/dt <= -x^T x`` for all x and all grid p.
    """
    worst = -np.inf
    for p in np.atleast_2d(p_grid):
        m = s @ (plant.a(p) + plant.b @ k1)
        worst = max(worst, float(linalg.sym_eigenvalues(m + m.T + np.eye(plant.n))[-1]))
    return worst


def synthesize_matched(plant, bounds, q, r, p_grid=None):
    """Robust gain for matched uncertainty: LQR on the nominal plant with Q + F_m."""
    q = linalg.as_matrix(q, "q")
    r = linalg.as_matrix(r, "r")
    if bounds.f_m is None:
        raise ValidationError("matched synthesis needs the F_m bound")
    a0, b = plant.a_nominal, plant.b
    q_eff = q + bounds.f_m
    s = solve_care(a0, b, q_eff, r)
    k1 = -np.linalg.solve(r, b.T @ s)
    syn = RobustSynthesis(
        kind="matched", s=s, k=k1,
        residual=care_residual(s, a0, b, q_eff, r),
        closed_loop_spectral_abscissa=linalg.spectral_abscissa(a0 + b @ k1),
        a_eff=a0, b_eff=b, q_eff=q_eff, r_eff=r,
    )
    if p_grid is not None:
        syn.robustness_margin = matched_decrease_margin(s, k1, plant, p_grid)
        if syn.robustness_margin > 1e-6:
            raise RobustnessCheckFailed(
                f"dV/dt <= -|x|^2 fails on the grid (margin {syn.robustness_margin:.4g})")
    return syn


def synthesize_unmatched(plant, bounds, alpha=None, rho=None, beta=None,
                         l_formula="derived", check_hypothesis=True):
    """Robust gains (K2, L) for unmatched uncertainty.

    The auxiliary problem adds the input ``alpha (I - B B^+) v`` with cost
    ``rho^2 v^T v`` ("derived") and the state weight
    ``F_u + rho^2 H + beta^2 I``. Its stationarity condition gives
    ``L = -alpha rho^-2 (I - B B^+) S``.

    ``l_formula="printed"`` instead weights the auxiliary input by
    ``rho^-2``, whose stationarity condition gives
    ``L = -alpha rho^2 (I - B B^+) S``.
    """
    if l_formula not in L_FORMULAS:
        raise ValidationError(f"l_formula must be one of {L_FORMULAS}")
    alpha = bounds.alpha if alpha is None else alpha
    rho = bounds.rho if rho is None else rho
    beta = bounds.beta if beta is None else beta
    if rho <= 0 or beta <= 0 or alpha < 0:
        raise ValidationError("need alpha >= 0, rho > 0, beta > 0")
    if bounds.f_u is None or bounds.h is None:
        raise ValidationError("unmatched synthesis needs the F_u and H bounds")

    n, m = plant.n, plant.m
    a0, b = plant.a_nominal, plant.b
    perp = np.eye(n) - linalg.range_projector(b)
    aux_weight = rho ** 2 if l_formula == "derived" else rho ** -2
    b_eff = np.hstack([b, alpha * perp])
    q_eff = bounds.f_u + rho ** 2 * bounds.h + beta ** 2 * np.eye(n)
    r_eff = np.block([
        [np.eye(m), np.zeros((m, n))],
        [np.zeros((n, m)), aux_weight * np.eye(n)],
    ])
    s = solve_care(a0, b_eff, q_eff, r_eff)
    k2 = -b.T @ s
    l = -(alpha / aux_weight) * perp @ s
    q2 = q2_matrix(l, rho, beta)
    q2_min = linalg.min_eigenvalue(q2)
    syn = RobustSynthesis(
        kind="unmatched", s=s, k=k2,
        residual=care_residual(s, a0, b_eff, q_eff, r_eff),
        closed_loop_spectral_abscissa=linalg.spectral_abscissa(a0 + b @ k2 + alpha * perp @ l),
        a_eff=a0, b_eff=b_eff, q_eff=q_eff, r_eff=r_eff,
        l=l, q2=q2, q2_lambda_min=q2_min, l_formula=l_formula,
    )
    if check_hypothesis and not linalg.is_positive_definite(q2):
        raise HypothesisViolated(
            f"beta^2 I - 2 rho^2 L^T L is not positive definite "
            f"(min eigenvalue {q2_min:.6g})",
            min_eigenvalue=q2_min, synthesis=syn)
    return syn
