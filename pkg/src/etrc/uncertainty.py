"""Uncertain plants and the bound matrices derived from them.

A plant is ``x' = A(p) x + B u`` with ``A(p) = A0 + sum_i p_i D_i`` affine in
the parameter vector ``p``, which lives in a box. Matched uncertainty lies in
the range of B (``A(p) - A0 = B phi(p)``); otherwise it is split with the
projector ``B B^+`` into a matched and an unmatched component.
"""

from dataclasses import dataclass, field
import itertools
import math
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg
from .errors import (
    DegenerateThreshold,
    NotPositiveDefinite,
    ValidationError,
    VerificationFailed,
)
from .linalg import TOL


# -- parameter trajectories -------------------------------------------------

@dataclass(frozen=True)
class Sinusoid:
    """``offset + amplitude * sin(frequency * t + phase)``, frequency in rad/s."""
    amplitude: float
    frequency: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(self.frequency * np.asarray(t, float) + self.phase)


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through (times, values), held constant outside."""
    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 1:
            raise ValidationError("piecewise trajectory needs matching, nonempty times/values")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("piecewise trajectory times must be strictly increasing")

    def __call__(self, t):
        return np.interp(np.asarray(t, float), self.times, self.values)


# -- plant -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UncertainPlant:
    a_nominal: np.ndarray
    b: np.ndarray
    delta_coeffs: tuple          # one (n, n) matrix per parameter
    p_box: np.ndarray            # (n_params, 2) closed intervals
    p_trajectory: tuple = ()     # one callable t -> p_i(t) per parameter

    def __post_init__(self):
        a = linalg.as_matrix(self.a_nominal, "a_nominal")
        b = linalg.as_matrix(self.b, "b")
        if b.shape[0] == 1 and a.shape[0] != 1:
            b = b.T
        if a.shape[0] != a.shape[1]:
            raise ValidationError(f"a_nominal must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValidationError(f"b has {b.shape[0]} rows, expected {a.shape[0]}")
        coeffs = tuple(linalg.as_matrix(d, "delta_a coefficient") for d in self.delta_coeffs)
        for d in coeffs:
            if d.shape != a.shape:
                raise ValidationError(f"delta_a coefficient shape {d.shape} != {a.shape}")
        box = np.array(self.p_box, dtype=float).reshape(-1, 2) if len(coeffs) else np.zeros((0, 2))
        if box.shape[0] != len(coeffs):
            raise ValidationError("p_box needs one interval per uncertain parameter")
        if np.any(box[:, 0] > box[:, 1]):
            raise ValidationError("p_box intervals must have lo <= hi")
        if self.p_trajectory and len(self.p_trajectory) != len(coeffs):
            raise ValidationError("p_trajectory needs one entry per uncertain parameter")
        object.__setattr__(self, "a_nominal", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "delta_coeffs", coeffs)
        object.__setattr__(self, "p_box", box)
        object.__setattr__(self, "p_trajectory", tuple(self.p_trajectory))

    @property
    def n(self):
        return self.a_nominal.shape[0]

    @property
    def m(self):
        return self.b.shape[1]

    @property
    def n_params(self):
        return len(self.delta_coeffs)

    def delta_a(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.zeros_like(self.a_nominal)
        for pi, d in zip(p, self.delta_coeffs):
            out = out + pi * d
        return out

    def a(self, p):
        return self.a_nominal + self.delta_a(p)

    def p_at(self, t):
        """Parameter values at time(s) t, shape ``(*t.shape, n_params)``."""
        t = np.asarray(t, dtype=float)
        if not self.p_trajectory:
            return np.zeros(t.shape + (self.n_params,))
        return np.stack([np.asarray(f(t), dtype=float) * np.ones_like(t) for f in self.p_trajectory], axis=-1)

    def grid(self, step=0.01):
        """Tensor grid over the parameter box; vertices are always included."""
        axes = []
        for lo, hi in self.p_box:
            if hi == lo:
                axes.append(np.array([lo]))
                continue
            count = max(int(math.ceil((hi - lo) / step - 1e-9)), 1)
            axes.append(np.linspace(lo, hi, count + 1))
        if not axes:
            return np.zeros((1, 0))
        return np.array(list(itertools.product(*axes)), dtype=float)


# -- classification / decomposition ------------------------------------------

@dataclass(frozen=True)
class MatchedClassification:
    matched: bool
    phi: Optional[Callable]     # p -> B^+ dA(p), only when matched

    def __bool__(self):
        return self.matched


def classify_matched(plant, p_grid):
    """Decide whether ``A(p) - A0`` lies in range(B) at every grid point."""
    p_grid = np.atleast_2d(np.asarray(p_grid, dtype=float))
    if p_grid.shape[0] == 0:
        raise ValidationError("p_grid must be nonempty")
    b_pinv = linalg.pseudo_inverse(plant.b)
    residual_proj = np.eye(plant.n) - plant.b @ b_pinv
    for p in p_grid:
        if linalg.spectral_norm(residual_proj @ plant.delta_a(p)) > TOL.matched:
            return MatchedClassification(False, None)
    return MatchedClassification(True, lambda p: b_pinv @ plant.delta_a(p))


def decompose_unmatched(plant, p):
    """Split ``dA(p)`` into ``(B B^+ dA, (I - B B^+) dA)``."""
    proj = linalg.range_projector(plant.b)
    da = plant.delta_a(p)
    matched = proj @ da
    return matched, da - matched


# -- bounds ------------------------------------------------------------------

@dataclass
class UncertaintyBounds:
    kind: str                        # "matched" | "unmatched"
    f_m: Optional[np.ndarray] = None  # phi^T R phi <= F_m
    f: Optional[np.ndarray] = None    # phi^T phi <= F
    f_u: Optional[np.ndarray] = None  # dA^T (B^+)^T B^+ dA <= F_u
    h: Optional[np.ndarray] = None    # alpha^-2 dA^T dA <= H
    alpha: float = 1.0
    rho: float = 1.0
    beta: float = 1.0
    worst_margin: float = 0.0        # min over grid/bounds of lambda_min(bound - form)
    verified: bool = True
    violations: list = field(default_factory=list)


def _quadratic_forms(plant, p_grid, kind, r, alpha):
    """Yield the per-grid-point matrices each bound has to dominate."""
    b_pinv = linalg.pseudo_inverse(plant.b)
    forms = {}
    if kind == "matched":
        phis = [b_pinv @ plant.delta_a(p) for p in p_grid]
        forms["f"] = [ph.T @ ph for ph in phis]
        if r is not None:
            forms["f_m"] = [ph.T @ r @ ph for ph in phis]
    else:
        das = [plant.delta_a(p) for p in p_grid]
        forms["f_u"] = [(b_pinv @ d).T @ (b_pinv @ d) for d in das]
        forms["h"] = [d.T @ d / alpha ** 2 for d in das]
    return forms


def grid_supremum(forms, inflation=0.05):
    """Elementwise grid maximum, symmetrized and inflated.

    Elementwise maxima need not dominate every sample in the Loewner order,
    so the result is shifted by the smallest multiple of I that makes it do so.
    """
    stack = np.array(forms)
    sup = np.max(stack, axis=0)
    sup = 0.5 * (sup + sup.T) * (1.0 + inflation)
    worst = min(linalg.min_eigenvalue(sup - f) for f in forms)
    if worst < 0.0:
        sup = sup + (-worst * (1.0 + inflation)) * np.eye(sup.shape[0])
    return sup


def bound_matrices(plant, p_grid, kind, r=None, *, alpha=1.0, rho=1.0, beta=1.0,
                   supplied=None, verify=True, inflation=0.05):
    """Build (or check) the uncertainty bound matrices over a parameter grid.

    Parameters
    ----------
    supplied : dict, optional
        Analytic bounds keyed by ``f_m``, ``f``, ``f_u``, ``h``. Missing
        entries are constructed from the grid.
    verify : bool
        Raise :class:`VerificationFailed` when a supplied bound is violated
        at some grid point. When False the violation is only recorded.
    """
    if kind not in ("matched", "unmatched"):
        raise ValidationError(f"unknown uncertainty kind {kind!r}")
    if kind == "unmatched" and alpha <= 0:
        raise ValidationError("alpha must be positive")
    p_grid = np.atleast_2d(np.asarray(p_grid, dtype=float))
    r = None if r is None else linalg.as_matrix(r, "r")
    supplied = {k: v for k, v in (supplied or {}).items() if v is not None}
    forms = _quadratic_forms(plant, p_grid, kind, r, alpha)

    result = UncertaintyBounds(kind=kind, alpha=alpha, rho=rho, beta=beta)
    margins = []
    for key, mats in forms.items():
        if key in supplied:
            bound = linalg.symmetrize(supplied[key])
        else:
            bound = grid_supremum(mats, inflation)
        margin = min(linalg.min_eigenvalue(bound - f) for f in mats)
        margins.append(margin)
        if margin < -TOL.psd:
            result.violations.append((key, margin))
        setattr(result, key, bound)
    result.worst_margin = min(margins) if margins else 0.0
    result.verified = not result.violations
    if verify and result.violations:
        detail = ", ".join(f"{k} (min eigenvalue {v:.4g})" for k, v in result.violations)
        raise VerificationFailed(f"supplied bound violated on the parameter grid: {detail}")
    return result


# -- quantities consumed by the trigger rules and bounds ----------------------

@dataclass(frozen=True)
class Q1Result:
    matrix: np.ndarray
    lambda_min: float
    p: np.ndarray


def q1_matrix(k1, phi, r, q, f_m):
    """``(F_m - phi^T R phi) + Q + (K1 + phi)^T R (K1 + phi)`` at one phi."""
    kp = k1 + phi
    out = (f_m - phi.T @ r @ phi) + q + kp.T @ r @ kp
    return 0.5 * (out + out.T)


def worst_case_q1(k1, plant, p_grid, r, q, f_m):
    """Q1 at the grid point with the smallest lambda_min.

    Raises NotPositiveDefinite if that eigenvalue is not positive.
    """
    b_pinv = linalg.pseudo_inverse(plant.b)
    best = None
    for p in np.atleast_2d(p_grid):
        mat = q1_matrix(k1, b_pinv @ plant.delta_a(p), r, q, f_m)
        lam = linalg.min_eigenvalue(mat)
        if best is None or lam < best.lambda_min:
            best = Q1Result(mat, lam, np.array(p))
    if best.lambda_min <= 0.0:
        raise NotPositiveDefinite(
            f"lambda_min(Q1) = {best.lambda_min:.6g} <= 0 at p = {best.p.tolist()}")
    return best


def q2_matrix(l, rho, beta):
    """``beta^2 I - 2 rho^2 L^T L``."""
    n = l.shape[1]
    out = beta ** 2 * np.eye(n) - 2.0 * rho ** 2 * l.T @ l
    return 0.5 * (out + out.T)


def trigger_threshold(s, b, k, q_lambda_min, sigma):
    """``mu = sigma * lambda_min(Q) / (2 ||S B K||)``."""
    if not 0.0 < sigma < 1.0:
        raise ValidationError(f"sigma must lie in (0, 1), got {sigma}")
    if q_lambda_min <= 0.0:
        raise NotPositiveDefinite(f"lambda_min(Q) = {q_lambda_min:.6g} <= 0; no valid threshold")
    denom = 2.0 * linalg.spectral_norm(s @ b @ k)
    if denom < 1e-12:
        raise DegenerateThreshold("||S B K|| vanishes; the trigger would never fire")
    return sigma * q_lambda_min / denom


def lipschitz_constants(plant, k, p_grid):
    """``(L1, L2, L3)`` with L1 maximized over the grid (smallest tau)."""
    bk = plant.b @ k
    l2 = linalg.spectral_norm(bk)
    l1 = max(linalg.spectral_norm(plant.a(p) + bk) for p in np.atleast_2d(p_grid))
    return l1, l2, l1 + l2
