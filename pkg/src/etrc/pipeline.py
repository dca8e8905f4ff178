"""From a scenario config to a certified design and simulated runs."""

from dataclasses import dataclass, field
import logging
from typing import Optional
import warnings

import numpy as np

from . import iet_bounds
from .errors import ValidationError
from .riccati import synthesize_matched, synthesize_unmatched
from .simulator import ScenarioRun, lyapunov_diagnostics, simulate
from .triggering import TriggerRule
from .uncertainty import (
    Constant,
    PiecewiseLinear,
    Sinusoid,
    UncertainPlant,
    bound_matrices,
    classify_matched,
    lipschitz_constants,
    trigger_threshold,
    worst_case_q1,
)

log = logging.getLogger(__name__)


def _trajectory(spec):
    if spec.type == "sinusoid":
        return Sinusoid(spec.amplitude, spec.frequency, spec.phase, spec.offset)
    if spec.type == "constant":
        return Constant(spec.value)
    return PiecewiseLinear(spec.times, spec.values)


def build_plant(cfg):
    p = cfg.plant
    return UncertainPlant(
        np.array(p.a_nominal), np.array(p.b), tuple(np.array(d) for d in p.delta_a),
        np.array(p.p_box, dtype=float).reshape(-1, 2), tuple(_trajectory(t) for t in p.p_trajectory))


@dataclass
class Design:
    """Everything the triggering rules and bounds need from one scenario."""
    cfg: object
    plant: UncertainPlant
    grid: np.ndarray
    bounds: object
    synthesis: object
    q_matrix: np.ndarray          # Q1 (matched, grid worst case) or Q2 (unmatched)
    q_lambda_min: float
    q_p: Optional[np.ndarray]     # grid point of the Q1 worst case
    mu: float
    l1: float
    l2: float
    l3: float
    notes: list = field(default_factory=list)

    @property
    def lam(self):
        return self.cfg.trigger.lambda_


def design(cfg):
    """Bounds, synthesis, Q1/Q2, threshold and Lipschitz constants.

    Raises the module error of whichever certificate fails first.
    """
    plant = build_plant(cfg)
    grid = plant.grid(cfg.sim.grid_step)
    matched = classify_matched(plant, grid)
    notes = []
    if cfg.kind == "matched" and not matched:
        raise ValidationError("scenario declares matched uncertainty but dA(p) leaves range(B)")
    if cfg.kind == "unmatched" and matched:
        notes.append("uncertainty is matched; unmatched synthesis is conservative")

    b = cfg.bounds
    supplied = {"f_m": b.f_m, "f": b.f, "f_u": b.f_u, "h": b.h}
    supplied = {k: np.array(v) for k, v in supplied.items() if v is not None}
    if cfg.kind == "matched":
        r = np.array(cfg.weights.r)
        q = np.array(cfg.weights.q)
        bounds = bound_matrices(plant, grid, "matched", r, supplied=supplied, verify=b.verify)
        syn = synthesize_matched(plant, bounds, q, r, p_grid=grid)
        q1 = worst_case_q1(syn.k, plant, grid, r, q, bounds.f_m)
        q_mat, q_min, q_p = q1.matrix, q1.lambda_min, q1.p
    else:
        u = cfg.unmatched
        bounds = bound_matrices(plant, grid, "unmatched", alpha=u.alpha, rho=u.rho, beta=u.beta,
                                supplied=supplied, verify=b.verify)
        syn = synthesize_unmatched(plant, bounds, l_formula=u.l_formula)
        q_mat, q_min, q_p = syn.q2, syn.q2_lambda_min, None
    for key, margin in bounds.violations:
        notes.append(f"bound {key} violated on the grid (min eigenvalue {margin:.4g})")

    mu = trigger_threshold(syn.s, plant.b, syn.k, q_min, cfg.trigger.sigma)
    l1, l2, l3 = lipschitz_constants(plant, syn.k, grid)
    return Design(cfg, plant, grid, bounds, syn, q_mat, q_min, q_p, mu, l1, l2, l3, notes)


def make_rule(d, kind):
    t = d.cfg.trigger
    if kind == "static":
        return TriggerRule("static", mu=d.mu, sigma=t.sigma)
    if kind == "dynamic":
        rule = TriggerRule("dynamic", mu=d.mu, sigma=t.sigma, theta=t.theta, lam=t.lambda_,
                           eta0=t.eta0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if not rule.check_theta(d.l1):
                log.warning("theta=%g exceeds 1/(L1 - lambda) = %.4g; the dynamic bound is "
                            "outside its validity range", t.theta, 1.0 / (d.l1 - t.lambda_))
        return rule
    if kind == "periodic":
        return TriggerRule("periodic", period=t.period)
    raise ValidationError(f"unknown trigger kind {kind!r}")


def run(d, kind, dt=None, horizon=None, backend=None):
    """Simulate one trigger kind on a designed scenario."""
    sim = d.cfg.sim
    if horizon is None:
        horizon = sim.horizon
        if kind == "periodic" and sim.baseline_horizon is not None:
            horizon = sim.baseline_horizon
    scenario = ScenarioRun(d.plant, d.synthesis, make_rule(d, kind), np.array(sim.x0), horizon,
                           sim.dt if dt is None else dt, d.cfg.unmatched.apply_auxiliary)
    return simulate(scenario, backend=backend)


def compare(d, dt=None, horizon=None, backend=None):
    """Periodic, static and dynamic runs in that order."""
    return {kind: run(d, kind, dt, horizon, backend) for kind in ("periodic", "static", "dynamic")}


def inter_event_bound(d, kind):
    if kind == "static":
        return iet_bounds.static_bound(d.l1, d.l2, d.mu)
    if kind == "dynamic":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return iet_bounds.dynamic_bound(d.l1, d.l2, d.mu, d.cfg.trigger.theta, d.lam)
    raise ValidationError("inter-event bounds exist for static and dynamic rules only")


def decrease_report(d, trace):
    return lyapunov_diagnostics(trace, d.synthesis, d.q_lambda_min, d.cfg.trigger.sigma,
                                lam=d.lam if trace.kind == "dynamic" else None)
