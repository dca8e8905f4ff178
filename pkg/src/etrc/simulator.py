"""Closed-loop simulation under zero-order hold with event triggering.

Each step integrates ``x' = A(p(t)) x + B u_held`` with classical RK4
(A evaluated at the stage times), advances eta for the dynamic rule, then
evaluates the trigger. On a fire the held state and the input are refreshed
and take effect from the next step.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from . import _backend, _kernel_py
from .errors import Diverged, TooFewEvents, ValidationError
from .linalg import TOL

log = logging.getLogger(__name__)

_MODES = {"periodic": _kernel_py.MODE_PERIODIC, "static": _kernel_py.MODE_STATIC,
          "dynamic": _kernel_py.MODE_DYNAMIC}


@dataclass
class ScenarioRun:
    plant: object           # UncertainPlant
    synthesis: object       # RobustSynthesis
    rule: object            # TriggerRule
    x0: np.ndarray
    horizon: float
    dt: float = 1e-4
    apply_auxiliary: bool = False   # unmatched: also drive alpha (I - B B^+) L x_held

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not self.horizon >= self.dt:
            raise ValidationError("horizon must be at least one step")
        if self.x0.shape[0] != self.plant.n:
            raise ValidationError(f"x0 has {self.x0.shape[0]} entries, plant has n={self.plant.n}")

    @property
    def nsteps(self):
        return int(round(self.horizon / self.dt))


@dataclass
class SimTrace:
    kind: str
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    error_norms: np.ndarray
    thresholds: np.ndarray
    eta: np.ndarray
    flags: np.ndarray
    metrics: dict = field(default_factory=dict)

    @property
    def events(self):
        return self.times[self.flags.astype(bool)]

    @property
    def gaps(self):
        return np.diff(self.events)


def _input_channels(run):
    """Effective (B, K) pair seen by the kernel."""
    syn, plant = run.synthesis, run.plant
    if run.apply_auxiliary and syn.l is not None:
        # b_eff = [B, alpha (I - B B^+)], so [K2; L] drives both channels
        return syn.b_eff, np.vstack([syn.k, syn.l])
    return plant.b, syn.k


def system_matrices(plant, dt, nsteps):
    """``A(p(t))`` sampled every half step, shape ``(2 nsteps + 1, n, n)``."""
    t = np.arange(2 * nsteps + 1) * (0.5 * dt)
    p = plant.p_at(t)
    a = np.broadcast_to(plant.a_nominal, (t.size,) + plant.a_nominal.shape).copy()
    for i, d in enumerate(plant.delta_coeffs):
        a += p[:, i, None, None] * d
    return np.ascontiguousarray(a)


def simulate(run, backend=None):
    """Integrate one scenario and return its full trace.

    Raises
    ------
    Diverged
        If ``||x||`` exceeds 1e6 (or becomes non-finite).
    """
    rule = run.rule
    n, nsteps = run.plant.n, run.nsteps
    b, k = _input_channels(run)
    b = np.ascontiguousarray(b, dtype=float)
    k = np.ascontiguousarray(k, dtype=float)
    a_half = system_matrices(run.plant, run.dt, nsteps)

    states = np.zeros((nsteps + 1, n))
    inputs = np.zeros((nsteps + 1, k.shape[0]))
    err = np.zeros(nsteps + 1)
    thr = np.zeros(nsteps + 1)
    eta = np.zeros(nsteps + 1)
    flags = np.zeros(nsteps + 1, dtype=np.int8)

    kernel = _backend.get_kernel(backend)
    done = kernel(a_half, b, k, run.x0.copy(), float(run.dt), nsteps, _MODES[rule.kind],
                  float(rule.mu), float(rule.theta), float(rule.lam), float(rule.eta0),
                  float(rule.period), TOL.origin, TOL.diverged,
                  states, inputs, err, thr, eta, flags)
    if done < nsteps:
        raise Diverged(f"||x|| exceeded {TOL.diverged:g} at t = {(done + 1) * run.dt:.6g} s")

    trace = SimTrace(rule.kind, np.arange(nsteps + 1) * run.dt, states, inputs, err, thr, eta,
                     flags)
    try:
        trace.metrics = metrics(trace)
    except TooFewEvents:
        nan = float("nan")
        trace.metrics = {"tau_max": nan, "tau_min": nan, "tau_avg": nan,
                         "u_total": int(trace.flags.sum())}
    log.info("%s run: %d events over %.3g s", rule.kind, trace.metrics["u_total"], run.horizon)
    return trace


def metrics(trace):
    """Inter-event statistics: ``tau_max``, ``tau_min``, ``tau_avg``, ``u_total``."""
    events = np.asarray(trace.events if isinstance(trace, SimTrace) else trace, dtype=float)
    if events.size < 2:
        raise TooFewEvents(f"need at least two events, got {events.size}")
    gaps = np.diff(events)
    return {
        "tau_max": float(gaps.max()),
        "tau_min": float(gaps.min()),
        "tau_avg": float(gaps.mean()),
        "u_total": int(events.size),
    }


@dataclass(frozen=True)
class DecreaseReport:
    max_excess: float       # max over steps of dV/dt minus its certified bound
    max_vdot: float
    tolerance: float
    worst_time: float

    @property
    def passed(self):
        return self.max_excess <= self.tolerance


def lyapunov_diagnostics(trace, synthesis, q_lambda_min, sigma, lam=None, rel_tol=1e-2):
    """Finite-difference check of the ISS decrease along a trace.

    With ``V = x^T S x`` the certified rate is
    ``dV/dt <= (sigma - 1) lambda_min(Q) ||x||^2``. For dynamic traces the
    function ``W = V + eta`` is used, with the extra ``-lam * eta`` term.
    Step midpoints are used for ``||x||^2`` and eta.
    """
    x = trace.states
    s = synthesis.s
    v = np.einsum("ti,ij,tj->t", x, s, x)
    nx2 = np.einsum("ti,ti->t", x, x)
    dt = np.diff(trace.times)
    mid_nx2 = 0.5 * (nx2[1:] + nx2[:-1])
    bound = (sigma - 1.0) * q_lambda_min * mid_nx2
    if trace.kind == "dynamic":
        if lam is None:
            raise ValidationError("dynamic diagnostics need lambda")
        w = v + trace.eta
        mid_eta = 0.5 * (trace.eta[1:] + trace.eta[:-1])
        bound = bound - lam * mid_eta
    else:
        w = v
    rate = np.diff(w) / dt
    excess = rate - bound
    worst = int(np.argmax(excess))
    max_vdot = float(np.max(np.abs(rate))) if rate.size else 0.0
    return DecreaseReport(float(excess[worst]) if rate.size else 0.0, max_vdot,
                          rel_tol * max_vdot, float(trace.times[worst]))


def threshold_overshoot(trace, l2, dt=None):
    """Largest ``||e|| - threshold - L2 dt (||x|| + ||e||)`` over the trace.

    Non-positive means the error never overshoots its threshold by more
    than one step's worth of drift.
    """
    if trace.kind == "periodic":
        return -np.inf
    dt = float(trace.times[1] - trace.times[0]) if dt is None else dt
    nx = np.linalg.norm(trace.states, axis=1)
    slack = l2 * dt * (nx + trace.error_norms)
    return float(np.max(trace.error_norms - trace.thresholds - slack))
