"""Scenario files, built-in presets and CSV output.

Scenarios are TOML documents. Matrices are nested lists of rows::

    name = "example1"
    kind = "matched"

    [plant]
    a_nominal = [[0.0, 1.0], [1.0, 0.0]]
    b = [[0.0], [1.0]]
    delta_a = [[[0.0, 0.0], [1.0, 1.0]]]     # one matrix per parameter
    p_box = [[-2.0, 2.0]]

    [[plant.p_trajectory]]
    type = "sinusoid"
    amplitude = 2.0

See the README for the full list of keys.
"""

from dataclasses import asdict, dataclass, field, fields
import io
import math
import os
import sys
from typing import Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import IoError, ParseError, UnknownPreset, ValidationError
from .riccati import L_FORMULAS
from .triggering import KINDS

Matrix = tuple  # tuple of row tuples of floats

TRAJECTORY_TYPES = ("sinusoid", "constant", "piecewise")
_TRAJECTORY_KEYS = {"sinusoid": ("amplitude", "frequency", "phase", "offset"),
                    "constant": ("value",), "piecewise": ("times", "values")}


# -- config types --------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySpec:
    type: str = "constant"
    amplitude: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0
    offset: float = 0.0
    value: float = 0.0
    times: tuple = ()
    values: tuple = ()


@dataclass(frozen=True)
class PlantSpec:
    a_nominal: Matrix
    b: Matrix
    delta_a: tuple = ()
    p_box: Matrix = ()
    p_trajectory: tuple = ()


@dataclass(frozen=True)
class WeightSpec:
    q: Optional[Matrix] = None
    r: Optional[Matrix] = None


@dataclass(frozen=True)
class UnmatchedSpec:
    alpha: float = 1.0
    rho: float = 1.0
    beta: float = 1.0
    l_formula: str = "derived"
    apply_auxiliary: bool = False


@dataclass(frozen=True)
class BoundSpec:
    f_m: Optional[Matrix] = None
    f: Optional[Matrix] = None
    f_u: Optional[Matrix] = None
    h: Optional[Matrix] = None
    verify: bool = True


@dataclass(frozen=True)
class TriggerSpec:
    kind: str = "static"
    sigma: float = 0.5
    theta: float = 1.0
    k: float = 0.0
    lam: Optional[float] = None   # "lambda" in files; overrides (1 - sigma) k
    eta0: float = 0.0
    period: float = 1e-3

    @property
    def lambda_(self):
        return (1.0 - self.sigma) * self.k if self.lam is None else self.lam


@dataclass(frozen=True)
class SimSpec:
    x0: tuple
    horizon: float
    dt: float = 1e-4
    grid_step: float = 0.01
    baseline_horizon: Optional[float] = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str           # "matched" | "unmatched"
    plant: PlantSpec
    sim: SimSpec
    weights: WeightSpec = field(default_factory=WeightSpec)
    unmatched: UnmatchedSpec = field(default_factory=UnmatchedSpec)
    bounds: BoundSpec = field(default_factory=BoundSpec)
    trigger: TriggerSpec = field(default_factory=TriggerSpec)


# -- conversion helpers -------------------------------------------------------

def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"{path}: must be finite")
    return out


def _matrix(value, path):
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{path}: expected a nonempty list of rows")
    if not all(isinstance(row, list) for row in value):
        value = [value]
    width = len(value[0])
    rows = []
    for i, row in enumerate(value):
        if len(row) != width or width == 0:
            raise ValidationError(f"{path}: row {i} has {len(row)} entries, expected {width}")
        rows.append(tuple(_num(v, f"{path}[{i}]") for v in row))
    return tuple(rows)


def _vector(value, path):
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{path}: expected a nonempty list")
    return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))


def _section(doc, key, known):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ValidationError(f"{key}: expected a table")
    extra = set(sec) - set(known)
    if extra:
        raise ValidationError(f"{key}: unknown keys {sorted(extra)}")
    return sec


def _require(sec, key, path):
    if key not in sec:
        raise ValidationError(f"{path}.{key}: required")
    return sec[key]


def _shape(m):
    return (len(m), len(m[0]))


def _trajectory(raw, path):
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: expected a table")
    known = {f.name for f in fields(TrajectorySpec)}
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"{path}: unknown keys {sorted(extra)}")
    kind = raw.get("type", "constant")
    if kind not in TRAJECTORY_TYPES:
        raise ValidationError(f"{path}.type: must be one of {TRAJECTORY_TYPES}")
    stray = set(raw) - {"type"} - set(_TRAJECTORY_KEYS[kind])
    if stray:
        raise ValidationError(f"{path}: keys {sorted(stray)} do not apply to type {kind!r}")
    kw = {"type": kind}
    for key in ("amplitude", "frequency", "phase", "offset", "value"):
        if key in raw:
            kw[key] = _num(raw[key], f"{path}.{key}")
    if kind == "piecewise":
        kw["times"] = _vector(_require(raw, "times", path), f"{path}.times")
        kw["values"] = _vector(_require(raw, "values", path), f"{path}.values")
        if len(kw["times"]) != len(kw["values"]):
            raise ValidationError(f"{path}: times and values differ in length")
        if any(b <= a for a, b in zip(kw["times"], kw["times"][1:])):
            raise ValidationError(f"{path}.times: must be strictly increasing")
    return TrajectorySpec(**kw)


def config_from_dict(doc):
    """Validate a plain-dict scenario and build a :class:`ScenarioConfig`."""
    top_known = {"name", "kind", "plant", "weights", "unmatched", "bounds", "trigger", "sim"}
    extra = set(doc) - top_known
    if extra:
        raise ValidationError(f"unknown top-level keys {sorted(extra)}")
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ValidationError("name: expected a string")
    kind = _require(doc, "kind", "scenario")
    if kind not in ("matched", "unmatched"):
        raise ValidationError("kind: must be 'matched' or 'unmatched'")

    p = _section(doc, "plant", {f.name for f in fields(PlantSpec)})
    a = _matrix(_require(p, "a_nominal", "plant"), "plant.a_nominal")
    n = len(a)
    if _shape(a) != (n, n):
        raise ValidationError(f"plant.a_nominal: must be square, got {_shape(a)}")
    b = _matrix(_require(p, "b", "plant"), "plant.b")
    if _shape(b)[0] != n:
        if _shape(b)[0] == 1 and _shape(b)[1] == n:
            b = tuple((v,) for v in b[0])
        else:
            raise ValidationError(f"plant.b: expected {n} rows, got {_shape(b)[0]}")
    m = _shape(b)[1]
    delta = tuple(_matrix(d, f"plant.delta_a[{i}]") for i, d in enumerate(p.get("delta_a", [])))
    for i, d in enumerate(delta):
        if _shape(d) != (n, n):
            raise ValidationError(f"plant.delta_a[{i}]: expected {n}x{n}, got {_shape(d)}")
    box = _matrix(p["p_box"], "plant.p_box") if p.get("p_box") else ()
    if len(box) != len(delta) or (box and _shape(box)[1] != 2):
        raise ValidationError("plant.p_box: need one [lo, hi] pair per delta_a entry")
    for i, (lo, hi) in enumerate(box):
        if lo > hi:
            raise ValidationError(f"plant.p_box[{i}]: lo > hi")
    traj_raw = p.get("p_trajectory", [])
    if not isinstance(traj_raw, list):
        raise ValidationError("plant.p_trajectory: expected an array of tables")
    traj = tuple(_trajectory(t, f"plant.p_trajectory[{i}]") for i, t in enumerate(traj_raw))
    if traj and len(traj) != len(delta):
        raise ValidationError("plant.p_trajectory: need one entry per delta_a entry")
    plant = PlantSpec(a, b, delta, box, traj)

    w = _section(doc, "weights", {"q", "r"})
    q = _matrix(w["q"], "weights.q") if "q" in w else None
    r = _matrix(w["r"], "weights.r") if "r" in w else None
    if q is not None and _shape(q) != (n, n):
        raise ValidationError(f"weights.q: expected {n}x{n}")
    if r is not None and _shape(r) != (m, m):
        raise ValidationError(f"weights.r: expected {m}x{m}")
    if kind == "matched" and (q is None or r is None):
        raise ValidationError("weights: matched scenarios need q and r")

    u = _section(doc, "unmatched", {f.name for f in fields(UnmatchedSpec)})
    ukw = {k: _num(u[k], f"unmatched.{k}") for k in ("alpha", "rho", "beta") if k in u}
    if "l_formula" in u:
        if u["l_formula"] not in L_FORMULAS:
            raise ValidationError(f"unmatched.l_formula: must be one of {L_FORMULAS}")
        ukw["l_formula"] = u["l_formula"]
    if "apply_auxiliary" in u:
        if not isinstance(u["apply_auxiliary"], bool):
            raise ValidationError("unmatched.apply_auxiliary: expected true/false")
        ukw["apply_auxiliary"] = u["apply_auxiliary"]
    unmatched = UnmatchedSpec(**ukw)
    if kind == "unmatched" and not (unmatched.alpha > 0 and unmatched.rho > 0 and unmatched.beta > 0):
        raise ValidationError("unmatched: alpha, rho and beta must be positive")

    bd = _section(doc, "bounds", {f.name for f in fields(BoundSpec)})
    bkw = {}
    for key in ("f_m", "f", "f_u", "h"):
        if key in bd:
            bkw[key] = _matrix(bd[key], f"bounds.{key}")
            if _shape(bkw[key]) != (n, n):
                raise ValidationError(f"bounds.{key}: expected {n}x{n}")
    if "verify" in bd:
        if not isinstance(bd["verify"], bool):
            raise ValidationError("bounds.verify: expected true/false")
        bkw["verify"] = bd["verify"]
    bounds = BoundSpec(**bkw)

    t = _section(doc, "trigger", {"kind", "sigma", "theta", "k", "lambda", "eta0", "period"})
    tkw = {}
    if "kind" in t:
        if t["kind"] not in KINDS:
            raise ValidationError(f"trigger.kind: must be one of {KINDS}")
        tkw["kind"] = t["kind"]
    for key in ("sigma", "theta", "k", "eta0", "period"):
        if key in t:
            tkw[key] = _num(t[key], f"trigger.{key}")
    if "lambda" in t:
        tkw["lam"] = _num(t["lambda"], "trigger.lambda")
    trigger = TriggerSpec(**tkw)
    if not 0.0 < trigger.sigma < 1.0:
        raise ValidationError(f"trigger.sigma: must lie in (0, 1), got {trigger.sigma}")
    if not trigger.theta > 0:
        raise ValidationError("trigger.theta: must be positive")
    if trigger.eta0 < 0 or trigger.k < 0 or (trigger.lam is not None and trigger.lam < 0):
        raise ValidationError("trigger: k, lambda and eta0 must be non-negative")
    if not trigger.period > 0:
        raise ValidationError("trigger.period: must be positive")

    s = _section(doc, "sim", {f.name for f in fields(SimSpec)})
    x0 = _vector(_require(s, "x0", "sim"), "sim.x0")
    if len(x0) != n:
        raise ValidationError(f"sim.x0: expected {n} entries, got {len(x0)}")
    skw = {"x0": x0, "horizon": _num(_require(s, "horizon", "sim"), "sim.horizon")}
    for key in ("dt", "grid_step", "baseline_horizon"):
        if key in s:
            skw[key] = _num(s[key], f"sim.{key}")
    sim = SimSpec(**skw)
    if not sim.dt > 0 or not sim.grid_step > 0:
        raise ValidationError("sim: dt and grid_step must be positive")
    if not sim.horizon >= sim.dt:
        raise ValidationError("sim.horizon: must be at least dt")
    if sim.baseline_horizon is not None and not sim.baseline_horizon >= sim.dt:
        raise ValidationError("sim.baseline_horizon: must be at least dt")

    return ScenarioConfig(name, kind, plant, sim, WeightSpec(q, r), unmatched, bounds, trigger)


def _lists(value):
    if isinstance(value, tuple):
        return [_lists(v) for v in value]
    return value


def config_to_dict(cfg):
    """Plain-dict form of a config; ``None`` entries are dropped."""
    raw = asdict(cfg)
    out = {"name": cfg.name, "kind": cfg.kind}
    for sec in ("plant", "weights", "unmatched", "bounds", "trigger", "sim"):
        body = {}
        for key, value in raw[sec].items():
            if value is None:
                continue
            if sec == "trigger" and key == "lam":
                key = "lambda"
            if sec == "plant" and key == "p_trajectory":
                body[key] = [_trajectory_dict(t) for t in value]
                continue
            body[key] = _lists(value)
        out[sec] = body
    return out


def _trajectory_dict(t):
    keep = _TRAJECTORY_KEYS[t["type"]]
    return {"type": t["type"], **{k: _lists(t[k]) for k in keep}}


def parse_scenario(text):
    """Parse TOML scenario text into a validated :class:`ScenarioConfig`.

    Raises
    ------
    ParseError
        Malformed TOML (the message carries line and column).
    ValidationError
        Well-formed but invalid content (the message names the field).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"scenario is not valid TOML: {exc}") from exc
    return config_from_dict(doc)


def serialize_scenario(cfg):
    return tomli_w.dumps(config_to_dict(cfg))


def load_scenario(spec):
    """Resolve a preset name or a path to a config."""
    if spec in PRESETS:
        return PRESETS[spec]
    if os.path.exists(spec):
        try:
            with open(spec, encoding="utf-8") as fh:
                return parse_scenario(fh.read())
        except OSError as exc:
            raise IoError(f"cannot read {spec}: {exc}") from exc
    raise UnknownPreset(f"{spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file")


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg, overrides):
    """Apply dotted ``key=value`` overrides (values in TOML syntax)."""
    if not overrides:
        return cfg
    doc = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r}: expected key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override {key!r}: {part} is not a table")
        node[parts[-1]] = _parse_value(value.strip())
    return config_from_dict(doc)


# -- presets -------------------------------------------------------------------

_A0 = ((0.0, 1.0), (1.0, 0.0))
_B = ((0.0,), (1.0,))
_SIN2 = (TrajectorySpec(type="sinusoid", amplitude=2.0),)

PRESETS = {
    "example1": ScenarioConfig(
        name="example1",
        kind="matched",
        plant=PlantSpec(_A0, _B, (((0.0, 0.0), (1.0, 1.0)),), ((-2.0, 2.0),), _SIN2),
        weights=WeightSpec(q=((10.0, 0.0), (0.0, 10.0)), r=((2.0,),)),
        bounds=BoundSpec(f_m=((8.0, 8.0), (8.0, 8.0))),
        trigger=TriggerSpec(kind="static", sigma=0.98, theta=0.1, k=0.6, eta0=0.01),
        sim=SimSpec(x0=(0.2, -0.35), horizon=4.5),
    ),
    "example2": ScenarioConfig(
        name="example2",
        kind="unmatched",
        plant=PlantSpec(_A0, _B, (((0.0, 1.0), (0.0, 0.0)),), ((-2.0, 2.0),), _SIN2),
        unmatched=UnmatchedSpec(alpha=1.0, rho=0.05, beta=10.0),
        bounds=BoundSpec(f_u=((0.0, 0.0), (0.0, 0.0)), h=((4.0, 4.0), (4.0, 4.0)), verify=False),
        trigger=TriggerSpec(kind="static", sigma=0.98, theta=0.1, k=0.6, eta0=0.01),
        sim=SimSpec(x0=(0.2, -0.35), horizon=3.5),
    ),
}


# -- output --------------------------------------------------------------------

def _fmt(v):
    return format(float(v), ".9g")


def trace_csv_text(trace):
    n = trace.states.shape[1]
    m = trace.inputs.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
              + ["err_norm", "threshold", "eta", "event_flag"])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for i in range(trace.times.size):
        row = [_fmt(trace.times[i])]
        row += [_fmt(v) for v in trace.states[i]]
        row += [_fmt(v) for v in trace.inputs[i]]
        row += [_fmt(trace.error_norms[i]), _fmt(trace.thresholds[i]), _fmt(trace.eta[i]),
                str(int(trace.flags[i]))]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


METRIC_COLUMNS = ("mechanism", "tau_max", "tau_min", "tau_avg", "u_total")


def metrics_table_text(runs):
    """``runs`` is a list of ``(mechanism, metrics dict)`` pairs."""
    lines = [",".join(METRIC_COLUMNS)]
    for name, met in runs:
        lines.append(",".join([name, _fmt(met["tau_max"]), _fmt(met["tau_min"]),
                               _fmt(met["tau_avg"]), str(int(met["u_total"]))]))
    return "\n".join(lines) + "\n"


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_trace_csv(trace, path):
    _write(path, trace_csv_text(trace))


def write_metrics_table(runs, path):
    _write(path, metrics_table_text(runs))


def read_trace_csv(path):
    """Load a trace CSV back as ``(header, float array)``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
