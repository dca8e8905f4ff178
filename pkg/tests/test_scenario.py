import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etrc.errors import IoError, ParseError, UnknownPreset, ValidationError
from etrc.scenario import (
    PRESETS,
    BoundSpec,
    PlantSpec,
    ScenarioConfig,
    SimSpec,
    TrajectorySpec,
    TriggerSpec,
    UnmatchedSpec,
    WeightSpec,
    apply_overrides,
    load_scenario,
    metrics_table_text,
    parse_scenario,
    read_trace_csv,
    serialize_scenario,
    trace_csv_text,
    write_metrics_table,
    write_trace_csv,
)
from etrc.simulator import metrics

num = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
pos = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)


def mat(n, m):
    return st.tuples(*[st.tuples(*[num] * m)] * n)


@st.composite
def trajectories(draw):
    kind = draw(st.sampled_from(["sinusoid", "constant", "piecewise"]))
    if kind == "sinusoid":
        return TrajectorySpec("sinusoid", amplitude=draw(num), frequency=draw(num),
                              phase=draw(num), offset=draw(num))
    if kind == "constant":
        return TrajectorySpec("constant", value=draw(num))
    times = sorted(set(draw(st.lists(num, min_size=1, max_size=4))))
    values = tuple(draw(num) for _ in times)
    return TrajectorySpec("piecewise", times=tuple(times), values=values)


@st.composite
def configs(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, n))
    n_params = draw(st.integers(0, 2))
    kind = draw(st.sampled_from(["matched", "unmatched"]))
    box = tuple(tuple(sorted((draw(num), draw(num)))) for _ in range(n_params))
    trajs = tuple(draw(trajectories()) for _ in range(n_params)) if draw(st.booleans()) else ()
    plant = PlantSpec(draw(mat(n, n)), draw(mat(n, m)),
                      tuple(draw(mat(n, n)) for _ in range(n_params)), box, trajs)
    weights = WeightSpec(draw(mat(n, n)), draw(mat(m, m)))
    if kind == "unmatched" and draw(st.booleans()):
        weights = WeightSpec()
    opt = lambda: draw(st.none() | mat(n, n))
    bounds = BoundSpec(opt(), opt(), opt(), opt(), draw(st.booleans()))
    trigger = TriggerSpec(draw(st.sampled_from(["static", "dynamic", "periodic"])),
                          draw(st.floats(0.01, 0.99)), draw(pos), draw(pos),
                          draw(st.none() | pos), draw(pos), draw(pos))
    horizon = draw(st.floats(1.0, 10.0))
    sim = SimSpec(tuple(draw(num) for _ in range(n)), horizon, draw(st.floats(1e-5, 0.5)),
                  draw(pos), draw(st.none() | st.floats(1.0, 5.0)))
    unmatched = UnmatchedSpec(draw(pos), draw(pos), draw(pos),
                              draw(st.sampled_from(["derived", "printed"])), draw(st.booleans()))
    name = draw(st.text(alphabet="abcdefgh_-0123", min_size=1, max_size=12))
    return ScenarioConfig(name, kind, plant, sim, weights, unmatched, bounds, trigger)


@settings(max_examples=150, deadline=None)
@given(configs())
def test_round_trip(cfg):
    assert parse_scenario(serialize_scenario(cfg)) == cfg


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    assert parse_scenario(serialize_scenario(PRESETS[name])) == PRESETS[name]


def test_example1_preset_values():
    c = PRESETS["example1"]
    assert c.weights.q == ((10.0, 0.0), (0.0, 10.0))
    assert c.weights.r == ((2.0,),)
    assert c.bounds.f_m == ((8.0, 8.0), (8.0, 8.0))
    assert c.plant.p_trajectory[0] == TrajectorySpec("sinusoid", amplitude=2.0)
    assert c.sim.x0 == (0.2, -0.35) and c.sim.horizon == 4.5
    assert (c.trigger.sigma, c.trigger.theta, c.trigger.k) == (0.98, 0.1, 0.6)
    assert c.trigger.lambda_ == pytest.approx(0.012)


def test_example2_preset_values():
    c = PRESETS["example2"]
    u = c.unmatched
    assert (u.alpha, u.rho, u.beta) == (1.0, 0.05, 10.0)
    assert c.sim.horizon == 3.5 and c.trigger.eta0 == 0.01


MINIMAL = """
name = "tiny"
kind = "matched"
[plant]
a_nominal = [[0.0, 1.0], [1.0, 0.0]]
b = [0.0, 1.0]
[weights]
q = [[1.0, 0.0], [0.0, 1.0]]
r = [[1.0]]
[sim]
x0 = [1.0, 0.0]
horizon = 1.0
"""


def test_minimal_file_and_row_b():
    cfg = parse_scenario(MINIMAL)
    assert cfg.plant.b == ((0.0,), (1.0,))
    assert cfg.trigger == TriggerSpec()


def test_malformed_toml_reports_line():
    with pytest.raises(ParseError, match="line"):
        parse_scenario("name = \n[plant")


@pytest.mark.parametrize("edit, field", [
    (("horizon = 1.0", "horizon = 1.0\nbogus = 3"), "sim"),
    (("x0 = [1.0, 0.0]", "x0 = [1.0]"), "sim.x0"),
    (("r = [[1.0]]", "r = [[1.0, 0.0]]"), "weights.r"),
    (("kind = \"matched\"", "kind = \"sort of\""), "kind"),
    (("[sim]", "[trigger]\nsigma = 1.5\n[sim]"), "trigger.sigma"),
    (("b = [0.0, 1.0]", "b = [[0.0], [1.0], [2.0]]"), "plant.b"),
    (("horizon = 1.0", "horizon = \"long\""), "sim.horizon"),
])
def test_validation_names_the_field(edit, field):
    with pytest.raises(ValidationError, match=field.replace(".", r"\.")):
        parse_scenario(MINIMAL.replace(*edit))


def test_matched_needs_weights():
    with pytest.raises(ValidationError, match="weights"):
        parse_scenario(MINIMAL.replace("r = [[1.0]]", ""))


def test_overrides():
    cfg = apply_overrides(PRESETS["example1"], ["trigger.sigma=0.7", "sim.x0=[1, 2]",
                                                'unmatched.l_formula="printed"'])
    assert cfg.trigger.sigma == 0.7 and cfg.sim.x0 == (1.0, 2.0)
    assert cfg.unmatched.l_formula == "printed"
    with pytest.raises(ValidationError):
        apply_overrides(cfg, ["trigger.sigma"])
    with pytest.raises(ValidationError):
        apply_overrides(cfg, ["trigger.sigma=2"])


def test_load_scenario(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text(MINIMAL)
    assert load_scenario(str(path)).name == "tiny"
    assert load_scenario("example1") is PRESETS["example1"]
    with pytest.raises(UnknownPreset):
        load_scenario("example9")


def test_empty_metrics_table():
    assert metrics_table_text([]) == "mechanism,tau_max,tau_min,tau_avg,u_total\n"


def test_trace_csv_layout_and_parse_back(runs, tmp_path):
    trace = runs["example1", "dynamic"]
    text = trace_csv_text(trace)
    assert "\r" not in text
    assert text.splitlines()[0] == "t,x1,x2,u1,err_norm,threshold,eta,event_flag"
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, str(path))
    header, data = read_trace_csv(str(path))
    assert data.shape == (trace.times.size, len(header))
    events = data[data[:, -1] == 1, 0]
    assert metrics(events) == pytest.approx(trace.metrics, rel=1e-8)


def test_metrics_table_rows(runs, tmp_path):
    rows = [(k, runs["example1", k].metrics) for k in ("static", "dynamic")]
    path = tmp_path / "t.csv"
    write_metrics_table(rows, str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 3 and lines[1].startswith("static,")


def test_write_failure_is_io_error(runs, tmp_path):
    with pytest.raises(IoError):
        write_metrics_table([], str(tmp_path / "missing" / "t.csv"))
