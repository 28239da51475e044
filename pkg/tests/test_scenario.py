import csv
import math

import numpy as np
import pytest

from tpng_impact import Variant
from tpng_impact.errors import ScenarioParseError, ValidationError
from tpng_impact.scenario import (
    MalformedCsv, parse_scenario, read_trajectory_csv, write_summary_csv, write_trajectory_csv,
)
from tpng_impact.sim import CSV_COLUMNS, RunSpec, SimConfig, TrajectoryLog, simulate

from _support import SCENARIO_DIR, scenario_text, single_run


def test_empty_document_gives_default_engagement():
    (run,) = parse_scenario("").runs()
    i, t = run.initial.interceptor, run.initial.target
    assert (i.x, i.y, i.speed) == (0.0, 0.0, 70.0)
    assert (t.x, t.y, t.speed) == (5000.0, 0.0, 50.0)
    assert i.gamma == pytest.approx(math.radians(15))
    assert t.gamma == pytest.approx(math.radians(120))
    gp, sp = run.guidance, run.saturation
    assert (gp.c, gp.t_d, gp.alpha, gp.big_m, gp.theta_g, gp.kappa, gp.eta) == \
        (360.0, 70.0, 1.2, 1.0, 0.6, 5.0, 1)
    assert gp.variant is Variant.EXPONENTIAL
    assert (sp.a_min, sp.a_max, sp.n, sp.lam) == (-4.0, 8.0, 1, 0.15)
    assert run.config == SimConfig(t_max=100.0)
    assert run.initial.a_i == 0.0 and run.initial.t_el == 0.0


def test_theta_g_out_of_range():
    with pytest.raises(ValidationError, match=r"theta_g must lie in \(0,1\)"):
        parse_scenario("[guidance]\ntheta_g = 1.3\n")


@pytest.mark.parametrize("value", ["60, 70, 80, 90", "[60,70,80,90]"])
def test_td_sweep(value):
    runs = parse_scenario(f"[sweep]\nt_d = {value}\n").runs()
    assert [r.guidance.t_d for r in runs] == [60.0, 70.0, 80.0, 90.0]
    assert [r.label for r in runs] == ["t_d=60", "t_d=70", "t_d=80", "t_d=90"]
    assert [r.config.t_max for r in runs] == [90.0, 100.0, 110.0, 120.0]


def test_sweep_cartesian_product():
    runs = parse_scenario("[sweep]\nt_d = 60, 70\ngamma_i_deg = 5, 10, 20\n").runs()
    assert len(runs) == 6
    assert len({r.label for r in runs}) == 6


def test_variant_sweep_and_v_t():
    runs = parse_scenario("[sweep]\nvariant = standard, exponential\nv_t = 0, 50\n").runs()
    assert {(r.guidance.variant, r.initial.target.speed) for r in runs} == \
        {(v, s) for v in Variant for s in (0.0, 50.0)}
    # c follows each target speed through c_factor
    assert sorted({r.guidance.c for r in runs}) == [210.0, 360.0]


def test_cartesian_geometry():
    spec = parse_scenario("[geometry]\nx_i = 100\ny_i = 200\nx_t = 4100\ny_t = 3200\n")
    (run,) = spec.runs()
    assert (run.initial.interceptor.x, run.initial.target.y) == (100.0, 3200.0)


def test_polar_geometry():
    (run,) = parse_scenario("[geometry]\nr0 = 1000\ntheta0_deg = 90\n").runs()
    assert run.initial.target.x == pytest.approx(0.0, abs=1e-9)
    assert run.initial.target.y == pytest.approx(1000.0)


@pytest.mark.parametrize("text", [
    "[geometry]\nr0 = 1000\nx_i = 0\ny_i = 0\nx_t = 1\ny_t = 1\n",
    "[geometry]\nx_i = 0\ny_i = 0\n",
    "[geometry]\nr0 = -5\n",
    "[guidance]\nc = 100\n",
    "[saturation]\na_min = 2\n",
    "[sim]\ndt = 0\n",
    "[sim]\nboundary_layer = -1\n",
    "[guidance]\neta = 0\n",
])
def test_invalid_values(text):
    with pytest.raises(ValidationError):
        parse_scenario(text)


def test_unknown_key_reports_line_and_field():
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario("[scenario]\nname = x\n\n[guidance]\nalpha = 1\nbeta = 2\n")
    assert err.value.line == 6 and err.value.field == "guidance.beta"
    assert "line 6" in str(err.value)


def test_non_numeric_value_reports_line():
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario("[guidance]\n\nkappa = fast\n")
    assert err.value.line == 3 and err.value.field == "guidance.kappa"


@pytest.mark.parametrize("text", [
    "alpha = 1\n",
    "[nope]\nx = 1\n",
    "[guidance]\nalpha = 1\nalpha = 2\n",
    "[scenario]\nschema_version = 2\n",
    "[scenario]\nvariant = fancy\n",
    "[sweep]\nt_d = 60, abc\n",
    "[sweep]\nt_d = ,\n",
    "[saturation]\nn = 1.5\n",
])
def test_parse_errors(text):
    with pytest.raises(ScenarioParseError):
        parse_scenario(text)


def test_boundary_layer_off():
    (run,) = parse_scenario("[sim]\nboundary_layer = off\n").runs()
    assert run.config.boundary_layer is None
    (run,) = parse_scenario("[sim]\nboundary_layer = 0.2\ncommand_hold = yes\n").runs()
    assert run.config.boundary_layer == 0.2 and run.config.command_hold


def test_overrides():
    spec = parse_scenario(scenario_text("section_a")).with_overrides(t_d=75, dt=5e-4)
    (run,) = spec.runs()
    assert run.guidance.t_d == 75.0 and run.config.dt == 5e-4 and run.config.t_max == 105.0
    with pytest.raises(ValidationError):
        spec.with_overrides(dt=0.0)


@pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.ini")), ids=lambda p: p.stem)
def test_bundled_scenarios_parse(path):
    assert parse_scenario(path.read_text()).runs()


def test_bundled_scenario_contents():
    a = parse_scenario(scenario_text("section_a")).runs()
    assert [r.guidance.t_d for r in a] == [60, 70, 80, 90]
    b = parse_scenario(scenario_text("section_b")).runs()
    assert [round(math.degrees(r.initial.interceptor.gamma)) for r in b] == [5, 10, 20, 30]
    assert {r.guidance.t_d for r in b} == {70.0}
    c = parse_scenario(scenario_text("section_c")).runs()
    assert [round(math.degrees(r.initial.target.gamma)) for r in c] == [70, 90, 135]
    (s,) = parse_scenario(scenario_text("section_c_stationary")).runs()
    assert s.initial.target.speed == 0.0 and s.guidance.t_d == 130.0
    (cmp_,) = parse_scenario(scenario_text("comparison")).runs()
    assert (cmp_.initial.interceptor.speed, cmp_.initial.target.speed) == (250.0, 200.0)
    assert cmp_.initial.target.x == 10000.0
    assert (cmp_.saturation.a_min, cmp_.saturation.a_max) == (-6 * 9.81, 6 * 9.81)
    assert (cmp_.guidance.theta_g, cmp_.guidance.kappa, cmp_.guidance.t_d) == (0.5, 10.0, 55.0)


def _short_log(n_steps):
    (run,) = parse_scenario("").runs()
    cfg = SimConfig(t_max=n_steps * 1e-3 - 1e-3)
    _, log = simulate(RunSpec(run.initial, run.guidance, run.saturation, cfg))
    return log


def test_csv_row_count(tmp_path):
    log = _short_log(3)
    assert len(log) == 3
    path = write_trajectory_csv(log, tmp_path / "a.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0] == "t,x_i,y_i,x_t,y_t,r,theta_los,v_i,gamma_i,v_r,v_theta,t_go,e,s,g,a_cmd,a_i,clamped,b_guard"


def test_csv_round_trip_is_exact(tmp_path):
    log = _short_log(500)
    back = read_trajectory_csv(write_trajectory_csv(log, tmp_path / "sub" / "b.csv"))
    for name in CSV_COLUMNS:
        assert np.array_equal(back[name], log[name]), name


def test_csv_round_trip_extreme_values(tmp_path):
    n = 4
    cols = {name: np.array([0.1, -1e-310, 1.7976931348623157e308, 2 / 3]) for name in CSV_COLUMNS}
    cols["t"] = np.arange(n, dtype=float)
    cols["clamped"] = np.array([0.0, 1.0, 0.0, 1.0])
    cols["b_guard"] = np.zeros(n)
    log = TrajectoryLog(cols)
    back = read_trajectory_csv(write_trajectory_csv(log, tmp_path / "x.csv"))
    for name in CSV_COLUMNS:
        assert np.array_equal(back[name], cols[name]), name


def test_write_empty_log_refused(tmp_path):
    with pytest.raises(ValueError):
        write_trajectory_csv(TrajectoryLog({n: np.array([]) for n in CSV_COLUMNS}), tmp_path / "e.csv")


@pytest.mark.parametrize("content", [
    "",
    "a,b,c\n1,2,3\n",
    ",".join(CSV_COLUMNS) + "\n",
    ",".join(CSV_COLUMNS) + "\n" + ",".join(["1"] * 5) + "\n",
    ",".join(CSV_COLUMNS) + "\n" + ",".join(["x"] * len(CSV_COLUMNS)) + "\n",
])
def test_malformed_csv(tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(MalformedCsv):
        read_trajectory_csv(path)


@pytest.mark.slow
def test_scenario_a_csv_respects_bounds(tmp_path):
    for label in ("t_d=60", "t_d=70", "t_d=80", "t_d=90"):
        _, log = single_run("section_a", label)
        path = write_trajectory_csv(log, tmp_path / f"{label}.csv")
        with path.open() as fh:
            a_i = np.array([float(row["a_i"]) for row in csv.DictReader(fh)])
        assert a_i.min() > -4.0 and a_i.max() < 8.0


def test_summary_csv(tmp_path):
    rows = [{"label": "a", "t_f": 1.5, "convergence_time": None}, {"label": "b", "t_f": 2.0,
                                                                   "convergence_time": 3.0}]
    path = write_summary_csv(rows, tmp_path / "s.csv")
    back = list(csv.DictReader(path.open()))
    assert back[0]["convergence_time"] == "" and back[1]["t_f"] == "2.0"
