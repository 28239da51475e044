"""Scenario files and trajectory CSV serialization.

Scenario files are INI documents (see ``scenarios/`` and the README for the
full grammar). Every key is optional; an empty document is the default
70/50 m/s engagement at 5 km with bounds -4 < a_i < 8 m/s^2. Angles are given
in degrees. Sweep axes take comma-separated lists and expand as a Cartesian
product.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .engagement import EngagementState, VehicleState
from .errors import GuidanceError, ScenarioParseError, ValidationError
from .guidance import GuidanceParams, Variant, check_proportionality
from .saturation import SaturationParams
from .sim import BOUNDARY_LAYER, CSV_COLUMNS, RunSpec, SimConfig, TrajectoryLog

SCHEMA_VERSION = 1
T_MAX_MARGIN = 30.0

SECTIONS = {
    "scenario": {"schema_version", "name", "variant"},
    "geometry": {"r0", "theta0_deg", "x_i", "y_i", "x_t", "y_t",
                 "v_i", "v_t", "gamma_i_deg", "gamma_t_deg"},
    "saturation": {"a_min", "a_max", "n", "lambda", "chi"},
    "guidance": {"c", "c_factor", "alpha", "m", "big_m", "theta_g", "kappa", "eta", "t_d"},
    "sim": {"dt", "t_max", "kill_radius", "convergence_eps", "eps_d", "eps_b", "v_min",
            "boundary_layer", "command_hold"},
    "sweep": {"t_d", "gamma_i_deg", "gamma_t_deg", "v_t", "variant"},
    "output": {"dir", "plots"},
}

GEOMETRY_DEFAULTS = {"r0": 5000.0, "theta0_deg": 0.0, "v_i": 70.0, "v_t": 50.0,
                     "gamma_i_deg": 15.0, "gamma_t_deg": 120.0}
GUIDANCE_DEFAULTS = {"c_factor": 3.0, "alpha": 1.2, "big_m": 1.0, "theta_g": 0.6,
                     "kappa": 5.0, "eta": 1, "t_d": 70.0}
CARTESIAN_KEYS = ("x_i", "y_i", "x_t", "y_t")
FLAG_COLUMNS = ("clamped", "b_guard")


class MalformedCsv(GuidanceError, ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """A parsed scenario: base values plus sweep axes.

    ``geometry`` holds the interceptor/target initial conditions (positions
    in metres, speeds in m/s, headings in degrees). ``guidance`` holds the
    keyword arguments of :class:`GuidanceParams` except ``c``, ``t_d`` and
    ``variant``, which are resolved per run.
    """

    name: str = "scenario"
    schema_version: int = SCHEMA_VERSION
    variant: Variant = Variant.EXPONENTIAL
    geometry: dict = field(default_factory=dict)
    guidance: dict = field(default_factory=dict)
    c: Optional[float] = None
    c_factor: float = 3.0
    t_d: float = 70.0
    saturation: SaturationParams = SaturationParams()
    sim: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    out_dir: Optional[str] = None
    plots: bool = True

    def axes(self) -> dict[str, list]:
        """Sweep axes with the base value filled in for unswept ones."""
        base = {
            "t_d": [self.t_d],
            "gamma_i_deg": [self.geometry["gamma_i_deg"]],
            "gamma_t_deg": [self.geometry["gamma_t_deg"]],
            "v_t": [self.geometry["v_t"]],
            "variant": [self.variant],
        }
        base.update(self.sweep)
        return base

    def runs(self) -> list[RunSpec]:
        axes = self.axes()
        names = list(axes)
        varying = [n for n in names if len(axes[n]) > 1]
        out = []
        for combo in itertools.product(*(axes[n] for n in names)):
            values = dict(zip(names, combo))
            label = "_".join(f"{n}={_fmt(values[n])}" for n in varying) or self.name
            out.append(self._build(values, label))
        return out

    def _build(self, values: dict, label: str) -> RunSpec:
        geo = self.geometry
        v_t = float(values["v_t"])
        v_i = geo["v_i"]
        interceptor = VehicleState(geo["x_i"], geo["y_i"], v_i, math.radians(values["gamma_i_deg"]))
        target = VehicleState(geo["x_t"], geo["y_t"], v_t, math.radians(values["gamma_t_deg"]))
        c = self.c if self.c is not None else self.c_factor * (v_i + v_t)
        check_proportionality(c, v_i, v_t)
        t_d = float(values["t_d"])
        gp = GuidanceParams(c=c, t_d=t_d, variant=Variant(values["variant"]), **self.guidance)
        sim = dict(self.sim)
        sim.setdefault("t_max", t_d + T_MAX_MARGIN)
        return RunSpec(EngagementState(interceptor, target, 0.0, 0.0), gp, self.saturation,
                       SimConfig(**sim), label)

    def with_overrides(self, **kwargs) -> "ScenarioSpec":
        """Copy with command-line overrides applied and re-validated.

        ``None`` means "not given". A boundary layer may be passed as text,
        where ``"off"`` disables smoothing.
        """
        sim = dict(self.sim)
        sweep = dict(self.sweep)
        updates = {}
        for key, value in kwargs.items():
            if value is None:
                continue
            if key == "t_d":
                updates["t_d"] = float(value)
                sweep.pop("t_d", None)
            elif key == "variant":
                updates["variant"] = Variant(value)
                sweep.pop("variant", None)
            elif key == "boundary_layer":
                sim[key] = parse_boundary_layer(value) if isinstance(value, str) else value
            elif key in ("dt", "command_hold", "t_max"):
                sim[key] = value
            elif key == "out_dir":
                updates["out_dir"] = value
            elif key == "plots":
                updates["plots"] = bool(value)
            else:
                raise ValueError(f"unknown override {key!r}")
        spec = replace(self, sim=sim, sweep=sweep, **updates)
        spec.runs()
        return spec


def _fmt(value) -> str:
    if isinstance(value, Variant):
        return value.value
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return lineno
    return None


class _Reader:
    def __init__(self, text: str, parser: configparser.ConfigParser):
        self.text = text
        self.parser = parser

    def _raw(self, section, key):
        if not self.parser.has_section(section):
            return None
        return self.parser[section].get(key)

    def error(self, section, key, message):
        return ScenarioParseError(message, _line_of(self.text, section, key), f"{section}.{key}")

    def number(self, section, key, default=None, kind=float):
        raw = self._raw(section, key)
        if raw is None:
            return default
        try:
            value = kind(raw.strip())
        except ValueError:
            raise self.error(section, key, f"expected a number, got {raw.strip()!r}") from None
        if kind is float and not math.isfinite(value):
            raise self.error(section, key, f"value must be finite, got {raw.strip()!r}")
        return value

    def integer(self, section, key, default=None):
        raw = self._raw(section, key)
        if raw is None:
            return default
        try:
            value = float(raw.strip())
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {raw.strip()!r}") from None
        if not value.is_integer():
            raise self.error(section, key, f"expected an integer, got {raw.strip()!r}")
        return int(value)

    def boolean(self, section, key, default=None):
        if self._raw(section, key) is None:
            return default
        try:
            return self.parser[section].getboolean(key)
        except ValueError:
            raise self.error(section, key, "expected on/off, true/false or yes/no") from None

    def text_value(self, section, key, default=None):
        raw = self._raw(section, key)
        return default if raw is None else raw.strip()

    def number_list(self, section, key):
        raw = self._raw(section, key)
        if raw is None:
            return None
        items = [x.strip() for x in raw.strip().strip("[]").split(",") if x.strip()]
        if not items:
            raise self.error(section, key, "sweep axis must not be empty")
        try:
            return [float(x) for x in items]
        except ValueError:
            raise self.error(section, key, f"expected a list of numbers, got {raw.strip()!r}") from None


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario document.

    Raises:
        ScenarioParseError: malformed syntax, unknown keys, or non-numeric values
            (carries the offending line and field).
        ValidationError: well-formed values that violate a parameter invariant.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError("key outside of any [section]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ScenarioParseError("duplicate key", exc.lineno, f"{exc.section}.{exc.option}") from None
    except configparser.DuplicateSectionError as exc:
        raise ScenarioParseError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ScenarioParseError("malformed line", lineno) from None

    for section in parser.sections():
        if section not in SECTIONS:
            raise ScenarioParseError(f"unknown section [{section}]", _line_of_section(text, section))
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ScenarioParseError("unknown key", _line_of(text, section, key),
                                         f"{section}.{key}")
    rd = _Reader(text, parser)

    version = rd.integer("scenario", "schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise rd.error("scenario", "schema_version",
                       f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    name = rd.text_value("scenario", "name", "scenario")
    variant_raw = rd.text_value("scenario", "variant", Variant.EXPONENTIAL.value)
    try:
        variant = Variant(variant_raw.lower())
    except ValueError:
        raise rd.error("scenario", "variant", "variant must be 'standard' or 'exponential'") from None

    geometry = {k: rd.number("geometry", k, v) for k, v in GEOMETRY_DEFAULTS.items()}
    cart = {k: rd.number("geometry", k) for k in CARTESIAN_KEYS}
    given_cart = [k for k, v in cart.items() if v is not None]
    polar_given = any(rd.number("geometry", k) is not None for k in ("r0", "theta0_deg"))
    if given_cart:
        if polar_given:
            raise ValidationError("give either r0/theta0_deg or x_i/y_i/x_t/y_t, not both")
        if len(given_cart) != len(CARTESIAN_KEYS):
            raise ValidationError("Cartesian geometry needs all of x_i, y_i, x_t, y_t")
        geometry.update(cart)
    else:
        r0, th0 = geometry["r0"], math.radians(geometry["theta0_deg"])
        if not r0 > 0:
            raise ValidationError("r0 must be positive")
        geometry.update(x_i=0.0, y_i=0.0, x_t=r0 * math.cos(th0), y_t=r0 * math.sin(th0))
    if not geometry["v_i"] > 0:
        raise ValidationError("v_i must be positive")
    if not geometry["v_t"] >= 0:
        raise ValidationError("v_t must be non-negative")

    sat_kwargs = {
        "a_min": rd.number("saturation", "a_min", -4.0),
        "a_max": rd.number("saturation", "a_max", 8.0),
        "n": rd.integer("saturation", "n", 1),
        "lam": rd.number("saturation", "lambda", 0.15),
        "chi": rd.number("saturation", "chi", None),
    }
    saturation = SaturationParams(**sat_kwargs)

    big_m = rd.number("guidance", "big_m", None)
    big_m = rd.number("guidance", "m", GUIDANCE_DEFAULTS["big_m"]) if big_m is None else big_m
    guidance = {
        "alpha": rd.number("guidance", "alpha", GUIDANCE_DEFAULTS["alpha"]),
        "big_m": big_m,
        "theta_g": rd.number("guidance", "theta_g", GUIDANCE_DEFAULTS["theta_g"]),
        "kappa": rd.number("guidance", "kappa", GUIDANCE_DEFAULTS["kappa"]),
        "eta": rd.integer("guidance", "eta", GUIDANCE_DEFAULTS["eta"]),
    }

    sim = {}
    for key in ("dt", "t_max", "kill_radius", "convergence_eps", "eps_d", "eps_b", "v_min"):
        value = rd.number("sim", key)
        if value is not None:
            sim[key] = value
    bl_raw = rd.text_value("sim", "boundary_layer")
    if bl_raw is not None:
        sim["boundary_layer"] = parse_boundary_layer(bl_raw, rd)
    hold = rd.boolean("sim", "command_hold")
    if hold is not None:
        sim["command_hold"] = hold

    sweep = {}
    for key in ("t_d", "gamma_i_deg", "gamma_t_deg", "v_t"):
        values = rd.number_list("sweep", key)
        if values is not None:
            sweep[key] = values
    variants_raw = rd.text_value("sweep", "variant")
    if variants_raw is not None:
        try:
            sweep["variant"] = [Variant(v.strip().lower()) for v in variants_raw.strip("[]").split(",")
                                if v.strip()]
        except ValueError:
            raise rd.error("sweep", "variant", "variants must be 'standard' or 'exponential'") from None
        if not sweep["variant"]:
            raise rd.error("sweep", "variant", "sweep axis must not be empty")

    spec = ScenarioSpec(
        name=name,
        schema_version=version,
        variant=variant,
        geometry=geometry,
        guidance=guidance,
        c=rd.number("guidance", "c"),
        c_factor=rd.number("guidance", "c_factor", GUIDANCE_DEFAULTS["c_factor"]),
        t_d=rd.number("guidance", "t_d", GUIDANCE_DEFAULTS["t_d"]),
        saturation=saturation,
        sim=sim,
        sweep=sweep,
        out_dir=rd.text_value("output", "dir"),
        plots=rd.boolean("output", "plots", True),
    )
    # builds every run once so parameter invariants surface at parse time
    spec.runs()
    return spec


def parse_boundary_layer(raw: str, rd: Optional[_Reader] = None) -> Optional[float]:
    """``off``/``none``/``0`` disable smoothing; otherwise a positive width."""
    raw = raw.strip().lower()
    if raw in ("off", "none", "0", "0.0"):
        return None
    try:
        value = float(raw)
    except ValueError:
        if rd is not None:
            raise rd.error("sim", "boundary_layer", f"expected a width or 'off', got {raw!r}") from None
        raise ValidationError(f"expected a width or 'off', got {raw!r}") from None
    return value


def _line_of_section(text: str, section: str) -> Optional[int]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip().lower() == f"[{section}]":
            return lineno
    return None


def load_scenario(path) -> ScenarioSpec:
    return parse_scenario(Path(path).read_text())


def default_scenario() -> ScenarioSpec:
    return parse_scenario("")


def write_trajectory_csv(log: TrajectoryLog, path) -> Path:
    """Write the per-step log using the fixed column schema.

    Floats are written with ``repr`` so re-reading recovers them exactly.
    """
    if len(log) == 0:
        raise ValueError("refusing to write an empty trajectory log")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # tolist() yields Python floats, whose repr is the shortest round-trip form
    cols = [[str(int(v)) for v in log[name].tolist()] if name in FLAG_COLUMNS
            else [repr(v) for v in np.asarray(log[name], float).tolist()] for name in CSV_COLUMNS]
    with path.open("w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        fh.writelines(",".join(row) + "\n" for row in zip(*cols))
    return path


def read_trajectory_csv(path) -> TrajectoryLog:
    """Read a trajectory CSV back into a :class:`TrajectoryLog`.

    Raises:
        MalformedCsv: empty file, wrong header, ragged rows or non-numeric cells.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise MalformedCsv(f"{path}: header does not match the trajectory schema")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise MalformedCsv(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} cells, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise MalformedCsv(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return TrajectoryLog({name: data[:, i].copy() for i, name in enumerate(CSV_COLUMNS)},
                         meta={"source": str(path)})


def write_summary_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise ValueError("no summary rows")
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return path


__all__ = [
    "BOUNDARY_LAYER", "MalformedCsv", "ScenarioSpec", "default_scenario", "load_scenario",
    "parse_boundary_layer", "parse_scenario", "read_trajectory_csv", "write_summary_csv",
    "write_trajectory_csv",
]
