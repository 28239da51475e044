"""Fixed-step closed-loop engagement simulation.

The integrated state is the 7-vector ``(x_i, y_i, v_i, gamma_i, x_t, y_t, a_i)``;
the target's speed and heading are constants. Each step is classical RK4 and
the guidance command is re-evaluated at every stage, unless the step is held.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import trapezoid

from .engagement import (
    COLOCATED_RANGE, V_MIN, EngagementState, RelativeState, VehicleState, relative_from_components,
)
from .errors import CoLocated, GuidanceError, NonFinite, SpeedFloor, ValidationError
from .guidance import EPS_B, EPS_D, GuidanceDiagnostics, GuidanceParams, _core, compute_command
from .saturation import SaturationParams, achieved_accel_rate, nudge_inside

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "t", "x_i", "y_i", "x_t", "y_t", "r", "theta_los", "v_i", "gamma_i", "v_r",
    "v_theta", "t_go", "e", "s", "g", "a_cmd", "a_i", "clamped", "b_guard",
)
EXTRA_COLUMNS = (
    "theta_i", "e_dot", "F", "B", "f_star", "b_star", "a_cmd_raw", "held", "switched",
)

BOUNDARY_LAYER = 0.1

# passing closest approach is only declared inside this many kill radii
PASS_RADIUS_FACTOR = 100.0


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_max: float = 300.0
    kill_radius: float = 1.0
    convergence_eps: float = 0.01
    eps_d: float = EPS_D
    eps_b: float = EPS_B
    v_min: float = V_MIN
    # tanh(S/eps) replaces sign(S); None restores the discontinuous switch
    boundary_layer: Optional[float] = BOUNDARY_LAYER
    command_hold: bool = False
    # constant command replacing the guidance law (open-loop and actuator studies)
    command_override: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not self.t_max > 0:
            raise ValidationError("t_max must be positive")
        if not self.kill_radius > 0:
            raise ValidationError("kill_radius must be positive")
        if not self.convergence_eps > 0:
            raise ValidationError("convergence_eps must be positive")
        if self.boundary_layer is not None and not self.boundary_layer > 0:
            raise ValidationError("boundary_layer must be positive when set")
        if self.command_override is not None and not math.isfinite(self.command_override):
            raise ValidationError("command_override must be finite")


@dataclass(frozen=True)
class RunSpec:
    """One fully specified engagement: initial state plus all parameters."""

    initial: EngagementState
    guidance: GuidanceParams
    saturation: SaturationParams
    config: SimConfig = SimConfig()
    label: str = "run"


class StepRecord(NamedTuple):
    t_el: float
    interceptor: VehicleState
    target: VehicleState
    rel: RelativeState
    diag: GuidanceDiagnostics
    a_i: float
    a_cmd: float
    held: bool


@dataclass
class TrajectoryLog:
    """Column-oriented per-step log.

    ``columns`` maps every name in :data:`CSV_COLUMNS` (and, for logs produced
    in-process, :data:`EXTRA_COLUMNS`) to a 1-D array of equal length.
    """

    columns: dict[str, np.ndarray]
    events: list[tuple[float, str]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    def event_count(self, kind: str) -> int:
        return sum(1 for _, k in self.events if k == kind)


@dataclass
class SimResult:
    label: str
    intercepted: bool
    t_f: Optional[float]
    miss: float
    impact_time_error: Optional[float]
    convergence_time: Optional[float]
    control_effort_j: float
    peak_a_i: float
    peak_a_cmd: float
    clamp_events: int = 0
    guard_events: int = 0
    speed_floor_events: int = 0
    aborted: Optional[str] = None

    def summary_row(self) -> dict:
        return {
            "label": self.label,
            "intercepted": self.intercepted,
            "t_f": self.t_f,
            "miss": self.miss,
            "impact_time_error": self.impact_time_error,
            "convergence_time": self.convergence_time,
            "control_effort_j": self.control_effort_j,
            "peak_a_i": self.peak_a_i,
            "peak_a_cmd": self.peak_a_cmd,
            "clamp_events": self.clamp_events,
            "guard_events": self.guard_events,
            "speed_floor_events": self.speed_floor_events,
            "aborted": self.aborted,
        }


class _Guard(Exception):
    pass


class _Loop:
    """Integrator closure over one run's constant parameters."""

    def __init__(self, v_t: float, gamma_t: float, gp: GuidanceParams, sp: SaturationParams,
                 cfg: SimConfig):
        self.v_t = v_t
        self.gamma_t = gamma_t
        self.vtx = v_t * math.cos(gamma_t)
        self.vty = v_t * math.sin(gamma_t)
        self.gp = gp
        self.sp = sp
        self.cfg = cfg
        self._mode = (False, False)
        self.switched = False

    def relative(self, y) -> RelativeState:
        return relative_from_components(y[0], y[1], y[2], y[3], y[4], y[5], self.v_t, self.gamma_t)

    def command(self, y, t, rel) -> GuidanceDiagnostics:
        cfg = self.cfg
        return compute_command(y[6], t, rel, self.gp, self.sp, cfg.eps_d, cfg.eps_b,
                               cfg.boundary_layer)

    def _accel_rate(self, a_i, cmd):
        if a_i == self.sp.a_max or a_i == self.sp.a_min:
            a_i = nudge_inside(a_i, self.sp)
        return achieved_accel_rate(a_i, cmd, self.sp)

    def first_stage(self, y, rel, diag, hold):
        v_i, g_i, a_i = y[2], y[3], y[6]
        if v_i < self.cfg.v_min:
            raise SpeedFloor(f"interceptor speed {v_i:.4g} m/s below floor {self.cfg.v_min} m/s")
        if hold is None:
            if diag.b_star_guard:
                raise _Guard
            cmd = diag.a_cmd_clamped
        else:
            cmd = hold
        th = rel.theta_i
        return (v_i * math.cos(g_i), v_i * math.sin(g_i), a_i * math.sin(th),
                a_i * math.cos(th) / v_i, self.vtx, self.vty, self._accel_rate(a_i, cmd))

    def stage(self, y, t, hold):
        """State derivative at an intermediate RK stage (no diagnostics kept)."""
        x_i, y_i, v_i, g_i, x_t, y_t, a_i = y
        if v_i < self.cfg.v_min:
            raise SpeedFloor(f"interceptor speed {v_i:.4g} m/s below floor {self.cfg.v_min} m/s")
        if a_i == self.sp.a_max or a_i == self.sp.a_min:
            a_i = nudge_inside(a_i, self.sp)
        cos_g = math.cos(g_i)
        sin_g = math.sin(g_i)
        dx = x_t - x_i
        dy = y_t - y_i
        los = math.atan2(dy, dx)
        # lead angles only enter through sin/cos here, so no wrapping
        sin_th = math.sin(g_i - los)
        cos_th = math.cos(g_i - los)
        if hold is None:
            r = math.hypot(dx, dy)
            if r < COLOCATED_RANGE:
                raise CoLocated(f"range {r:.3e} m below {COLOCATED_RANGE:.0e} m")
            th_t = self.gamma_t - los
            v_r = self.v_t * math.cos(th_t) - v_i * cos_th
            v_theta = self.v_t * math.sin(th_t) - v_i * sin_th
            cfg = self.cfg
            fields, gain = _core(r, v_r, v_theta, a_i, t, self.gp, self.sp,
                                 cfg.eps_d, cfg.eps_b, cfg.boundary_layer)
            if fields[12]:
                raise _Guard
            if (fields[7] * fields[6] > 0.0, fields[11]) != self._mode:
                self.switched = True
            rate = gain * fields[10] - self.sp.lam * a_i
        else:
            rate = achieved_accel_rate(a_i, hold, self.sp)
        return (v_i * cos_g, v_i * sin_g, a_i * sin_th, a_i * cos_th / v_i,
                self.vtx, self.vty, rate)

    def rk4(self, y, t, h, hold, rel0, diag0):
        self._mode = (diag0.s_val * diag0.b_star > 0.0, diag0.clamped)
        self.switched = False
        k1 = self.first_stage(y, rel0, diag0, hold)
        hh = 0.5 * h
        k2 = self.stage(_axpy(y, hh, k1), t + hh, hold)
        k3 = self.stage(_axpy(y, hh, k2), t + hh, hold)
        k4 = self.stage(_axpy(y, h, k3), t + h, hold)
        h6 = h / 6.0
        return tuple([
            y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(7)
        ])

    def step(self, y, t, prev_cmd, rel0=None):
        """Advance one step; returns ``(y_next, rel0, diag0, applied_cmd, held)``.

        ``self.switched`` is left set when the switching term or the clamp
        state changed between RK stages of this step.
        """
        h = self.cfg.dt
        if rel0 is None:
            rel0 = self.relative(y)
        diag0 = self.command(y, t, rel0)
        hold = None
        override = self.cfg.command_override
        if override is not None:
            hold = override
        elif diag0.b_star_guard:
            hold = prev_cmd
        elif self.cfg.command_hold:
            hold = diag0.a_cmd_clamped
        try:
            y_next = self.rk4(y, t, h, hold, rel0, diag0)
        except _Guard:
            hold = prev_cmd
            y_next = self.rk4(y, t, h, hold, rel0, diag0)
        if not math.isfinite(sum(y_next)):
            raise NonFinite(f"non-finite state at t={t + h:.6f}: {y_next}")
        a_next = y_next[6]
        if a_next == self.sp.a_max or a_next == self.sp.a_min:
            y_next = y_next[:6] + (nudge_inside(a_next, self.sp),)
        applied = diag0.a_cmd_clamped if hold is None else hold
        held = override is None and (
            diag0.b_star_guard or (hold is not None and not self.cfg.command_hold))
        return y_next, rel0, diag0, applied, held


def _axpy(y, h, k):
    return (y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3],
            y[4] + h * k[4], y[5] + h * k[5], y[6] + h * k[6])


def _pack(state: EngagementState):
    mi = state.interceptor
    tg = state.target
    return (mi.x, mi.y, mi.speed, mi.gamma, tg.x, tg.y, state.a_i)


def _unpack(y, v_t, gamma_t, t) -> EngagementState:
    return EngagementState(
        VehicleState(y[0], y[1], y[2], y[3]), VehicleState(y[4], y[5], v_t, gamma_t), y[6], t,
    )


def step(state: EngagementState, cfg: SimConfig, gp: GuidanceParams, sp: SaturationParams,
         prev_cmd: float = 0.0) -> tuple[EngagementState, StepRecord]:
    """Advance the closed loop by one ``cfg.dt``.

    ``prev_cmd`` is the command held when ``B*`` vanishes during the step.
    The returned record describes the state at the *start* of the step.
    """
    loop = _Loop(state.target.speed, state.target.gamma, gp, sp, cfg)
    y = _pack(state)
    y_next, rel0, diag0, applied, held = loop.step(y, state.t_el, prev_cmd)
    t_next = state.t_el + cfg.dt
    record = StepRecord(state.t_el, state.interceptor, state.target, rel0, diag0,
                        state.a_i, applied, held)
    return _unpack(y_next, state.target.speed, state.target.gamma, t_next), record


def _closest_approach(log: TrajectoryLog, target_velocity) -> float:
    """Miss distance from straight-line extrapolation of the final sample."""
    cols = log.columns
    px = cols["x_t"][-1] - cols["x_i"][-1]
    py = cols["y_t"][-1] - cols["y_i"][-1]
    vx = target_velocity[0] - cols["v_i"][-1] * math.cos(cols["gamma_i"][-1])
    vy = target_velocity[1] - cols["v_i"][-1] * math.sin(cols["gamma_i"][-1])
    vv = vx * vx + vy * vy
    tau = 0.0 if vv == 0.0 else max(0.0, -(px * vx + py * vy) / vv)
    return math.hypot(px + vx * tau, py + vy * tau)


def _refine_intercept_time(t: np.ndarray, r: np.ndarray, level: float) -> float:
    """Time where the quadratic through the last three ``(t, r)`` samples
    crosses ``r = level``, searched within the final step.

    Falls back to the last sample when the parabola does not cross there.
    """
    if len(t) < 3:
        return float(t[-1])
    t0 = t[-1]
    coeffs = np.polyfit(t[-3:] - t0, r[-3:], 2)
    coeffs[-1] -= level
    lo = t[-2] - t0
    roots = [x.real for x in np.roots(coeffs) if abs(x.imag) < 1e-12 and lo <= x.real <= 0.0]
    return float(t0 + min(roots)) if roots else float(t0)


def convergence_time(t: np.ndarray, e: np.ndarray, eps: float) -> Optional[float]:
    """First time after which ``|e| < eps`` holds for every remaining sample."""
    bad = np.nonzero(~(np.abs(e) < eps))[0]
    if len(bad) == 0:
        return float(t[0])
    last_bad = bad[-1]
    if last_bad == len(t) - 1:
        return None
    return float(t[last_bad + 1])


def compute_metrics(log: TrajectoryLog, gp: GuidanceParams, convergence_eps: float = 0.01,
                    kill_radius: float = 1.0, label: str = "run") -> SimResult:
    """Outcome metrics of a finished log.

    ``J`` is the trapezoidal integral of ``a_i**2`` over the logged samples,
    which end at interception.
    """
    if len(log) == 0:
        raise ValueError("empty trajectory log")
    t = log["t"]
    r = log["r"]
    intercepted = bool(r[-1] <= kill_radius)
    if intercepted:
        t_f = _refine_intercept_time(t, r, kill_radius)
        if "target_velocity" in log.meta:
            miss = min(float(r[-1]), _closest_approach(log, log.meta["target_velocity"]))
        else:
            miss = float(r[-1])
    else:
        t_f = None
        miss = float(np.min(r))
    a_i = log["a_i"]
    j = float(trapezoid(a_i * a_i, t)) if len(t) > 1 else 0.0
    a_cmd = log["a_cmd"]
    finite_cmd = a_cmd[np.isfinite(a_cmd)]
    return SimResult(
        label=label,
        intercepted=intercepted,
        t_f=t_f,
        miss=miss,
        impact_time_error=None if t_f is None else t_f - gp.t_d,
        convergence_time=convergence_time(t, log["e"], convergence_eps) if intercepted else None,
        control_effort_j=j,
        peak_a_i=float(np.max(np.abs(a_i))),
        peak_a_cmd=float(np.max(np.abs(finite_cmd))) if len(finite_cmd) else 0.0,
        clamp_events=log.event_count("clamp"),
        guard_events=log.event_count("b_star_guard"),
        speed_floor_events=log.event_count("speed_floor"),
    )


def simulate(spec: RunSpec) -> tuple[SimResult, TrajectoryLog]:
    """Integrate one engagement until interception, the horizon, or an abort.

    Aborts (speed floor, non-finite state, guidance singularities other than
    a vanishing ``B*``) are reported through ``SimResult.aborted`` rather than
    raised, together with the partial log.
    """
    cfg, gp, sp = spec.config, spec.guidance, spec.saturation
    tg = spec.initial.target
    loop = _Loop(tg.speed, tg.gamma, gp, sp, cfg)
    y = _pack(spec.initial)
    t = spec.initial.t_el
    n_max = int(math.floor((cfg.t_max - t) / cfg.dt + 1e-9))
    rows = {name: [] for name in CSV_COLUMNS + EXTRA_COLUMNS}
    events: list[tuple[float, str]] = []
    prev_cmd = 0.0
    aborted = None
    r_prev = math.inf

    def record(y, t, rel, diag, applied, held, switched=False):
        rows["t"].append(t)
        rows["x_i"].append(y[0])
        rows["y_i"].append(y[1])
        rows["x_t"].append(y[4])
        rows["y_t"].append(y[5])
        rows["r"].append(rel.r)
        rows["theta_los"].append(rel.theta_los)
        rows["v_i"].append(y[2])
        rows["gamma_i"].append(y[3])
        rows["v_r"].append(rel.v_r)
        rows["v_theta"].append(rel.v_theta)
        rows["t_go"].append(diag.t_go)
        rows["e"].append(diag.e)
        rows["s"].append(diag.s_val)
        rows["g"].append(diag.g_val)
        rows["a_cmd"].append(applied)
        rows["a_i"].append(y[6])
        rows["clamped"].append(int(diag.clamped))
        rows["b_guard"].append(int(diag.b_star_guard))
        rows["theta_i"].append(rel.theta_i)
        rows["e_dot"].append(diag.e_dot)
        rows["F"].append(diag.F)
        rows["B"].append(diag.B)
        rows["f_star"].append(diag.f_star)
        rows["b_star"].append(diag.b_star)
        rows["a_cmd_raw"].append(diag.a_cmd_raw)
        rows["held"].append(int(held))
        rows["switched"].append(int(switched))
        if diag.clamped:
            events.append((t, "clamp"))
        if diag.b_star_guard:
            events.append((t, "b_star_guard"))

    def final_command(diag, prev):
        if cfg.command_override is not None:
            return cfg.command_override
        return prev if diag.b_star_guard else diag.a_cmd_clamped

    rel0 = loop.relative(y)
    diag_launch = loop.command(y, t, rel0)
    if gp.t_d - t < diag_launch.t_go:
        log.warning("%s: desired time-to-go %.3f s is below the TPNG time-to-go %.3f s; "
                    "impact time may be infeasible", spec.label, gp.t_d - t, diag_launch.t_go)
        events.append((t, "impact_time_infeasible"))

    for k in range(n_max + 1):
        t = spec.initial.t_el + k * cfg.dt
        try:
            rel = loop.relative(y)
            if rel.r <= cfg.kill_radius or (rel.r > r_prev and r_prev < PASS_RADIUS_FACTOR * cfg.kill_radius):
                diag = loop.command(y, t, rel)
                record(y, t, rel, diag, final_command(diag, prev_cmd), diag.b_star_guard)
                break
            if k == n_max:
                diag = loop.command(y, t, rel)
                record(y, t, rel, diag, final_command(diag, prev_cmd), diag.b_star_guard)
                break
            r_prev = rel.r
            y_next, rel, diag, applied, held = loop.step(y, t, prev_cmd, rel)
        except SpeedFloor as exc:
            events.append((t, "speed_floor"))
            aborted = f"speed_floor: {exc}"
            break
        except GuidanceError as exc:
            aborted = f"{type(exc).__name__}: {exc}"
            break
        record(y, t, rel, diag, applied, held, loop.switched)
        prev_cmd = applied
        y = y_next

    columns = {name: np.asarray(vals, dtype=float) for name, vals in rows.items()}
    meta = {"label": spec.label, "t_d": gp.t_d, "a_min": sp.a_min, "a_max": sp.a_max,
            "variant": gp.variant.value, "dt": cfg.dt,
            "target_velocity": tg.velocity}
    trajectory = TrajectoryLog(columns, events, meta)
    if len(trajectory) == 0:
        raise NonFinite(f"{spec.label}: run aborted before the first record ({aborted})")
    result = compute_metrics(trajectory, gp, cfg.convergence_eps, cfg.kill_radius, spec.label)
    result.aborted = aborted
    if aborted:
        result.intercepted = False
        log.error("%s aborted: %s", spec.label, aborted)
    meta["intercepted"] = result.intercepted
    return result, trajectory


def run(spec: RunSpec) -> tuple[SimResult, TrajectoryLog]:
    """Alias of :func:`simulate` matching the command-line vocabulary."""
    return simulate(spec)
