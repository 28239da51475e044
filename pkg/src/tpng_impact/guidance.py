"""Impact-time guidance on top of true proportional navigation (TPNG).

The exact TPNG time-to-go is

    t_go = -r (V_r + 2c) / (V_theta**2 + V_r**2 + 2 c V_r)

and the impact-time error ``e = t_go - (t_d - t_el)`` obeys

    de/dt   = F + B a_i
    d2e/dt2 = F* + B* a_cmd

once the actuator model is substituted. A sliding-mode command drives
``S = de/dt + alpha*e`` to zero, optionally with the exponential gain
shaping ``g(S) = theta_g + (1 - theta_g) exp(-kappa |S|**eta)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from scipy.integrate import quad

from .engagement import EngagementState, RelativeState
from .errors import BStarSingular, DegenerateDenominator, ValidationError
from .saturation import SaturationParams, saturation_gain

log = logging.getLogger(__name__)

EPS_D = 1e-6
EPS_B = 1e-8
C_MIN_RATIO = 1.5
C_WARN_RATIO = 3.0


class Variant(str, enum.Enum):
    STANDARD = "standard"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class GuidanceParams:
    """Gains of the sliding-mode impact-time law.

    ``theta_g`` is the floor of the gain-shaping function; ``big_m`` is the
    reaching gain. ``t_d`` is the desired impact time measured from launch.
    """

    c: float
    t_d: float
    alpha: float = 1.2
    big_m: float = 1.0
    theta_g: float = 0.6
    kappa: float = 5.0
    eta: int = 1
    variant: Variant = Variant.EXPONENTIAL

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.c > 0:
            raise ValidationError("c must be positive")
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if not self.big_m > 0:
            raise ValidationError("M must be positive")
        if not 0.0 < self.theta_g < 1.0:
            raise ValidationError("theta_g must lie in (0,1)")
        if not self.kappa > 0:
            raise ValidationError("kappa must be positive")
        if int(self.eta) != self.eta or self.eta < 1:
            raise ValidationError("eta must be a strictly positive integer")
        if not self.t_d > 0:
            raise ValidationError("t_d must be positive")
        object.__setattr__(self, "eta", int(self.eta))


def check_proportionality(c: float, v_i0: float, v_t: float) -> None:
    """Enforce ``c >> (V_I + V_T)/2`` as ``c >= 1.5 (V_I + V_T)``.

    Values between 1.5x and 3x only log a warning.
    """
    total = v_i0 + v_t
    if c < C_MIN_RATIO * total:
        raise ValidationError(
            f"c={c:g} must be at least {C_MIN_RATIO}*(V_I0+V_T)={C_MIN_RATIO * total:g}"
        )
    if c < C_WARN_RATIO * total:
        log.warning("c=%g is below %g*(V_I0+V_T)=%g; interception margin is thin",
                    c, C_WARN_RATIO, C_WARN_RATIO * total)


class GuidanceDiagnostics(NamedTuple):
    t_go: float
    e: float
    e_dot: float
    F: float
    B: float
    f_star: float
    b_star: float
    s_val: float
    g_val: float
    a_cmd_raw: float
    a_cmd_clamped: float
    clamped: bool
    b_star_guard: bool


def _denominator(rel: RelativeState, c: float, eps_d: float) -> float:
    d = rel.v_theta * rel.v_theta + rel.v_r * rel.v_r + 2.0 * c * rel.v_r
    if abs(d) <= eps_d:
        raise DegenerateDenominator(f"|V_theta^2 + V_r^2 + 2cV_r| = {abs(d):.3e}")
    return d


def time_to_go(rel: RelativeState, c: float, eps_d: float = EPS_D) -> float:
    """Exact TPNG time-to-go [s]."""
    d = _denominator(rel, c, eps_d)
    return -rel.r * (rel.v_r + 2.0 * c) / d


def first_order_terms(rel: RelativeState, c: float, eps_d: float = EPS_D) -> tuple[float, float]:
    """Drift ``F`` and input gain ``B`` of ``de/dt = F + B a_i``."""
    d = _denominator(rel, c, eps_d)
    k = (rel.v_r + 2.0 * c) / (d * d)
    return 2.0 * c * k * rel.v_theta ** 2, -2.0 * k * rel.v_theta * rel.r


def _terms(r, vr, vt, a_i, c, lam, gain, d):
    """``(F, B, F*, B*)`` given the time-to-go denominator ``d``."""
    thd = vt / r
    d2 = d * d
    d3 = d2 * d
    w = vr + 2.0 * c
    vt2 = vt * vt
    vt3 = vt2 * vt
    f = 2.0 * c * w * vt2 / d2
    b = -2.0 * w * vt * r / d2
    f_star = (
        2.0 * c * thd * vt * (vt2 - 2.0 * vr * vr - 4.0 * c * vr) / d2
        - 4.0 * c * vt * w * a_i / d2
        - 8.0 * c * w * vt3 * (c * thd - a_i) / d3
        - 2.0 * a_i * (vt3 - r * w * a_i) / d2
        + 8.0 * vt2 * a_i * w * (c * vt - r * a_i) / d3
        + 2.0 * w * vt * r * lam * a_i / d2
    )
    return f, b, f_star, b * gain


def second_order_terms(state: EngagementState, rel: RelativeState, gp: GuidanceParams,
                       sp: SaturationParams, eps_d: float = EPS_D) -> tuple[float, float]:
    """Drift ``F*`` and input gain ``B*`` of ``d2e/dt2 = F* + B* a_cmd``."""
    gain = saturation_gain(state.a_i, sp)
    d = _denominator(rel, gp.c, eps_d)
    _, _, f_star, b_star = _terms(rel.r, rel.v_r, rel.v_theta, state.a_i, gp.c, sp.lam, gain, d)
    return f_star, b_star


def sliding_surface(e: float, e_dot: float, alpha: float) -> float:
    return e_dot + alpha * e


def gain_shaping(s_val: float, theta_g: float, kappa: float, eta: int) -> float:
    """Exponential gain shaping; 1 on the surface, tends to ``theta_g`` far from it."""
    return theta_g + (1.0 - theta_g) * math.exp(-kappa * abs(s_val) ** eta)


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _core(r, vr, vt, a_i, t_el, gp, sp, eps_d, eps_b, boundary_layer):
    """Scalar command evaluation shared by the library and the integrator.

    Returns ``(diag_fields, gain)`` where ``diag_fields`` is the tuple of
    :class:`GuidanceDiagnostics` fields and ``gain`` the saturation gain at ``a_i``.
    """
    c = gp.c
    d = vt * vt + vr * vr + 2.0 * c * vr
    if abs(d) <= eps_d:
        raise DegenerateDenominator(f"|V_theta^2 + V_r^2 + 2cV_r| = {abs(d):.3e}")
    gain = saturation_gain(a_i, sp)
    f, b, f_star, b_star = _terms(r, vr, vt, a_i, c, sp.lam, gain, d)
    t_go = -r * (vr + 2.0 * c) / d
    e = t_go - (gp.t_d - t_el)
    e_dot = f + b * a_i
    s_val = e_dot + gp.alpha * e
    if gp.variant is Variant.EXPONENTIAL:
        g_val = gain_shaping(s_val, gp.theta_g, gp.kappa, gp.eta)
    else:
        g_val = 1.0
    if abs(b_star) < eps_b:
        nan = math.nan
        return (t_go, e, e_dot, f, b, f_star, b_star, s_val, g_val, nan, nan, False, True), gain
    switch = math.tanh(s_val / boundary_layer) if boundary_layer else _sign(s_val)
    raw = (-f_star - gp.alpha * e_dot - gp.big_m / g_val * switch) / b_star
    chi = sp.chi
    clamped = chi if raw > chi else (-chi if raw < -chi else raw)
    return (t_go, e, e_dot, f, b, f_star, b_star, s_val, g_val, raw, clamped,
            clamped != raw, False), gain


def compute_command(a_i: float, t_el: float, rel: RelativeState, gp: GuidanceParams,
                    sp: SaturationParams, eps_d: float = EPS_D, eps_b: float = EPS_B,
                    boundary_layer: Optional[float] = None) -> GuidanceDiagnostics:
    """Diagnostics-returning form of :func:`guidance_command`.

    Never raises on a vanishing ``B*``: the record comes back with
    ``b_star_guard`` set and NaN commands so the caller can decide how to hold.
    """
    fields, _ = _core(rel.r, rel.v_r, rel.v_theta, a_i, t_el, gp, sp, eps_d, eps_b,
                      boundary_layer)
    return GuidanceDiagnostics(*fields)


def guidance_command(state: EngagementState, rel: RelativeState, gp: GuidanceParams,
                     sp: SaturationParams, eps_d: float = EPS_D, eps_b: float = EPS_B,
                     boundary_layer: Optional[float] = None) -> tuple[float, GuidanceDiagnostics]:
    """Sliding-mode impact-time command, clamped to ``[-chi, chi]``.

    Args:
        state: current engagement state; only ``a_i`` and ``t_el`` are read.
        rel: LOS-frame quantities matching ``state``.
        gp: guidance gains; ``gp.variant`` selects the reaching law.
        sp: saturation model, also supplying the clamp ``chi``.
        boundary_layer: if set, ``sign(S)`` is replaced by ``tanh(S / boundary_layer)``.

    Returns:
        The clamped command and the full diagnostic record.

    Raises:
        BStarSingular: if ``|B*| < eps_b`` (collision-course geometry).
    """
    diag = compute_command(state.a_i, state.t_el, rel, gp, sp, eps_d, eps_b, boundary_layer)
    if diag.b_star_guard:
        raise BStarSingular(f"|B*| = {abs(diag.b_star):.3e} below {eps_b:.0e}")
    if diag.clamped:
        log.debug("command %.4g clamped to +-%g at t=%.4f", diag.a_cmd_raw, sp.chi, state.t_el)
    return diag.a_cmd_clamped, diag


def reaching_times(s0: float, gp: GuidanceParams,
                   quadrature: bool = False) -> tuple[float, float]:
    """Reaching times to ``S = 0`` for the standard and shaped reaching laws.

    Returns ``(t_r1, t_r2)`` with ``t_r1 = |S0|/M`` and
    ``t_r2 = (theta_g |S0| + (1-theta_g) * int_0^|S0| exp(-kappa s**eta) ds) / M``.
    The integral has a closed form for ``eta == 1``; ``quadrature=True``
    forces the numerical route regardless.
    """
    s_abs = abs(s0)
    t_r1 = s_abs / gp.big_m
    if gp.eta == 1 and not quadrature:
        integral = -math.expm1(-gp.kappa * s_abs) / gp.kappa
    else:
        integral, _ = quad(lambda s: math.exp(-gp.kappa * s ** gp.eta), 0.0, s_abs,
                           epsabs=1e-12, epsrel=1e-12, limit=200)
    # written as |S0| minus a nonnegative saving so rounding cannot put t_r2 above t_r1;
    # the integrand is bounded by 1, so the saving is nonnegative up to quadrature round-off
    saving = max(s_abs - integral, 0.0)
    t_r2 = (s_abs - (1.0 - gp.theta_g) * saving) / gp.big_m
    return t_r1, t_r2
