"""First-order asymmetric smooth input-saturation model.

The achieved acceleration ``a_i`` follows

    da_i/dt = gain(a_i) * a_cmd - lambda * a_i

with ``gain = 1 - (a_i/a_max)**rho`` for ``a_i >= 0`` and
``1 - (a_i/a_min)**rho`` otherwise (``rho = 2n``). For any command bounded
by ``chi`` the state never leaves ``(a_min, a_max)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateEnvelope, OutOfEnvelope, ValidationError

CHI_FACTOR = 50.0
BOUND_NUDGE = 1e-12


@dataclass(frozen=True)
class SaturationParams:
    """Actuator bounds and saturation-model constants.

    ``chi`` defaults to ``50 * max(a_max, -a_min)``; guidance commands are
    clamped to ``[-chi, chi]``.
    """

    a_max: float = 8.0
    a_min: float = -4.0
    n: int = 1
    lam: float = 0.15
    chi: Optional[float] = None

    def __post_init__(self):
        if self.chi is None:
            object.__setattr__(self, "chi", CHI_FACTOR * max(self.a_max, -self.a_min))
        if not self.a_max > 0:
            raise ValidationError("a_max must be positive")
        if not self.a_min < 0:
            raise ValidationError("a_min must be negative")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("n must be a positive integer")
        if not 0.0 < self.lam < 1.0:
            raise ValidationError("lambda must lie in (0,1)")
        if not self.chi > max(self.a_max, -self.a_min):
            raise ValidationError("chi must exceed max(a_max, -a_min)")
        object.__setattr__(self, "n", int(self.n))

    @property
    def rho(self) -> int:
        return 2 * self.n


class Envelope(NamedTuple):
    a_tilde_max: float
    a_tilde_min: float


def saturation_gain(a_i: float, p: SaturationParams) -> float:
    """Bracketed gain of the saturation model, in (0, 1] inside the bounds."""
    if not p.a_min < a_i < p.a_max:
        raise OutOfEnvelope(f"a_i={a_i!r} outside ({p.a_min}, {p.a_max})")
    bound = p.a_max if a_i >= 0.0 else p.a_min
    return 1.0 - (a_i / bound) ** p.rho


def achieved_accel_rate(a_i: float, a_cmd: float, p: SaturationParams) -> float:
    """Rate of the achieved acceleration for a (pre-clamped) command.

    Evaluated on a bound itself the gain is zero and only the leak remains,
    which is the boundary behaviour the confinement argument relies on.
    """
    if a_i == p.a_max or a_i == p.a_min:
        return -p.lam * a_i
    return saturation_gain(a_i, p) * a_cmd - p.lam * a_i


def nudge_inside(a_i: float, p: SaturationParams) -> float:
    """Pull a value sitting exactly on a bound back inside by 1e-12."""
    if a_i >= p.a_max:
        return p.a_max - BOUND_NUDGE
    if a_i <= p.a_min:
        return p.a_min + BOUND_NUDGE
    return a_i


def envelope(p: SaturationParams) -> Envelope:
    """Interior interval reachable under commands bounded by ``chi``.

    Both limits shrink the bound towards zero by the factor
    ``(chi / (chi + lam*|bound|)) ** (1/rho)``. The lower limit therefore
    uses ``|a_min|``; plugging the signed ``a_min`` would push it outside
    the bounds, which the steady state under ``a_cmd = -chi`` contradicts.
    """
    if p.chi + p.lam * p.a_min <= 0.0:
        raise DegenerateEnvelope("chi + lambda*a_min must be positive")
    upper = p.a_max * (p.chi / (p.chi + p.lam * p.a_max)) ** (1.0 / p.rho)
    lower = p.a_min * (p.chi / (p.chi - p.lam * p.a_min)) ** (1.0 / p.rho)
    return Envelope(upper, lower)


def steady_state(a_cmd: float, p: SaturationParams) -> float:
    """Fixed point of the saturation ODE under a constant command."""
    if a_cmd == 0.0:
        return 0.0
    lo, hi = (0.0, p.a_max) if a_cmd > 0 else (p.a_min, 0.0)
    return brentq(lambda a: achieved_accel_rate(a, a_cmd, p), lo, hi, xtol=1e-15, rtol=1e-15)


def respond(a0, commands, dt: float, p: SaturationParams) -> np.ndarray:
    """Fixed-step RK4 response of the actuator to held commands.

    ``commands`` has shape ``(steps, m)``: row ``k`` is held over step ``k``
    for ``m`` independent channels. Returns the ``(steps + 1, m)`` history
    starting from ``a0``. Unlike :func:`achieved_accel_rate` this does not
    reject states outside the bounds, so callers can count violations.
    """
    cmds = np.atleast_2d(np.asarray(commands, float))
    a = np.broadcast_to(np.asarray(a0, float), cmds.shape[1:]).copy()
    out = np.empty((cmds.shape[0] + 1,) + a.shape)
    out[0] = a

    def rate(x, u):
        bound = np.where(x >= 0.0, p.a_max, p.a_min)
        return (1.0 - (x / bound) ** p.rho) * u - p.lam * x

    h2, h6 = 0.5 * dt, dt / 6.0
    for k, u in enumerate(cmds):
        k1 = rate(a, u)
        k2 = rate(a + h2 * k1, u)
        k3 = rate(a + h2 * k2, u)
        k4 = rate(a + dt * k3, u)
        a = a + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = a
    return out
