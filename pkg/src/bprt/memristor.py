"""Behavioral linear ion-drift memristor with pulse programming.

The device carries a normalized doped-region width ``x`` in [0, 1].  Its
resistance interpolates linearly between the fully-doped value ``r_on``
(x = 1) and the fully-undoped value ``r_off`` (x = 0):

    M(x) = r_on * x + r_off * (1 - x)

State drifts under an applied voltage ``v`` as

    dx/dt = (mu_v * r_on / d**2) * v / M(x)

so positive voltage increases ``x``, which lowers memristance and raises
conductance.  The state is hard-clamped to [0, 1]; no window function is
applied.  Programming applies fixed-width voltage pulses of whichever
polarity moves the conductance toward a target, integrating each pulse
with RK4 sub-steps, and stops once the conductance is inside the
requested relative tolerance band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConductanceRangeError, InvalidInputError, NonConvergenceError

SUBSTEPS_PER_PULSE = 100


@dataclass
class MemristorParams:
    """Device constants for the linear drift model.

    Parameters
    ----------
    r_on : float
        Fully doped (minimum) resistance, ohms.
    r_off : float
        Fully undoped (maximum) resistance, ohms.
    d : float
        Device thickness, meters.
    mu_v : float
        Dopant drift mobility, m^2 s^-1 V^-1.
    """

    r_on: float = 1e4
    r_off: float = 1e8
    d: float = 10e-9
    mu_v: float = 1e-14

    def __post_init__(self):
        if not (self.r_on > 0 and self.r_off > self.r_on and self.d > 0 and self.mu_v > 0):
            raise InvalidInputError(
                f"need 0 < r_on < r_off, d > 0, mu_v > 0; got r_on={self.r_on}, "
                f"r_off={self.r_off}, d={self.d}, mu_v={self.mu_v}"
            )

    @property
    def drive_constant(self) -> float:
        """mu_v * r_on / d**2, the prefactor of dx/dt (ohm / (V s))."""
        return self.mu_v * self.r_on / (self.d * self.d)


@dataclass
class MemristorState:
    """Normalized doped-region width plus the device it belongs to."""

    x: float = 0.0
    params: MemristorParams = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.params is None:
            self.params = MemristorParams()
        if not (math.isfinite(self.x) and 0.0 <= self.x <= 1.0):
            raise InvalidInputError(f"state x must lie in [0, 1], got {self.x}")

    @property
    def conductance(self) -> float:
        return 1.0 / memristance(self)


@dataclass
class PulseSpec:
    """Programming schedule: fixed-amplitude, fixed-width pulse train.

    ``amplitude`` is the magnitude in volts; the programming loop picks the
    polarity each pulse.  ``tolerance`` is the relative conductance band
    that counts as converged.
    """

    amplitude: float = 1.0
    width: float = 10e-9
    max_pulses: int = 1_000_000
    tolerance: float = 0.01

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude != 0.0):
            raise InvalidInputError(f"pulse amplitude must be finite and nonzero, got {self.amplitude}")
        if not (math.isfinite(self.width) and self.width > 0):
            raise InvalidInputError(f"pulse width must be positive, got {self.width}")
        if self.max_pulses < 1:
            raise InvalidInputError(f"max_pulses must be >= 1, got {self.max_pulses}")
        if not (0.0 < self.tolerance < 1.0):
            raise InvalidInputError(f"tolerance must lie in (0, 1), got {self.tolerance}")


def memristance(state: MemristorState) -> float:
    """Instantaneous resistance M(x) = r_on*x + r_off*(1-x), ohms."""
    p = state.params
    return p.r_on * state.x + p.r_off * (1.0 - state.x)


def _rk4_advance(x: float, v: float, dt: float, r_on: float, r_off: float, k_drive: float) -> float:
    """One classical RK4 step of dx/dt = k_drive * v / M(x), clamped to [0, 1]."""

    def f(xx: float) -> float:
        return k_drive * v / (r_on * xx + r_off * (1.0 - xx))

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if x_new < 0.0:
        return 0.0
    if x_new > 1.0:
        return 1.0
    return x_new


def step(state: MemristorState, v: float, dt: float) -> MemristorState:
    """Advance the drift ODE by a single explicit RK4 step.

    Zero drive is an exact fixed point; the result is clamped to [0, 1].

    Raises
    ------
    InvalidInputError
        If ``v`` is non-finite or ``dt`` is non-finite or not positive.
    """
    if not math.isfinite(v):
        raise InvalidInputError(f"voltage must be finite, got {v}")
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidInputError(f"dt must be positive and finite, got {dt}")
    if v == 0.0:
        return replace(state)
    p = state.params
    x_new = _rk4_advance(state.x, v, dt, p.r_on, p.r_off, p.drive_constant)
    return replace(state, x=x_new)


def _time_to_state(x_from: float, x_to: float, v: float, r_on: float, r_off: float, k_drive: float) -> float:
    """Exact drive time from x_from to x_to under constant v (linear drift).

    Separating variables gives M(x) dx = k_drive * v dt, whose antiderivative
    is r_off*x - (r_off - r_on)*x**2/2.  Used to truncate the final sub-step
    so programming lands inside the tolerance band instead of hopping over it.
    """
    b = r_off - r_on

    def phi(x: float) -> float:
        return r_off * x - 0.5 * b * x * x

    return (phi(x_to) - phi(x_from)) / (k_drive * v)


def program_to_conductance(
    state: MemristorState,
    target_g: float,
    pulse: PulseSpec | None = None,
    return_schedule: bool = False,
):
    """Pulse the device until its conductance reaches ``target_g``.

    Polarity is chosen per pulse: positive voltage raises conductance
    (lowers memristance), negative voltage lowers it.  Each pulse is
    integrated as ``SUBSTEPS_PER_PULSE`` RK4 steps; convergence is checked
    after every sub-step, and the sub-step in flight is shortened when the
    exact-solution time estimate says the target is nearer than one
    sub-step, so a coarse pulse width cannot overshoot the band.

    Parameters
    ----------
    state : MemristorState
        Starting state; not mutated.
    target_g : float
        Target conductance in siemens, within [1/r_off, 1/r_on].
    pulse : PulseSpec, optional
        Programming schedule; defaults to ``PulseSpec()``.
    return_schedule : bool, optional
        When True, also return the applied drive as a list of
        ``(volts, seconds)`` segments (contiguous equal-voltage sub-steps
        merged), suitable for replaying through a reference integrator.

    Returns
    -------
    MemristorState, or (MemristorState, list[tuple[float, float]])

    Raises
    ------
    ConductanceRangeError
        Target outside the representable conductance range.
    NonConvergenceError
        Pulse budget exhausted; carries the final state.
    """
    if pulse is None:
        pulse = PulseSpec()
    p = state.params
    g_min, g_max = 1.0 / p.r_off, 1.0 / p.r_on
    if not (math.isfinite(target_g) and g_min <= target_g <= g_max):
        raise ConductanceRangeError(
            f"target {target_g!r} S outside representable range [{g_min:g}, {g_max:g}] S"
        )

    r_on, r_off, k_drive = p.r_on, p.r_off, p.drive_constant
    band = pulse.tolerance * target_g
    x = state.x
    x_target = (r_off - 1.0 / target_g) / (r_off - r_on)
    dt_sub = pulse.width / SUBSTEPS_PER_PULSE
    schedule: list[list[float]] = []

    def converged(xx: float) -> bool:
        g = 1.0 / (r_on * xx + r_off * (1.0 - xx))
        return abs(g - target_g) <= band

    def record(v: float, dt: float) -> None:
        if schedule and schedule[-1][0] == v:
            schedule[-1][1] += dt
        else:
            schedule.append([v, dt])

    def done(xx: float):
        final = replace(state, x=xx)
        if return_schedule:
            return final, [(v, t) for v, t in schedule]
        return final

    if converged(x):
        return done(x)  # zero pulses

    for n in range(pulse.max_pulses):
        g = 1.0 / (r_on * x + r_off * (1.0 - x))
        v = pulse.amplitude if target_g > g else -pulse.amplitude
        for _ in range(SUBSTEPS_PER_PULSE):
            dt = dt_sub
            t_rem = _time_to_state(x, x_target, v, r_on, r_off, k_drive)
            if 0.0 < t_rem < dt:
                dt = t_rem
            x = _rk4_advance(x, v, dt, r_on, r_off, k_drive)
            record(v, dt)
            if converged(x):
                return done(x)

    raise NonConvergenceError(
        f"no convergence to {target_g:g} S within {pulse.max_pulses} pulses "
        f"(reached {1.0 / (r_on * x + r_off * (1.0 - x)):g} S)",
        state=replace(state, x=x),
        pulses_applied=pulse.max_pulses,
    )
