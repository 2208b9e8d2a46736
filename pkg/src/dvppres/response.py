"""Closed-form frequency response: single step and sequential composition.

The aggregate loop (inertia+damping forward path, droop-with-lag feedback)
reduces to a second-order transfer function with a zero:

    F(s) = dP/s * (1 + T*s) / (2*H*T*s^2 + (2*H + D*T)*s + (D + R))

whose underdamped step response is

    F(dP, t) = dP/(D+R) * [1 + exp(-zeta*wn*t) * eta * sin(wd*t + phi)].

``phi`` is fixed by the two initial conditions F(0) = 0 and
F'(0) = dP/(2H); this forces sin(phi) = -1/eta, i.e. the quadrant with
negative sine (a single-argument arctan, or atan2 on the raw numerator and
denominator, can land in the mirrored quadrant and breaks F(0) = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                    OverdampedRegime, ScenarioMismatch, scenario_groups)


@dataclass(frozen=True)
class DerivedSecondOrder:
    """Scalar constants of the underdamped closed form at one (H, D) point."""

    zeta: float      # damping ratio
    omega_n: float   # natural frequency [rad/s]
    omega_d: float   # damped frequency [rad/s]
    eta: float       # transient amplitude factor
    phi: float       # transient phase [rad], sin(phi) = -1/eta
    h_total: float
    d_total: float
    r: float
    t_sg: float

    @property
    def decay(self) -> float:
        """zeta*omega_n = 1/(2*T) + D/(4*H)."""
        return self.zeta * self.omega_n

    @property
    def dc_gain(self) -> float:
        """Final value of the unit step response, 1/(D+R)."""
        return 1.0 / (self.d_total + self.r)


def derive_second_order(grid: GridParameters) -> DerivedSecondOrder:
    """Compute (zeta, wn, wd, eta, phi) for the grid's aggregate loop.

    Raises OverdampedRegime when zeta >= 1; callers treating (H, D) points
    as candidates should catch it and mark the point rejected.
    """
    h, d, r, t = grid.h_total, grid.d_total, grid.r, grid.t_sg
    zeta = (2 * h + d * t) / (2 * math.sqrt(2 * t * h * (r + d)))
    omega_n = math.sqrt((d + r) / (2 * h * t))
    if zeta >= 1.0:
        raise OverdampedRegime(
            "zeta = %.6g >= 1 at (H_dvpp=%.6g, D_dvpp=%.6g)"
            % (zeta, grid.h_dvpp, grid.d_dvpp))
    omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
    # eta*cos(phi) = (T*wn^2 - zeta*wn)/wd, eta*sin(phi) = -1
    b = (t * omega_n * omega_n - zeta * omega_n) / omega_d
    eta = math.sqrt(1.0 + b * b)
    phi = math.atan2(-1.0, b)
    return DerivedSecondOrder(zeta, omega_n, omega_d, eta, phi, h, d, r, t)


def unit_step_response(d: DerivedSecondOrder, t):
    """Step response for dP = 1 (model units per unit power)."""
    t = np.asarray(t, dtype=float)
    env = np.exp(-d.decay * t) * d.eta
    return d.dc_gain * (1.0 + env * np.sin(d.omega_d * t + d.phi))


def unit_step_derivative(d: DerivedSecondOrder, t):
    t = np.asarray(t, dtype=float)
    env = np.exp(-d.decay * t) * d.eta
    arg = d.omega_d * t + d.phi
    return d.dc_gain * env * (d.omega_d * np.cos(arg) - d.decay * np.sin(arg))


def step_response(d: DerivedSecondOrder, delta_p: float, t):
    """F(dP, t): frequency deviation under a single step of size dP."""
    return delta_p * unit_step_response(d, t)


def step_response_derivative(d: DerivedSecondOrder, delta_p: float, t):
    """dF/dt; equals dP/(2H) at t = 0."""
    return delta_p * unit_step_derivative(d, t)


@dataclass(frozen=True)
class Segment:
    """One piece of a frozen-baseline piecewise trajectory."""

    t_start: float
    t_end: float
    baseline: float    # previous segment's value at t_start
    magnitude: float   # merged step magnitude driving this segment


class SegmentedTrajectory:
    """Piecewise trajectory: segment value = baseline + K * unit(t - t_start).

    Each segment restarts the unit kernel at its own occurrence instant and
    carries the previous segment's boundary value as a frozen constant, so
    the curve is continuous by construction.  Before the first occurrence
    instant the value is 0; past the last segment the last evaluator is
    extended to the horizon.
    """

    def __init__(self, segments, horizon, unit, unit_derivative=None,
                 spacing_ok=None, min_spacing=None):
        self.segments = list(segments)
        self.horizon = float(horizon)
        self._unit = unit
        self._unit_derivative = unit_derivative
        #: whether consecutive group instants are separated by >= 5/(zeta*wn)
        self.spacing_ok = spacing_ok
        self.min_spacing = min_spacing

    def _eval(self, t, kernel):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        for seg in self.segments:
            if seg.t_end >= self.horizon:
                mask = (t >= seg.t_start)
            else:
                mask = (t >= seg.t_start) & (t < seg.t_end)
            out[mask] = seg.baseline + seg.magnitude * kernel(t[mask] - seg.t_start)
        return out

    def value(self, t):
        res = self._eval(t, self._unit)
        return res if np.ndim(t) else float(res[0])

    def derivative(self, t):
        if self._unit_derivative is None:
            raise ValueError("trajectory has no derivative kernel")
        res = self._eval(t, self._unit_derivative)
        return res if np.ndim(t) else float(res[0])

    def sample(self, step: float):
        """Uniform sampling (t, value, derivative) over [0, horizon]."""
        n = int(math.floor(self.horizon / step + 1e-9))
        t = np.arange(n + 1) * step
        if t[-1] < self.horizon - 1e-12:
            t = np.append(t, self.horizon)
        v = self.value(t)
        dv = self.derivative(t) if self._unit_derivative is not None else np.full_like(t, np.nan)
        return t, v, dv

    @property
    def boundary_values(self):
        """Trajectory value at each segment's right boundary (the Eq. of
        cumulative quasi-steady levels)."""
        vals = []
        for seg in self.segments:
            vals.append(seg.baseline + seg.magnitude
                        * float(self._unit(seg.t_end - seg.t_start)))
        return vals


def compose_piecewise(groups, horizon, unit, unit_derivative=None,
                      decay=None):
    """Build the frozen-baseline composition of merged step groups.

    ``groups`` is [(time, magnitude), ...] sorted ascending.  The baseline
    entering each segment is the previous segment's value at the boundary.
    """
    segments = []
    c = 0.0
    spacing = [b[0] - a[0] for a, b in zip(groups, groups[1:])]
    if groups:
        spacing.append(horizon - groups[-1][0])
    min_spacing = min(spacing) if spacing else float("inf")
    for gi, (tg, k) in enumerate(groups):
        te = groups[gi + 1][0] if gi + 1 < len(groups) else horizon
        segments.append(Segment(tg, te, c, k))
        c = c + k * float(unit(te - tg))
    spacing_ok = None
    if decay is not None and decay > 0:
        spacing_ok = min_spacing >= 5.0 / decay
    return SegmentedTrajectory(segments, horizon, unit, unit_derivative,
                               spacing_ok=spacing_ok, min_spacing=min_spacing)


def sequential_response(scenario: DisturbanceScenario,
                        forecast: DisturbanceForecast,
                        d: DerivedSecondOrder,
                        weighting: str = "probabilistic") -> SegmentedTrajectory:
    """Piecewise frequency response under a timing scenario.

    Segment i evaluates P_i*F[dP_i, t - t_i] plus the frozen value of the
    previous segment at t_i.  Coincident occurrence instants merge into a
    single combined step (simultaneous steps superpose, and an empty segment
    would otherwise drop its disturbance from the composition entirely).
    """
    if scenario.n != forecast.n:
        raise ScenarioMismatch(
            "scenario has %d periods, forecast has %d" % (scenario.n, forecast.n))
    groups = scenario_groups(scenario, forecast, weighting)
    return compose_piecewise(
        groups, forecast.horizon,
        unit=lambda s: unit_step_response(d, s),
        unit_derivative=lambda s: unit_step_derivative(d, s),
        decay=d.decay)
