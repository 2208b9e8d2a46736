"""Regulation-power injections, their (H, D)-linear split, and reserves.

The injection of any entity holding an (h_part, d_part) share of the
aggregate virtual parameters, under a single step dP, is

    I(dP, t) = -[A + exp(-zeta*wn*t) * (((C - zeta*wn*B)/wd) * sin(wd*t)
                + B * cos(wd*t))] / (2*H*T)

with A, B, C linear in (h_part, d_part).  Differentiating the coefficients
gives basis functions alpha(t), beta(t) such that I = alpha*h + beta*d
exactly, which is what makes the allocation program linear.  (The identity
I(0) = -h_part*dP/H pins the formulas; a printed regrouping that breaks it
is not used.)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DisturbanceForecast, DisturbanceScenario, ScenarioMismatch, scenario_groups
from .response import DerivedSecondOrder, SegmentedTrajectory, compose_piecewise


@dataclass(frozen=True)
class InjectionCoefficients:
    a_coef: float
    b_coef: float
    c_coef: float
    h_part: float
    d_part: float
    delta_p: float


def injection_coefficients(d: DerivedSecondOrder, h_part: float, d_part: float,
                           delta_p: float) -> InjectionCoefficients:
    wn2 = d.omega_n * d.omega_n
    a = delta_p * d_part / wn2
    b = 2.0 * d.t_sg * h_part * delta_p - delta_p * d_part / wn2
    c = (d.t_sg * d_part + 2.0 * h_part) * delta_p \
        - 2.0 * d.zeta * delta_p * d_part / d.omega_n
    return InjectionCoefficients(a, b, c, h_part, d_part, delta_p)


def _injection_from_coefficients(d: DerivedSecondOrder, coef, t):
    t = np.asarray(t, dtype=float)
    e = np.exp(-d.decay * t)
    sin_c = (coef.c_coef - d.decay * coef.b_coef) / d.omega_d
    num = coef.a_coef + e * (sin_c * np.sin(d.omega_d * t)
                             + coef.b_coef * np.cos(d.omega_d * t))
    return -num / (2.0 * d.h_total * d.t_sg)


def step_injection(d: DerivedSecondOrder, h_part: float, d_part: float,
                   delta_p: float, t):
    """Injection of an (h_part, d_part) share under one step of size dP.

    Final value is -dP*d_part/(D+R); the negative sign is the support
    direction (the injection opposes the disturbance).
    """
    coef = injection_coefficients(d, h_part, d_part, delta_p)
    return _injection_from_coefficients(d, coef, t)


def alpha_beta(d: DerivedSecondOrder, delta_p: float, t):
    """Per-unit-inertia and per-unit-damping injection bases.

    alpha(t)*h + beta(t)*d reproduces step_injection(h, d) identically;
    both scale linearly with dP.
    """
    t = np.asarray(t, dtype=float)
    e = np.exp(-d.decay * t)
    s = np.sin(d.omega_d * t)
    c = np.cos(d.omega_d * t)
    hh2t = 2.0 * d.h_total * d.t_sg
    wn2 = d.omega_n * d.omega_n
    # d/dh of (A, B, C) = (0, 2*T*dP, 2*dP)
    alpha = -(e * (((2.0 - d.decay * 2.0 * d.t_sg) / d.omega_d) * s
                   + 2.0 * d.t_sg * c)) * delta_p / hh2t
    # d/dd of (A, B, C) = (dP/wn^2, -dP/wn^2, (T - zeta/wn)*dP)
    beta = -(1.0 / wn2 + e * (((d.t_sg - d.zeta / d.omega_n) / d.omega_d) * s
                              - (1.0 / wn2) * c)) * delta_p / hh2t
    return alpha, beta


def sequential_injection(scenario: DisturbanceScenario,
                         forecast: DisturbanceForecast,
                         d: DerivedSecondOrder, h_part: float, d_part: float,
                         weighting: str = "probabilistic") -> SegmentedTrajectory:
    """Piecewise injection trajectory with frozen carried baselines.

    Mirrors the frequency composition: coincident instants merge, each
    segment restarts the single-step injection, the previous boundary value
    is carried as a constant.
    """
    if scenario.n != forecast.n:
        raise ScenarioMismatch(
            "scenario has %d periods, forecast has %d" % (scenario.n, forecast.n))
    groups = scenario_groups(scenario, forecast, weighting)
    unit = lambda s: step_injection(d, h_part, d_part, 1.0, s)
    return compose_piecewise(groups, forecast.horizon, unit, decay=d.decay)


def injection_segment_extrema(d: DerivedSecondOrder, h_part: float,
                              d_part: float, magnitude: float, length: float,
                              sweep_step: float):
    """(lo, hi, t_lo, t_hi) of magnitude * I_unit over [0, length].

    Candidates: endpoints, analytic derivative roots (period pi/wd), and
    the dense sweep lattice.  Candidate times come from the unit-magnitude
    coefficients (stationary points do not depend on the step size), so a
    sign flip of the magnitude negates the extrema exactly.
    """
    coef = injection_coefficients(d, h_part, d_part, 1.0)
    sin_c = (coef.c_coef - d.decay * coef.b_coef) / d.omega_d
    # derivative zero: tan(wd*t) = (wd*P - a*Q)/(a*P + wd*Q),
    # P = sin coefficient, Q = cos coefficient of the transient
    p, q = sin_c, coef.b_coef
    num = d.omega_d * p - d.decay * q
    den = d.decay * p + d.omega_d * q
    period = math.pi / d.omega_d
    cands = [0.0, length]
    if num != 0.0 or den != 0.0:
        t0 = math.atan2(num, den) / d.omega_d
        while t0 <= 0.0:
            t0 += period
        m = 0
        while True:
            s = t0 + m * period
            if s >= length:
                break
            cands.append(s)
            m += 1
    n_sweep = int(math.floor(length / sweep_step + 1e-9))
    if n_sweep > 0:
        cands.extend((np.arange(1, n_sweep + 1) * sweep_step).tolist())
    cands = np.asarray(cands)
    vals = magnitude * _injection_from_coefficients(d, coef, cands)
    i_hi = int(np.argmax(vals))
    i_lo = int(np.argmin(vals))
    return float(vals[i_lo]), float(vals[i_hi]), float(cands[i_lo]), float(cands[i_hi])


def trajectory_extrema(traj: SegmentedTrajectory, d: DerivedSecondOrder,
                       h_part: float, d_part: float, sweep_step: float):
    """Global (min, max) of a composed injection trajectory with times."""
    lo, hi = 0.0, 0.0
    t_lo, t_hi = 0.0, 0.0
    for seg in traj.segments:
        length = seg.t_end - seg.t_start
        s_lo, s_hi, ts_lo, ts_hi = injection_segment_extrema(
            d, h_part, d_part, seg.magnitude, length, sweep_step)
        v_hi = seg.baseline + s_hi
        v_lo = seg.baseline + s_lo
        if v_hi > hi:
            hi, t_hi = v_hi, seg.t_start + ts_hi
        if v_lo < lo:
            lo, t_lo = v_lo, seg.t_start + ts_lo
    return lo, hi, t_lo, t_hi


@dataclass
class ReservePair:
    r_up: float      # >= 0
    r_down: float    # <= 0 (signed; print abs() for the unsigned convention)
    t_up: tuple = ()     # per-IBR instants attaining the maxima
    t_down: tuple = ()


def reserves(extrema) -> ReservePair:
    """Clip-summed per-IBR extrema per the reserve definition.

    ``extrema`` is a list of (lo, hi, t_lo, t_hi) per IBR trajectory.
    r_up keeps the positive part of the summed maxima; r_down keeps the
    negative part of the summed minima.
    """
    up = sum(e[1] for e in extrema)
    dn = sum(e[0] for e in extrema)
    return ReservePair(
        r_up=up if up >= 0.0 else 0.0,
        r_down=dn if dn <= 0.0 else 0.0,
        t_up=tuple(e[3] for e in extrema),
        t_down=tuple(e[2] for e in extrema))
