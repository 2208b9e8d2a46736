"""Security metrics for one scenario: peak RoCoF, nadir, steady-state.

This is the readable reference path; the region scan uses the compiled
kernel, and the two are pinned together by tests.  All three metric values
are reported in Hz (model values times ``grid.f_base``).

Candidate set for the nadir, per segment: the segment endpoints, every
interior stationary point of the step response (not only the first peak --
with a nonzero carried baseline a later oscillation extremum can dominate),
and a dense segment-local sweep with a fixed step as a safety net.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                    SecurityLimits, scenario_groups)
from .response import DerivedSecondOrder, derive_second_order, unit_step_response


def default_sweep_step(forecast: DisturbanceForecast) -> float:
    return forecast.tau / 600.0


@dataclass
class MetricsResult:
    m_rocof: float   # [Hz/s]
    m_nadir: float   # [Hz]
    m_ss: float      # [Hz]
    #: per-metric (time, segment index) where the extremum is attained
    witnesses: dict = field(default_factory=dict)


@dataclass
class ConstraintReport:
    rocof_ok: bool
    nadir_ok: bool
    ss_ok: bool

    @property
    def passed(self) -> bool:
        return self.rocof_ok and self.nadir_ok and self.ss_ok

    @property
    def failure_causes(self):
        causes = []
        if not self.rocof_ok:
            causes.append("rocof")
        if not self.nadir_ok:
            causes.append("nadir")
        if not self.ss_ok:
            causes.append("ss")
        return causes


def peak_time(d: DerivedSecondOrder, t_start: float = 0.0) -> float:
    """First stationary point of the step response after t_start.

    t_p = t_start + (arctan(wd/(zeta*wn)) - phi)/wd, shifted by multiples of
    pi/wd into (t_start, t_start + 2*pi/wd] if the raw value lands at or
    left of t_start.
    """
    period = math.pi / d.omega_d
    raw = (math.atan2(d.omega_d, d.decay) - d.phi) / d.omega_d
    while raw <= 0.0:
        raw += period
    while raw > 2.0 * period:
        raw -= period
    return t_start + raw


def _segment_extrema(d: DerivedSecondOrder, length: float, sweep_step: float):
    """(lo, hi, t_lo, t_hi) of the unit step response over [0, length]."""
    cands = [0.0, length]
    first = peak_time(d)
    period = math.pi / d.omega_d
    m = 0
    while True:
        s = first + m * period
        if s >= length:
            break
        cands.append(s)
        m += 1
    n_sweep = int(math.floor(length / sweep_step + 1e-9))
    if n_sweep > 0:
        cands.extend((np.arange(1, n_sweep + 1) * sweep_step).tolist())
    cands = np.asarray(cands)
    vals = unit_step_response(d, cands)
    vals[0] = 0.0  # exact by construction
    i_hi = int(np.argmax(vals))
    i_lo = int(np.argmin(vals))
    return float(vals[i_lo]), float(vals[i_hi]), float(cands[i_lo]), float(cands[i_hi])


def evaluate_metrics(scenario: DisturbanceScenario, forecast: DisturbanceForecast,
                     grid: GridParameters, weighting: str = "probabilistic",
                     sweep_step: float = None) -> MetricsResult:
    """M_rocof, M_nadir, M_ss for one scenario (OverdampedRegime propagates).

    Coincident disturbances merge into combined steps; the RoCoF numerator
    is therefore the largest merged magnitude, which is what makes stacked
    timings the worst ones.
    """
    d = derive_second_order(grid)
    groups = scenario_groups(scenario, forecast, weighting)
    sweep = default_sweep_step(forecast) if sweep_step is None else sweep_step
    f_base = grid.f_base

    if not groups:
        return MetricsResult(0.0, 0.0, 0.0,
                             {"rocof": (0.0, -1), "nadir": (0.0, -1), "ss": (0.0, -1)})

    rocof_pu, rocof_wit = 0.0, (0.0, -1)
    for gi, (tg, k) in enumerate(groups):
        if abs(k) > rocof_pu:
            rocof_pu, rocof_wit = abs(k), (tg, gi)
    rocof_pu /= 2.0 * d.h_total

    c = 0.0
    nadir_pu, nadir_wit = 0.0, (0.0, -1)
    ss_pu, ss_wit = 0.0, (0.0, -1)
    horizon = forecast.horizon
    for gi, (tg, k) in enumerate(groups):
        t_end = groups[gi + 1][0] if gi + 1 < len(groups) else horizon
        length = max(0.0, t_end - tg)
        lo, hi, t_lo, t_hi = _segment_extrema(d, length, sweep)
        for val, t_at in ((c + k * hi, t_hi), (c + k * lo, t_lo)):
            if abs(val) > nadir_pu:
                nadir_pu, nadir_wit = abs(val), (tg + t_at, gi)
        c = c + k * float(unit_step_response(d, length))
        if abs(c) > ss_pu:
            ss_pu, ss_wit = abs(c), (t_end, gi)

    return MetricsResult(
        f_base * rocof_pu, f_base * nadir_pu, f_base * ss_pu,
        {"rocof": rocof_wit, "nadir": nadir_wit, "ss": ss_wit})


def check_limits(m: MetricsResult, limits: SecurityLimits) -> ConstraintReport:
    """Non-strict comparisons: a metric exactly at its limit passes."""
    return ConstraintReport(
        rocof_ok=m.m_rocof <= limits.rocof_lim,
        nadir_ok=m.m_nadir <= limits.nadir_lim,
        ss_ok=m.m_ss <= limits.ss_lim)
