"""Independent time-domain oracle: fixed-step RK4 on the aggregate loop.

State-space realization (all in model units):

    2*(H0+H_dvpp) * dDf/dt = dPe(t) - (D0+D_dvpp)*Df - p_sg
    T_sg * dp_sg/dt        = R*Df - p_sg
    dPe(t) = sum_i w_i * dP_i * step(t - t_i)

The DVPP inertia term sits inside the left-hand coefficient (algebraic
rearrangement of the loop), which avoids differentiating Df numerically on
the input side.  Steps are split exactly at disturbance instants so the
piecewise-constant input never smears across a step boundary.

This module deliberately shares no code with the closed-form path; it is
the verification oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                    StepTooLarge, scenario_groups)


@dataclass
class TimeSeries:
    t: np.ndarray
    delta_f: np.ndarray     # model frequency deviation
    rocof: np.ndarray       # dDf/dt
    p_sg: np.ndarray        # governor output
    p_dvpp: np.ndarray      # DVPP injection, -(2*Hd*dDf/dt + Dd*Df)


def _rk4_span(h2, d_tot, r, t_sg, hd, dd, dpe, y, span, n_steps):
    """Integrate one constant-input span; returns states at each sub-step."""
    dt = span / n_steps
    f, p = y
    out = np.empty((n_steps, 2))

    def deriv(f, p):
        df = (dpe - d_tot * f - p) / h2
        dp = (r * f - p) / t_sg
        return df, dp

    for k in range(n_steps):
        k1f, k1p = deriv(f, p)
        k2f, k2p = deriv(f + 0.5 * dt * k1f, p + 0.5 * dt * k1p)
        k3f, k3p = deriv(f + 0.5 * dt * k2f, p + 0.5 * dt * k2p)
        k4f, k4p = deriv(f + dt * k3f, p + dt * k3p)
        f += dt * (k1f + 2 * k2f + 2 * k3f + k4f) / 6.0
        p += dt * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
        out[k, 0] = f
        out[k, 1] = p
    return (f, p), out


def simulate(scenario: DisturbanceScenario, forecast: DisturbanceForecast,
             grid: GridParameters, dt: float, horizon: float = None,
             weighting: str = "probabilistic") -> TimeSeries:
    """Simulate the disturbance scenario from zero initial state.

    dt must satisfy dt <= T_sg/100 (accuracy precondition).  Event times are
    hit exactly: every span between consecutive disturbance instants is
    integrated with ceil(span/dt) uniform sub-steps.
    """
    if dt <= 0 or dt > grid.t_sg / 100.0:
        raise StepTooLarge("dt = %g violates 0 < dt <= t_sg/100 = %g"
                           % (dt, grid.t_sg / 100.0))
    horizon = forecast.horizon if horizon is None else float(horizon)
    groups = scenario_groups(scenario, forecast, weighting)

    events = [0.0] + [t for t, _ in groups if 0.0 < t < horizon] + [horizon]
    # dedupe while preserving order
    uniq = [events[0]]
    for t in events[1:]:
        if t - uniq[-1] > 1e-12:
            uniq.append(t)

    h2 = 2.0 * grid.h_total
    ts, fs, ps, dpes = [0.0], [0.0], [0.0], [0.0]
    y = (0.0, 0.0)

    def input_at(t):
        return sum(k for tg, k in groups if tg <= t + 1e-12)

    for a, b in zip(uniq, uniq[1:]):
        span = b - a
        n_steps = max(1, int(math.ceil(span / dt - 1e-12)))
        dpe = input_at(a)
        y, states = _rk4_span(h2, grid.d_total, grid.r, grid.t_sg,
                              grid.h_dvpp, grid.d_dvpp, dpe, y, span, n_steps)
        sub = a + (np.arange(n_steps) + 1) * (span / n_steps)
        ts.extend(sub.tolist())
        fs.extend(states[:, 0].tolist())
        ps.extend(states[:, 1].tolist())
        dpes.extend([dpe] * n_steps)

    t = np.array(ts)
    f = np.array(fs)
    p = np.array(ps)
    dpe_arr = np.array(dpes)
    # input AT each stored instant (right-continuous at events)
    dpe_now = np.array([input_at(x) for x in t])
    rocof = (dpe_now - grid.d_total * f - p) / h2
    p_dvpp = -(2.0 * grid.h_dvpp * rocof + grid.d_dvpp * f)
    return TimeSeries(t, f, rocof, p, p_dvpp)


def simulate_single_step(grid: GridParameters, delta_p: float, dt: float,
                         horizon: float) -> TimeSeries:
    """Convenience wrapper: one step of size delta_p at t = 0."""
    forecast = DisturbanceForecast(n=1, tau=horizon, magnitudes=(delta_p,),
                                   probabilities=(1.0,))
    scenario = DisturbanceScenario((0.0,))
    return simulate(scenario, forecast, grid, dt, horizon)
