"""Robust feasible region of (H_dvpp, D_dvpp) under the worst-case envelope.

Feasibility of a point is decided in model units against limits divided by
f_base, with the exact same comparison the scan kernel applies, so a grid
cell and a direct membership re-check can never disagree.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .metrics import default_sweep_step
from .model import (DisturbanceForecast, GridParameters, SecurityLimits)
from .worstcase import DEFAULT_SCENARIO_CAP, enumerate_scenarios

CAUSE_NAMES = {0: "ok", 1: "rocof", 2: "nadir", 3: "ss", 4: "overdamped"}


@dataclass
class FeasibilityVerdict:
    feasible: bool
    cause: str                    # "ok" or first violated constraint
    envelope: tuple               # (rocof, nadir, ss) in Hz; NaNs if overdamped
    overdamped: bool = False


@dataclass
class RegionGrid:
    h_axis: np.ndarray
    d_axis: np.ndarray
    feasible: np.ndarray          # bool [Nh, Nd]
    cause: np.ndarray             # int8 [Nh, Nd], see CAUSE_NAMES
    env_rocof: np.ndarray         # [Hz/s]
    env_nadir: np.ndarray         # [Hz]
    env_ss: np.ndarray            # [Hz]
    sweep_step: float
    weighting: str

    @property
    def h_step(self) -> float:
        return float(self.h_axis[1] - self.h_axis[0]) if len(self.h_axis) > 1 else 0.0

    @property
    def d_step(self) -> float:
        return float(self.d_axis[1] - self.d_axis[0]) if len(self.d_axis) > 1 else 0.0

    def cause_name(self, i, j) -> str:
        return CAUSE_NAMES[int(self.cause[i, j])]


class _Evaluator:
    """Shared batch + limit conversion for point and grid evaluations."""

    def __init__(self, forecast, grid_base, limits, weighting, sweep_step,
                 scenarios=None, cap=DEFAULT_SCENARIO_CAP):
        self.forecast = forecast
        self.grid_base = grid_base
        self.limits = limits
        self.weighting = weighting
        self.sweep_step = (default_sweep_step(forecast)
                           if sweep_step is None else sweep_step)
        if scenarios is None:
            scenarios = enumerate_scenarios(forecast, cap)
        self.batch = _kernel.build_batch(scenarios, forecast, weighting)
        f = grid_base.f_base
        self.lim_pu = (limits.rocof_lim / f, limits.nadir_lim / f, limits.ss_lim / f)

    def point(self, h_dvpp, d_dvpp) -> FeasibilityVerdict:
        g = self.grid_base
        res = _kernel.point_metrics(
            g.h0, g.d0, g.r, g.t_sg, float(h_dvpp), float(d_dvpp),
            self.batch.seg_len, self.batch.mag, self.batch.gcount,
            self.batch.gmax, self.sweep_step, self.batch.lmax,
            self.batch.horizon)
        if res is None:
            return FeasibilityVerdict(False, "overdamped",
                                      (np.nan, np.nan, np.nan), overdamped=True)
        rocof_s, nadir_s, ss_s = res
        mr = float(rocof_s.max()) if len(rocof_s) else 0.0
        mn = float(nadir_s.max()) if len(nadir_s) else 0.0
        ms = float(ss_s.max()) if len(ss_s) else 0.0
        if mr > self.lim_pu[0]:
            cause = "rocof"
        elif mn > self.lim_pu[1]:
            cause = "nadir"
        elif ms > self.lim_pu[2]:
            cause = "ss"
        else:
            cause = "ok"
        f = g.f_base
        return FeasibilityVerdict(cause == "ok", cause, (f * mr, f * mn, f * ms))


def is_feasible(h_dvpp, d_dvpp, forecast: DisturbanceForecast,
                grid_base: GridParameters, limits: SecurityLimits,
                weighting: str = "realized", sweep_step: float = None,
                evaluator: _Evaluator = None) -> FeasibilityVerdict:
    """Membership test for one (H_dvpp, D_dvpp) point.

    Overdamped points come back infeasible with cause "overdamped" rather
    than raising.  Pass a prebuilt ``evaluator`` to amortize scenario
    enumeration across many probes.
    """
    if evaluator is None:
        evaluator = _Evaluator(forecast, grid_base, limits, weighting, sweep_step)
    return evaluator.point(h_dvpp, d_dvpp)


def make_evaluator(forecast, grid_base, limits, weighting="realized",
                   sweep_step=None, scenarios=None) -> _Evaluator:
    return _Evaluator(forecast, grid_base, limits, weighting, sweep_step,
                      scenarios=scenarios)


def scan_region(grid_base: GridParameters, forecast: DisturbanceForecast,
                limits: SecurityLimits, h_bounds=(0.0, 40.0),
                d_bounds=(0.0, 20.0), resolution=200, threads: int = 1,
                weighting: str = "realized", sweep_step: float = None) -> RegionGrid:
    """Rasterize the feasible region on a resolution x resolution grid.

    Cells are independent; a threaded scan fills disjoint row blocks of
    preallocated matrices, so the result is bit-identical to a sequential
    scan at any thread count.
    """
    if h_bounds[0] < 0 or d_bounds[0] < 0 or h_bounds[1] <= h_bounds[0] \
            or d_bounds[1] <= d_bounds[0]:
        raise ValueError("bounds must be non-negative with min < max")
    try:
        res_h, res_d = resolution
    except TypeError:
        res_h = res_d = int(resolution)
    if res_h < 2 or res_d < 2:
        raise ValueError("resolution must be >= 2 per axis")

    ev = _Evaluator(forecast, grid_base, limits, weighting, sweep_step)
    h_axis = np.linspace(h_bounds[0], h_bounds[1], res_h)
    d_axis = np.linspace(d_bounds[0], d_bounds[1], res_d)
    nh, nd = len(h_axis), len(d_axis)
    out_rocof = np.empty((nh, nd))
    out_nadir = np.empty((nh, nd))
    out_ss = np.empty((nh, nd))
    out_cause = np.empty((nh, nd), dtype=np.int8)

    g = grid_base
    b = ev.batch

    def run_rows(i0, i1):
        _kernel.scan_rows(
            g.h0, g.d0, g.r, g.t_sg, h_axis, d_axis,
            b.seg_len, b.mag, b.gcount, b.gmax,
            ev.sweep_step, b.lmax, b.horizon,
            ev.lim_pu[0], ev.lim_pu[1], ev.lim_pu[2],
            out_rocof, out_nadir, out_ss, out_cause, i0, i1)

    threads = max(1, int(threads))
    if threads == 1:
        run_rows(0, nh)
    else:
        chunk = (nh + threads - 1) // threads
        spans = [(k * chunk, min(nh, (k + 1) * chunk)) for k in range(threads)]
        spans = [(a, b_) for a, b_ in spans if a < b_]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: run_rows(*s), spans))

    f = grid_base.f_base
    return RegionGrid(h_axis, d_axis, out_cause == 0, out_cause,
                      f * out_rocof, f * out_nadir, f * out_ss,
                      ev.sweep_step, weighting)
