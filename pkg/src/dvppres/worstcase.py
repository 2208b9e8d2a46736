"""Timing-uncertainty enumeration and the worst-case metric envelope.

The envelope takes, per metric, the maximum over every enumerated timing
scenario; it is never less conservative than any single worst scenario.
By default the envelope evaluates active disturbances at full magnitude
(worst realization -- each forecast disturbance does occur); set
weighting="probabilistic" to scale amplitudes by the forecast
probabilities instead.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .metrics import default_sweep_step, evaluate_metrics
from .model import (CombinatorialOverflow, DisturbanceForecast,
                    DisturbanceScenario, GridParameters, OverdampedRegime)

DEFAULT_SCENARIO_CAP = 10 ** 6


@dataclass
class WorstEnvelope:
    worst_rocof: float   # [Hz/s]
    worst_nadir: float   # [Hz]
    worst_ss: float      # [Hz]
    #: per-metric witness: (scenario index, scenario, time, segment index)
    witnesses: dict
    scenario_count: int
    per_scenario: np.ndarray = None   # [S, 3] metric rows in Hz (optional)
    #: first scenario attaining every envelope component it can jointly
    #: attain (all three if possible, else RoCoF+nadir, else nadir)
    joint_witness: tuple = None       # (scenario index, scenario)

    @property
    def metrics(self):
        return (self.worst_rocof, self.worst_nadir, self.worst_ss)


def enumerate_scenarios(forecast: DisturbanceForecast,
                        cap: int = DEFAULT_SCENARIO_CAP):
    """Cartesian product of candidate offsets per window, all flags active.

    Ordering is lexicographic in the offset tuples, which fixes every
    tie-break downstream.  n = 0 yields the single empty scenario.
    """
    count = len(forecast.candidate_offsets) ** forecast.n
    if count > cap:
        raise CombinatorialOverflow(
            "%d scenarios exceed the cap of %d" % (count, cap))
    out = []
    for combo in itertools.product(forecast.candidate_offsets, repeat=forecast.n):
        out.append(DisturbanceScenario.from_offsets(combo, forecast.tau))
    return out


def envelope_from_batch(grid: GridParameters, batch, sweep_step: float):
    """Kernel evaluation of one point; per-scenario rows in model units."""
    res = _kernel.point_metrics(
        grid.h0, grid.d0, grid.r, grid.t_sg, grid.h_dvpp, grid.d_dvpp,
        batch.seg_len, batch.mag, batch.gcount, batch.gmax,
        sweep_step, batch.lmax, batch.horizon)
    return res


def find_worst(forecast: DisturbanceForecast, grid: GridParameters,
               limits=None, weighting: str = "realized",
               scenarios=None, sweep_step: float = None,
               cap: int = DEFAULT_SCENARIO_CAP,
               keep_rows: bool = False) -> WorstEnvelope:
    """Per-metric maxima over all enumerated scenarios, with witnesses.

    Ties break to the first scenario in enumeration order.  Raises
    OverdampedRegime when the (H, D) point has no underdamped closed form.
    """
    if scenarios is None:
        scenarios = enumerate_scenarios(forecast, cap)
    sweep = default_sweep_step(forecast) if sweep_step is None else sweep_step
    batch = _kernel.build_batch(scenarios, forecast, weighting)
    res = envelope_from_batch(grid, batch, sweep)
    if res is None:
        raise OverdampedRegime(
            "point (H_dvpp=%g, D_dvpp=%g) is overdamped" % (grid.h_dvpp, grid.d_dvpp))
    rocof_s, nadir_s, ss_s = res
    f = grid.f_base

    witnesses = {}
    values = {}
    for name, arr in (("rocof", rocof_s), ("nadir", nadir_s), ("ss", ss_s)):
        if len(arr) == 0:
            witnesses[name] = (-1, None, 0.0, -1)
            values[name] = 0.0
            continue
        si = int(np.argmax(arr))   # first maximum
        values[name] = f * float(arr[si])
        detail = evaluate_metrics(batch.scenarios[si], forecast, grid,
                                  weighting, sweep)
        t_at, seg = detail.witnesses[name]
        witnesses[name] = (si, batch.scenarios[si], t_at, seg)

    joint = None
    if len(rocof_s):
        tol = 1e-12
        attain_r = rocof_s >= rocof_s.max() * (1.0 - tol)
        attain_n = nadir_s >= nadir_s.max() * (1.0 - tol)
        attain_s = ss_s >= ss_s.max() * (1.0 - tol)
        for mask in (attain_r & attain_n & attain_s,
                     attain_r & attain_n, attain_n):
            idx = np.flatnonzero(mask)
            if len(idx):
                joint = (int(idx[0]), batch.scenarios[int(idx[0])])
                break

    rows = None
    if keep_rows:
        rows = f * np.stack([rocof_s, nadir_s, ss_s], axis=1)
    return WorstEnvelope(values["rocof"], values["nadir"], values["ss"],
                         witnesses, len(scenarios), rows, joint_witness=joint)
