"""Scenario batch: timing data shared across all (H, D) evaluations.

Merged step groups depend only on the forecast and the timing scenarios,
never on the grid parameters, so the region scan prepares them once and
reuses them for every cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import DisturbanceForecast, scenario_groups


@dataclass
class ScenarioBatch:
    seg_len: np.ndarray      # [S, G] segment lengths, 0-padded
    mag: np.ndarray          # [S, G] merged step magnitudes, 0-padded
    group_time: np.ndarray   # [S, G] group instants, horizon-padded
    gcount: np.ndarray       # [S] number of groups per scenario
    gmax: np.ndarray         # [S] max |merged magnitude| (RoCoF numerator)
    rocof_time: np.ndarray   # [S] instant attaining gmax (first)
    horizon: float
    lmax: float              # longest segment, sizes the sweep table
    scenarios: list          # original DisturbanceScenario objects

    @property
    def n_scenarios(self) -> int:
        return len(self.gcount)


def build_batch(scenarios, forecast: DisturbanceForecast,
                weighting: str = "probabilistic") -> ScenarioBatch:
    horizon = forecast.horizon
    all_groups = [scenario_groups(s, forecast, weighting) for s in scenarios]
    gmax_width = max((len(g) for g in all_groups), default=0)
    width = max(1, gmax_width)
    S = len(scenarios)
    seg_len = np.zeros((S, width))
    mag = np.zeros((S, width))
    gtime = np.full((S, width), horizon)
    gcount = np.zeros(S, dtype=np.int32)
    gmax = np.zeros(S)
    rtime = np.zeros(S)
    for si, groups in enumerate(all_groups):
        gcount[si] = len(groups)
        best = 0.0
        best_t = 0.0
        for gi, (t, k) in enumerate(groups):
            t_end = groups[gi + 1][0] if gi + 1 < len(groups) else horizon
            seg_len[si, gi] = max(0.0, t_end - t)
            mag[si, gi] = k
            gtime[si, gi] = t
            if abs(k) > best:
                best = abs(k)
                best_t = t
        gmax[si] = best
        rtime[si] = best_t
    lmax = float(seg_len.max()) if S else horizon
    return ScenarioBatch(seg_len, mag, gtime, gcount, gmax, rtime,
                         horizon, lmax, list(scenarios))
