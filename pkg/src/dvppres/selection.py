"""Two-stage selection of the required aggregate (H_dvpp, D_dvpp).

Stage 1 takes the smallest feasible damping: the steady-state regulation
power S(dP, D) = dP / (1 + (D0+R)/D_dvpp) grows with D_dvpp, so the
cheapest steady-state behavior sits at the low-damping edge of the region.
Stage 2 takes the smallest feasible inertia at that damping, which keeps
the injection overshoot low (the decay rate 1/(2T) + D/(4H) falls as H
grows, so smaller H decays faster).

Both stages first minimize on the scanned grid, then optionally sharpen the
value by bisection against direct membership probes, always returning the
feasible side of the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EmptyColumn, EmptyRegion
from .region import RegionGrid, make_evaluator


@dataclass
class SelectedParameters:
    h_re: float
    d_re: float
    h_re_grid: float
    d_re_grid: float
    feasible_cells: int
    achieved_s: float        # max |S(dP_i, d_re)| over forecast magnitudes
    achieved_decay: float    # zeta*wn at the selected point
    margins: tuple = None    # (rocof, nadir, ss) limit minus envelope [Hz]


def select_damping(region: RegionGrid) -> float:
    """Smallest grid damping with at least one feasible inertia."""
    cols = region.feasible.any(axis=0)
    idx = np.flatnonzero(cols)
    if len(idx) == 0:
        raise EmptyRegion("no feasible cell in the scanned region")
    return float(region.d_axis[idx[0]])


def select_inertia(region: RegionGrid, d_re: float) -> float:
    """Smallest grid inertia feasible in the column nearest to d_re."""
    j = int(np.argmin(np.abs(region.d_axis - d_re)))
    rows = np.flatnonzero(region.feasible[:, j])
    if len(rows) == 0:
        raise EmptyColumn("no feasible cell at d = %g" % region.d_axis[j])
    return float(region.h_axis[rows[0]])


def _bisect_min(predicate, lo, hi, tol):
    """Smallest x in [lo, hi] with predicate(x) true; hi must satisfy it."""
    if predicate(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def select_parameters(region: RegionGrid, forecast, grid_base, limits,
                      refine: bool = True, refine_tol_frac: float = 1e-3,
                      weighting: str = None) -> SelectedParameters:
    """Grid minimization plus bisection refinement of both stages."""
    weighting = region.weighting if weighting is None else weighting
    d_grid = select_damping(region)
    h_grid = select_inertia(region, d_grid)
    ev = make_evaluator(forecast, grid_base, limits, weighting,
                        region.sweep_step)

    d_re, h_re = d_grid, h_grid
    if refine:
        h_axis = region.h_axis
        d_tol = refine_tol_frac * (region.d_axis[-1] - region.d_axis[0])
        h_tol = refine_tol_frac * (region.h_axis[-1] - region.h_axis[0])

        def column_feasible(d):
            return any(ev.point(h, d).feasible for h in h_axis)

        d_lo = max(float(region.d_axis[0]), d_grid - region.d_step)
        d_re = _bisect_min(column_feasible, d_lo, d_grid, d_tol)

        rows = [h for h in h_axis if ev.point(h, d_re).feasible]
        if not rows:
            # refined damping sits on the numeric edge; fall back one tol
            d_re = min(d_re + d_tol, d_grid)
            rows = [h for h in h_axis if ev.point(h, d_re).feasible]
            if not rows:
                d_re = d_grid
                rows = [h_grid]
        h_hi = rows[0]
        h_lo = max(float(region.h_axis[0]), h_hi - region.h_step)
        h_re = _bisect_min(lambda h: ev.point(h, d_re).feasible,
                           h_lo, h_hi, h_tol)

    verdict = ev.point(h_re, d_re)
    if not verdict.feasible:
        # keep the grid point: it is certified feasible by the scan
        h_re, d_re = h_grid, d_grid
        verdict = ev.point(h_re, d_re)

    denom = 1.0 + (grid_base.d0 + grid_base.r) / d_re if d_re > 0 else None
    achieved_s = max((abs(m) for m in forecast.magnitudes), default=0.0)
    achieved_s = achieved_s / denom if denom else 0.0
    h_tot = grid_base.h0 + h_re
    d_tot = grid_base.d0 + d_re
    decay = 1.0 / (2.0 * grid_base.t_sg) + d_tot / (4.0 * h_tot)
    margins = (limits.rocof_lim - verdict.envelope[0],
               limits.nadir_lim - verdict.envelope[1],
               limits.ss_lim - verdict.envelope[2])
    return SelectedParameters(
        h_re=float(h_re), d_re=float(d_re),
        h_re_grid=h_grid, d_re_grid=d_grid,
        feasible_cells=int(region.feasible.sum()),
        achieved_s=achieved_s, achieved_decay=decay, margins=margins)
