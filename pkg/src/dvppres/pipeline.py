"""Pipeline stages behind the CLI: worst case -> region -> selection ->
allocation -> reserves, plus artifact writers."""
from __future__ import annotations

import datetime as _dt
import os

import numpy as np

from . import __version__, _kernel
from .allocation import AllocationProblem, build_lp, solve_allocation
from .config import RunConfig
from .csvio import Manifest, fmt, sha256_bytes, write_csv
from .metrics import check_limits, default_sweep_step
from .model import DisturbanceScenario, EmptyColumn, EmptyRegion, Infeasible
from .region import CAUSE_NAMES, scan_region
from .response import derive_second_order, sequential_response
from .selection import select_parameters
from .worstcase import enumerate_scenarios, find_worst
from . import oracle


class StageFailure(RuntimeError):
    def __init__(self, stage, message, exit_code=2):
        super().__init__("%s: %s" % (stage, message))
        self.stage = stage
        self.exit_code = exit_code


def new_manifest(cfg: RunConfig) -> Manifest:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return Manifest(sha256_bytes(cfg.raw_bytes), _kernel.backend_name,
                    __version__, stamp)


def run_region(cfg: RunConfig, resolution=None, threads=None):
    res = resolution if resolution is not None else cfg.solver.resolution
    thr = threads if threads is not None else cfg.solver.threads
    try:
        return scan_region(cfg.grid, cfg.forecast, cfg.limits,
                           cfg.solver.h_bounds, cfg.solver.d_bounds,
                           resolution=res, threads=thr,
                           weighting=cfg.solver.weighting,
                           sweep_step=cfg.solver.sweep_step)
    except ValueError as exc:
        raise StageFailure("feasible-region", str(exc), exit_code=1)


def run_selection(cfg: RunConfig, region):
    try:
        return select_parameters(region, cfg.forecast, cfg.grid, cfg.limits,
                                 refine=cfg.solver.refine,
                                 refine_tol_frac=cfg.solver.refine_tol_frac,
                                 weighting=cfg.solver.weighting)
    except (EmptyRegion, EmptyColumn) as exc:
        raise StageFailure("feasible-region", "empty region: %s" % exc)


def run_worst(cfg: RunConfig, grid=None, keep_rows=False):
    grid = cfg.grid if grid is None else grid
    return find_worst(cfg.forecast, grid, cfg.limits,
                      weighting=cfg.solver.weighting,
                      sweep_step=cfg.solver.sweep_step,
                      cap=cfg.solver.scenario_cap, keep_rows=keep_rows)


def run_allocation(cfg: RunConfig, h_re, d_re, envelope=None):
    if not cfg.ibrs:
        raise StageFailure("allocation", "no ibrs configured", exit_code=1)
    grid_sel = cfg.grid.with_dvpp(h_re, d_re)
    envelope = run_worst(cfg, grid_sel) if envelope is None else envelope
    if cfg.solver.constraint_scenario == "all":
        scenarios = enumerate_scenarios(cfg.forecast, cfg.solver.scenario_cap)
    else:
        seen, scenarios = set(), []
        candidates = ([envelope.joint_witness[1]] if envelope.joint_witness else [])
        candidates += [envelope.witnesses[m][1] for m in ("rocof", "nadir", "ss")
                       if envelope.witnesses[m][1] is not None]
        for s in candidates:
            if s.occurrence_times not in seen:
                seen.add(s.occurrence_times)
                scenarios.append(s)
    reserve_scenario = (envelope.joint_witness[1] if envelope.joint_witness
                        else scenarios[0] if scenarios else None)
    problem = AllocationProblem(
        cfg.ibrs, h_re, d_re, cfg.grid, cfg.forecast,
        constraint_scenarios=scenarios, reserve_scenario=reserve_scenario,
        constraint_mode=cfg.solver.constraint_scenario,
        weighting=cfg.solver.weighting, k_samples=cfg.solver.k_samples,
        sweep_step=cfg.solver.sweep_step)
    lp = build_lp(problem)
    try:
        alloc = solve_allocation(lp)
    except Infeasible as exc:
        raise StageFailure("allocation", "%s (%s)" % (exc, exc.cause_hint))
    return problem, alloc


# ---------------------------------------------------------------- artifacts

def write_region_csv(path, region, sig=9):
    rows = ((h, d, int(region.feasible[i, j]), region.cause_name(i, j))
            for i, h in enumerate(region.h_axis)
            for j, d in enumerate(region.d_axis))
    meta = {"h_axis": "%d points" % len(region.h_axis),
            "d_axis": "%d points" % len(region.d_axis),
            "weighting": region.weighting,
            "sweep_step": fmt(region.sweep_step, sig)}
    return write_csv(path, ["h_dvpp", "d_dvpp", "feasible", "cause"],
                     rows, meta, sig)


def write_region_runs_csv(path, region, sig=9):
    """Run-length encoding: contiguous feasible h-spans per damping value."""
    rows = []
    for j, d in enumerate(region.d_axis):
        col = region.feasible[:, j]
        i = 0
        while i < len(col):
            if col[i]:
                k = i
                while k + 1 < len(col) and col[k + 1]:
                    k += 1
                rows.append((d, region.h_axis[i], region.h_axis[k]))
                i = k + 1
            else:
                i += 1
    return write_csv(path, ["d_dvpp", "h_start", "h_end"], rows, None, sig)


def write_worst_csv(path, cfg, envelope, limits, sig=9):
    rows = []
    for si, scen in enumerate(enumerate_scenarios(cfg.forecast,
                                                  cfg.solver.scenario_cap)):
        r, n, s = envelope.per_scenario[si]
        rows.append((si, " ".join(fmt(t, sig) for t in scen.occurrence_times),
                     r, n, s,
                     int(r <= limits.rocof_lim), int(n <= limits.nadir_lim),
                     int(s <= limits.ss_lim)))
    meta = {"worst_rocof": fmt(envelope.worst_rocof, sig),
            "worst_nadir": fmt(envelope.worst_nadir, sig),
            "worst_ss": fmt(envelope.worst_ss, sig),
            "joint_witness": envelope.joint_witness[0]
            if envelope.joint_witness else -1}
    return write_csv(path, ["scenario", "occurrence_times", "m_rocof",
                            "m_nadir", "m_ss", "rocof_ok", "nadir_ok", "ss_ok"],
                     rows, meta, sig)


def write_selection_csv(path, sel, sig=9):
    rows = [("d_re_grid", sel.d_re_grid), ("h_re_grid", sel.h_re_grid),
            ("d_re", sel.d_re), ("h_re", sel.h_re),
            ("feasible_cells", sel.feasible_cells),
            ("achieved_s", sel.achieved_s),
            ("achieved_decay", sel.achieved_decay),
            ("margin_rocof", sel.margins[0]),
            ("margin_nadir", sel.margins[1]),
            ("margin_ss", sel.margins[2])]
    return write_csv(path, ["key", "value"], rows, None, sig)


def write_allocation_csv(path, problem, alloc, sig=9):
    binding_up = {m[0] for m in alloc.binding if m[1] > 0}
    binding_dn = {m[0] for m in alloc.binding if m[1] < 0}
    rp = alloc.reserve_pair
    rows = []
    for i, ibr in enumerate(problem.ibrs):
        peak_up = _peak_of(problem, alloc, i, +1) if rp is not None else 0.0
        peak_dn = _peak_of(problem, alloc, i, -1) if rp is not None else 0.0
        rows.append((i + 1, alloc.h[i], alloc.d[i], peak_up, peak_dn,
                     int(i in binding_up), int(i in binding_dn)))
    rows.append(("total", alloc.h.sum(), alloc.d.sum(),
                 rp.r_up if rp else 0.0, rp.r_down if rp else 0.0, "", ""))
    meta = {"cost": fmt(alloc.cost, sig),
            "kkt_residual": fmt(alloc.kkt_residual, sig),
            "constraint_mode": problem.constraint_mode}
    return write_csv(path, ["ibr", "h", "d", "peak_up", "peak_down",
                            "binding_up", "binding_down"], rows, meta, sig)


def _peak_of(problem, alloc, i, sign):
    from .injection import trajectory_extrema
    from .injection import sequential_injection
    d = derive_second_order(problem.aggregate_grid())
    sweep = (problem.forecast.tau / 600.0 if problem.sweep_step is None
             else problem.sweep_step)
    traj = sequential_injection(problem.reserve_scenario, problem.forecast, d,
                                alloc.h[i], alloc.d[i], problem.weighting)
    lo, hi, _tl, _th = trajectory_extrema(traj, d, alloc.h[i], alloc.d[i], sweep)
    return hi if sign > 0 else lo


def write_reserves_csv(path, alloc, sig=9):
    rp = alloc.reserve_pair
    rows = [("r_up", rp.r_up), ("r_down", rp.r_down),
            ("r_down_abs", abs(rp.r_down))]
    return write_csv(path, ["key", "value"], rows, None, sig)


def write_trace_csv(path, cfg, trace, analytic=None, sig=9):
    f = cfg.grid.f_base
    cols = ["t", "delta_f", "rocof", "p_sg", "p_dvpp"]
    arrays = [trace.t, f * trace.delta_f, f * trace.rocof, trace.p_sg,
              trace.p_dvpp]
    if analytic is not None:
        cols.append("delta_f_analytic")
        arrays.append(f * analytic)
    rows = zip(*arrays)
    meta = {"f_base": fmt(f, sig), "note": "delta_f and rocof are in Hz"}
    return write_csv(path, cols, rows, meta, sig)


# ------------------------------------------------------------------ analyze

def cmd_analyze_run(cfg: RunConfig, out_dir, resolution=None, threads=None):
    os.makedirs(out_dir, exist_ok=True)
    manifest = new_manifest(cfg)

    region = run_region(cfg, resolution, threads)
    sel = run_selection(cfg, region)
    grid_sel = cfg.grid.with_dvpp(sel.h_re, sel.d_re)
    envelope = run_worst(cfg, grid_sel, keep_rows=True)
    problem, alloc = run_allocation(cfg, sel.h_re, sel.d_re, envelope)

    outputs = [
        ("region.csv", write_region_csv, (region,)),
        ("region_runs.csv", write_region_runs_csv, (region,)),
        ("worst_scenarios.csv", write_worst_csv, (cfg, envelope, cfg.limits)),
        ("selection.csv", write_selection_csv, (sel,)),
        ("allocation.csv", write_allocation_csv, (problem, alloc)),
        ("reserves.csv", write_reserves_csv, (alloc,)),
    ]
    for name, writer, args in outputs:
        path = os.path.join(out_dir, name)
        rows, cols = writer(path, *args, sig=cfg.output.sig_digits)
        manifest.add_output(path, rows, cols)

    manifest.add_stage("selection", {"h_re": sel.h_re, "d_re": sel.d_re})
    manifest.add_stage("allocation", {"cost": alloc.cost,
                                      "kkt_residual": alloc.kkt_residual})
    manifest.add_stage("reserves", {"r_up": alloc.reserve_pair.r_up,
                                    "r_down": alloc.reserve_pair.r_down})
    manifest.add_stage("worst", {
        "joint_witness": list(envelope.joint_witness[1].occurrence_times)
        if envelope.joint_witness else None,
        "envelope": list(envelope.metrics)})
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest, sel, alloc


def resolve_scenario(cfg: RunConfig, selector: str):
    """'worst' -> joint witness; integer -> enumeration index; 'none'."""
    if selector == "none":
        fc = cfg.forecast
        return DisturbanceScenario(tuple(i * fc.tau for i in range(fc.n)),
                                   (False,) * fc.n)
    if selector == "worst":
        env = run_worst(cfg)
        if env.joint_witness is None:
            raise StageFailure("simulate", "no scenarios to simulate",
                               exit_code=1)
        return env.joint_witness[1]
    try:
        idx = int(selector)
    except ValueError:
        raise StageFailure("simulate", "unknown scenario selector %r" % selector,
                           exit_code=1)
    scenarios = enumerate_scenarios(cfg.forecast, cfg.solver.scenario_cap)
    if not 0 <= idx < len(scenarios):
        raise StageFailure("simulate", "scenario index %d out of range [0, %d)"
                           % (idx, len(scenarios)), exit_code=1)
    return scenarios[idx]


def cmd_simulate_run(cfg: RunConfig, out_dir, selector="worst", dt=None):
    os.makedirs(out_dir, exist_ok=True)
    manifest = new_manifest(cfg)
    scenario = resolve_scenario(cfg, selector)
    dt = dt if dt is not None else (cfg.solver.dt if cfg.solver.dt is not None
                                    else cfg.grid.t_sg / 100.0)
    trace = oracle.simulate(scenario, cfg.forecast, cfg.grid, dt,
                            weighting=cfg.solver.weighting)
    analytic = None
    if scenario.n and any(scenario.active_flags):
        d = derive_second_order(cfg.grid)
        traj = sequential_response(scenario, cfg.forecast, d,
                                   weighting=cfg.solver.weighting)
        analytic = traj.value(trace.t)
    path = os.path.join(out_dir, "trace.csv")
    rows, cols = write_trace_csv(path, cfg, trace, analytic,
                                 sig=cfg.output.sig_digits)
    manifest.add_output(path, rows, cols)
    manifest.add_stage("simulate", {"scenario": list(scenario.occurrence_times),
                                    "dt": dt})
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest, trace


def cmd_region_run(cfg: RunConfig, out_dir, resolution=None, threads=None):
    os.makedirs(out_dir, exist_ok=True)
    manifest = new_manifest(cfg)
    region = run_region(cfg, resolution, threads)
    for name, writer in (("region.csv", write_region_csv),
                         ("region_runs.csv", write_region_runs_csv)):
        path = os.path.join(out_dir, name)
        rows, cols = writer(path, region, sig=cfg.output.sig_digits)
        manifest.add_output(path, rows, cols)
    manifest.add_stage("region", {
        "feasible_cells": int(region.feasible.sum()),
        "cells": int(region.feasible.size)})
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest, region


def cmd_allocate_run(cfg: RunConfig, out_dir, resolution=None, threads=None):
    os.makedirs(out_dir, exist_ok=True)
    manifest = new_manifest(cfg)
    region = run_region(cfg, resolution, threads)
    sel = run_selection(cfg, region)
    problem, alloc = run_allocation(cfg, sel.h_re, sel.d_re)
    for name, writer, args in (
            ("selection.csv", write_selection_csv, (sel,)),
            ("allocation.csv", write_allocation_csv, (problem, alloc)),
            ("reserves.csv", write_reserves_csv, (alloc,))):
        path = os.path.join(out_dir, name)
        rows, cols = writer(path, *args, sig=cfg.output.sig_digits)
        manifest.add_output(path, rows, cols)
    manifest.add_stage("allocation", {"cost": alloc.cost})
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest, alloc
