"""Allocation of the required aggregate (H, D) across IBRs by cost.

The per-IBR injection is alpha(t)*H_i + beta(t)*D_i with alpha/beta fixed
by the aggregate point, so capacity limits sample to linear rows and the
program is an LP:

    min sum(a_i H_i + b_i D_i)
    s.t. sum H_i = H_re, sum D_i = D_re,
         |injection_i(t_k)| <= p_av_i  at sampled times,
         box bounds per IBR.

``constraint_scenario`` picks which injection curves the capacity rows
sample:
  * "witness": the composed (frozen-baseline) trajectories under the
    per-metric worst witness scenarios (default);
  * "all": composed trajectories under every enumerated scenario;
  * "per_step": each merged worst-case step taken as a fresh single-step
    response, ignoring carried baselines (conservative per-event sizing);

Large sampled row sets are handled by an active-set loop: solve small,
add the most violated rows per (IBR, sign), repeat; a final check covers
every row, and a continuous (analytic-extrema) sweep guards between
samples with up to 10 augmentation rounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .injection import (alpha_beta, injection_segment_extrema,
                        sequential_injection, trajectory_extrema)
from .model import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                    Infeasible, scenario_groups)
from .response import compose_piecewise, derive_second_order
from .simplex import lexicographic_refine, solve_bounded_lp

KKT_TOL = 1e-7
SWEEP_VIOLATION_FRAC = 1e-4
MAX_SWEEP_ROUNDS = 10


@dataclass
class AllocationProblem:
    ibrs: list
    h_target: float
    d_target: float
    grid: GridParameters              # base grid; targets define the aggregate
    forecast: DisturbanceForecast
    constraint_scenarios: list        # DisturbanceScenario objects
    reserve_scenario: DisturbanceScenario = None
    constraint_mode: str = "witness"  # "witness" | "all" | "per_step"
    weighting: str = "realized"
    k_samples: int = 600
    sweep_step: float = None

    def aggregate_grid(self) -> GridParameters:
        return self.grid.with_dvpp(self.h_target, self.d_target)


@dataclass
class LinearProgram:
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_meta: list                    # (ibr index, sign, time, tag) per ub row
    problem: AllocationProblem = None

    @property
    def n_vars(self):
        return len(self.c)

    @property
    def n_eq(self):
        return len(self.b_eq)

    @property
    def n_ineq(self):
        return len(self.b_ub)

    @property
    def n_rows(self):
        return self.n_eq + self.n_ineq


@dataclass
class Allocation:
    h: np.ndarray
    d: np.ndarray
    cost: float
    binding: list = field(default_factory=list)   # row_meta of active rows
    kkt_residual: float = None
    reserve_pair: object = None
    iterations: int = 0
    sweep_rounds: int = 0


def _unit_curves(problem: AllocationProblem, scenario, times):
    """Composed per-unit-H and per-unit-D injection values at ``times``."""
    d = derive_second_order(problem.aggregate_grid())
    groups = scenario_groups(scenario, problem.forecast, problem.weighting)
    alpha_traj = compose_piecewise(
        groups, problem.forecast.horizon,
        unit=lambda s: alpha_beta(d, 1.0, s)[0], decay=d.decay)
    beta_traj = compose_piecewise(
        groups, problem.forecast.horizon,
        unit=lambda s: alpha_beta(d, 1.0, s)[1], decay=d.decay)
    return alpha_traj.value(times), beta_traj.value(times)


def _sample_times(problem: AllocationProblem, include_extrema: bool):
    horizon = problem.forecast.horizon
    times = np.linspace(0.0, horizon, problem.k_samples)
    if not include_extrema:
        return times
    d = derive_second_order(problem.aggregate_grid())
    extra = []
    period = math.pi / d.omega_d
    for scen in problem.constraint_scenarios:
        for tg, _k in scenario_groups(scen, problem.forecast, problem.weighting):
            extra.append(tg)
            m = 0
            while True:
                t = tg + 0.5 * period + m * 0.5 * period
                if t >= horizon:
                    break
                extra.append(t)
                m += 1
    if extra:
        times = np.unique(np.concatenate([times, extra]))
    return times


def build_lp(problem: AllocationProblem, include_extremum_candidates: bool = True,
             extra_times=None) -> LinearProgram:
    """Materialize the allocation LP (2N variables, 2 equalities, boxes,
    2*N*K sampled capacity rows)."""
    n = len(problem.ibrs)
    c = np.array([i.a for i in problem.ibrs] + [i.b for i in problem.ibrs],
                 dtype=float)
    a_eq = np.zeros((2, 2 * n))
    a_eq[0, :n] = 1.0
    a_eq[1, n:] = 1.0
    b_eq = np.array([problem.h_target, problem.d_target], dtype=float)
    lower = np.array([i.h_bounds[0] for i in problem.ibrs]
                     + [i.d_bounds[0] for i in problem.ibrs], dtype=float)
    upper = np.array([i.h_bounds[1] for i in problem.ibrs]
                     + [i.d_bounds[1] for i in problem.ibrs], dtype=float)

    times = _sample_times(problem, include_extremum_candidates)
    if extra_times is not None and len(extra_times):
        times = np.unique(np.concatenate([times, extra_times]))

    d = derive_second_order(problem.aggregate_grid())
    curves = []   # (tag, alpha values, beta values)
    if problem.constraint_mode in ("witness", "all"):
        for scen in problem.constraint_scenarios:
            av, bv = _unit_curves(problem, scen, times)
            curves.append(("scenario", av, bv))
    elif problem.constraint_mode == "per_step":
        seen = set()
        for scen in problem.constraint_scenarios:
            for _tg, k in scenario_groups(scen, problem.forecast,
                                          problem.weighting):
                key = round(k, 15)
                if key in seen or k == 0.0:
                    continue
                seen.add(key)
                av, bv = alpha_beta(d, k, times)
                curves.append(("step %g" % k, av, bv))
    else:
        raise ValueError("unknown constraint_mode %r" % problem.constraint_mode)

    rows = []
    rhs = []
    meta = []
    for tag, av, bv in curves:
        for i, ibr in enumerate(problem.ibrs):
            for sign in (+1.0, -1.0):
                blk = np.zeros((len(times), 2 * n))
                blk[:, i] = sign * av
                blk[:, n + i] = sign * bv
                rows.append(blk)
                rhs.append(np.full(len(times), ibr.p_av))
                meta.extend((i, int(sign), float(t), tag) for t in times)
    a_ub = np.vstack(rows) if rows else np.zeros((0, 2 * n))
    b_ub = np.concatenate(rhs) if rhs else np.zeros(0)
    return LinearProgram(c, a_eq, b_eq, a_ub, b_ub, lower, upper, meta, problem)


def _diagnose_infeasible(lp: LinearProgram):
    lo_h, up_h = lp.lower[:lp.n_vars // 2], lp.upper[:lp.n_vars // 2]
    lo_d, up_d = lp.lower[lp.n_vars // 2:], lp.upper[lp.n_vars // 2:]
    h_t, d_t = lp.b_eq
    if up_h.sum() < h_t or lo_h.sum() > h_t:
        return "capacity: sum of inertia bounds cannot reach the target"
    if up_d.sum() < d_t or lo_d.sum() > d_t:
        return "capacity: sum of damping bounds cannot reach the target"
    return "injection limits: capacity rows exclude every feasible split"


def _solve_active_set(lp: LinearProgram, tol=1e-9):
    """Lazy row activation + final full check + lexicographic tie-break."""
    n_rows = lp.n_ineq
    active = []
    res = None
    cap = max(60, 4 * lp.n_vars)
    for _ in range(cap):
        a_ub = lp.a_ub[active] if active else None
        b_ub = lp.b_ub[active] if active else None
        res = solve_bounded_lp(lp.c, lp.a_eq, lp.b_eq, a_ub, b_ub,
                               lp.lower, lp.upper, tol=tol)
        if res.status != "optimal":
            return res, active
        if n_rows == 0:
            break
        viol = lp.a_ub @ res.x - lp.b_ub
        scale = 1.0 + np.abs(lp.b_ub).max(initial=0.0)
        worst = {}
        for ridx in np.flatnonzero(viol > tol * scale):
            i, sign, _t, _tag = lp.row_meta[ridx]
            key = (i, sign)
            if key not in worst or viol[ridx] > viol[worst[key]]:
                worst[key] = ridx
        if not worst:
            break
        active.extend(sorted(worst.values()))
    refined = lexicographic_refine(
        lp.c, lp.a_eq, lp.b_eq,
        lp.a_ub[active] if active else np.zeros((0, lp.n_vars)),
        lp.b_ub[active] if active else np.zeros(0),
        lp.lower, lp.upper, res, order=_lex_order(lp.n_vars))
    return refined, active


def _lex_order(n_vars):
    """(H_1, D_1, H_2, D_2, ...) ordering for tie-breaks."""
    n = n_vars // 2
    order = []
    for i in range(n):
        order.extend([i, n + i])
    return order


def kkt_residuals(lp: LinearProgram, x, duals_eq, duals_ub, tol=KKT_TOL):
    """Max violation over primal feasibility, stationarity, complementarity."""
    r = [abs(lp.a_eq @ x - lp.b_eq).max(initial=0.0)]
    if lp.n_ineq:
        slack = lp.b_ub - lp.a_ub @ x
        r.append(max(0.0, -slack.min()))
        r.append(np.abs(duals_ub * slack).max(initial=0.0))
        r.append(max(0.0, -(-duals_ub).min(initial=0.0) * 0.0))  # sign handled below
        grad = lp.c - lp.a_eq.T @ duals_eq - lp.a_ub.T @ duals_ub
    else:
        grad = lp.c - lp.a_eq.T @ duals_eq
    at_lower = np.isclose(x, lp.lower, atol=1e-9)
    at_upper = np.isclose(x, lp.upper, atol=1e-9)
    interior = ~(at_lower | at_upper)
    if interior.any():
        r.append(np.abs(grad[interior]).max())
    if at_lower.any():
        r.append(max(0.0, -(grad[at_lower]).min()))
    if at_upper.any():
        r.append(max(0.0, (grad[at_upper]).max()))
    return float(max(r))


def solve_allocation(lp: LinearProgram) -> Allocation:
    """Optimal deterministic vertex + certificate + continuous-sweep guard."""
    problem = lp.problem
    res, active = _solve_active_set(lp)
    if res.status == "infeasible":
        raise Infeasible("allocation LP infeasible", _diagnose_infeasible(lp))
    if res.status == "unbounded":
        raise Infeasible("allocation LP unbounded (malformed bounds)",
                         "bounds")

    sweep_rounds = 0
    current_lp = lp
    while problem is not None and sweep_rounds < MAX_SWEEP_ROUNDS:
        extra = _continuous_violations(current_lp, res.x)
        if not extra:
            break
        sweep_rounds += 1
        current_lp = build_lp(problem, extra_times=np.array(extra))
        res, active = _solve_active_set(current_lp)
        if res.status != "optimal":
            raise Infeasible("allocation LP infeasible after sweep augmentation",
                             _diagnose_infeasible(current_lp))

    n = current_lp.n_vars // 2
    # duals over the full row set: zero on inactive rows
    duals_eq = res.duals[:2] if res.duals is not None else np.zeros(2)
    duals_ub = np.zeros(current_lp.n_ineq)
    if res.duals is not None and active:
        duals_ub[np.asarray(active)] = res.duals[2:2 + len(active)]
    kkt = kkt_residuals(current_lp, res.x, duals_eq, duals_ub)

    binding = []
    if current_lp.n_ineq:
        slack = current_lp.b_ub - current_lp.a_ub @ res.x
        scale = 1.0 + np.abs(current_lp.b_ub).max(initial=0.0)
        for ridx in np.flatnonzero(np.abs(slack) <= 1e-6 * scale):
            binding.append(current_lp.row_meta[ridx])

    alloc = Allocation(h=res.x[:n].copy(), d=res.x[n:].copy(),
                       cost=float(current_lp.c @ res.x),
                       binding=binding, kkt_residual=kkt,
                       iterations=res.iterations, sweep_rounds=sweep_rounds)
    if problem is not None and problem.reserve_scenario is not None:
        alloc.reserve_pair = allocation_reserves(problem, alloc)
    return alloc


def _continuous_violations(lp: LinearProgram, x):
    """Analytic-extrema sweep of the solved allocation; violated instants."""
    problem = lp.problem
    if problem is None or problem.constraint_mode == "per_step":
        # fresh-step rows already include analytic extremum candidates via
        # the dense lattice; the composed-trajectory sweep does not apply
        return []
    d = derive_second_order(problem.aggregate_grid())
    sweep = (problem.forecast.tau / 600.0 if problem.sweep_step is None
             else problem.sweep_step)
    n = lp.n_vars // 2
    extra = []
    for scen in problem.constraint_scenarios:
        for i in range(n):
            cap = problem.ibrs[i].p_av
            traj = sequential_injection(scen, problem.forecast, d,
                                        x[i], x[n + i], problem.weighting)
            lo, hi, t_lo, t_hi = trajectory_extrema(traj, d, x[i], x[n + i], sweep)
            if hi > cap * (1.0 + SWEEP_VIOLATION_FRAC) + 1e-15:
                extra.append(t_hi)
            if -lo > cap * (1.0 + SWEEP_VIOLATION_FRAC) + 1e-15:
                extra.append(t_lo)
    return sorted(set(extra))


def allocation_reserves(problem: AllocationProblem, alloc: Allocation):
    """Per-IBR trajectory extrema under the reserve scenario, clip-summed."""
    from .injection import reserves as _reserves
    d = derive_second_order(problem.aggregate_grid())
    sweep = (problem.forecast.tau / 600.0 if problem.sweep_step is None
             else problem.sweep_step)
    extrema = []
    for i in range(len(problem.ibrs)):
        traj = sequential_injection(problem.reserve_scenario, problem.forecast,
                                    d, alloc.h[i], alloc.d[i], problem.weighting)
        extrema.append(trajectory_extrema(traj, d, alloc.h[i], alloc.d[i], sweep))
    return _reserves(extrema)
