import numpy as np
import pytest

from dvppres import (AllocationProblem, DisturbanceForecast,
                     DisturbanceScenario, IbrSpec, build_lp, solve_allocation)
from dvppres.model import Infeasible
from dvppres.simplex import solve_bounded_lp


def make_problem(case_grid, case_forecast, case_ibrs, worst_timing,
                 mode="witness", h_t=19.86, d_t=10.68, k=600):
    return AllocationProblem(
        case_ibrs, h_t, d_t, case_grid, case_forecast,
        constraint_scenarios=[worst_timing], reserve_scenario=worst_timing,
        constraint_mode=mode, weighting="realized", k_samples=k)


# ------------------------------------------------------------- simplex unit

def test_simplex_basic():
    # min -x - 2y st x + y <= 4, 0 <= x,y <= 3  ->  (1, 3)
    res = solve_bounded_lp([-1.0, -2.0], a_ub=[[1.0, 1.0]], b_ub=[4.0],
                           lower=[0.0, 0.0], upper=[3.0, 3.0])
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [1.0, 3.0], atol=1e-9)


def test_simplex_equality_and_bounds():
    # min x1 + 2*x2 + 3*x3 st sum = 5, 0 <= xi <= 2 -> (2, 2, 1)
    res = solve_bounded_lp([1.0, 2.0, 3.0], a_eq=[[1, 1, 1]], b_eq=[5.0],
                           lower=[0] * 3, upper=[2] * 3)
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [2.0, 2.0, 1.0], atol=1e-9)
    assert res.objective == pytest.approx(9.0)


def test_simplex_infeasible():
    res = solve_bounded_lp([1.0], a_eq=[[1.0]], b_eq=[5.0],
                           lower=[0.0], upper=[2.0])
    assert res.status == "infeasible"


def test_simplex_unbounded():
    res = solve_bounded_lp([-1.0], lower=[0.0], upper=[np.inf])
    assert res.status == "unbounded"


# ------------------------------------------------------------ LP structure

def test_lp_row_counts(case_grid, case_forecast, case_ibrs, worst_timing):
    problem = make_problem(case_grid, case_forecast, case_ibrs, worst_timing,
                           k=300)
    lp = build_lp(problem, include_extremum_candidates=False)
    assert lp.n_vars == 12
    assert lp.n_eq == 2
    assert lp.n_ineq == 2 * 6 * 300
    assert lp.n_rows == 3602


def test_single_ibr_forced(case_grid, case_forecast, worst_timing):
    ibrs = [IbrSpec(1.0, 1.0, 10.0, (0.0, 30.0), (0.0, 30.0))]
    problem = AllocationProblem(ibrs, 7.5, 4.25, case_grid, case_forecast,
                                [worst_timing], worst_timing,
                                k_samples=50)
    alloc = solve_allocation(build_lp(problem))
    assert alloc.h[0] == pytest.approx(7.5, abs=1e-9)
    assert alloc.d[0] == pytest.approx(4.25, abs=1e-9)


def test_zero_targets_zero_cost(case_grid, case_forecast, worst_timing):
    ibrs = [IbrSpec(2.0, 3.0, 1.0, (0.0, 5.0), (0.0, 5.0)) for _ in range(3)]
    problem = AllocationProblem(ibrs, 0.0, 0.0, case_grid, case_forecast,
                                [worst_timing], worst_timing, k_samples=50)
    alloc = solve_allocation(build_lp(problem))
    assert alloc.cost == pytest.approx(0.0, abs=1e-12)


def test_cheaper_inertia_takes_all(case_grid, case_forecast, worst_timing):
    # ample capacity, equal damping costs: cheapest inertia saturates first
    ibrs = [IbrSpec(1.0, 1.0, 50.0, (0.0, 6.0), (0.0, 6.0)),
            IbrSpec(5.0, 1.0, 50.0, (0.0, 6.0), (0.0, 6.0))]
    problem = AllocationProblem(ibrs, 8.0, 2.0, case_grid, case_forecast,
                                [worst_timing], worst_timing, k_samples=50)
    alloc = solve_allocation(build_lp(problem))
    assert alloc.h[0] == pytest.approx(6.0, abs=1e-9)
    assert alloc.h[1] == pytest.approx(2.0, abs=1e-9)


def test_capacity_infeasible(case_grid, case_forecast, worst_timing):
    ibrs = [IbrSpec(1.0, 1.0, 10.0, (0.0, 4.0), (0.0, 6.0)) for _ in range(2)]
    problem = AllocationProblem(ibrs, 9.0, 2.0, case_grid, case_forecast,
                                [worst_timing], worst_timing, k_samples=20)
    with pytest.raises(Infeasible) as exc:
        solve_allocation(build_lp(problem))
    assert "capacity" in exc.value.cause_hint


def test_case_study_allocation(case_grid, case_forecast, case_ibrs,
                               worst_timing):
    problem = make_problem(case_grid, case_forecast, case_ibrs, worst_timing,
                           mode="per_step")
    alloc = solve_allocation(build_lp(problem))
    assert alloc.h.sum() == pytest.approx(19.86, abs=1e-8)
    assert alloc.d.sum() == pytest.approx(10.68, abs=1e-8)
    assert alloc.kkt_residual <= 1e-7
    assert (alloc.h >= 0.1 - 1e-9).all() and (alloc.h <= 6 + 1e-9).all()
    rp = alloc.reserve_pair
    assert rp.r_up > 0 and rp.r_down < 0


def test_determinism_and_cost_scaling(case_grid, case_forecast, case_ibrs,
                                      worst_timing):
    problem = make_problem(case_grid, case_forecast, case_ibrs, worst_timing,
                           k=200)
    a1 = solve_allocation(build_lp(problem))
    a2 = solve_allocation(build_lp(problem))
    np.testing.assert_array_equal(a1.h, a2.h)
    np.testing.assert_array_equal(a1.d, a2.d)
    scaled_ibrs = [IbrSpec(3.0 * i.a, 3.0 * i.b, i.p_av, i.h_bounds, i.d_bounds)
                   for i in case_ibrs]
    problem3 = AllocationProblem(scaled_ibrs, 19.86, 10.68, case_grid,
                                 case_forecast, [worst_timing], worst_timing,
                                 constraint_mode="witness", weighting="realized",
                                 k_samples=200)
    a3 = solve_allocation(build_lp(problem3))
    np.testing.assert_allclose(a3.h, a1.h, atol=1e-9)
    np.testing.assert_allclose(a3.d, a1.d, atol=1e-9)
    assert a3.cost == pytest.approx(3.0 * a1.cost, rel=1e-9)


def test_binding_rows_hold_with_equality(case_grid, case_forecast, case_ibrs,
                                         worst_timing):
    from dvppres.injection import sequential_injection
    from dvppres.response import derive_second_order
    problem = make_problem(case_grid, case_forecast, case_ibrs, worst_timing)
    alloc = solve_allocation(build_lp(problem))
    d = derive_second_order(problem.aggregate_grid())
    for (i, sign, t_at, _tag) in alloc.binding:
        traj = sequential_injection(worst_timing, case_forecast, d,
                                    alloc.h[i], alloc.d[i], "realized")
        val = sign * traj.value(t_at)
        assert val == pytest.approx(case_ibrs[i].p_av,
                                    abs=1e-6 * case_ibrs[i].p_av)


def convex_hull(points):
    """Andrew's monotone chain; points is an (n, 2) array."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts

    def cross2(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(iterable):
        chain = []
        for p in iterable:
            while len(chain) >= 2 and cross2(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def test_two_ibr_matches_brute_force(case_grid, case_forecast, worst_timing):
    ibrs = [IbrSpec(2.0, 1.5, 0.05, (0.1, 2.5), (0.1, 2.5)),
            IbrSpec(1.0, 2.5, 0.04, (0.1, 2.5), (0.1, 2.5))]
    h_t, d_t = 2.0, 1.2
    problem = AllocationProblem(ibrs, h_t, d_t, case_grid, case_forecast,
                                [worst_timing], worst_timing,
                                constraint_mode="witness",
                                weighting="realized", k_samples=600)
    alloc = solve_allocation(build_lp(problem))

    # independent oracle: exhaustive 1e-3 grid over (H1, D1) against the
    # continuous capacity constraint, reduced to the convex hull of the
    # densely sampled (alpha, beta) basis cloud
    from dvppres.injection import alpha_beta
    from dvppres.response import compose_piecewise, derive_second_order
    from dvppres.model import scenario_groups
    d = derive_second_order(problem.aggregate_grid())
    groups = scenario_groups(worst_timing, case_forecast, "realized")
    times = np.linspace(0, 300.0, 12001)
    at = compose_piecewise(groups, 300.0,
                           lambda s: alpha_beta(d, 1.0, s)[0]).value(times)
    bt = compose_piecewise(groups, 300.0,
                           lambda s: alpha_beta(d, 1.0, s)[1]).value(times)
    hull = convex_hull(np.column_stack([at, bt]))
    ah, bh = hull[:, 0], hull[:, 1]
    h1 = np.arange(max(0.1, h_t - 2.5), min(2.5, h_t - 0.1) + 1e-12, 1e-3)
    d1 = np.arange(max(0.1, d_t - 2.5), min(2.5, d_t - 0.1) + 1e-12, 1e-3)
    best = np.inf
    for hv in h1:
        inj1 = np.abs(ah[:, None] * hv + bh[:, None] * d1[None, :])
        inj2 = np.abs(ah[:, None] * (h_t - hv)
                      + bh[:, None] * (d_t - d1)[None, :])
        feas = (inj1.max(axis=0) <= ibrs[0].p_av) \
            & (inj2.max(axis=0) <= ibrs[1].p_av)
        if feas.any():
            cost = (ibrs[0].a * hv + ibrs[1].a * (h_t - hv)
                    + ibrs[0].b * d1[feas] + ibrs[1].b * (d_t - d1[feas]))
            best = min(best, cost.min())
    assert np.isfinite(best)
    assert abs(alloc.cost - best) <= 1e-3 * best + 1e-3 * abs(alloc.cost)
    assert alloc.kkt_residual <= 1e-7
