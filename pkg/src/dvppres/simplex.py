"""Self-contained bounded-variable simplex (two-phase, Bland's rule).

Solves   min c'x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  l <= x <= u.

Bland's entering rule plus smallest-index tie-breaks in the ratio test make
the pivot sequence, and therefore the returned vertex, deterministic.  The
problems here are tiny (tens of rows after the active-set loop), so the
basis systems are re-solved densely each iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_AT_LOWER, _AT_UPPER, _BASIC = 0, 1, 2


@dataclass
class SimplexResult:
    status: str              # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray = None     # structural variables only
    objective: float = None
    duals: np.ndarray = None       # one multiplier per row (eq rows first)
    slack: np.ndarray = None       # b_ub - A_ub x
    iterations: int = 0


class _Tableau:
    def __init__(self, A, b, c, lower, upper, tol):
        self.A = A
        self.b = b
        self.c = c
        self.lower = lower
        self.upper = upper
        self.tol = tol
        self.n = A.shape[1]
        self.m = A.shape[0]
        self.status = np.full(self.n, _AT_LOWER, dtype=np.int8)
        self.x = lower.copy()
        self.basis = []

    def set_basis(self, idx):
        self.basis = list(idx)
        for j in self.basis:
            self.status[j] = _BASIC
        self._refresh_basics()

    def _refresh_basics(self):
        B = self.A[:, self.basis]
        nb_mask = self.status != _BASIC
        rhs = self.b - self.A[:, nb_mask] @ self.x[nb_mask]
        xb = np.linalg.solve(B, rhs)
        self.x[self.basis] = xb

    def duals(self):
        B = self.A[:, self.basis]
        return np.linalg.solve(B.T, self.c[self.basis])

    def iterate(self, max_iter):
        it = 0
        while it < max_iter:
            it += 1
            y = self.duals()
            entering = -1
            direction = 0
            for j in range(self.n):
                if self.status[j] == _BASIC:
                    continue
                d_j = self.c[j] - y @ self.A[:, j]
                if self.status[j] == _AT_LOWER and d_j < -self.tol:
                    entering, direction = j, +1
                    break
                if self.status[j] == _AT_UPPER and d_j > self.tol:
                    entering, direction = j, -1
                    break
            if entering < 0:
                return "optimal", it
            B = self.A[:, self.basis]
            w = np.linalg.solve(B, self.A[:, entering])

            t_best = self.upper[entering] - self.lower[entering]  # bound flip
            leave_pos = -1
            for pos, bj in enumerate(self.basis):
                wi = direction * w[pos]
                if wi > self.tol:
                    limit = (self.x[bj] - self.lower[bj]) / wi
                elif wi < -self.tol:
                    limit = (self.upper[bj] - self.x[bj]) / (-wi)
                else:
                    continue
                if limit < t_best - self.tol or (
                        limit < t_best + self.tol and leave_pos >= 0
                        and bj < self.basis[leave_pos]):
                    t_best = limit
                    leave_pos = pos
            if not np.isfinite(t_best):
                return "unbounded", it
            t_best = max(t_best, 0.0)

            self.x[self.basis] -= direction * t_best * w
            if leave_pos < 0:
                # bound flip
                self.x[entering] = (self.upper[entering] if direction > 0
                                    else self.lower[entering])
                self.status[entering] = (_AT_UPPER if direction > 0 else _AT_LOWER)
            else:
                leaving = self.basis[leave_pos]
                wi = direction * w[leave_pos]
                if wi > 0:
                    self.x[leaving] = self.lower[leaving]
                    self.status[leaving] = _AT_LOWER
                else:
                    self.x[leaving] = self.upper[leaving]
                    self.status[leaving] = _AT_UPPER
                self.x[entering] = (self.lower[entering] + t_best if direction > 0
                                    else self.upper[entering] - t_best)
                self.status[entering] = _BASIC
                self.basis[leave_pos] = entering
        return "cycling", it


def solve_bounded_lp(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None,
                     lower=None, upper=None, tol=1e-9,
                     max_iter=20000) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n_x = len(c)
    a_eq = np.zeros((0, n_x)) if a_eq is None else np.asarray(a_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    a_ub = np.zeros((0, n_x)) if a_ub is None else np.asarray(a_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    lower = np.full(n_x, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n_x, np.inf) if upper is None else np.asarray(upper, dtype=float)

    m_eq, m_ub = len(b_eq), len(b_ub)
    m = m_eq + m_ub
    n_slack = m_ub
    # columns: [x | slack | artificial]
    A = np.zeros((m, n_x + n_slack + m))
    A[:m_eq, :n_x] = a_eq
    A[m_eq:, :n_x] = a_ub
    A[m_eq:, n_x:n_x + n_slack] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])

    lo = np.concatenate([lower, np.zeros(n_slack), np.zeros(m)])
    up = np.concatenate([upper, np.full(n_slack, np.inf), np.full(m, np.inf)])

    # start structural vars at the bound nearer zero (finite one if single)
    x0 = np.where(np.isfinite(lo[:n_x]), lo[:n_x],
                  np.where(np.isfinite(up[:n_x]), up[:n_x], 0.0))
    resid = b - A[:, :n_x + n_slack] @ np.concatenate([x0, np.zeros(n_slack)])
    for i in range(m):
        A[i, n_x + n_slack + i] = 1.0 if resid[i] >= 0 else -1.0

    scale = 1.0 + max(np.abs(b).max(initial=0.0), 1.0)
    feas_tol = tol * scale

    # phase 1: minimize sum of artificials
    c1 = np.concatenate([np.zeros(n_x + n_slack), np.ones(m)])
    tab = _Tableau(A, b, c1, lo, up, tol)
    start_upper = np.where(np.isfinite(lower), False, np.isfinite(upper))
    tab.status[:n_x][start_upper] = _AT_UPPER
    tab.x[:n_x] = x0
    tab.set_basis(range(n_x + n_slack, n_x + n_slack + m))
    status, it1 = tab.iterate(max_iter)
    phase1_obj = float(c1 @ tab.x)
    if status == "cycling" or phase1_obj > feas_tol:
        return SimplexResult("infeasible", iterations=it1)

    # freeze artificials at zero for phase 2
    tab.c = np.concatenate([c, np.zeros(n_slack + m)])
    tab.upper = up.copy()
    tab.upper[n_x + n_slack:] = 0.0
    tab.lower[n_x + n_slack:] = 0.0
    for j in range(n_x + n_slack, n_x + n_slack + m):
        if tab.status[j] != _BASIC:
            tab.x[j] = 0.0
            tab.status[j] = _AT_LOWER
    status, it2 = tab.iterate(max_iter)
    if status == "cycling":
        return SimplexResult("infeasible", iterations=it1 + it2)
    if status == "unbounded":
        return SimplexResult("unbounded", iterations=it1 + it2)

    x = tab.x[:n_x].copy()
    duals = tab.duals()
    slack = b_ub - a_ub @ x if m_ub else np.zeros(0)
    return SimplexResult("optimal", x, float(c @ x), duals, slack, it1 + it2)


def lexicographic_refine(c, a_eq, b_eq, a_ub, b_ub, lower, upper,
                         base: SimplexResult, order=None,
                         tol=1e-9) -> SimplexResult:
    """Among optimal vertices, pick the lexicographically smallest x.

    Re-solves with the optimal cost pinned as an equality, then fixes one
    coordinate at a time in ``order`` (default 0..n-1).
    """
    if base.status != "optimal":
        return base
    n = len(c)
    order = list(range(n)) if order is None else list(order)
    a_eq_aug = np.vstack([a_eq, np.asarray(c, dtype=float)])
    b_eq_aug = np.concatenate([b_eq, [base.objective]])
    x_cur = base.x
    for k in order:
        ek = np.zeros(n)
        ek[k] = 1.0
        res = solve_bounded_lp(ek, a_eq_aug, b_eq_aug, a_ub, b_ub,
                               lower, upper, tol=tol)
        if res.status != "optimal":
            # numeric edge: keep the last consistent vertex
            break
        x_cur = res.x
        a_eq_aug = np.vstack([a_eq_aug, ek])
        b_eq_aug = np.concatenate([b_eq_aug, [x_cur[k]]])
    return SimplexResult("optimal", x_cur, float(np.asarray(c) @ x_cur),
                         base.duals, base.slack, base.iterations)
