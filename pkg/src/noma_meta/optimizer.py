"""Downlink power-allocation solvers.

Three problems over the ordered power fractions beta_1 <= ... <= beta_N:

  P1 (two users): maximize the rank-2 coverage M_1,(2) subject to a rank-1
     coverage floor.  Closed form: beta_1* = theta / c1_target.
  P2 (two users): P1 plus finite-mean-local-delay constraints
     c_1 delta/(1-delta) < 2 and c_2 delta/(1-delta) < 1.  Closed form:
     beta_1* = theta / min{2 (1-delta)/delta, c1_target}.
  P3 (N users): maximize the rank-m coverage subject to per-rank coverage
     floors and (optionally) per-rank delay constraints
     c_k delta/(1-delta) < N-k+1.  Since every coverage M_1,(k) is strictly
     decreasing in c_k, the problem is linear in the variables
     x_k = beta_k/theta - sum_{i<k} beta_i = 1/c_k and is solved by a dense
     simplex, with ties broken toward the lexicographically smallest beta.

c_k^target is the unique positive root of M_1,(k)(c) = target, found by
bracketed root finding; the solvers expose both the surrogate objective
(c_m^{-1}) and the achieved coverage so the monotone equivalence between
them is observable rather than assumed.

The paper's strict inequalities are realized as closed constraints: the
optimum sits exactly on the coverage-target boundary, and feasibility is
reported with an interior tolerance of 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .downlink import PowerAllocation, a_coefficient, csp_moment, moment_ratio
from .geometry import NetworkParams
from .simplex import solve_lp

__all__ = [
    "OptResult",
    "c_target",
    "solve_p1",
    "solve_p2",
    "solve_p3",
]

_TOL = 1e-9


@dataclass(frozen=True)
class OptResult:
    problem: str
    feasible: bool
    betas: PowerAllocation | None
    achieved: tuple[float, ...]        # per-rank M_1 at the optimum
    binding: tuple[str, ...]           # active or violated constraint names
    objective: float | None = None     # surrogate 1/c_m for P3, M_1,(2) for P1/P2

    def achieved_or_zero(self) -> tuple[float, ...]:
        """Per-rank coverage, zeros when infeasible (figure convention)."""
        return self.achieved if self.feasible else tuple()


def _coverage_of_c(c: float, n: int, k: int, delta: float) -> float:
    """M_1,(k) as a function of the threshold coefficient c > 0."""
    return moment_ratio(a_coefficient(1.0, c, delta), n, k).real


def c_target(target_m1: float, k: int, params: NetworkParams) -> float:
    """Unique positive root of M_1,(k)(c) = target_m1.

    target 0 means "no constraint" and returns +inf; the coverage tends to
    1 as c -> 0+, so every target in (0, 1) has a root.
    """
    if target_m1 == 0.0:
        return math.inf
    if not 0.0 < target_m1 < 1.0:
        raise ValueError(f"coverage target must lie in [0, 1); got {target_m1}")
    if not 1 <= k <= params.n_users:
        raise ValueError(f"rank {k} out of range for N={params.n_users}")
    n, delta = params.n_users, params.delta
    hi = 1.0
    while _coverage_of_c(hi, n, k, delta) > target_m1:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("coverage target bracket expansion failed")
    lo = hi / 2.0 if hi > 1.0 else 1e-14
    while _coverage_of_c(lo, n, k, delta) < target_m1:
        lo /= 2.0
        if lo < 1e-14:
            break
    return brentq(lambda c: _coverage_of_c(c, n, k, delta) - target_m1, lo, hi,
                  xtol=1e-14, rtol=1e-12)


def _achieved(betas: PowerAllocation, params: NetworkParams, theta: float) -> tuple[float, ...]:
    return tuple(
        csp_moment(1, m, params, betas, theta).real for m in range(1, params.n_users + 1)
    )


def _two_user_result(problem: str, beta1: float, cap: float, theta: float,
                     params: NetworkParams, binding: tuple[str, ...]) -> OptResult:
    feasible = beta1 < cap - _TOL
    if not feasible:
        return OptResult(problem, False, None, tuple(),
                         (f"beta1 lower bound {beta1:.6g} >= upper bound {cap:.6g}",))
    betas = PowerAllocation((beta1, 1.0 - beta1))
    achieved = _achieved(betas, params, theta)
    return OptResult(problem, True, betas, achieved, binding, objective=achieved[1])


def solve_p1(theta: float, target_m1: float, params: NetworkParams) -> OptResult:
    """Two-user coverage maximization without latency constraints.

    Feasible iff theta < c1_target * min{1/2, 1/(1+theta)}; then
    beta_1* = theta / c1_target.
    """
    if params.n_users != 2:
        raise ValueError("closed-form solver requires exactly two users")
    ct = c_target(target_m1, 1, params)
    beta1 = theta / ct
    cap = min(0.5, 1.0 / (1.0 + theta))
    return _two_user_result("P1", beta1, cap, theta, params,
                            ("rank-1 coverage target",))


def solve_p2(theta: float, target_m1: float, params: NetworkParams) -> OptResult:
    """Two-user coverage maximization with finite-mean-delay constraints.

    beta_1* = theta / min{2 (1-delta)/delta, c1_target}, feasible when it
    stays below min{1/2, (1 - theta delta/(1-delta)) / (1+theta)}.
    """
    if params.n_users != 2:
        raise ValueError("closed-form solver requires exactly two users")
    delta = params.delta
    ct = c_target(target_m1, 1, params)
    delay_cap_1 = 2.0 * (1.0 - delta) / delta
    limit = min(delay_cap_1, ct)
    binding = ("rank-1 delay bound",) if delay_cap_1 < ct else ("rank-1 coverage target",)
    beta1 = theta / limit
    cap = min(0.5, (1.0 - theta * delta / (1.0 - delta)) / (1.0 + theta))
    return _two_user_result("P2", beta1, cap, theta, params, binding)


def _p3_lower_bounds(targets: Sequence[float], params: NetworkParams,
                     delay_constraints: bool) -> list[float]:
    """Per-rank lower bounds on x_k = 1/c_k combining coverage targets and,
    optionally, the finite-mean-delay caps."""
    n, delta = params.n_users, params.delta
    bounds = []
    for k in range(1, n + 1):
        ct = c_target(targets[k - 1], k, params)
        cap = ct
        if delay_constraints:
            cap = min(cap, (1.0 - delta) / delta * (n - k + 1))
        bounds.append(0.0 if math.isinf(cap) else 1.0 / cap)
    return bounds


def solve_p3(theta: float, targets: Sequence[float], m: int, params: NetworkParams,
             delay_constraints: bool = True) -> OptResult:
    """N-user linear program: maximize x_m = beta_m/theta - sum_{i<m} beta_i.

    Constraints: x_k >= 1/min{(1-delta)/delta (N-k+1), c_k_target} per rank,
    the power ordering beta_{k-1} <= beta_k, beta_1 >= 0, sum beta = 1.
    Missing targets default to 0 (no coverage constraint on that rank).
    Ties are broken toward the lexicographically smallest beta.
    """
    n = params.n_users
    if n < 2:
        raise ValueError("the linear program needs at least two users")
    if not 1 <= m <= n:
        raise ValueError(f"rank {m} out of range for N={n}")
    targets = list(targets) + [0.0] * (n - len(targets))
    if len(targets) != n:
        raise ValueError(f"got {len(targets)} targets for N={n} users")
    lower = _p3_lower_bounds(targets, params, delay_constraints)

    # objective: maximize beta_m / theta - sum_{i<m} beta_i
    obj = np.zeros(n)
    obj[m - 1] = 1.0 / theta
    obj[: m - 1] -= 1.0

    a_ub, b_ub, names = [], [], []
    for k in range(1, n + 1):
        row = np.zeros(n)
        row[k - 1] = -1.0 / theta
        row[: k - 1] = 1.0
        a_ub.append(row)
        b_ub.append(-lower[k - 1] - (_TOL if lower[k - 1] > 0.0 else _TOL))
        names.append(
            f"rank-{k} coverage/delay floor" if lower[k - 1] > 0.0 else f"rank-{k} positivity"
        )
    for k in range(2, n + 1):
        row = np.zeros(n)
        row[k - 2] = 1.0
        row[k - 1] = -1.0
        a_ub.append(row)
        b_ub.append(0.0)
        names.append(f"ordering beta_{k - 1} <= beta_{k}")
    a_eq = [np.ones(n)]
    b_eq = [1.0]
    names_eq = ["total power"]

    result = solve_lp(obj, np.array(a_ub), np.array(b_ub), np.array(a_eq), np.array(b_eq))
    if result.status != "optimal":
        subset = _irreducible_infeasible(obj, a_ub, b_ub, a_eq, b_eq, names + names_eq)
        return OptResult("P3", False, None, tuple(), tuple(subset))

    best = result.objective
    x = _lexicographic_refine(obj, best, a_ub, b_ub, a_eq, b_eq, n)
    betas = PowerAllocation(tuple(np.clip(x, 0.0, None) / np.sum(np.clip(x, 0.0, None))))
    achieved = _achieved(betas, params, theta)
    slack = np.array(b_ub) - np.array(a_ub) @ x
    binding = tuple(
        names[i] for i in range(len(names)) if slack[i] < 1e-7
    )
    return OptResult("P3", True, betas, achieved, binding, objective=best)


def _lexicographic_refine(obj, best, a_ub, b_ub, a_eq, b_eq, n):
    """Among optima of the LP, pick the lexicographically smallest beta by
    minimizing each coordinate in turn with the objective pinned."""
    a_eq = list(a_eq)
    b_eq = list(b_eq)
    a_eq.append(np.asarray(obj, float))
    b_eq.append(best)
    x = None
    for j in range(n):
        coeff = np.zeros(n)
        coeff[j] = -1.0  # maximize -beta_j
        res = solve_lp(coeff, np.array(a_ub), np.array(b_ub), np.array(a_eq), np.array(b_eq))
        if res.status != "optimal":  # numerical corner: keep previous solution
            break
        x = res.x
        pin = np.zeros(n)
        pin[j] = 1.0
        a_eq.append(pin)
        b_eq.append(x[j])
    return x


def _irreducible_infeasible(obj, a_ub, b_ub, a_eq, b_eq, names):
    """Deletion filter: drop inequality constraints one at a time, keeping
    those whose removal makes the system feasible."""
    a_ub = [np.asarray(r, float) for r in a_ub]
    b_ub = list(b_ub)
    active = list(range(len(a_ub)))

    def feasible(idx):
        if not idx:
            return True
        rows = np.array([a_ub[i] for i in idx])
        rhs = np.array([b_ub[i] for i in idx])
        res = solve_lp(np.zeros(len(obj)), rows, rhs, np.array(a_eq), np.array(b_eq))
        return res.status == "optimal"

    if feasible(active):
        return ["equality system infeasible"]
    core = list(active)
    for i in active:
        trial = [j for j in core if j != i]
        if not feasible(trial):
            core = trial
    return [names[i] for i in core]
