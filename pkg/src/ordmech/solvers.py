"""Solvers for projected problems where all distances are known.

Each solver reports the approximation factor it guarantees on the
projected instance; that factor feeds the 1 + 2*beta reduction bound.
Exact solvers (factor 1) back every acceptance check; the heuristic
paths exist for scale and carry their documented factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .assignment import (Assignment, ProjectedProblem, count_search_space,
                         iter_valid_assignments, total_cost)
from .errors import SearchSpaceError, SolverError

BRUTE_FORCE_CAP = 10 ** 6
KMEDIAN_EXACT_CAP = 10 ** 5
FACILITY_EXACT_MAX_M = 16


@dataclass(frozen=True)
class SolverResult:
    assignment: Assignment
    value: float
    beta: float
    exact: bool

    def __post_init__(self):
        if self.exact and self.beta != 1.0:
            raise SolverError("an exact solver must claim beta = 1")


def brute_force_optimal(projected: ProjectedProblem,
                        cap: int = BRUTE_FORCE_CAP) -> SolverResult:
    """Globally minimal valid assignment; first in lexicographic order on
    cost ties.  Open-count-only problems get a subset fast path."""
    problem = projected.problem
    n, m = projected.n, problem.m
    cons = problem.constraints
    spec = problem.cost_spec
    D = projected.distances

    def better(c, x, best):
        # cost first, then lexicographic assignment order on exact ties
        return best is None or c < best[0] or (c == best[0] and x < best[1])

    plain = (cons.capacities is None and not cons.must_coassign
             and not cons.must_separate and not spec.coassign_penalties)
    if plain and cons.exactly_open == 1:
        best = None
        for f in range(m):
            x = (f,) * n
            c = total_cost(x, D, spec)
            if better(c, x, best):
                best = (c, x)
        return SolverResult(best[1], best[0], 1.0, True)
    if plain and cons.exactly_open is None:
        limit = cons.at_most_open if cons.at_most_open is not None else m
        best = None
        for size in range(1, limit + 1):
            for subset in combinations(range(m), size):
                x = tuple(min(subset, key=lambda f: (D[i, f], f)) for i in range(n))
                c = total_cost(x, D, spec)
                if better(c, x, best):
                    best = (c, x)
        return SolverResult(best[1], best[0], 1.0, True)

    if count_search_space(n, m) > cap:
        raise SearchSpaceError(
            f"{m}^{n} candidate assignments exceed the {cap} budget")
    best = None
    for x in iter_valid_assignments(n, cons):
        c = total_cost(x, D, spec)
        if better(c, x, best):
            best = (c, x)
    if best is None:
        raise SolverError("no valid assignment exists")
    return SolverResult(best[1], best[0], 1.0, True)


def min_cost_matching(cost) -> SolverResult:
    """Exact minimum-weight perfect matching via shortest augmenting paths
    with potentials."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise SolverError(f"matching needs a square cost matrix, got {cost.shape}")
    n = cost.shape[0]
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)    # p[j]: row currently matched to column j (1-based)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            assignment[p[j] - 1] = j - 1
    x = tuple(assignment)
    value = float(sum(cost[i, x[i]] for i in range(n)))
    return SolverResult(x, value, 1.0, True)


def _kuhn_perfect_matching(allowed: np.ndarray) -> list[int] | None:
    """Perfect matching on a boolean bipartite adjacency, or None."""
    n = allowed.shape[0]
    match_col = [-1] * n

    def try_row(r: int, seen: list[bool]) -> bool:
        for c in range(n):
            if allowed[r, c] and not seen[c]:
                seen[c] = True
                if match_col[c] < 0 or try_row(match_col[c], seen):
                    match_col[c] = r
                    return True
        return False

    for r in range(n):
        if not try_row(r, [False] * n):
            return None
    return match_col


def bottleneck_matching(cost) -> SolverResult:
    """Perfect matching minimizing the maximum edge, by binary search over
    the sorted distinct weights with a matching-feasibility check."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise SolverError(f"matching needs a square cost matrix, got {cost.shape}")
    n = cost.shape[0]
    levels = np.unique(cost)
    lo, hi = 0, len(levels) - 1
    best_match = None
    while lo <= hi:
        mid = (lo + hi) // 2
        match_col = _kuhn_perfect_matching(cost <= levels[mid])
        if match_col is not None:
            best_match = match_col
            hi = mid - 1
        else:
            lo = mid + 1
    if best_match is None:
        raise SolverError("no perfect matching exists")
    assignment = [0] * n
    for c, r in enumerate(best_match):
        assignment[r] = c
    x = tuple(assignment)
    value = float(max(cost[i, x[i]] for i in range(n)))
    return SolverResult(x, value, 1.0, True)


def k_center_greedy(fd_values: np.ndarray, tops, k: int) -> SolverResult:
    """Farthest-point greedy on projected agents (each sits at a facility).

    Seeds with the lowest-index facility hosting an agent, then repeatedly
    opens the hosting facility of the agent farthest from its nearest open
    center.  Classic factor-2 guarantee for the radius objective.
    """
    fd_values = np.asarray(fd_values, dtype=float)
    m = fd_values.shape[0]
    tops = tuple(tops)
    if not 1 <= k <= m:
        raise SolverError(f"k must lie in [1, {m}], got {k}")
    hosts = sorted(set(tops))
    centers = [hosts[0]]
    dist = fd_values[list(tops), centers[0]].copy()
    while len(centers) < k:
        far = int(np.argmax(dist))
        if dist[far] <= 0:
            break
        nxt = tops[far]
        if nxt in centers:  # distinct hosting facility must exist at positive radius
            raise SolverError("farthest agent hosted at an open center")
        centers.append(nxt)
        dist = np.minimum(dist, fd_values[list(tops), nxt])
    centers_arr = np.asarray(sorted(centers))
    sub = fd_values[np.asarray(tops)[:, None], centers_arr[None, :]]
    x = tuple(int(centers_arr[j]) for j in np.argmin(sub, axis=1))
    value = float(max(fd_values[tops[i], x[i]] for i in range(len(tops))))
    return SolverResult(x, value, 2.0, False)


def k_median_solver(fd_values: np.ndarray, tops, k: int,
                    exact_cap: int = KMEDIAN_EXACT_CAP) -> SolverResult:
    """Exact subset enumeration while C(m, k) fits the budget, otherwise
    single-swap local search (documented factor 5)."""
    fd_values = np.asarray(fd_values, dtype=float)
    m = fd_values.shape[0]
    tops = list(tops)
    if not 1 <= k <= m:
        raise SolverError(f"k must lie in [1, {m}], got {k}")
    D = fd_values[tops, :]

    def subset_cost(subset):
        return float(D[:, list(subset)].min(axis=1).sum())

    if math.comb(m, k) <= exact_cap:
        best = None
        for subset in combinations(range(m), k):
            c = subset_cost(subset)
            if best is None or c < best[0]:
                best = (c, subset)
        cost, subset = best
        exact = True
        beta = 1.0
    else:
        subset = tuple(range(k))
        cost = subset_cost(subset)
        improved = True
        while improved:
            improved = False
            for out in subset:
                for inn in range(m):
                    if inn in subset:
                        continue
                    cand = tuple(sorted(set(subset) - {out} | {inn}))
                    c = subset_cost(cand)
                    if c < cost - 1e-12:
                        subset, cost = cand, c
                        improved = True
                        break
                if improved:
                    break
        exact = False
        beta = 5.0
    subset = list(subset)
    x = tuple(min(subset, key=lambda f: (D[i, f], f)) for i in range(len(tops)))
    return SolverResult(x, cost, beta, exact)


def facility_location_solver(distances: np.ndarray, opening_costs) -> SolverResult:
    """Exact open-set enumeration up to 16 facilities; beyond that an
    incremental greedy whose documented factor is harmonic in the agent
    count."""
    D = np.asarray(distances, dtype=float)
    costs = np.asarray(opening_costs, dtype=float)
    n, m = D.shape
    if len(costs) != m:
        raise SolverError("need one opening cost per facility")

    def eval_open(subset: list[int]) -> tuple[float, Assignment]:
        x = tuple(min(subset, key=lambda f: (D[i, f], f)) for i in range(n))
        used = set(x)
        value = float(sum(costs[f] for f in used) + sum(D[i, x[i]] for i in range(n)))
        return value, x

    if m <= FACILITY_EXACT_MAX_M:
        best = None
        for mask in range(1, 1 << m):
            subset = [f for f in range(m) if mask >> f & 1]
            value, x = eval_open(subset)
            if best is None or value < best[0]:
                best = (value, x)
        return SolverResult(best[1], best[0], 1.0, True)

    opened: list[int] = []
    current = np.full(n, np.inf)
    while len(opened) < m:
        best_step = None
        for f in range(m):
            if f in opened:
                continue
            newdist = np.minimum(current, D[:, f])
            if opened:
                delta = float(costs[f] + newdist.sum() - current.sum())
            else:
                delta = float(costs[f] + newdist.sum())
            if best_step is None or delta < best_step[0]:
                best_step = (delta, f, newdist)
        delta, f, newdist = best_step
        if opened and delta >= -1e-12:
            break
        opened.append(f)
        current = newdist
    value, x = eval_open(opened)
    beta = sum(1.0 / i for i in range(1, n + 1))  # harmonic-series greedy bound
    return SolverResult(x, value, max(beta, 1.0), False)


def _require_preset(projected: ProjectedProblem, names: tuple[str, ...]):
    preset = projected.problem.preset
    if preset not in names:
        raise SolverError(f"solver expects preset in {names}, got {preset!r}")


def _solve_matching(projected: ProjectedProblem) -> SolverResult:
    _require_preset(projected, ("matching_min_cost",))
    return min_cost_matching(projected.distances)


def _solve_bottleneck(projected: ProjectedProblem) -> SolverResult:
    _require_preset(projected, ("matching_egalitarian",))
    return bottleneck_matching(projected.distances)


def _solve_k_center(projected: ProjectedProblem) -> SolverResult:
    _require_preset(projected, ("k_center",))
    k = projected.problem.constraints.at_most_open
    return k_center_greedy(projected.facility_distances.values, projected.tops, k)


def _solve_k_median(projected: ProjectedProblem) -> SolverResult:
    _require_preset(projected, ("k_median",))
    k = projected.problem.constraints.at_most_open
    return k_median_solver(projected.facility_distances.values, projected.tops, k)


def _solve_facility_location(projected: ProjectedProblem) -> SolverResult:
    _require_preset(projected, ("facility_location",))
    return facility_location_solver(projected.distances,
                                    projected.problem.cost_spec.opening_costs)


SOLVERS = {
    "brute_force": brute_force_optimal,
    "matching": _solve_matching,
    "bottleneck": _solve_bottleneck,
    "k_center": _solve_k_center,
    "k_median": _solve_k_median,
    "facility_location": _solve_facility_location,
}
