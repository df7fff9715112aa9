"""Worst-case distortion audits over the consistent-metric closure.

Distortion of an outcome is the supremum, over all metrics consistent
with the ordinal data and the facility geometry, of its cost divided by
the best alternative's cost.  With positive costs that supremum equals
the maximum over alternatives of per-pair ratio suprema.  Each pair is a
linear-fractional program over the consistency polytope; introducing a
joint scale variable (distances and facility geometry scaled together)
turns it into one LP, and the substitution is exact because distortion
is invariant under that joint scaling.  Denominators that can vanish are
detected separately: since consistency constrains each agent's row
independently, an agent can sit exactly on a facility iff that
facility's distance row respects the agent's ranking, which makes the
vanishing check combinatorial rather than numeric.

Percentile objectives are piecewise linear: which agents realize the two
order statistics is a subset choice, but per-agent independence collapses
the search to one candidate configuration per agent (see
_percentile_candidates); one scaled LP each keeps the audit exact for up
to eight agents, with sampled lower bounds beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import AssignmentProblem, DistanceCost, iter_valid_assignments, total_cost
from .core import (FacilityDistances, FullMetric, PreferenceProfile,
                   check_consistency, consistency_constraints)
from .errors import (InternalInvariantError, MetricError, SearchSpaceError,
                     SolverError, UnboundedObjectiveError)
from .lp import solve_lp
from .social_choice import evaluate_percentile_cost, percentile_rank

INF = float("inf")
SCALE_TOL = 1e-7
EXACT_PERCENTILE_MAX_N = 8
ASSIGNMENT_AUDIT_CAP = 10 ** 4


@dataclass(frozen=True)
class AuditReport:
    """Worst-case ratio with a consistent witness metric attaining it."""

    objective: str
    target: object                      # facility index or assignment tuple
    value: float
    exact: bool
    per_alternative: tuple[tuple[object, float], ...]
    witness: FullMetric | None
    witness_ratio: float | None
    alpha: float | None = None
    flags: tuple[str, ...] = ()

    def alternative_value(self, key) -> float:
        for alt, val in self.per_alternative:
            if alt == key:
                return val
        raise KeyError(key)


class ConsistencyPolytope:
    """Cached linear form of the consistent-metric closure plus the
    combinatorial facts the audits reuse."""

    def __init__(self, profile: PreferenceProfile, fd: FacilityDistances):
        self.profile = profile
        self.fd = fd
        self.n = profile.n
        self.m = profile.m
        self.cons = consistency_constraints(profile, fd)
        self.A = np.asarray(self.cons.A)
        self.b = np.asarray(self.cons.b)
        self.nv = self.n * self.m
        # One extra column: rows scaled by the joint metric-scale variable.
        self.cc_rows = np.hstack([self.A, -self.b[:, None]])
        self._can_sit = self._compute_can_sit()
        self._agent_blocks: list[tuple[np.ndarray, np.ndarray]] | None = None
        self._min_dist: dict[tuple[int, int], float] = {}

    def var(self, i: int, f: int) -> int:
        return i * self.m + f

    def _compute_can_sit(self) -> np.ndarray:
        """can_sit[i, f]: agent i may lie exactly at facility f, i.e. the
        row l(f, .) is weakly nondecreasing along agent i's ranking."""
        l = self.fd.values
        can = np.zeros((self.n, self.m), dtype=bool)
        for i, r in enumerate(self.profile.rankings):
            for f in range(self.m):
                if self.profile.top_only:
                    ok = l[f, r[0]] <= l[f].min() + 1e-9
                else:
                    seq = [l[f, g] for g in r]
                    ok = all(a <= b + 1e-9 for a, b in zip(seq, seq[1:]))
                can[i, f] = ok
        return can

    def can_sit_at(self, i: int, f: int) -> bool:
        return bool(self._can_sit[i, f])

    def _agent_block(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows of the closure touching agent i alone (all of them do:
        consistency never couples two agents)."""
        if self._agent_blocks is None:
            self._agent_blocks = []
            for j in range(self.n):
                cols = slice(j * self.m, (j + 1) * self.m)
                mask = np.abs(self.A[:, cols]).sum(axis=1) > 0
                self._agent_blocks.append((self.A[mask, cols], self.b[mask]))
        return self._agent_blocks[i]

    def min_agent_distance(self, i: int, f: int, engine: str = "highs") -> float:
        """Smallest consistent d(i, f) over the agent's own slice."""
        key = (i, f)
        if key not in self._min_dist:
            if self._can_sit[i, f]:
                self._min_dist[key] = 0.0
            else:
                A_i, b_i = self._agent_block(i)
                c = np.zeros(self.m)
                c[f] = 1.0
                res = solve_lp(c, A_i, b_i, engine=engine)
                if not res.optimal:
                    raise InternalInvariantError(
                        "agent slice of the consistency polytope is infeasible")
                self._min_dist[key] = max(res.fun, 0.0)
        return self._min_dist[key]

    def interior_metric(self) -> np.ndarray:
        """All agents equally far from everything: consistent with every
        profile and strictly inside the pair constraints."""
        radius = max(float(self.fd.values.max()), 1.0)
        return np.full((self.n, self.m), radius)

    def seated_metric(self, seats: dict[int, int]) -> np.ndarray:
        """Agents in ``seats`` placed exactly on their facility, everyone
        else at the interior radius."""
        d = self.interior_metric()
        for i, f in seats.items():
            d[i] = self.fd.values[f]
        return d


def _metric_from_values(values, fd: FacilityDistances, flags: list[str],
                        label: str) -> FullMetric:
    """Build a FullMetric from LP output, nudging it toward a strictly
    interior point when solver slack leaves it microscopically outside."""
    values = np.maximum(np.asarray(values, dtype=float), 0.0)
    try:
        return FullMetric(values, fd)
    except MetricError:
        radius = max(float(fd.values.max()), 1.0)
        interior = np.full_like(values, radius)
        lam = 1e-9
        while lam <= 1e-4:
            try:
                metric = FullMetric((1 - lam) * values + lam * interior, fd)
                flags.append(f"{label}_repaired")
                return metric
            except MetricError:
                lam *= 10
        raise


@dataclass
class _PairOutcome:
    value: float
    witness_values: np.ndarray | None
    flags: list[str] = field(default_factory=list)


def _ratio_pair(poly: ConsistencyPolytope, num: np.ndarray, num_const: float,
                den: np.ndarray, den_const: float, engine: str,
                want_witness: bool) -> _PairOutcome:
    """sup (num.d + num_const) / (den.d + den_const) over the polytope.

    Vanishing denominators must be excluded by the caller beforehand.
    Variables are the scaled distances plus the scale; the denominator is
    pinned to one.
    """
    rows = poly.cc_rows
    zeros = np.zeros((rows.shape[0],))
    c = np.append(num, num_const)
    eq = np.append(den, den_const)[None, :]
    res = solve_lp(c, rows, zeros, eq, [1.0], engine=engine, maximize=True)
    if res.status == "infeasible":
        # Denominator identically zero over the closure; callers resolve
        # this case combinatorially before getting here.
        raise InternalInvariantError("ratio LP infeasible on a feasible polytope")
    if res.status == "unbounded":
        return _PairOutcome(INF, None, ["unbounded_ratio"])
    value = res.fun
    if not want_witness:
        return _PairOutcome(value, None)
    flags: list[str] = []
    z = res.x
    tau = z[-1]
    if tau <= SCALE_TOL:
        # Among optimal solutions, prefer one at a genuine metric scale.
        eps = 1e-9 * max(1.0, abs(value))
        rows2 = np.vstack([rows, -c])
        rhs2 = np.append(zeros, -(value - eps))
        c_tau = np.zeros_like(c)
        c_tau[-1] = 1.0
        res2 = solve_lp(c_tau, rows2, rhs2, eq, [1.0], engine=engine, maximize=True)
        if res2.optimal and res2.x[-1] > SCALE_TOL:
            z, tau = res2.x, res2.x[-1]
        else:
            flags.append("witness_at_scale_limit")
            d_int = poly.interior_metric().reshape(-1)
            den_val = float(den @ d_int + den_const)
            z_int = np.append(d_int, 1.0) / den_val
            lam = 1e-7
            z = (1 - lam) * z + lam * z_int
            tau = z[-1]
    witness = (z[:-1] / tau).reshape(poly.n, poly.m)
    return _PairOutcome(value, witness, flags)


def _denominator_zero_state(poly: ConsistencyPolytope, seats: dict[int, int],
                            den_const: float, num_at_zero: float) -> str:
    """Classify the points where the denominator vanishes:
    "never" (it cannot), "infinite" (numerator positive there), or
    "both_zero" (numerator forced to zero as well)."""
    if den_const > 1e-12:
        return "never"
    if not all(poly.can_sit_at(i, f) for i, f in seats.items()):
        return "never"
    return "infinite" if num_at_zero > 1e-12 else "both_zero"


def _finalize(poly: ConsistencyPolytope, objective: str, target, results,
              exact: bool, alpha: float | None, engine: str,
              recompute) -> AuditReport:
    """Assemble the report: pick the maximizing alternative, materialize
    its witness and re-evaluate the ratio on it."""
    flags: list[str] = []
    best_key = None
    best = 1.0
    for key, outcome in results:
        if outcome.value > best:
            best = outcome.value
            best_key = key
    witness = None
    witness_ratio = None
    if best_key is not None:
        for key, outcome in results:
            if key == best_key:
                flags.extend(outcome.flags)
                if outcome.witness_values is not None:
                    witness = _metric_from_values(outcome.witness_values, poly.fd,
                                                  flags, "witness")
                break
    if witness is None and math.isfinite(best):
        # Distortion 1 instances: any consistent point certifies the value.
        witness = _metric_from_values(poly.interior_metric(), poly.fd, flags,
                                      "witness")
    if witness is not None:
        witness_ratio = recompute(witness)
        if not check_consistency(poly.profile, witness, tol=1e-7):
            raise InternalInvariantError("audit witness is not consistent")
    per_alt = tuple((key, outcome.value) for key, outcome in results)
    return AuditReport(objective, target, best, exact, per_alt, witness,
                       witness_ratio, alpha, tuple(flags))


def audit_sum_social_choice(winner: int, profile: PreferenceProfile,
                            fd: FacilityDistances,
                            engine: str = "highs") -> AuditReport:
    """Exact worst-case total-cost distortion of choosing ``winner``."""
    poly = ConsistencyPolytope(profile, fd)
    n, m = poly.n, poly.m
    l = fd.values
    results: list[tuple[object, _PairOutcome]] = []
    for x in range(m):
        if x == winner:
            continue
        if l[winner, x] <= 1e-12:
            # Co-located alternatives have identical cost columns.
            results.append((x, _PairOutcome(1.0, None)))
            continue
        seats = {i: x for i in range(n)}
        state = _denominator_zero_state(poly, seats, 0.0, n * l[x, winner])
        if state == "infinite":
            results.append((x, _PairOutcome(INF, poly.seated_metric(seats),
                                            ["denominator_vanishes"])))
            continue
        num = np.zeros(poly.nv)
        den = np.zeros(poly.nv)
        for i in range(n):
            num[poly.var(i, winner)] = 1.0
            den[poly.var(i, x)] = 1.0
        outcome = _ratio_pair(poly, num, 0.0, den, 0.0, engine, want_witness=True)
        if state == "both_zero":
            outcome.value = max(outcome.value, 1.0)
        results.append((x, outcome))

    def recompute(metric: FullMetric) -> float:
        cols = metric.distances.sum(axis=0)
        numv = float(cols[winner])
        denv = float(cols.min())
        if denv <= 1e-12:
            return INF if numv > 1e-12 else 1.0
        return numv / denv

    return _finalize(poly, "sum", winner, results, True, None, engine, recompute)


def audit_additive_assignment(x, profile: PreferenceProfile,
                              fd: FacilityDistances, problem: AssignmentProblem,
                              engine: str = "highs",
                              cap: int = ASSIGNMENT_AUDIT_CAP) -> AuditReport:
    """Exact worst-case distortion of assignment ``x`` against every valid
    alternative, for additive distance cost and constant facility costs."""
    if problem.cost_spec.distance_cost is not DistanceCost.SUM:
        raise SolverError("assignment audits need the additive distance cost")
    x = tuple(x)
    if len(x) != profile.n:
        raise SolverError("assignment length does not match the agent count")
    if not problem.constraints.is_valid(x):
        raise SolverError("audited assignment violates the constraints")
    poly = ConsistencyPolytope(profile, fd)
    n = poly.n
    l = fd.values
    spec = problem.cost_spec
    num_const = spec.facility_cost(x)
    num = np.zeros(poly.nv)
    for i, f in enumerate(x):
        num[poly.var(i, f)] += 1.0

    alternatives = []
    for alt in iter_valid_assignments(n, problem.constraints):
        alternatives.append(alt)
        if len(alternatives) > cap:
            raise SearchSpaceError(
                f"more than {cap} alternative assignments to audit")

    results: list[tuple[object, _PairOutcome]] = []
    for alt in alternatives:
        if alt == x:
            continue
        den_const = spec.facility_cost(alt)
        num_at_zero = num_const + sum(l[alt[i], x[i]] for i in range(n))
        state = _denominator_zero_state(poly, dict(enumerate(alt)), den_const,
                                        num_at_zero)
        if state == "infinite":
            results.append((alt, _PairOutcome(INF,
                                              poly.seated_metric(dict(enumerate(alt))),
                                              ["denominator_vanishes"])))
            continue
        den = np.zeros(poly.nv)
        for i, f in enumerate(alt):
            den[poly.var(i, f)] += 1.0
        outcome = _ratio_pair(poly, num, num_const, den, den_const, engine,
                              want_witness=True)
        if state == "both_zero":
            outcome.value = max(outcome.value, 1.0)
        results.append((alt, outcome))

    def recompute(metric: FullMetric) -> float:
        numv = total_cost(x, metric.distances, spec)
        denv = min(total_cost(alt, metric.distances, spec) for alt in alternatives)
        if denv <= 1e-12:
            return INF if numv > 1e-12 else 1.0
        return numv / denv

    return _finalize(poly, "assignment_sum", x, results, True, None, engine,
                     recompute)


def _percentile_candidates(poly: ConsistencyPolytope, x: int, k: int,
                           engine: str):
    """Candidate (S, T) subset pairs that provably contain the maximizer.

    S pins the denominator's k-th order statistic from above, T floors the
    numerator's from below.  The closure constrains each agent's row
    independently, so at a fixed scale only agents in both subsets tie the
    two statistics together; an agent in T alone can always drift far away
    and never binds.  Hence an optimal configuration overlaps in a single
    agent j, and for fixed j the best S adds the k-1 other agents whose
    smallest consistent distance to x is lowest, because each member of S
    caps the usable scale at one over that distance.  That leaves one
    candidate per agent (one per ranking class, by symmetry)."""
    n = poly.n
    mu = [poly.min_agent_distance(i, x, engine) for i in range(n)]
    seen = set()
    for j in range(n):
        key = poly.profile.rankings[j]
        if key in seen:
            continue
        seen.add(key)
        others = sorted((i for i in range(n) if i != j),
                        key=lambda i: (mu[i], i))
        yield [j] + others[:k - 1], [j] + others[k - 1:]


def _percentile_pair_lp(poly: ConsistencyPolytope, S, T, x: int, w: int):
    """One configuration LP: agents in S pin the denominator order
    statistic (scaled to one), agents in T floor the numerator's."""
    nv = poly.nv
    ncols = nv + 2  # scale, then the order-statistic floor variable
    base = np.hstack([poly.cc_rows, np.zeros((poly.cc_rows.shape[0], 1))])
    extra_rows = []
    extra_rhs = []
    for i in S:
        row = np.zeros(ncols)
        row[poly.var(i, x)] = 1.0
        extra_rows.append(row)
        extra_rhs.append(1.0)
    for i in T:
        row = np.zeros(ncols)
        row[-1] = 1.0
        row[poly.var(i, w)] = -1.0
        extra_rows.append(row)
        extra_rhs.append(0.0)
    A_ub = np.vstack([base] + [np.asarray(extra_rows)])
    b_ub = np.concatenate([np.zeros(base.shape[0]), np.asarray(extra_rhs)])
    c = np.zeros(ncols)
    c[-1] = 1.0
    return c, A_ub, b_ub


def _percentile_config_value(poly: ConsistencyPolytope, S, T, x: int, w: int,
                             engine: str, want_witness: bool) -> _PairOutcome:
    c, A_ub, b_ub = _percentile_pair_lp(poly, S, T, x, w)
    res = solve_lp(c, A_ub, b_ub, engine=engine, maximize=True)
    if res.status == "unbounded":
        return _PairOutcome(INF, None, ["unbounded_ratio"])
    if not res.optimal:
        raise InternalInvariantError("percentile configuration LP infeasible")
    value = res.fun
    if not want_witness:
        return _PairOutcome(value, None)
    flags: list[str] = []
    z = res.x
    tau = z[poly.nv]
    if tau <= SCALE_TOL:
        eps = 1e-9 * max(1.0, abs(value))
        A2 = np.vstack([A_ub, -c])
        b2 = np.append(b_ub, -(value - eps))
        c_tau = np.zeros_like(c)
        c_tau[poly.nv] = 1.0
        res2 = solve_lp(c_tau, A2, b2, engine=engine, maximize=True)
        if res2.optimal and res2.x[poly.nv] > SCALE_TOL:
            z, tau = res2.x, res2.x[poly.nv]
        else:
            flags.append("witness_at_scale_limit")
            radius = max(float(poly.fd.values.max()), 1.0)
            d_int = np.full(poly.nv, radius)
            z_int = np.zeros_like(z)
            z_int[:poly.nv] = d_int / radius
            z_int[poly.nv] = 1.0 / radius
            z_int[-1] = 1.0
            lam = 1e-7
            z = (1 - lam) * z + lam * z_int
            tau = z[poly.nv]
    witness = (z[:poly.nv] / tau).reshape(poly.n, poly.m)
    return _PairOutcome(value, witness, flags)


def audit_percentile_social_choice(winner: int, profile: PreferenceProfile,
                                   fd: FacilityDistances, alpha: float,
                                   budget: int = 200, seed: int = 0,
                                   engine: str = "highs") -> AuditReport:
    """Worst-case percentile-cost distortion: exact for up to eight agents
    by order-statistic enumeration, otherwise the best lower bound found
    on ``budget`` sampled consistent metrics."""
    if alpha < 0.5 - 1e-12:
        raise UnboundedObjectiveError(
            f"alpha = {alpha} below one half has unbounded worst-case "
            "distortion; the audit refuses rather than report a number")
    if alpha > 1.0:
        raise UnboundedObjectiveError(f"alpha must lie in [0.5, 1], got {alpha}")
    poly = ConsistencyPolytope(profile, fd)
    n, m = poly.n, poly.m
    k = percentile_rank(n, alpha)
    l = fd.values
    if n > EXACT_PERCENTILE_MAX_N:
        return _sampled_percentile_audit(poly, winner, alpha, budget, seed, engine)

    results: list[tuple[object, _PairOutcome]] = []
    best_combo: dict[object, tuple] = {}
    for x in range(m):
        if x == winner:
            continue
        if l[winner, x] <= 1e-12:
            results.append((x, _PairOutcome(1.0, None)))
            continue
        eligible = sum(poly.can_sit_at(i, x) for i in range(n))
        if eligible >= k:
            seats = {i: x for i in range(n) if poly.can_sit_at(i, x)}
            seats = dict(list(seats.items())[:k])
            results.append((x, _PairOutcome(INF, poly.seated_metric(seats),
                                            ["denominator_vanishes"])))
            continue
        best = _PairOutcome(0.0, None)
        best_st = None
        for S, T in _percentile_candidates(poly, x, k, engine):
            outcome = _percentile_config_value(poly, S, T, x, winner, engine,
                                               want_witness=False)
            if outcome.value > best.value:
                best = outcome
                best_st = (S, T)
            if best.value == INF:
                break
        best_combo[x] = best_st
        results.append((x, best))

    # Materialize the witness only for the maximizing alternative.
    best_key, best_val = None, 1.0
    for key, outcome in results:
        if outcome.value > best_val:
            best_key, best_val = key, outcome.value
    if best_key is not None and math.isfinite(best_val) and best_combo.get(best_key):
        S, T = best_combo[best_key]
        refreshed = _percentile_config_value(poly, S, T, best_key, winner, engine,
                                             want_witness=True)
        results = [(key, refreshed if key == best_key else outcome)
                   for key, outcome in results]

    def recompute(metric: FullMetric) -> float:
        numv = evaluate_percentile_cost(winner, metric, alpha)
        denv = min(evaluate_percentile_cost(f, metric, alpha) for f in range(m))
        if denv <= 1e-12:
            return INF if numv > 1e-12 else 1.0
        return numv / denv

    return _finalize(poly, "percentile", winner, results, True, alpha, engine,
                     recompute)


def _sampled_percentile_audit(poly: ConsistencyPolytope, winner: int,
                              alpha: float, budget: int, seed: int,
                              engine: str) -> AuditReport:
    best_ratio = 1.0
    best_metric = None
    m = poly.m
    for trial in range(budget):
        metric = sample_consistent_metric(poly.profile, poly.fd,
                                          seed=seed + trial, engine=engine)
        numv = evaluate_percentile_cost(winner, metric, alpha)
        denv = min(evaluate_percentile_cost(f, metric, alpha) for f in range(m))
        if denv <= 1e-12:
            ratio = INF if numv > 1e-12 else 1.0
        else:
            ratio = numv / denv
        if ratio > best_ratio:
            best_ratio = ratio
            best_metric = metric
    if best_metric is None:
        flags: list[str] = []
        best_metric = _metric_from_values(poly.interior_metric(), poly.fd,
                                          flags, "witness")
    return AuditReport("percentile", winner, best_ratio, False, (),
                       best_metric, best_ratio, alpha, ("sampled_lower_bound",))


def sample_consistent_metric(profile: PreferenceProfile, fd: FacilityDistances,
                             seed: int, engine: str = "highs") -> FullMetric:
    """A deterministic point of the consistent closure: optimize a seeded
    random direction over the polytope, boxed to keep every direction
    bounded."""
    poly = ConsistencyPolytope(profile, fd)
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, poly.nv)
    upper = 3.0 * (float(fd.values.max()) + 1.0)
    box = np.eye(poly.nv)
    A_ub = np.vstack([poly.A, box]) if poly.A.size else box
    b_ub = np.concatenate([poly.b, np.full(poly.nv, upper)]) if poly.A.size \
        else np.full(poly.nv, upper)
    res = solve_lp(c, A_ub, b_ub, engine=engine)
    if not res.optimal:
        raise InternalInvariantError(
            "consistency polytope reported infeasible while sampling")
    flags: list[str] = []
    metric = _metric_from_values(res.x.reshape(poly.n, poly.m), fd, flags,
                                 "sample")
    if not check_consistency(profile, metric, tol=1e-7):
        raise InternalInvariantError("sampled metric is not consistent")
    return metric
