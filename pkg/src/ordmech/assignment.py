"""General facility-assignment problems: constraints, costs, reduction.

An assignment maps every agent to a facility subject to metric-independent
constraints (capacities, open-facility bounds, co-assignment pairs).  Its
cost is a monotone subadditive functional of the agent-facility distances
plus a facility cost that depends on the assignment alone.  The reduction
solves the fully known projected problem (agents moved to their top
choices) and reuses that assignment, inheriting a 1 + 2*beta worst-case
guarantee from a beta-approximate projected solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import FacilityDistances, FacilitySet, PreferenceProfile, project_agents
from .errors import InvalidCostError, SolverError

Assignment = tuple[int, ...]


class DistanceCost(enum.Enum):
    """Supported distance-cost functionals; both are monotone nondecreasing
    and subadditive.  A median functional is deliberately absent: it is not
    subadditive and carries no worst-case guarantee in this framework."""

    SUM = "sum"
    MAX = "max"

    def evaluate(self, s: np.ndarray) -> float:
        if self is DistanceCost.SUM:
            return float(np.sum(s))
        return float(np.max(s)) if len(s) else 0.0

    @classmethod
    def parse(cls, name: str) -> "DistanceCost":
        try:
            return cls(name.lower())
        except ValueError:
            raise InvalidCostError(
                f"unsupported distance cost {name!r}; choose from "
                f"{[c.value for c in cls]} (median is not subadditive)") from None


@dataclass(frozen=True)
class CostSpec:
    distance_cost: DistanceCost
    opening_costs: tuple[float, ...] | None = None
    coassign_penalties: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.opening_costs is not None and any(c < 0 for c in self.opening_costs):
            raise InvalidCostError("opening costs must be nonnegative")
        if any(p < 0 for _, _, p in self.coassign_penalties):
            raise InvalidCostError("co-assignment penalties must be nonnegative")

    def facility_cost(self, x: Assignment) -> float:
        total = 0.0
        if self.opening_costs is not None:
            for f in set(x):
                total += self.opening_costs[f]
        for i, j, pen in self.coassign_penalties:
            if x[i] == x[j]:
                total += pen
        return total


@dataclass(frozen=True)
class ConstraintSet:
    """Metric-independent validity rules for assignments."""

    m: int
    capacities: tuple[int | None, ...] | None = None
    at_most_open: int | None = None
    exactly_open: int | None = None
    must_coassign: tuple[tuple[int, int], ...] = ()
    must_separate: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.capacities is not None and len(self.capacities) != self.m:
            raise SolverError("capacities must list one bound per facility")

    def is_valid(self, x: Assignment) -> bool:
        if any(not 0 <= f < self.m for f in x):
            return False
        if self.capacities is not None:
            counts = [0] * self.m
            for f in x:
                counts[f] += 1
            for f, cap in enumerate(self.capacities):
                if cap is not None and counts[f] > cap:
                    return False
        opened = len(set(x))
        if self.at_most_open is not None and opened > self.at_most_open:
            return False
        if self.exactly_open is not None and opened != self.exactly_open:
            return False
        for i, j in self.must_coassign:
            if x[i] != x[j]:
                return False
        for i, j in self.must_separate:
            if x[i] == x[j]:
                return False
        return True


def is_valid(x: Assignment, constraints: ConstraintSet) -> bool:
    return constraints.is_valid(tuple(x))


@dataclass(frozen=True)
class AssignmentProblem:
    n: int
    facilities: FacilitySet
    constraints: ConstraintSet
    cost_spec: CostSpec
    preset: str | None = None

    def __post_init__(self):
        if self.constraints.m != self.facilities.m:
            raise SolverError("constraints sized for a different facility count")
        # Existence of a valid assignment is checked by search at desk scale.
        if self.facilities.m ** self.n <= 200_000:
            if next(iter_valid_assignments(self.n, self.constraints), None) is None:
                raise SolverError("no valid assignment exists for this problem")

    @property
    def m(self) -> int:
        return self.facilities.m


def iter_valid_assignments(n: int, constraints: ConstraintSet):
    """Depth-first enumeration of valid assignments in lexicographic order,
    pruning capacity, open-count and pairing violations early."""
    m = constraints.m
    caps = list(constraints.capacities) if constraints.capacities is not None else None
    open_cap = constraints.at_most_open
    if constraints.exactly_open is not None:
        open_cap = (constraints.exactly_open if open_cap is None
                    else min(open_cap, constraints.exactly_open))
    partners_eq: dict[int, list[int]] = {}
    partners_ne: dict[int, list[int]] = {}
    for i, j in constraints.must_coassign:
        a, b = min(i, j), max(i, j)
        partners_eq.setdefault(b, []).append(a)
    for i, j in constraints.must_separate:
        a, b = min(i, j), max(i, j)
        partners_ne.setdefault(b, []).append(a)

    x = [0] * n
    counts = [0] * m

    def rec(agent: int, opened: int):
        if agent == n:
            if constraints.exactly_open is not None and opened != constraints.exactly_open:
                return
            yield tuple(x)
            return
        forced = None
        for a in partners_eq.get(agent, ()):
            if forced is None:
                forced = x[a]
            elif forced != x[a]:
                return
        choices = range(m) if forced is None else (forced,)
        for f in choices:
            if caps is not None and caps[f] is not None and counts[f] >= caps[f]:
                continue
            if any(x[a] == f for a in partners_ne.get(agent, ())):
                continue
            newly = counts[f] == 0
            if newly and open_cap is not None and opened + 1 > open_cap:
                continue
            x[agent] = f
            counts[f] += 1
            yield from rec(agent + 1, opened + (1 if newly else 0))
            counts[f] -= 1
    yield from rec(0, 0)


def count_search_space(n: int, m: int) -> int:
    return m ** n


def distance_vector(x: Assignment, distances: np.ndarray) -> np.ndarray:
    return np.asarray([distances[i, f] for i, f in enumerate(x)], dtype=float)


def total_cost(x: Assignment, distances: np.ndarray, spec: CostSpec) -> float:
    s = distance_vector(x, distances)
    return spec.distance_cost.evaluate(s) + spec.facility_cost(x)


@dataclass(frozen=True)
class ProjectedProblem:
    """The same problem posed over agents relocated to their top choices;
    all distances are known through the facility geometry."""

    problem: AssignmentProblem
    facility_distances: FacilityDistances
    tops: tuple[int, ...]
    distances: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.tops)


def project_problem(profile: PreferenceProfile, fd: FacilityDistances,
                    problem: AssignmentProblem) -> ProjectedProblem:
    if problem.n != profile.n:
        raise SolverError("problem and profile disagree on the agent count")
    projected = project_agents(profile, fd)
    return ProjectedProblem(problem, fd, projected.tops, projected.distance_matrix)


@dataclass(frozen=True)
class ReducedSolution:
    assignment: Assignment
    beta: float
    exact: bool
    projected_value: float
    distance_factor: float   # 1 + 2*beta bound on the distance cost
    facility_factor: float   # beta bound on the facility cost

    @property
    def guarantee(self) -> float:
        return self.distance_factor


def reduce_and_solve(problem: AssignmentProblem, profile: PreferenceProfile,
                     fd: FacilityDistances, solver) -> ReducedSolution:
    """Solve the projected problem with the given omniscient solver handle
    and reuse its assignment: valid by construction, worst-case cost within
    1 + 2*beta of optimal on every consistent metric."""
    projected = project_problem(profile, fd, problem)
    result = solver(projected)
    x = tuple(result.assignment)
    if not problem.constraints.is_valid(x):
        raise SolverError("solver returned an invalid assignment")
    return ReducedSolution(x, result.beta, result.exact, result.value,
                           distance_factor=1.0 + 2.0 * result.beta,
                           facility_factor=result.beta)


PRESET_NAMES = (
    "social_choice_sum",
    "social_choice_median",
    "matching_min_cost",
    "matching_egalitarian",
    "k_center",
    "k_median",
    "facility_location",
)


def build_preset(name: str, n: int, facilities: FacilitySet,
                 params: dict | None = None) -> AssignmentProblem:
    """Construct the assignment problem for a named preset.

    ``social_choice_median`` deliberately has no framework form (its
    objective is not subadditive); it is served by the augmented-majority
    mechanism instead.
    """
    params = dict(params or {})
    m = facilities.m
    if name == "social_choice_sum":
        constraints = ConstraintSet(m, exactly_open=1)
        spec = CostSpec(DistanceCost.SUM)
    elif name == "social_choice_median":
        raise InvalidCostError(
            "the median objective is not subadditive and has no assignment-"
            "framework form; use the augmented-majority mechanism")
    elif name in ("matching_min_cost", "matching_egalitarian"):
        if n != m:
            raise SolverError(f"{name} needs equally many agents and facilities")
        constraints = ConstraintSet(m, capacities=(1,) * m)
        cost = DistanceCost.SUM if name == "matching_min_cost" else DistanceCost.MAX
        spec = CostSpec(cost)
    elif name in ("k_center", "k_median"):
        k = int(params.get("k", 1))
        if not 1 <= k <= m:
            raise SolverError(f"k must lie in [1, {m}], got {k}")
        constraints = ConstraintSet(m, at_most_open=k)
        cost = DistanceCost.MAX if name == "k_center" else DistanceCost.SUM
        spec = CostSpec(cost)
    elif name == "facility_location":
        costs = params.get("opening_costs")
        if costs is None or len(costs) != m:
            raise SolverError("facility_location needs one opening cost per facility")
        constraints = ConstraintSet(m)
        spec = CostSpec(DistanceCost.SUM, opening_costs=tuple(float(c) for c in costs))
    else:
        raise SolverError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return AssignmentProblem(n, facilities, constraints, spec, preset=name)
