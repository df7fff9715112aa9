"""Agents, facilities, metrics, preference profiles and their consistency.

The central object is the (possibly infinite) set of full metrics that
agree with the known facility distances and never contradict an agent's
ranking.  It is represented by its topological closure: weak chain
inequalities along each ranking plus the two-sided triangle bounds that
tie every agent-facility distance to the facility geometry.  All
operations here are pure; every value is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MetricError, ProfileError

TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FacilitySet:
    """Ordered facility identifiers; indices are the canonical handle."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) == 0:
            raise MetricError("facility set must be nonempty")
        if len(set(self.names)) != len(self.names):
            raise MetricError("facility identifiers must be unique")

    @property
    def m(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MetricError(f"unknown facility {name!r}") from None


@dataclass(frozen=True)
class MetricCheck:
    ok: bool
    reason: str | None = None
    triple: tuple[int, ...] | None = None


def validate_distance_matrix(values, tol: float = TOL) -> MetricCheck:
    """Check symmetry, zero diagonal, nonnegativity and the triangle
    inequality; on failure the report names the first offending entry."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {a.shape}")
    m = a.shape[0]
    for i in range(m):
        if abs(a[i, i]) > tol:
            return MetricCheck(False, "nonzero diagonal", (i, i))
    for i in range(m):
        for j in range(i + 1, m):
            if a[i, j] < -tol or a[j, i] < -tol:
                return MetricCheck(False, "negative distance", (i, j))
            if abs(a[i, j] - a[j, i]) > tol:
                return MetricCheck(False, "asymmetric", (i, j))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if a[i, k] > a[i, j] + a[j, k] + tol:
                    return MetricCheck(False, "triangle inequality violated", (i, j, k))
    return MetricCheck(True)


@dataclass(frozen=True)
class FacilityDistances:
    """Known symmetric metric on the facilities."""

    facilities: FacilitySet
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.shape != (self.facilities.m, self.facilities.m):
            raise MetricError("distance matrix shape does not match facility count")
        check = validate_distance_matrix(self.values)
        if not check.ok:
            raise MetricError(f"{check.reason} at {check.triple}")

    @property
    def m(self) -> int:
        return self.facilities.m

    def __getitem__(self, pair) -> float:
        i, j = pair
        return float(self.values[i, j])


def facility_distances(names, values) -> FacilityDistances:
    return FacilityDistances(FacilitySet(tuple(names)), values)


@dataclass(frozen=True)
class PreferenceProfile:
    """Per-agent rankings over facility indices.

    Full profiles carry a permutation of all facilities per agent;
    top-only profiles carry just each agent's first choice.
    """

    m: int
    rankings: tuple[tuple[int, ...], ...]
    top_only: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ProfileError("need at least one facility")
        if not self.rankings:
            raise ProfileError("need at least one agent")
        for i, r in enumerate(self.rankings):
            if len(r) == 0:
                raise ProfileError(f"agent {i} has an empty ranking")
            if self.top_only:
                if len(r) != 1 or not 0 <= r[0] < self.m:
                    raise ProfileError(f"agent {i}: top-only entry must be one facility index")
            elif sorted(r) != list(range(self.m)):
                raise ProfileError(f"agent {i}: ranking is not a permutation of all facilities")

    @property
    def n(self) -> int:
        return len(self.rankings)

    def top(self, i: int) -> int:
        return self.rankings[i][0]

    @property
    def tops(self) -> tuple[int, ...]:
        return tuple(r[0] for r in self.rankings)

    def prefers(self, i: int, a: int, b: int) -> bool:
        """True when agent i ranks facility a strictly before b."""
        if self.top_only:
            raise ProfileError("pairwise comparisons need full rankings")
        r = self.rankings[i]
        return r.index(a) < r.index(b)


@dataclass(frozen=True)
class FullMetric:
    """Agent-facility distances together with the facility geometry.

    The two-sided bound |d(i,F) - d(i,F')| <= l(F,F') <= d(i,F) + d(i,F')
    is exactly what makes a shortest-path completion over agents and
    facilities a genuine metric that keeps every given entry.
    """

    distances: np.ndarray  # n x m
    facility_distances: FacilityDistances

    def __post_init__(self):
        object.__setattr__(self, "distances", _freeze(self.distances))
        d = self.distances
        l = self.facility_distances.values
        if d.ndim != 2 or d.shape[1] != self.facility_distances.m:
            raise MetricError("agent-facility matrix shape does not match facilities")
        if np.any(d < -TOL):
            raise MetricError("negative agent-facility distance")
        n, m = d.shape
        for i in range(n):
            for f in range(m):
                for g in range(f + 1, m):
                    gap = abs(d[i, f] - d[i, g])
                    if gap > l[f, g] + TOL:
                        raise MetricError(
                            f"agent {i}: |d({f}) - d({g})| = {gap} exceeds l = {l[f, g]}")
                    if d[i, f] + d[i, g] < l[f, g] - TOL:
                        raise MetricError(
                            f"agent {i}: d({f}) + d({g}) falls short of l = {l[f, g]}")

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    @property
    def m(self) -> int:
        return self.distances.shape[1]


def full_metric(distances, fd: FacilityDistances) -> FullMetric:
    return FullMetric(distances, fd)


def shortest_path_completion(metric: FullMetric) -> np.ndarray:
    """Extend the known distances to all of agents + facilities by
    shortest paths; returns the (n+m) x (n+m) matrix with agents first."""
    n, m = metric.n, metric.m
    size = n + m
    big = np.full((size, size), np.inf)
    np.fill_diagonal(big, 0.0)
    big[:n, n:] = metric.distances
    big[n:, :n] = metric.distances.T
    big[n:, n:] = metric.facility_distances.values
    for k in range(size):
        big = np.minimum(big, big[:, k, None] + big[None, k, :])
    return big


def preferences_from_metric(metric: FullMetric) -> PreferenceProfile:
    """Rank facilities by distance, equal distances broken toward the
    lower facility index."""
    rankings = []
    for row in metric.distances:
        order = sorted(range(metric.m), key=lambda j: (row[j], j))
        rankings.append(tuple(order))
    return PreferenceProfile(metric.m, tuple(rankings))


def check_consistency(profile: PreferenceProfile, metric: FullMetric,
                      tol: float = TOL) -> bool:
    """True when no agent's distances strictly contradict its ranking
    (weak inequalities: ties are consistent with any order)."""
    d = metric.distances
    if d.shape[0] != profile.n or d.shape[1] != profile.m:
        raise MetricError("profile and metric dimensions disagree")
    for i, r in enumerate(profile.rankings):
        if profile.top_only:
            if d[i, r[0]] > d[i].min() + tol:
                return False
            continue
        for a, b in zip(r, r[1:]):
            if d[i, a] > d[i, b] + tol:
                return False
    return True


@dataclass(frozen=True)
class ProjectedAgents:
    """Each agent relocated to its top-choice facility, making all of its
    facility distances known exactly."""

    tops: tuple[int, ...]
    facility_distances: FacilityDistances

    def distance(self, i: int, f: int) -> float:
        return float(self.facility_distances.values[self.tops[i], f])

    @property
    def distance_matrix(self) -> np.ndarray:
        return self.facility_distances.values[list(self.tops), :]

    @property
    def n(self) -> int:
        return len(self.tops)


def project_agents(profile: PreferenceProfile, fd: FacilityDistances) -> ProjectedAgents:
    if profile.m != fd.m:
        raise MetricError("profile and facility distances disagree on m")
    return ProjectedAgents(profile.tops, fd)


@dataclass(frozen=True)
class ConsistencyConstraintSet:
    """Linear closure of the consistent-metric set over variables d(i,F).

    Rows: per-agent chain inequalities between consecutive ranks, then the
    two absolute-difference bounds and the lower sum bound per facility
    pair and agent.  Variable nonnegativity is part of the contract but is
    carried as bounds, not rows.  Row kinds are kept for inspection.
    """

    n: int
    m: int
    A: np.ndarray
    b: np.ndarray
    kinds: tuple[str, ...] = field(repr=False)

    def var(self, i: int, f: int) -> int:
        return i * self.m + f

    @property
    def nvars(self) -> int:
        return self.n * self.m

    def count(self, kind: str) -> int:
        return sum(1 for k in self.kinds if k == kind)

    def contains(self, distances, tol: float = 1e-7) -> bool:
        x = np.asarray(distances, dtype=float).reshape(-1)
        if np.any(x < -tol):
            return False
        return bool(np.all(self.A @ x <= self.b + tol))


def consistency_constraints(profile: PreferenceProfile,
                            fd: FacilityDistances) -> ConsistencyConstraintSet:
    """Emit the closed constraint system for the given ordinal data.

    Always feasible: placing every agent at one far-away point (all of its
    facility distances equal and large) satisfies every row weakly.
    """
    n, m = profile.n, profile.m
    if m != fd.m:
        raise MetricError("profile and facility distances disagree on m")
    l = fd.values
    nv = n * m
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    kinds: list[str] = []

    def var(i, f):
        return i * m + f

    for i, r in enumerate(profile.rankings):
        if profile.top_only:
            chain_pairs = [(r[0], g) for g in range(m) if g != r[0]]
        else:
            chain_pairs = list(zip(r, r[1:]))
        for a, b in chain_pairs:
            row = np.zeros(nv)
            row[var(i, a)] = 1.0
            row[var(i, b)] = -1.0
            rows.append(row)
            rhs.append(0.0)
            kinds.append("chain")
    for i in range(n):
        for f in range(m):
            for g in range(f + 1, m):
                lv = float(l[f, g])
                row = np.zeros(nv)
                row[var(i, f)] = 1.0
                row[var(i, g)] = -1.0
                rows.append(row)
                rhs.append(lv)
                kinds.append("diff")
                rows.append(-row)
                rhs.append(lv)
                kinds.append("diff")
                row = np.zeros(nv)
                row[var(i, f)] = -1.0
                row[var(i, g)] = -1.0
                rows.append(row)
                rhs.append(-lv)
                kinds.append("sum")
    A = np.vstack(rows) if rows else np.zeros((0, nv))
    return ConsistencyConstraintSet(n, m, _freeze(A), _freeze(np.asarray(rhs)),
                                    tuple(kinds))
