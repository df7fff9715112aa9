"""Single-winner mechanisms over ordinal preferences.

Two mechanisms are implemented.  The projected-sum rule relocates every
agent to its top-choice facility and minimizes the now fully known total
distance.  The augmented-majority rule starts from the pairwise
defeat-or-tie graph and, for one-directional pairs, adds the reverse
edge whenever a third alternative certifies it through the partial order
on facility-pair distances; a vertex dominating all others always exists
and is returned.  Every pair always carries at least one majority edge,
so the augmentation pass only ever examines single-direction pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import FacilityDistances, FullMetric, PreferenceProfile, ProjectedAgents
from .errors import InternalInvariantError, ProfileError
from .core import TOL


@dataclass(frozen=True)
class MajorityGraph:
    """Pairwise preference counts; an edge (a, b) means at least half the
    agents prefer a to b."""

    n: int
    prefer: np.ndarray  # prefer[a, b] = #{i : a ranked before b}

    @property
    def m(self) -> int:
        return self.prefer.shape[0]

    def defeats_or_ties(self, a: int, b: int) -> bool:
        return a != b and 2 * int(self.prefer[a, b]) >= self.n

    def strictly_defeats(self, a: int, b: int) -> bool:
        return a != b and 2 * int(self.prefer[a, b]) > self.n

    def edges(self) -> set[tuple[int, int]]:
        m = self.m
        return {(a, b) for a in range(m) for b in range(m)
                if self.defeats_or_ties(a, b)}

    def condorcet_winner(self) -> int | None:
        for w in range(self.m):
            if all(self.strictly_defeats(w, y) for y in range(self.m) if y != w):
                return w
        return None


def majority_graph(profile: PreferenceProfile) -> MajorityGraph:
    if profile.top_only:
        raise ProfileError("majority graph needs full rankings")
    m = profile.m
    prefer = np.zeros((m, m), dtype=int)
    for r in profile.rankings:
        pos = np.empty(m, dtype=int)
        for p, f in enumerate(r):
            pos[f] = p
        for a in range(m):
            for b in range(m):
                if a != b and pos[a] < pos[b]:
                    prefer[a, b] += 1
    prefer.flags.writeable = False
    return MajorityGraph(profile.n, prefer)


@dataclass(frozen=True)
class DistancePartialOrder:
    """Known "<=" relation between facility-pair distances, closed under
    transitivity; cycles collapse into equality classes automatically
    because every cycle member reaches every other in the closure."""

    m: int
    pairs: tuple[tuple[int, int], ...]
    reach: np.ndarray  # reach[p, q]: distance of pair p known <= pair q

    def pair_index(self, f: int, g: int) -> int:
        if f > g:
            f, g = g, f
        return self.pairs.index((f, g))

    def leq(self, pair_a: tuple[int, int], pair_b: tuple[int, int]) -> bool:
        return bool(self.reach[self.pair_index(*pair_a), self.pair_index(*pair_b)])

    def equality_classes(self) -> list[set[tuple[int, int]]]:
        seen = set()
        classes = []
        for p, pair in enumerate(self.pairs):
            if p in seen:
                continue
            cls = {q for q in range(len(self.pairs))
                   if self.reach[p, q] and self.reach[q, p]}
            seen |= cls
            classes.append({self.pairs[q] for q in cls})
        return classes


def _close(reach: np.ndarray) -> np.ndarray:
    reach = reach.copy()
    for k in range(reach.shape[0]):
        reach |= np.outer(reach[:, k], reach[k, :])
    reach.flags.writeable = False
    return reach


def distance_partial_order(source) -> DistancePartialOrder:
    """Build the order either from numeric facility distances (totally
    comparable by value) or from each candidate's ranking of the others
    (only pairs sharing a facility are directly related)."""
    if isinstance(source, FacilityDistances):
        return _order_from_values(source)
    return _order_from_candidate_rankings(source)


def _order_from_values(fd: FacilityDistances) -> DistancePartialOrder:
    pairs = tuple(combinations(range(fd.m), 2))
    P = len(pairs)
    reach = np.zeros((P, P), dtype=bool)
    vals = [fd.values[f, g] for f, g in pairs]
    for p in range(P):
        for q in range(P):
            reach[p, q] = vals[p] <= vals[q] + TOL
    reach.flags.writeable = False
    return DistancePartialOrder(fd.m, pairs, reach)


def _order_from_candidate_rankings(rankings) -> DistancePartialOrder:
    rankings = [tuple(r) for r in rankings]
    m = len(rankings)
    for f, r in enumerate(rankings):
        if sorted(r) != sorted(set(range(m)) - {f}):
            raise ProfileError(
                f"candidate {f}: ranking must totally order the other candidates")
    pairs = tuple(combinations(range(m), 2))
    P = len(pairs)
    index = {pair: p for p, pair in enumerate(pairs)}

    def pidx(a, b):
        return index[(a, b) if a < b else (b, a)]

    reach = np.eye(P, dtype=bool)
    for f, r in enumerate(rankings):
        for closer, farther in zip(r, r[1:]):
            reach[pidx(f, closer), pidx(f, farther)] = True
    return DistancePartialOrder(m, pairs, _close(reach))


@dataclass(frozen=True)
class EdgeJustification:
    edge: tuple[int, int]
    via: str  # "majority" | "witness"
    witness: int | None = None


@dataclass(frozen=True)
class SocialChoiceOutcome:
    winner: int
    kind: str
    certificate: tuple[EdgeJustification, ...] = ()
    scores: tuple[float, ...] | None = None


def sum_winner(projected: ProjectedAgents) -> SocialChoiceOutcome:
    """Minimize total distance over the projected agents; ties break to
    the lower facility index."""
    costs = projected.distance_matrix.sum(axis=0)
    winner = int(np.argmin(costs))
    return SocialChoiceOutcome(winner, "projected_sum", scores=tuple(float(c) for c in costs))


def augment_majority_edges(graph: MajorityGraph, order: DistancePartialOrder,
                           pair_sequence=None) -> dict[tuple[int, int], int]:
    """One pass over single-direction pairs: justify the missing reverse
    edge through a third alternative that defeats-or-ties the stronger
    side and is at least as far from it.  Only the original graph and the
    static order are consulted, so the pair order is immaterial."""
    m = graph.m
    if pair_sequence is None:
        pair_sequence = combinations(range(m), 2)
    added: dict[tuple[int, int], int] = {}
    for f, g in pair_sequence:
        fg = graph.defeats_or_ties(f, g)
        gf = graph.defeats_or_ties(g, f)
        if fg and gf:
            continue
        y, w = (f, g) if fg else (g, f)
        for p in range(m):
            if p == w or p == y:
                continue
            if graph.defeats_or_ties(p, y) and order.leq((y, w), (y, p)):
                added[(w, y)] = p
                break
    return added


def median_winner(profile: PreferenceProfile,
                  order: DistancePartialOrder) -> SocialChoiceOutcome:
    """Augmented-majority winner (low worst-case median and percentile
    cost, and at most 5x total cost)."""
    if order.m != profile.m:
        raise ProfileError("distance order and profile disagree on the "
                           "facility count")
    graph = majority_graph(profile)
    m = profile.m
    cw = graph.condorcet_winner()
    if cw is not None:
        cert = tuple(EdgeJustification((cw, y), "majority")
                     for y in range(m) if y != cw)
        return SocialChoiceOutcome(cw, "condorcet", cert)

    added = augment_majority_edges(graph, order)

    def out_full(v: int) -> bool:
        return all(graph.defeats_or_ties(v, y) or (v, y) in added
                   for y in range(m) if y != v)

    for w in range(m):
        if out_full(w):
            cert = []
            for y in range(m):
                if y == w:
                    continue
                if graph.defeats_or_ties(w, y):
                    cert.append(EdgeJustification((w, y), "majority"))
                else:
                    cert.append(EdgeJustification((w, y), "witness", added[(w, y)]))
            return SocialChoiceOutcome(w, "augmented_majority", tuple(cert))
    raise InternalInvariantError(
        "no alternative dominates the augmented majority graph")


def evaluate_sum_cost(x: int, metric: FullMetric) -> float:
    return float(metric.distances[:, x].sum())


def evaluate_percentile_cost(x: int, metric: FullMetric, alpha: float) -> float:
    """k-th smallest agent distance to x with k = min(floor(alpha n) + 1, n);
    alpha = 1/2 reproduces the median convention for both parities."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    n = metric.n
    k = percentile_rank(n, alpha)
    col = np.sort(metric.distances[:, x])
    return float(col[k - 1])


def percentile_rank(n: int, alpha: float) -> int:
    return min(math.floor(alpha * n + 1e-9) + 1, n)


def evaluate_median_cost(x: int, metric: FullMetric) -> float:
    return evaluate_percentile_cost(x, metric, 0.5)


def copeland_winner(profile: PreferenceProfile) -> SocialChoiceOutcome:
    """Baseline: one point per strict pairwise defeat, half per tie."""
    graph = majority_graph(profile)
    m = profile.m
    scores = np.zeros(m)
    for a, b in combinations(range(m), 2):
        if graph.strictly_defeats(a, b):
            scores[a] += 1.0
        elif graph.strictly_defeats(b, a):
            scores[b] += 1.0
        else:
            scores[a] += 0.5
            scores[b] += 0.5
    winner = int(np.argmax(scores))
    return SocialChoiceOutcome(winner, "copeland", scores=tuple(scores))
