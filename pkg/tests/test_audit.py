"""Distortion audits: exactness, witnesses, soundness, degenerate cases."""

import math
from itertools import combinations

import numpy as np
import pytest

from ordmech import (PreferenceProfile, UnboundedObjectiveError,
                     audit_additive_assignment, audit_percentile_social_choice,
                     audit_sum_social_choice, build_preset, check_consistency,
                     evaluate_percentile_cost, evaluate_sum_cost,
                     facility_distances, median_winner, distance_partial_order,
                     project_agents,
                     sample_consistent_metric, sum_winner)
from ordmech.audit import ConsistencyPolytope, _percentile_config_value
from ordmech.gallery import gen_median_topchoice_bad

from helpers import random_instance


def _tie_instance(span=2.0):
    fd = facility_distances(("X", "Y"), [[0.0, span], [span, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (1, 0)))
    return profile, fd


def test_single_facility_audits_to_one():
    fd = facility_distances(("X",), [[0.0]])
    profile = PreferenceProfile(1, ((0,), (0,)))
    report = audit_sum_social_choice(0, profile, fd)
    assert report.value == 1.0
    assert report.witness is not None


def test_two_candidate_tie_audits_to_three():
    profile, fd = _tie_instance()
    for winner in (0, 1):
        report = audit_sum_social_choice(winner, profile, fd)
        assert report.value == pytest.approx(3.0, abs=1e-7)
        # the witness puts one agent equidistant and one on the alternative
        assert report.witness_ratio == pytest.approx(report.value, abs=1e-6)


def test_tie_audit_is_scale_invariant():
    # the worst case lives at a different normalization than the geometry
    for span in (0.5, 2.0, 4.0, 1000.0):
        profile, fd = _tie_instance(span)
        report = audit_sum_social_choice(0, profile, fd)
        assert report.value == pytest.approx(3.0, abs=1e-6), span


def test_sum_audit_engines_agree():
    rng = np.random.default_rng(40)
    for _ in range(10):
        profile, fd, _ = random_instance(rng, n_max=4, m_max=3)
        winner = sum_winner(project_agents(profile, fd)).winner
        fast = audit_sum_social_choice(winner, profile, fd, engine="highs")
        slow = audit_sum_social_choice(winner, profile, fd, engine="simplex")
        if math.isinf(fast.value):
            assert math.isinf(slow.value)
        else:
            assert slow.value == pytest.approx(fast.value, abs=1e-6)


def test_unanimous_winner_audits_to_one():
    # everyone's top choice is optimal under every consistent metric
    fd = facility_distances(("F1", "F2"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (0, 1)))
    report = audit_sum_social_choice(0, profile, fd)
    assert report.value == 1.0


def test_sample_single_facility_column():
    fd = facility_distances(("X",), [[0.0]])
    profile = PreferenceProfile(1, ((0,), (0,), (0,)))
    metric = sample_consistent_metric(profile, fd, seed=1)
    assert metric.distances.shape == (3, 1)
    assert (metric.distances >= 0).all()


def test_unanimous_loser_audits_to_infinity():
    fd = facility_distances(("X", "Y"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (0, 1)))
    report = audit_sum_social_choice(1, profile, fd)
    assert math.isinf(report.value)
    assert "denominator_vanishes" in report.flags
    assert report.witness is not None
    assert math.isinf(report.witness_ratio)


def test_colocated_alternatives_audit_to_one():
    fd = facility_distances(("X", "Y"), [[0.0, 0.0], [0.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (1, 0), (0, 1)))
    report = audit_sum_social_choice(0, profile, fd)
    assert report.value == 1.0


def test_sum_audit_soundness_against_samples():
    rng = np.random.default_rng(41)
    for trial in range(15):
        profile, fd, metric = random_instance(rng, n_max=6, m_max=4)
        winner = sum_winner(project_agents(profile, fd)).winner
        report = audit_sum_social_choice(winner, profile, fd)
        samples = [metric] + [sample_consistent_metric(profile, fd, seed=7 * trial + s)
                              for s in range(6)]
        for d in samples:
            cols = [evaluate_sum_cost(f, d) for f in range(fd.m)]
            best = min(cols)
            if best <= 1e-12:
                continue
            assert cols[winner] / best <= report.value + 1e-6


def test_witness_fidelity_and_consistency():
    rng = np.random.default_rng(42)
    for _ in range(25):
        profile, fd, _ = random_instance(rng, n_max=5, m_max=4)
        winner = sum_winner(project_agents(profile, fd)).winner
        report = audit_sum_social_choice(winner, profile, fd)
        assert report.witness is not None
        assert check_consistency(profile, report.witness, tol=1e-7)
        if math.isfinite(report.value):
            assert report.witness_ratio == pytest.approx(
                report.value, abs=1e-6 * max(1.0, report.value))


def _grid_ratio_sup(profile, fd, winner, upper, points):
    """Independent oracle: densely enumerate the constraint box and take
    the best achievable sum-cost ratio."""
    from ordmech import consistency_constraints
    cons = consistency_constraints(profile, fd)
    axes = [np.linspace(0.0, upper, points)] * cons.nvars
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, cons.nvars)
    feasible = grid[(grid @ cons.A.T <= cons.b + 1e-9).all(axis=1)]
    n, m = profile.n, profile.m
    d = feasible.reshape(-1, n, m)
    num = d[:, :, winner].sum(axis=1)
    den = d.sum(axis=1).min(axis=1)
    ok = den > 1e-12
    return float((num[ok] / den[ok]).max()) if ok.any() else 1.0


def test_grid_oracle_never_beats_the_audit():
    rng = np.random.default_rng(48)
    for _ in range(6):
        span = float(rng.uniform(0.5, 3.0))
        fd = facility_distances(("X", "Y"), [[0.0, span], [span, 0.0]])
        rankings = tuple(tuple(rng.permutation(2)) for _ in range(2))
        profile = PreferenceProfile(2, rankings)
        for winner in (0, 1):
            report = audit_sum_social_choice(winner, profile, fd)
            if not math.isfinite(report.value):
                continue
            grid = _grid_ratio_sup(profile, fd, winner, 1.5 * span, 13)
            assert grid <= report.value + 1e-9


def test_grid_oracle_attains_the_tie_value():
    # grid step chosen so the known worst case lies exactly on the lattice
    profile, fd = _tie_instance(2.0)
    report = audit_sum_social_choice(0, profile, fd)
    grid = _grid_ratio_sup(profile, fd, 0, 3.0, 13)  # step 0.25 hits (1,1,2,0)
    assert grid == pytest.approx(report.value, abs=1e-9)


def test_sum_audit_with_top_only_profile():
    fd = facility_distances(("X", "Y"), [[0.0, 2.0], [2.0, 0.0]])
    split = PreferenceProfile(2, ((0,), (1,)), top_only=True)
    report = audit_sum_social_choice(0, split, fd)
    assert report.value == pytest.approx(3.0, abs=1e-7)

    fd3 = facility_distances(("X", "Y"), [[0.0, 3.0], [3.0, 0.0]])
    lopsided = PreferenceProfile(2, ((0,), (0,), (1,)), top_only=True)
    report = audit_sum_social_choice(0, lopsided, fd3)
    # two agents at least halfway out, one free to sit on the alternative
    assert report.value == pytest.approx(2.0, abs=1e-7)


def test_sample_consistent_metric_contract():
    rng = np.random.default_rng(43)
    profile, fd, _ = random_instance(rng, n_max=5, m_max=4)
    a = sample_consistent_metric(profile, fd, seed=5)
    b = sample_consistent_metric(profile, fd, seed=5)
    c = sample_consistent_metric(profile, fd, seed=6)
    assert np.array_equal(a.distances, b.distances)
    assert check_consistency(profile, a)
    assert not np.allclose(a.distances, c.distances)  # generic instances differ


def test_percentile_audit_refuses_low_alpha():
    profile, fd = _tie_instance()
    with pytest.raises(UnboundedObjectiveError):
        audit_percentile_social_choice(0, profile, fd, 0.3)
    with pytest.raises(UnboundedObjectiveError):
        audit_percentile_social_choice(0, profile, fd, 1.2)


def test_percentile_condorcet_instances_within_three():
    rng = np.random.default_rng(44)
    checked = 0
    while checked < 10:
        profile, fd, _ = random_instance(rng, n_max=6, m_max=4)
        outcome = median_winner(profile, distance_partial_order(fd))
        if outcome.kind != "condorcet":
            continue
        checked += 1
        report = audit_percentile_social_choice(outcome.winner, profile, fd, 0.5)
        assert report.exact
        assert report.value <= 3 + 1e-6


def test_percentile_alpha_one_is_egalitarian():
    profile, fd = _tie_instance()
    report = audit_percentile_social_choice(0, profile, fd, 1.0)
    assert report.exact
    assert report.value >= 1.0


def test_percentile_reduction_matches_subset_enumeration():
    # oracle: every (S, T) subset pair, not just the derived candidates
    rng = np.random.default_rng(45)
    from ordmech.social_choice import percentile_rank
    for _ in range(12):
        profile, fd, _ = random_instance(rng, n_max=5, m_max=3)
        n, m = profile.n, profile.m
        poly = ConsistencyPolytope(profile, fd)
        winner = median_winner(profile, distance_partial_order(fd)).winner
        for alpha in (0.5, 0.75):
            k = percentile_rank(n, alpha)
            report = audit_percentile_social_choice(winner, profile, fd, alpha)
            for x in range(m):
                if x == winner or fd.values[winner, x] <= 1e-12:
                    continue
                if sum(poly.can_sit_at(i, x) for i in range(n)) >= k:
                    continue  # the audit reports infinity combinatorially
                oracle = 0.0
                for S in combinations(range(n), k):
                    for T in combinations(range(n), n - k + 1):
                        val = _percentile_config_value(
                            poly, list(S), list(T), x, winner, "highs",
                            want_witness=False).value
                        oracle = max(oracle, val)
                got = report.alternative_value(x)
                if math.isinf(oracle) or math.isinf(got):
                    assert math.isinf(oracle) and math.isinf(got)
                else:
                    assert abs(got - oracle) <= 1e-6


def test_percentile_audit_engines_agree():
    rng = np.random.default_rng(49)
    for _ in range(5):
        profile, fd, _ = random_instance(rng, n_max=4, m_max=3)
        winner = median_winner(profile, distance_partial_order(fd)).winner
        fast = audit_percentile_social_choice(winner, profile, fd, 0.5,
                                              engine="highs")
        slow = audit_percentile_social_choice(winner, profile, fd, 0.5,
                                              engine="simplex")
        if math.isinf(fast.value):
            assert math.isinf(slow.value)
        else:
            assert slow.value == pytest.approx(fast.value, abs=1e-6)


def test_percentile_denominator_vanishes_combinatorially():
    fd = facility_distances(("X", "Y"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (0, 1), (0, 1)))
    report = audit_percentile_social_choice(1, profile, fd, 0.5)
    assert math.isinf(report.value)
    assert report.witness is not None
    # the witness seats a majority on X, zeroing X's median
    assert evaluate_percentile_cost(0, report.witness, 0.5) == 0.0
    assert evaluate_percentile_cost(1, report.witness, 0.5) > 0.0


def test_percentile_strawman_square_lower_bound_reproduced():
    ex = gen_median_topchoice_bad()
    report = audit_percentile_social_choice(0, ex.profile, ex.fd, 0.5)
    assert report.exact
    # the bundled metric realizes ratio 5, so the exact value is at least 5
    assert report.value >= 5.0 - 1e-9
    med = [evaluate_percentile_cost(f, ex.metric, 0.5) for f in range(4)]
    assert med[0] / min(med) == pytest.approx(5.0)
    assert med[0] / min(med) <= report.value + 1e-9


def test_percentile_sampled_path_gives_lower_bound():
    rng = np.random.default_rng(46)
    profile, fd, _ = random_instance(rng, n_max=12, m_max=3, n_min=9)
    winner = median_winner(profile, distance_partial_order(fd)).winner
    report = audit_percentile_social_choice(winner, profile, fd, 0.5,
                                            budget=20, seed=3)
    assert not report.exact
    assert "sampled_lower_bound" in report.flags
    assert report.value <= 3 + 1e-6  # mechanism guarantee bounds the lower bound


def test_percentile_soundness_samples_below_exact():
    rng = np.random.default_rng(47)
    for trial in range(8):
        profile, fd, _ = random_instance(rng, n_max=6, m_max=3)
        winner = median_winner(profile, distance_partial_order(fd)).winner
        report = audit_percentile_social_choice(winner, profile, fd, 0.5)
        for s in range(6):
            metric = sample_consistent_metric(profile, fd, seed=100 * trial + s)
            pcs = [evaluate_percentile_cost(f, metric, 0.5) for f in range(fd.m)]
            best = min(pcs)
            if best <= 1e-12:
                continue
            assert pcs[winner] / best <= report.value + 1e-6


def test_assignment_audit_single_agent_matching():
    fd = facility_distances(("A",), [[0.0]])
    profile = PreferenceProfile(1, ((0,),))
    problem = build_preset("matching_min_cost", 1, fd.facilities)
    report = audit_additive_assignment((0,), profile, fd, problem)
    assert report.value == 1.0


def test_assignment_audit_two_agent_example_is_three():
    fd = facility_distances(("F1", "F2"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (0, 1)))
    problem = build_preset("matching_min_cost", 2, fd.facilities)
    for x in ((0, 1), (1, 0)):
        report = audit_additive_assignment(x, profile, fd, problem)
        assert report.value == pytest.approx(3.0, abs=1e-7)
        assert check_consistency(profile, report.witness, tol=1e-7)
        assert report.witness_ratio == pytest.approx(3.0, abs=1e-6)


def test_assignment_audit_with_opening_costs():
    fd = facility_distances(("X", "Y"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (1, 0)))
    problem = build_preset("facility_location", 2, fd.facilities,
                           {"opening_costs": [1.0, 1.0]})
    report = audit_additive_assignment((0, 1), profile, fd, problem)
    assert math.isfinite(report.value)
    assert report.value >= 1.0
    samples = [sample_consistent_metric(profile, fd, seed=s) for s in range(8)]
    from ordmech import total_cost, iter_valid_assignments
    for metric in samples:
        mine = total_cost((0, 1), metric.distances, problem.cost_spec)
        best = min(total_cost(x, metric.distances, problem.cost_spec)
                   for x in iter_valid_assignments(2, problem.constraints))
        assert mine / best <= report.value + 1e-6


def test_assignment_audit_rejects_max_cost():
    fd = facility_distances(("X", "Y"), [[0.0, 2.0], [2.0, 0.0]])
    profile = PreferenceProfile(2, ((0, 1), (1, 0)))
    problem = build_preset("matching_egalitarian", 2, fd.facilities)
    from ordmech import SolverError
    with pytest.raises(SolverError):
        audit_additive_assignment((0, 1), profile, fd, problem)
