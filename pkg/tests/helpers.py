"""Shared seeded generators for random valid instances.

Facility metrics come either from planar points or from a repaired random
symmetric matrix; agent rows are convex mixtures of two facility rows
plus a nonnegative shift, which keeps every row inside the consistency
polytope, and the profile is read off the metric, so every generated
instance is consistent by construction.
"""

import numpy as np

from ordmech import (FacilityDistances, FullMetric, facility_distances,
                     preferences_from_metric)


def random_facility_distances(rng, m, allow_colocated=True) -> FacilityDistances:
    names = tuple(f"F{j + 1}" for j in range(m))
    if rng.random() < 0.5:
        pts = rng.uniform(0.0, 10.0, size=(m, 2))
        if allow_colocated and m >= 2 and rng.random() < 0.15:
            i, j = rng.choice(m, size=2, replace=False)
            pts[i] = pts[j]
        l = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    else:
        raw = rng.uniform(0.2, 5.0, size=(m, m))
        l = (raw + raw.T) / 2.0
        np.fill_diagonal(l, 0.0)
        for k in range(m):  # shortest-path repair enforces the triangle inequality
            l = np.minimum(l, l[:, k, None] + l[None, k, :])
    return facility_distances(names, l)


def random_consistent_metric(rng, fd: FacilityDistances, n) -> FullMetric:
    m = fd.m
    scale = max(float(fd.values.max()), 1.0)
    rows = []
    for _ in range(n):
        h1, h2 = rng.integers(0, m), rng.integers(0, m)
        w = rng.random()
        shift = rng.uniform(0.0, scale) if rng.random() < 0.7 else 0.0
        rows.append(w * fd.values[h1] + (1 - w) * fd.values[h2] + shift)
    return FullMetric(np.asarray(rows), fd)


def random_instance(rng, n_max=8, m_max=5, n_min=2, m_min=2):
    """(profile, fd, metric): a random geometry with a consistent profile
    read off a hidden true metric."""
    m = int(rng.integers(m_min, m_max + 1))
    n = int(rng.integers(n_min, n_max + 1))
    fd = random_facility_distances(rng, m)
    metric = random_consistent_metric(rng, fd, n)
    profile = preferences_from_metric(metric)
    return profile, fd, metric
