"""Coincidental-correctness screening via k-means over slice vectors.

Passing tests that land in a cluster containing at least one failing test
are flagged as likely coincidentally correct. Downstream they are dropped
both from likelihood refinement and from the spectrum matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Clustering:
    k: int
    assignment: dict[str, int]  # test id -> cluster index
    centers: np.ndarray  # (k, dim)
    within_ss: float


@dataclass(frozen=True)
class CcReport:
    likely_cc: frozenset[str]
    clean_passing: frozenset[str]


def choose_k(suite_size: int, p: float = 0.02) -> int:
    if suite_size < 1:
        raise ValueError("suite_size must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0,1)")
    k = max(1, int(suite_size * p + 0.5))
    return min(k, suite_size)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=float)
    first = rng.integers(n)
    centers[0] = points[first]
    dist2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = dist2.sum()
        if total <= 0.0:
            # all remaining mass at existing centers: any point will do
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=dist2 / total)
        centers[i] = points[idx]
        dist2 = np.minimum(dist2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def kmeans(
    vectors: list[tuple[float, ...]] | np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    test_ids: list[str] | None = None,
) -> Clustering:
    """Lloyd's method with k-means++ seeding, deterministic under `seed`.

    An empty cluster is reseeded with the point farthest from its assigned
    center (the worst-represented point).
    """
    points = np.asarray(vectors, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("need a non-empty 2-d array of vectors")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} vectors")
    if test_ids is None:
        test_ids = [str(i) for i in range(n)]
    if len(test_ids) != n:
        raise ValueError("test_ids length mismatch")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, k, rng)

    prev_ss = np.inf
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(n), labels]
        for c in range(k):
            if not np.any(labels == c):
                worst = int(np.argmax(own))
                labels[worst] = c
                own[worst] = 0.0
        new_centers = np.empty_like(centers)
        for c in range(k):
            new_centers[c] = points[labels == c].mean(axis=0)
        ss = 0.0
        for c in range(k):
            ss += float(np.sum((points[labels == c] - new_centers[c]) ** 2))
        # Lloyd: assignment and update steps each only lower the objective
        assert ss <= prev_ss + 1e-9, "within_ss increased"
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
        prev_ss = ss

    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    within_ss = float(d2[np.arange(n), labels].sum())
    assignment = {tid: int(lab) for tid, lab in zip(test_ids, labels)}
    return Clustering(k=k, assignment=assignment, centers=centers, within_ss=within_ss)


def identify_cc(clustering: Clustering, outcomes: dict[str, str]) -> CcReport:
    """Flag passing tests sharing a cluster with any failing test."""
    failing_clusters = {
        clustering.assignment[tid]
        for tid, outcome in outcomes.items()
        if outcome == "fail"
    }
    likely: set[str] = set()
    clean: set[str] = set()
    for tid, outcome in outcomes.items():
        if outcome != "pass":
            continue
        if clustering.assignment[tid] in failing_clusters:
            likely.add(tid)
        else:
            clean.add(tid)
    return CcReport(likely_cc=frozenset(likely), clean_passing=frozenset(clean))


def export_cc_report(report: CcReport) -> str:
    """One flagged test id per line."""
    return "\n".join(sorted(report.likely_cc)) + ("\n" if report.likely_cc else "")
