"""Probability-space similarity terms for the representativeness criterion.

Candidates live on the class-probability simplex; similarity between two
samples is an RBF kernel on their posterior vectors. Three ingredients
feed the query objective:

- mutual_similarity: pairwise half-similarities among the candidates,
  the quadratic term that discourages picking near-duplicates;
- labeled_redundancy: per-candidate similarity mass toward the already
  labeled pool (scaled), which penalizes redundant picks;
- pool_coverage: per-candidate similarity mass toward the whole
  unlabeled pool (scaled, self term included), which rewards picks that
  represent many remaining samples.

A closed-form two-sample discrepancy between Gaussian kernel density
estimates is included for validating that coverage-driven transfers
actually shrink the labeled/unlabeled distribution gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

_SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class SimilarityParams:
    """gamma: probability-kernel width (>= 0); sigma: KDE bandwidth (> 0 or None
    for the median heuristic at the point of use)."""

    gamma: float = 1.0
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise UsageError(f"probability-kernel gamma must be >= 0, got {self.gamma}")
        if self.sigma is not None and self.sigma <= 0:
            raise UsageError(f"bandwidth sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class ReprTerms:
    """The representativeness pieces of one iteration's query objective."""

    mutual: np.ndarray  # (u, u) half-similarities among candidates
    redundancy: np.ndarray  # (u,) scaled similarity toward the labeled pool
    coverage: np.ndarray  # (u,) scaled similarity toward the unlabeled pool


def _check_simplex(p: np.ndarray, name: str) -> None:
    if np.any(p < -_SIMPLEX_TOL) or abs(float(p.sum()) - 1.0) > _SIMPLEX_TOL:
        raise UsageError(f"{name} is not a probability vector")


def prob_similarity(
    p_i: np.ndarray, p_j: np.ndarray, gamma: float, check_simplex: bool = True
) -> float:
    """exp(-gamma * ||p_i - p_j||^2) between two class-probability rows.

    `check_simplex=False` lets tests feed arbitrary vectors.
    """
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    if p_i.shape != p_j.shape or p_i.ndim != 1:
        raise UsageError("probability vectors must be 1-d and the same length")
    if check_simplex:
        _check_simplex(p_i, "first argument")
        _check_simplex(p_j, "second argument")
    diff = p_i - p_j
    return math.exp(-gamma * float(diff @ diff))


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return sq


def mutual_similarity(candidate_probs: np.ndarray, gamma: float) -> np.ndarray:
    """Half the pairwise probability-kernel among candidates; diagonal 0.5.

    Twice the result is an RBF Gram matrix, hence positive semidefinite.
    """
    candidate_probs = np.atleast_2d(np.asarray(candidate_probs, dtype=np.float64))
    if candidate_probs.shape[0] == 0:
        raise UsageError("candidate set is empty")
    sim = np.exp(-gamma * _pairwise_sq_dists(candidate_probs, candidate_probs))
    out = 0.5 * sim
    # exact symmetry regardless of float noise in the cross terms
    return (out + out.T) / 2.0


def labeled_redundancy(
    candidate_probs: np.ndarray,
    labeled_probs: np.ndarray,
    n_labeled: int,
    n_total: int,
    gamma: float,
) -> np.ndarray:
    """Scaled similarity mass from each candidate toward the labeled pool.

    Row i gets ((n_labeled + 1) / n_total) * sum over labeled rows of the
    probability kernel.
    """
    candidate_probs = np.atleast_2d(np.asarray(candidate_probs, dtype=np.float64))
    labeled_probs = np.atleast_2d(np.asarray(labeled_probs, dtype=np.float64))
    if labeled_probs.shape[0] == 0:
        raise UsageError("labeled set is empty")
    if candidate_probs.shape[1] != labeled_probs.shape[1]:
        raise UsageError("probability rows have mismatched widths")
    sims = np.exp(-gamma * _pairwise_sq_dists(candidate_probs, labeled_probs))
    weight = (n_labeled + 1.0) / n_total
    return weight * sims.sum(axis=1)


def pool_coverage(candidate_probs: np.ndarray, n_total: int, gamma: float) -> np.ndarray:
    """Scaled similarity mass from each candidate toward the unlabeled pool.

    The sum runs over the whole candidate set including the self term,
    scaled by ((u - 1) / n_total) where u is the candidate count.
    """
    candidate_probs = np.atleast_2d(np.asarray(candidate_probs, dtype=np.float64))
    u = candidate_probs.shape[0]
    if u == 0:
        raise UsageError("candidate set is empty")
    sims = np.exp(-gamma * _pairwise_sq_dists(candidate_probs, candidate_probs))
    weight = (u - 1.0) / n_total
    return weight * sims.sum(axis=1)


def build_repr_terms(
    candidate_probs: np.ndarray,
    labeled_probs: np.ndarray,
    gamma: float,
) -> ReprTerms:
    """All three representativeness terms for one query iteration."""
    candidate_probs = np.atleast_2d(np.asarray(candidate_probs, dtype=np.float64))
    labeled_probs = np.atleast_2d(np.asarray(labeled_probs, dtype=np.float64))
    n_labeled = labeled_probs.shape[0]
    n_total = n_labeled + candidate_probs.shape[0]
    return ReprTerms(
        mutual=mutual_similarity(candidate_probs, gamma),
        redundancy=labeled_redundancy(
            candidate_probs, labeled_probs, n_labeled, n_total, gamma
        ),
        coverage=pool_coverage(candidate_probs, n_total, gamma),
    )


def median_bandwidth(points: np.ndarray) -> float:
    """Median pairwise Euclidean distance; falls back to 1.0 if degenerate."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if n < 2:
        return 1.0
    sq = _pairwise_sq_dists(points, points)
    upper = sq[np.triu_indices(n, k=1)]
    med = float(np.median(np.sqrt(upper)))
    return med if med > 0 else 1.0


def discrepancy_estimate(
    set_a: np.ndarray, set_b: np.ndarray, sigma: float
) -> float:
    """Integrated squared difference of two Gaussian KDEs with bandwidth sigma.

    For kernel density estimates f_a (m points) and f_b (n points) with a
    shared spherical Gaussian kernel, the integral of (f_a - f_b)^2 has the
    closed form (4*pi*sigma^2)^(-p/2) times

        (1/m^2) sum_ij e_aa - (2/(m n)) sum_ij e_ab + (1/n^2) sum_ij e_bb

    where each e term is exp(-||x - y||^2 / (4 sigma^2)). Symmetric in the
    two sets and zero when they are identical multisets.
    """
    set_a = np.atleast_2d(np.asarray(set_a, dtype=np.float64))
    set_b = np.atleast_2d(np.asarray(set_b, dtype=np.float64))
    if set_a.shape[0] == 0 or set_b.shape[0] == 0:
        raise UsageError("both sample sets must be nonempty")
    if set_a.shape[1] != set_b.shape[1]:
        raise UsageError("sample sets have mismatched dimensions")
    if sigma <= 0:
        raise UsageError(f"bandwidth sigma must be > 0, got {sigma}")
    p = set_a.shape[1]
    m, n = set_a.shape[0], set_b.shape[0]
    scale = 1.0 / (4.0 * sigma * sigma)
    aa = np.exp(-scale * _pairwise_sq_dists(set_a, set_a)).sum() / (m * m)
    bb = np.exp(-scale * _pairwise_sq_dists(set_b, set_b)).sum() / (n * n)
    ab = np.exp(-scale * _pairwise_sq_dists(set_a, set_b)).sum() / (m * n)
    front = (4.0 * math.pi * sigma * sigma) ** (-p / 2.0)
    return float(front * (aa + bb - 2.0 * ab))
