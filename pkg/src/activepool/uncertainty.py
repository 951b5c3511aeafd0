"""Informativeness: confusion between the top two classes, weighted by
how close a candidate sits to the trained machine's support vectors.

A candidate whose top-two class probabilities nearly tie has a small
best-versus-second-best difference; a candidate whose probability row
sits near a support vector's row is close to the decision region that
shaped the current classifier. The combined weight is the product of
the two factors, and the query objective steers toward candidates with
small combined weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class UncertaintyVector:
    values: np.ndarray  # (u,) nonnegative combined weights
    closest_sv: np.ndarray  # (u,) row index into the SV probability matrix


def bvsb(p: np.ndarray) -> float:
    """Difference between the largest and second-largest entries of `p`.

    1 means the classifier is certain, 0 means the top two classes tie.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise UsageError("need a probability vector with at least 2 classes")
    # descending by value with ascending-index tie-breaks: stable sort on -p
    order = np.argsort(-p, kind="stable")
    return float(p[order[0]] - p[order[1]])


def position_measure(
    p_i: np.ndarray, sv_probs: np.ndarray, negated_exponent: bool = False
) -> tuple[float, int]:
    """Distance factor to the closest support vector in probability space.

    Returns (min over rows of exp(||p_i - row||^2), argmin row index);
    ties pick the lowest index. The exponent is positive by default, so
    the value is >= 1 and equals 1 exactly when `p_i` coincides with a
    support-vector row. `negated_exponent=True` evaluates exp(-||.||^2)
    instead (values in (0, 1]); the closest row is the same either way.
    """
    p_i = np.asarray(p_i, dtype=np.float64)
    sv_probs = np.atleast_2d(np.asarray(sv_probs, dtype=np.float64))
    if sv_probs.shape[0] == 0:
        raise UsageError("support-vector set is empty")
    if sv_probs.shape[1] != p_i.size:
        raise UsageError("probability rows have mismatched widths")
    diffs = sv_probs - p_i[None, :]
    sq = np.sum(diffs * diffs, axis=1)
    index = int(np.argmin(sq))  # lowest index on ties
    sign = -1.0 if negated_exponent else 1.0
    return math.exp(sign * float(sq[index])), index


def combined_uncertainty(
    candidate_probs: np.ndarray,
    sv_probs: np.ndarray,
    negated_exponent: bool = False,
) -> UncertaintyVector:
    """Per-candidate product of the top-two confusion and SV-distance factors."""
    candidate_probs = np.atleast_2d(np.asarray(candidate_probs, dtype=np.float64))
    u = candidate_probs.shape[0]
    values = np.empty(u)
    closest = np.empty(u, dtype=np.int64)
    for i in range(u):
        factor, index = position_measure(
            candidate_probs[i], sv_probs, negated_exponent=negated_exponent
        )
        values[i] = bvsb(candidate_probs[i]) * factor
        closest[i] = index
    return UncertaintyVector(values=values, closest_sv=closest)
