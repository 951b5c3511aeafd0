"""Multiclass RBF-kernel SVM with calibrated probability outputs.

Re-implements the classic toolbox behavior this package depends on:
one-vs-one soft-margin machines solved by two-variable SMO with
maximal-violating-pair working-set selection, per-machine sigmoid
calibration fit by Newton's method on the training decision values,
and pairwise coupling of the sigmoid outputs into a per-sample
posterior vector.

Calibration is fit on training decision values directly, without an
internal cross-validation: the labeled pools this package trains on
start at one sample per class, far too small for folds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, NumericError, UsageError

_SMO_TOL = 1e-3
_SMO_TAU = 1e-12
_SIGMOID_MAX_ITER = 200
_SIGMOID_EPS = 1e-10
_SIGMOID_MIN_STEP = 1e-10
_SIGMOID_RIDGE = 1e-12
_COUPLING_MAX_SWEEPS = 200
_COUPLING_TOL = 1e-10
_PAIRWISE_CLIP = 1e-7


@dataclass(frozen=True)
class KernelParams:
    """RBF classifier parameters; kernel_gamma=None means 1 / n_features."""

    c_reg: float = 100.0
    kernel_gamma: float | None = None

    def resolve_gamma(self, n_features: int) -> float:
        gamma = 1.0 / n_features if self.kernel_gamma is None else self.kernel_gamma
        if gamma <= 0 or self.c_reg <= 0:
            raise UsageError("kernel gamma and regularization must be strictly positive")
        return gamma


@dataclass(frozen=True)
class BinaryMachine:
    """One one-vs-one machine: class_pos is the +1 side, class_neg the -1 side."""

    class_pos: int
    class_neg: int
    support_indices: np.ndarray  # positions into the training feature matrix
    coefficients: np.ndarray  # y_t * alpha_t for each support vector
    bias: float
    platt_a: float
    platt_b: float


@dataclass(frozen=True)
class TrainedModel:
    classes: np.ndarray
    machines: tuple[BinaryMachine, ...]
    sv_indices: np.ndarray  # union of support positions across machines, ascending
    train_features: np.ndarray
    gamma: float
    c_reg: float

    @property
    def n_features(self) -> int:
        return self.train_features.shape[1]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2) for all row pairs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _smo_solve(
    kernel: np.ndarray, y: np.ndarray, c_reg: float
) -> tuple[np.ndarray, float]:
    """Solve min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.

    Returns (alpha, rho); the decision function is
    f(x) = sum_t alpha_t y_t K(x_t, x) - rho.
    """
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    # safety valve only: first-order pair selection needs up to ~150n
    # iterations on hard high-penalty problems, so a tight cap would
    # return points that violate the advertised KKT tolerance
    max_iter = max(100 * n, 10_000)
    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < c_reg)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c_reg)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        up_vals = np.where(up, yg, -np.inf)
        low_vals = np.where(low, yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        if up_vals[i] - low_vals[j] < _SMO_TOL:
            break
        old_i, old_j = alpha[i], alpha[j]
        quad = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if quad <= 0:
            quad = _SMO_TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c_reg:
                    alpha[i] = c_reg
                    alpha[j] = c_reg - diff
            else:
                if alpha[j] > c_reg:
                    alpha[j] = c_reg
                    alpha[i] = c_reg + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c_reg:
                if alpha[i] > c_reg:
                    alpha[i] = c_reg
                    alpha[j] = total - c_reg
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c_reg:
                if alpha[j] > c_reg:
                    alpha[j] = c_reg
                    alpha[i] = total - c_reg
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        if d_i == 0.0 and d_j == 0.0:
            break
        q_col_i = y * y[i] * kernel[:, i]
        q_col_j = y * y[j] * kernel[:, j]
        grad += q_col_i * d_i + q_col_j * d_j
    # bias from the KKT conditions: average y*grad over free vectors,
    # midpoint of the feasible interval when none are free
    yg = y * grad
    free = (alpha > 0) & (alpha < c_reg)
    if free.any():
        rho = float(yg[free].mean())
    else:
        upper = (alpha >= c_reg)
        lower = (alpha <= 0)
        ub = np.inf
        lb = -np.inf
        sel_ub = (upper & (y < 0)) | (lower & (y > 0))
        sel_lb = (upper & (y > 0)) | (lower & (y < 0))
        if sel_ub.any():
            ub = float(yg[sel_ub].min())
        if sel_lb.any():
            lb = float(yg[sel_lb].max())
        rho = (ub + lb) / 2.0
    return alpha, rho


def smo_dual_objective(kernel: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """1/2 a'Qa - e'a for a candidate dual point (used by diagnostics and tests)."""
    q = (y[:, None] * y[None, :]) * kernel
    return float(0.5 * alpha @ q @ alpha - alpha.sum())


def fit_sigmoid(decision_values: np.ndarray, positive: np.ndarray) -> tuple[float, float]:
    """Fit P(y=+1|f) = 1/(1+exp(A f + B)) by Newton's method with backtracking.

    Targets are regularized: (n_pos + 1)/(n_pos + 2) for positives and
    1/(n_neg + 2) for negatives, which keeps the fit finite even when the
    decision values separate the classes perfectly.
    """
    f = np.asarray(decision_values, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    prior1 = float(positive.sum())
    prior0 = float(f.size - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(positive, hi, lo)

    def objective(a: float, b: float) -> float:
        fapb = f * a + b
        pos = fapb >= 0
        val = np.where(
            pos,
            t * fapb + np.log1p(np.exp(-np.where(pos, fapb, 0.0))),
            (t - 1.0) * fapb + np.log1p(np.exp(np.where(pos, 0.0, fapb))),
        )
        return float(val.sum())

    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    fval = objective(a, b)
    for _ in range(_SIGMOID_MAX_ITER):
        fapb = f * a + b
        pos = fapb >= 0
        exp_neg = np.exp(-np.abs(fapb))
        p = np.where(pos, exp_neg / (1.0 + exp_neg), 1.0 / (1.0 + exp_neg))
        q = 1.0 - p
        d1 = t - p
        d2 = p * q
        g1 = float((f * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < _SIGMOID_EPS and abs(g2) < _SIGMOID_EPS:
            break
        h11 = float((f * f * d2).sum()) + _SIGMOID_RIDGE
        h22 = float(d2.sum()) + _SIGMOID_RIDGE
        h21 = float((f * d2).sum())
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= _SIGMOID_MIN_STEP:
            new_a = a + step * da
            new_b = b + step * db
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            # no decrease possible at the smallest step: numerical optimum
            break
    if not (math.isfinite(a) and math.isfinite(b)):
        raise NumericError("sigmoid calibration diverged")
    return a, b


def sigmoid_predict(decision_value: np.ndarray | float, a: float, b: float):
    """Numerically stable evaluation of 1/(1+exp(A f + B))."""
    fapb = np.asarray(decision_value, dtype=np.float64) * a + b
    pos = fapb >= 0
    exp_neg = np.exp(-np.abs(fapb))
    return np.where(pos, exp_neg / (1.0 + exp_neg), 1.0 / (1.0 + exp_neg))


def couple_pairwise(pairwise: np.ndarray) -> np.ndarray:
    """Combine pairwise class probabilities into one posterior vector.

    `pairwise[i, j]` is P(class i | class i or j). Gauss-Seidel sweeps on
    the quadratic reformulation run until the largest per-sweep change in
    any coordinate drops below 1e-10 (capped at 200 sweeps); the result is
    renormalized to sum exactly 1.
    """
    k = pairwise.shape[0]
    if k == 2:
        p = np.array([pairwise[0, 1], pairwise[1, 0]])
        return p / p.sum()
    q = np.empty((k, k))
    for t in range(k):
        q[t, t] = sum(pairwise[j, t] ** 2 for j in range(k) if j != t)
        for j in range(k):
            if j != t:
                q[t, j] = -pairwise[j, t] * pairwise[t, j]
    p = np.full(k, 1.0 / k)
    for _ in range(_COUPLING_MAX_SWEEPS):
        previous = p.copy()
        qp = q @ p
        pqp = float(p @ qp)
        for t in range(k):
            diff = (-qp[t] + pqp) / q[t, t]
            p[t] += diff
            pqp = (pqp + diff * (diff * q[t, t] + 2.0 * qp[t])) / (1.0 + diff) ** 2
            qp = (qp + diff * q[:, t]) / (1.0 + diff)
            p = p / (1.0 + diff)
        if float(np.max(np.abs(p - previous))) < _COUPLING_TOL:
            break
    return p / p.sum()


def train(
    features: np.ndarray, labels: np.ndarray, params: KernelParams | None = None
) -> TrainedModel:
    """Train one-vs-one machines with sigmoid calibration on the labeled pool."""
    params = params or KernelParams()
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.size:
        raise UsageError("features must be 2-d and aligned with labels")
    if not np.isfinite(features).all():
        raise DataFormatError("non-finite feature values")
    classes = np.unique(labels)
    if classes.size < 2:
        raise UsageError("training needs at least two classes in the labeled pool")
    gamma = params.resolve_gamma(features.shape[1])
    kernel = rbf_kernel(features, features, gamma)
    machines: list[BinaryMachine] = []
    sv_union: set[int] = set()
    for ai in range(classes.size):
        for bi in range(ai + 1, classes.size):
            pos_cls, neg_cls = int(classes[ai]), int(classes[bi])
            mask = (labels == pos_cls) | (labels == neg_cls)
            idx = np.flatnonzero(mask)
            y = np.where(labels[idx] == pos_cls, 1.0, -1.0)
            sub_kernel = kernel[np.ix_(idx, idx)]
            alpha, rho = _smo_solve(sub_kernel, y, params.c_reg)
            decision = (alpha * y) @ sub_kernel - rho
            platt_a, platt_b = fit_sigmoid(decision, y > 0)
            support = alpha > 0
            support_idx = idx[support]
            sv_union.update(int(s) for s in support_idx)
            machines.append(
                BinaryMachine(
                    class_pos=pos_cls,
                    class_neg=neg_cls,
                    support_indices=support_idx,
                    coefficients=alpha[support] * y[support],
                    bias=-rho,
                    platt_a=platt_a,
                    platt_b=platt_b,
                )
            )
    sv_indices = np.array(sorted(sv_union), dtype=np.int64)
    if sv_indices.size == 0:
        raise NumericError("training produced no support vectors")
    return TrainedModel(
        classes=classes.astype(np.int64),
        machines=tuple(machines),
        sv_indices=sv_indices,
        train_features=features,
        gamma=gamma,
        c_reg=params.c_reg,
    )


def _machine_decisions(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Decision values f(x) = sum coef_t K(x_t, x) + bias, one column per machine."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise UsageError(
            f"expected {model.n_features} features, got {features.shape[1] if features.ndim == 2 else 'non-matrix input'}"
        )
    kernel = rbf_kernel(features, model.train_features, model.gamma)
    out = np.empty((features.shape[0], len(model.machines)))
    for m, machine in enumerate(model.machines):
        out[:, m] = kernel[:, machine.support_indices] @ machine.coefficients + machine.bias
    return out


def predict_proba(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Posterior class probabilities, one row per sample over model.classes."""
    decisions = _machine_decisions(model, features)
    k = model.classes.size
    class_pos = {int(c): i for i, c in enumerate(model.classes)}
    n = decisions.shape[0]
    out = np.empty((n, k))
    pairwise = np.full((k, k), 0.5)
    for s in range(n):
        for m, machine in enumerate(model.machines):
            r = float(sigmoid_predict(decisions[s, m], machine.platt_a, machine.platt_b))
            r = min(max(r, _PAIRWISE_CLIP), 1.0 - _PAIRWISE_CLIP)
            i = class_pos[machine.class_pos]
            j = class_pos[machine.class_neg]
            pairwise[i, j] = r
            pairwise[j, i] = 1.0 - r
        out[s] = couple_pairwise(pairwise)
    return out


def predict(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Predicted class ids: argmax of the coupled posteriors (ties -> lowest)."""
    probs = predict_proba(model, features)
    return model.classes[np.argmax(probs, axis=1)]


def decision_margin(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Per-sample distance proxy: min over machines of |decision value|."""
    return np.min(np.abs(_machine_decisions(model, features)), axis=1)


def support_vector_probs(model: TrainedModel, probs_labeled: np.ndarray) -> np.ndarray:
    """Rows of the labeled-pool probability matrix at the support vectors."""
    probs_labeled = np.asarray(probs_labeled, dtype=np.float64)
    if probs_labeled.shape[0] < model.train_features.shape[0]:
        raise UsageError("probability matrix does not cover every labeled sample")
    if model.sv_indices.size == 0:
        raise NumericError("model has no support vectors")
    return probs_labeled[model.sv_indices]
