"""Soft-margin RBF SVM trained by sequential minimal optimization.

The optimizer is the classic two-at-a-time coordinate ascent on the
dual: repeatedly pick a KKT-violating multiplier, pair it with the
multiplier of largest error difference and solve the two-variable
subproblem in closed form.  Everything is deterministic.  Class
probabilities come from a Platt sigmoid fitted to held-out decision
values; model selection is a cross-validated grid search over (C,
gamma).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .errors import ClassifierDegenerateError

C_GRID = (0.1, 1.0, 10.0, 100.0)
GAMMA_GRID = (0.01, 0.1, 1.0, 10.0)


def rbf_kernel(X, Z, gamma: float) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    sq = (
        (X ** 2).sum(axis=1)[:, None]
        + (Z ** 2).sum(axis=1)[None, :]
        - 2.0 * X @ Z.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def platt_calibration(decisions, labels01, max_iter: int = 100) -> tuple[float, float]:
    """Fit the sigmoid ``p = 1 / (1 + exp(A*f + B))`` to decision values.

    Newton iteration with backtracking on the regularized maximum
    likelihood target (the standard robust formulation).
    """
    F = np.asarray(decisions, dtype=np.float64)
    y = np.asarray(labels01)
    prior1 = float((y == 1).sum())
    prior0 = float(len(y) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    T = np.where(y == 1, hi, lo)

    def objective(a, b):
        fApB = F * a + b
        pos = fApB >= 0
        val = np.empty_like(fApB)
        val[pos] = T[pos] * fApB[pos] + np.log1p(np.exp(-fApB[pos]))
        val[~pos] = (T[~pos] - 1.0) * fApB[~pos] + np.log1p(np.exp(fApB[~pos]))
        return float(val.sum())

    sigma = 1e-12
    A, B = 0.0, float(np.log((prior0 + 1.0) / (prior1 + 1.0)))
    fval = objective(A, B)
    for _ in range(max_iter):
        fApB = F * A + B
        pos = fApB >= 0
        p = np.empty_like(fApB)
        q = np.empty_like(fApB)
        p[pos] = np.exp(-fApB[pos]) / (1.0 + np.exp(-fApB[pos]))
        q[pos] = 1.0 / (1.0 + np.exp(-fApB[pos]))
        p[~pos] = 1.0 / (1.0 + np.exp(fApB[~pos]))
        q[~pos] = np.exp(fApB[~pos]) / (1.0 + np.exp(fApB[~pos]))
        d1 = T - p
        d2 = p * q
        g1 = float((F * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        h11 = float((F * F * d2).sum()) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float((F * d2).sum())
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            new_f = objective(A + step * dA, B + step * dB)
            if new_f < fval + 1e-4 * step * gd:
                A, B = A + step * dA, B + step * dB
                fval = new_f
                break
            step /= 2.0
        else:
            break
    return A, B


class SmoSvc(BaseEstimator, ClassifierMixin):
    """Two-class C-SVM with RBF kernel, trained by SMO.

    Parameters
    ----------
    C : float
        Soft-margin penalty.
    gamma : float
        RBF kernel width.
    tol : float
        KKT violation tolerance used by the optimizer.
    max_passes : int
        Cap on full sweeps over the training set, so degenerate inputs
        (for example duplicated points with opposite labels) still
        terminate.
    """

    def __init__(self, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3,
                 max_passes: int = 200):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, X, y, calibrate: bool = True):
        X, y = check_X_y(X, y)
        classes = np.unique(y)
        if classes.size != 2:
            raise ClassifierDegenerateError(
                f"need exactly two classes, got {classes.tolist()}"
            )
        self.classes_ = np.array([0, 1])
        y_signed = np.where(np.asarray(y) == 1, 1.0, -1.0)
        alphas, b = self._smo(X, y_signed)
        support = alphas > 1e-12
        if not support.any():
            # All multipliers at zero: keep one vector so decision_function
            # degenerates to the bias.
            support[0] = True
        self.support_vectors_ = X[support].astype(np.float64)
        self.dual_coef_ = (alphas * y_signed)[support]
        self.intercept_ = float(b)
        if calibrate:
            decisions = self.decision_function(X)
            self.platt_a_, self.platt_b_ = platt_calibration(decisions, y)
        return self

    def _smo(self, X, y_signed):
        n = X.shape[0]
        K = rbf_kernel(X, X, self.gamma)
        alphas = np.zeros(n)
        b = 0.0
        C, tol = float(self.C), float(self.tol)

        def error(i):
            return float((alphas * y_signed) @ K[:, i] + b - y_signed[i])

        def take_step(i1, i2, e2):
            nonlocal b
            if i1 == i2:
                return False
            a1, a2 = alphas[i1], alphas[i2]
            y1, y2 = y_signed[i1], y_signed[i2]
            e1 = error(i1)
            s = y1 * y2
            if s > 0:
                L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
            else:
                L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
            if H - L < 1e-12:
                return False
            eta = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
            if eta <= 0:
                return False
            a2_new = np.clip(a2 + y2 * (e1 - e2) / eta, L, H)
            if abs(a2_new - a2) < 1e-8 * (a2_new + a2 + 1e-8):
                return False
            a1_new = a1 + s * (a2 - a2_new)
            b1 = b - e1 - y1 * (a1_new - a1) * K[i1, i1] - y2 * (a2_new - a2) * K[i1, i2]
            b2 = b - e2 - y1 * (a1_new - a1) * K[i1, i2] - y2 * (a2_new - a2) * K[i2, i2]
            if 0.0 < a1_new < C:
                b = b1
            elif 0.0 < a2_new < C:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            alphas[i1], alphas[i2] = a1_new, a2_new
            return True

        def examine(i2):
            y2, a2 = y_signed[i2], alphas[i2]
            e2 = error(i2)
            r2 = e2 * y2
            if (r2 < -tol and a2 < C) or (r2 > tol and a2 > 0):
                non_bound = np.flatnonzero((alphas > 0) & (alphas < C))
                if non_bound.size > 1:
                    errs = np.array([abs(error(i) - e2) for i in non_bound])
                    i1 = int(non_bound[int(np.argmax(errs))])
                    if take_step(i1, i2, e2):
                        return 1
                for i1 in non_bound:
                    if take_step(int(i1), i2, e2):
                        return 1
                for i1 in range(n):
                    if take_step(i1, i2, e2):
                        return 1
            return 0

        examine_all = True
        passes = 0
        num_changed = 1
        while (num_changed > 0 or examine_all) and passes < self.max_passes:
            passes += 1
            num_changed = 0
            targets = (
                range(n) if examine_all
                else np.flatnonzero((alphas > 0) & (alphas < C))
            )
            for i in targets:
                num_changed += examine(int(i))
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True
        return alphas, b

    def _check_fitted(self):
        if not hasattr(self, "support_vectors_"):
            raise NotFittedError("fit must be called first")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_array(X)
        if X.shape[1] != self.support_vectors_.shape[1]:
            raise ValueError("query dimension differs from training dimension")
        K = rbf_kernel(X, self.support_vectors_, self.gamma)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(int)

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        if not hasattr(self, "platt_a_"):
            raise NotFittedError("model has no Platt calibration")
        fApB = self.decision_function(X) * self.platt_a_ + self.platt_b_
        pos = np.where(
            fApB >= 0,
            np.exp(-np.maximum(fApB, 0.0)) / (1.0 + np.exp(-np.maximum(fApB, 0.0))),
            1.0 / (1.0 + np.exp(np.minimum(fApB, 0.0))),
        )
        return np.column_stack([1.0 - pos, pos])


def _cv_folds(y, n_folds: int) -> list[np.ndarray]:
    """Deterministic stratified folds: round-robin within each class."""
    y = np.asarray(y)
    fold_of = np.zeros(len(y), dtype=int)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        fold_of[members] = np.arange(members.size) % n_folds
    return [np.flatnonzero(fold_of == f) for f in range(n_folds)]


def _fold_decisions(X, y, train_idx, test_idx, C, gamma) -> np.ndarray:
    """Decision values on a held-out fold; degenerate folds get a constant."""
    y_train = y[train_idx]
    if np.unique(y_train).size < 2:
        constant = 1.0 if y_train[0] == 1 else -1.0
        return np.full(len(test_idx), constant)
    model = SmoSvc(C=C, gamma=gamma).fit(X[train_idx], y_train, calibrate=False)
    return model.decision_function(X[test_idx])


def train_svm(X, y, c_grid=C_GRID, gamma_grid=GAMMA_GRID,
              n_folds: int = 5) -> SmoSvc:
    """Grid-searched, Platt-calibrated SVM.

    (C, gamma) is selected by cross-validated accuracy over the grid;
    5-fold when the training set has at least 10 samples, leave-one-out
    otherwise.  Ties go to the smaller C, then the smaller gamma.  The
    Platt sigmoid is fitted on the held-out decision values of the
    winning parameters before the final refit on all data.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if np.unique(y).size < 2:
        raise ClassifierDegenerateError("training set contains a single class")
    folds = _cv_folds(y, n_folds if len(y) >= 10 else len(y))
    fold_pairs = [
        (np.concatenate([f for j, f in enumerate(folds) if j != i]), folds[i])
        for i, fold in enumerate(folds) if folds[i].size
    ]

    best = None
    cv_results = []
    for C in c_grid:
        for gamma in gamma_grid:
            correct = 0
            total = 0
            for train_idx, test_idx in fold_pairs:
                decisions = _fold_decisions(X, y, train_idx, test_idx, C, gamma)
                predicted = (decisions >= 0.0).astype(int)
                correct += int((predicted == y[test_idx]).sum())
                total += len(test_idx)
            accuracy = correct / total
            cv_results.append({"C": C, "gamma": gamma, "accuracy": accuracy})
            if best is None or accuracy > best[0]:
                best = (accuracy, C, gamma)

    _, C, gamma = best
    held_out = np.empty(len(y))
    for train_idx, test_idx in fold_pairs:
        held_out[test_idx] = _fold_decisions(X, y, train_idx, test_idx, C, gamma)
    A, B = platt_calibration(held_out, y)
    model = SmoSvc(C=C, gamma=gamma).fit(X, y, calibrate=False)
    model.platt_a_, model.platt_b_ = A, B
    model.cv_results_ = cv_results
    model.cv_accuracy_ = best[0]
    return model
