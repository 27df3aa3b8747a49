"""Soft-margin RBF support vector machine trained by sequential minimal optimization.

The binary solver works on the dual

    maximise  W(a) = sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t.      0 <= a_i <= C,  sum_i a_i y_i = 0

choosing the maximal violating pair (second-order choice for the partner)
and stopping once the KKT gap falls below ``tol``. Multiclass problems are
one-vs-rest.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError
from .tree import N_CLASSES

_TAU = 1e-12
_SNAP = 1e-12
_FULL_KERNEL_LIMIT = 4000
_CACHE_BYTES = 200 * 2**20


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _KernelRows:
    """Kernel rows on demand: a full matrix for small problems, an LRU cache otherwise."""

    def __init__(self, X: np.ndarray, gamma: float):
        self.X = X
        self.gamma = gamma
        self.sq = np.sum(X * X, axis=1)
        n = X.shape[0]
        self.full = rbf_kernel(X, X, gamma) if n <= _FULL_KERNEL_LIMIT else None
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self.capacity = max(2, _CACHE_BYTES // (8 * max(n, 1)))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        hit = self.cache.get(i)
        if hit is not None:
            self.cache.move_to_end(i)
            return hit
        sq = self.sq[i] + self.sq - 2.0 * (self.X @ self.X[i])
        r = np.exp(-self.gamma * np.maximum(sq, 0.0))
        self.cache[i] = r
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return r


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int
    kkt_gap: float
    objective: list[float] = field(default_factory=list)


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    """W(a) evaluated directly from the kernel matrix."""
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def smo_binary(
    X: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    record_objective: bool = False,
    name: str = "binary problem",
) -> SmoResult:
    """Solve one binary dual; ``y`` must be +1/-1.

    ``G`` holds the gradient of the minimisation form, ``Q a - 1``, so the
    violation of sample ``t`` is read from ``-y_t G_t``.
    """
    n = y.size
    y = y.astype(float)
    kern = _KernelRows(X, gamma)
    alpha = np.zeros(n)
    G = -np.ones(n)
    objective = [0.0] if record_objective else []
    pos = y > 0

    it = 0
    gap = np.inf
    while True:
        below_c = alpha < c
        above_0 = alpha > 0
        up = (pos & below_c) | (~pos & above_0)
        low = (pos & above_0) | (~pos & below_c)
        v = -y * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        m_up = v_up[i]
        m_low = np.min(np.where(low, v, np.inf))
        gap = m_up - m_low
        if gap <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO for {name} did not converge in {max_iter} iterations (KKT gap {gap:.3g} > tol {tol:g})"
            )

        Ki = kern.row(i)
        b = m_up - v
        cand = low & (b > 0)
        a = np.maximum(2.0 - 2.0 * Ki, _TAU)  # K_ii = K_tt = 1 for RBF
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        Kj = kern.row(j)

        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        eta = max(2.0 - 2.0 * Ki[j], _TAU)
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        # Platt's step with errors E_t = -v_t
        aj_new = aj + yj * (v[j] - v[i]) / eta
        aj_new = min(hi, max(lo, aj_new))
        ai_new = ai + yi * yj * (aj - aj_new)
        # snap round-off onto the box so bound variables leave the working set
        snap = _SNAP * c
        ai_new = 0.0 if ai_new < snap else (c if ai_new > c - snap else ai_new)
        aj_new = 0.0 if aj_new < snap else (c if aj_new > c - snap else aj_new)
        d_i, d_j = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        G += y * (yi * d_i * Ki + yj * d_j * Kj)
        it += 1
        if record_objective:
            objective.append(float(0.5 * np.dot(alpha, 1.0 - G)))

    yG = y * G
    at_upper = alpha >= c
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & ~pos) | (at_lower & pos)
        lb_mask = (at_upper & pos) | (at_lower & ~pos)
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub) and np.isfinite(lb) else float(ub if np.isfinite(ub) else lb)
    return SmoResult(alpha=alpha, rho=rho, iterations=it, kkt_gap=float(gap), objective=objective)


@dataclass(frozen=True, eq=False)
class BinarySvm:
    support: np.ndarray
    coef: np.ndarray  # alpha_i * y_i on the support vectors
    rho: float
    gamma: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        if self.support.shape[0] == 0:
            return np.full(X.shape[0], -self.rho)
        return rbf_kernel(X, self.support, self.gamma) @ self.coef - self.rho


@dataclass(frozen=True, eq=False)
class SvmModel:
    """One-vs-rest machines keyed by the positive class."""

    classes: tuple[int, ...]
    machines: tuple[BinarySvm, ...]

    def decision(self, X: np.ndarray) -> np.ndarray:
        scores = np.full((X.shape[0], N_CLASSES), -np.inf)
        for cls, machine in zip(self.classes, self.machines):
            scores[:, cls] = machine.decision(X)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if len(self.classes) == 1:
            return np.full(X.shape[0], self.classes[0], dtype=np.int64)
        # argmax keeps the lowest label on ties
        return np.argmax(self.decision(X), axis=1)


def fit_ovr(
    X: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    tol: float,
    max_iter: int,
    label_names: tuple[str, ...] = ("Nominal", "Increased", "High"),
) -> SvmModel:
    classes = tuple(int(v) for v in np.unique(y))
    if len(classes) == 1:
        return SvmModel(classes=classes, machines=())
    machines = []
    for cls in classes:
        yb = np.where(y == cls, 1.0, -1.0)
        res = smo_binary(X, yb, c, gamma, tol, max_iter, name=f"{label_names[cls]} vs rest")
        sv = res.alpha > 0
        machines.append(BinarySvm(support=X[sv], coef=(res.alpha * yb)[sv], rho=res.rho, gamma=gamma))
    return SvmModel(classes=classes, machines=tuple(machines))
