"""Logistic regression (iteratively reweighted least squares) and a bagged
random forest of Gini-split decision trees, plus the importance scores the
wrapper selectors consume.

Both fitters are deterministic: the logistic fit has no randomness and the
forest derives one generator stream per tree from (seed, tree index), so
results are independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateOutcome, DimensionMismatch

#: Coefficients hitting this magnitude during IRLS indicate separation; they
#: are frozen at the cap and the model is marked non-converged.
COEF_CAP = 30.0

_RIDGE = 1e-8
_PROB_EPS = 1e-15


@dataclass(frozen=True)
class LogisticModel:
    metric_names: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    log_likelihood: float
    converged: bool
    iterations_used: int
    ll_trace: tuple[float, ...]  # accepted log-likelihood sequence


@dataclass(frozen=True)
class ImportanceScores:
    scores: dict[str, float]


class _TreeNode:
    """Axis-aligned binary split; feature == -1 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "vote", "decrease")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.vote = False
        self.decrease = 0.0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[_TreeNode, ...]
    ntree: int
    mtry: int
    seed: int
    metric_names: tuple[str, ...]


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_likelihood(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = design @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(
    d: Dataset, subset, max_iter: int = 25, tol: float = 1e-8
) -> LogisticModel:
    """Binomial maximum likelihood by IRLS with an intercept.

    The accepted log-likelihood sequence is non-decreasing (step halving on
    any decrease). Near-singular weighted designs get a small ridge term.
    Separation is handled by freezing runaway coefficients at +/-COEF_CAP
    and reporting converged=False, which keeps the log-likelihood finite
    for AIC-based search. An empty subset fits the intercept alone.
    """
    y = d.outcome.astype(np.float64)
    if not d.has_both_classes():
        raise DegenerateOutcome("logistic fit needs both outcome classes")
    subset = tuple(subset)
    x = d.columns(subset) if subset else np.empty((d.n_modules, 0))
    design = np.column_stack([np.ones(d.n_modules), x])
    k = design.shape[1]

    beta = np.zeros(k)
    ll = _log_likelihood(design, y, beta)
    trace = [ll]
    converged = False
    capped = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        mu = _sigmoid(design @ beta)
        w = np.clip(mu * (1.0 - mu), 1e-10, None)
        grad = design.T @ (y - mu)
        hess = design.T @ (design * w[:, None])
        try:
            delta = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            delta = np.linalg.solve(hess + _RIDGE * np.eye(k), grad)
        if not np.all(np.isfinite(delta)):
            delta = np.linalg.solve(hess + _RIDGE * np.eye(k), grad)

        step = 1.0
        accepted = None
        while step >= 2.0**-30:
            cand = np.clip(beta + step * delta, -COEF_CAP, COEF_CAP)
            cand_ll = _log_likelihood(design, y, cand)
            if cand_ll >= ll:
                accepted = (cand, cand_ll)
                break
            step /= 2.0
        if accepted is None:
            break
        cand, cand_ll = accepted
        if np.any(np.abs(cand) >= COEF_CAP):
            capped = True
        change = float(np.max(np.abs(cand - beta)))
        beta, ll = cand, cand_ll
        trace.append(ll)
        if change < tol:
            converged = True
            break

    coef = beta[1:].copy()
    coef.flags.writeable = False
    return LogisticModel(
        metric_names=subset,
        intercept=float(beta[0]),
        coefficients=coef,
        log_likelihood=ll,
        converged=converged and not capped,
        iterations_used=iterations,
        ll_trace=tuple(trace),
    )


def predict_logistic(m: LogisticModel, row) -> float:
    """Defect probability for one module, clamped inside (0, 1)."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (len(m.metric_names),):
        raise DimensionMismatch(
            f"row of length {row.size}, model has {len(m.metric_names)} metrics"
        )
    eta = m.intercept + float(m.coefficients @ row)
    p = 1.0 / (1.0 + math.exp(-eta)) if eta >= 0 else math.exp(eta) / (1.0 + math.exp(eta))
    return min(1.0 - _PROB_EPS, max(_PROB_EPS, p))


def _gini_counts(pos: float, total: float) -> float:
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _best_split(x: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Lowest weighted-Gini (feature, threshold, decrease) or None."""
    n = y.size
    total_pos = int(y.sum())
    parent = n * _gini_counts(total_pos, n)
    best = None  # (weighted_child_gini, feature, threshold, decrease)
    for f in features:
        v = x[:, int(f)]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[order]
        cut = np.flatnonzero(sv[:-1] != sv[1:])  # split after position i
        if cut.size == 0:
            continue
        left_n = cut + 1
        left_pos = np.cumsum(sy)[cut]
        right_n = n - left_n
        right_pos = total_pos - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        child = left_n * 2.0 * pl * (1.0 - pl) + right_n * 2.0 * pr * (1.0 - pr)
        i = int(np.argmin(child))
        score = float(child[i])
        if best is None or score < best[0]:
            thr = (sv[cut[i]] + sv[cut[i] + 1]) / 2.0
            best = (score, int(f), float(thr), parent - score)
    return None if best is None else best[1:]


def _grow_tree(x: np.ndarray, y: np.ndarray, mtry: int, rng) -> _TreeNode:
    p = x.shape[1]
    root = _TreeNode()
    stack = [(root, x, y)]
    while stack:
        node, nx, ny = stack.pop()
        n = ny.size
        pos = int(ny.sum())
        node.vote = pos * 2 > n
        if pos == 0 or pos == n or n == 1:
            continue
        features = rng.choice(p, size=mtry, replace=False)
        split = _best_split(nx, ny, features)
        if split is None and mtry < p:
            split = _best_split(nx, ny, np.setdiff1d(np.arange(p), features))
        if split is None:
            continue
        node.feature, node.threshold, node.decrease = split
        left_mask = nx[:, node.feature] < node.threshold
        node.left = _TreeNode()
        node.right = _TreeNode()
        stack.append((node.right, nx[~left_mask], ny[~left_mask]))
        stack.append((node.left, nx[left_mask], ny[left_mask]))
    return root


def fit_random_forest(
    d: Dataset, subset, ntree: int = 100, seed: int = 0
) -> ForestModel:
    """Bagged Gini trees grown to purity; mtry = floor(sqrt(p))."""
    subset = tuple(subset)
    if not subset:
        raise DegenerateOutcome("random forest needs at least one metric")
    if not d.has_both_classes():
        raise DegenerateOutcome("random forest needs both outcome classes")
    x = d.columns(subset)
    y = d.outcome.astype(np.int64)
    n, p = x.shape
    mtry = max(1, int(math.isqrt(p)))
    streams = np.random.SeedSequence(seed).spawn(ntree)
    trees = []
    for t in range(ntree):
        rng = np.random.default_rng(streams[t])
        bag = rng.integers(0, n, size=n)
        trees.append(_grow_tree(x[bag], y[bag], mtry, rng))
    return ForestModel(tuple(trees), ntree, mtry, seed, subset)


def _tree_vote(node: _TreeNode, row: np.ndarray) -> bool:
    while node.feature >= 0:
        node = node.left if row[node.feature] < node.threshold else node.right
    return node.vote


def predict_forest(m: ForestModel, row) -> float:
    """Fraction of trees voting defective; always a multiple of 1/ntree."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (len(m.metric_names),):
        raise DimensionMismatch(
            f"row of length {row.size}, model has {len(m.metric_names)} metrics"
        )
    votes = sum(1 for tree in m.trees if _tree_vote(tree, row))
    return votes / m.ntree


def score_rows(model, d: Dataset) -> np.ndarray:
    """Defect probabilities for every row of ``d`` under either model type."""
    x = d.columns(model.metric_names)
    if isinstance(model, LogisticModel):
        eta = model.intercept + x @ model.coefficients
        return np.clip(_sigmoid(eta), _PROB_EPS, 1.0 - _PROB_EPS)
    if isinstance(model, ForestModel):
        return np.array([predict_forest(model, row) for row in x])
    raise DimensionMismatch(f"unsupported model type {type(model).__name__}")


def _accumulate_decrease(root: _TreeNode, acc: np.ndarray) -> None:
    stack = [root]
    while stack:
        node = stack.pop()
        if node.feature < 0:
            continue
        acc[node.feature] += node.decrease
        stack.append(node.left)
        stack.append(node.right)


def importance(model, d: Dataset) -> ImportanceScores:
    """Metric importance for either classifier.

    Logistic: |coefficient| times the sample standard deviation of the
    metric, i.e. the standardized coefficient magnitude. Forest: total
    Gini impurity decrease per metric over all trees, normalized to sum 1.
    """
    if isinstance(model, LogisticModel):
        scores = {}
        for name, coef in zip(model.metric_names, model.coefficients):
            col = d.column(name)
            sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
            scores[name] = abs(float(coef)) * sd
        return ImportanceScores(scores)
    if isinstance(model, ForestModel):
        acc = np.zeros(len(model.metric_names))
        for tree in model.trees:
            _accumulate_decrease(tree, acc)
        total = acc.sum()
        if total > 0:
            acc = acc / total
        return ImportanceScores(dict(zip(model.metric_names, acc.tolist())))
    raise DimensionMismatch(f"unsupported model type {type(model).__name__}")
