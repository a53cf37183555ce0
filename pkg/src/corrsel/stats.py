"""Numerical substrate: ranks, Spearman correlation, OLS/R2, VIF,
discretization, entropy, chi-squared, inconsistency rate, AIC.

Conventions that matter downstream:

* Ties receive average ranks and Spearman is the Pearson correlation of the
  rank vectors (the 6*sum(d^2) shortcut is wrong under ties).
* A constant column has no assertable monotone association, so its Spearman
  correlation with anything is defined as 0 rather than NaN.
* Columns with bitwise-identical (or exactly reversed) rank vectors
  correlate at exactly +/-1.0, so threshold comparisons at 1.0 behave.
* VIF under (numerically) perfect linear dependence is reported as
  ``math.inf``, which orders above every finite score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import LengthMismatch, TooFewValues

#: Auxiliary-regression R2 at or above this is treated as perfect dependence.
PERFECT_FIT_R2 = 1.0 - 1e-10

#: Distinguished VIF value for perfect linear dependence.
UNBOUNDED = math.inf


@dataclass(frozen=True)
class CorrelationMatrix:
    metric_names: tuple[str, ...]
    values: np.ndarray  # symmetric, unit diagonal, entries in [-1, 1]

    def get(self, a: str, b: str) -> float:
        i = self.metric_names.index(a)
        j = self.metric_names.index(b)
        return float(self.values[i, j])


@dataclass(frozen=True)
class VifReport:
    scores: dict[str, float]  # metric name -> VIF >= 1, math.inf if unbounded

    def is_unbounded(self, name: str) -> bool:
        return math.isinf(self.scores[name])


@dataclass(frozen=True)
class DiscreteColumn:
    labels: np.ndarray  # integers in [0, bins)
    bin_edges: np.ndarray  # sorted interior edges


def rank_with_ties(values) -> np.ndarray:
    """Ranks 1..n; tied values get the average of the ranks they span."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    order = np.argsort(v, kind="stable")
    sv = v[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = sv[1:] != sv[:-1]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    first = np.concatenate(([0], np.cumsum(counts)[:-1]))
    # 1-based positions first+1 .. first+count average to first + (count+1)/2
    avg = first + (counts + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = avg[group]
    return ranks


def _rank_correlation(rx: np.ndarray, ry: np.ndarray) -> float:
    n = rx.size
    if np.array_equal(rx, ry):
        return 1.0
    if np.array_equal(rx, (n + 1) - ry):
        return -1.0
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    sx = math.sqrt(float(cx @ cx))
    sy = math.sqrt(float(cy @ cy))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = float(cx @ cy) / (sx * sy)
    return max(-1.0, min(1.0, r))


def spearman(x, y) -> float:
    """Rank correlation in [-1, 1]; 0 when either input is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    return _rank_correlation(rank_with_ties(x), rank_with_ties(y))


def spearman_matrix(d: Dataset) -> CorrelationMatrix:
    """Pairwise Spearman over all metric columns; symmetric, unit diagonal."""
    p = d.n_metrics
    n = d.n_modules
    ranks = np.column_stack([rank_with_ties(d.rows[:, j]) for j in range(p)])
    centered = ranks - ranks.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    constant = norms == 0.0
    safe = np.where(constant, 1.0, norms)
    z = centered / safe
    c = z.T @ z
    # exact +/-1 for identical or reversed rank vectors, 0 for constants
    keys = [ranks[:, j].tobytes() for j in range(p)]
    anti = [((n + 1) - ranks[:, j]).tobytes() for j in range(p)]
    for i in range(p):
        for j in range(i + 1, p):
            if constant[i] or constant[j]:
                c[i, j] = 0.0
            elif keys[i] == keys[j]:
                c[i, j] = 1.0
            elif keys[i] == anti[j]:
                c[i, j] = -1.0
            else:
                c[i, j] = max(-1.0, min(1.0, c[i, j]))
            c[j, i] = c[i, j]
    np.fill_diagonal(c, 1.0)
    return CorrelationMatrix(d.metric_names, c)


def ols_r_squared(target, predictors) -> float:
    """R2 of a least-squares fit with intercept, clamped to [0, 1].

    Uses an SVD-based solve, so rank-deficient predictor blocks are fit in
    their identified column space. A constant target yields 0.
    """
    y = np.asarray(target, dtype=np.float64)
    x = np.asarray(predictors, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} predictor rows vs {y.shape[0]} targets")
    centered = y - y.mean()
    sst = float(centered @ centered)
    if sst == 0.0:
        return 0.0
    design = np.column_stack([np.ones(y.shape[0]), x])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    ssr = float(resid @ resid)
    return max(0.0, min(1.0, 1.0 - ssr / sst))


def vif_scores(d: Dataset, subset) -> VifReport:
    """Variance inflation factor 1/(1-R2) for each metric in ``subset``.

    R2 comes from regressing the metric on the other subset metrics;
    a single-metric subset scores exactly 1. Perfect dependence maps to
    ``UNBOUNDED`` (math.inf).
    """
    subset = list(subset)
    if not subset:
        raise TooFewValues("vif_scores needs a nonempty subset")
    cols = d.columns(subset)
    scores: dict[str, float] = {}
    for i, name in enumerate(subset):
        if len(subset) == 1:
            scores[name] = 1.0
            continue
        others = np.delete(cols, i, axis=1)
        r2 = ols_r_squared(cols[:, i], others)
        if r2 >= PERFECT_FIT_R2:
            scores[name] = UNBOUNDED
        else:
            scores[name] = max(1.0, 1.0 / (1.0 - r2))
    return VifReport(scores)


def discretize_equal_frequency(values, bins: int) -> DiscreteColumn:
    """Bin by empirical quantiles; duplicate edges merge (fewer effective bins).

    Intervals are half-open, closed on the left, with the last bin closed,
    so equal values always share a label.
    """
    v = np.asarray(values, dtype=np.float64)
    if bins < 2:
        raise TooFewValues("bins must be >= 2")
    if v.size < bins:
        raise TooFewValues(f"{v.size} values for {bins} bins")
    qs = np.quantile(v, np.arange(1, bins) / bins)
    edges = np.unique(qs)
    edges = edges[edges > v.min()]  # an edge at the minimum would leave bin 0 empty
    labels = np.searchsorted(edges, v, side="right")
    return DiscreteColumn(labels=labels.astype(np.int64), bin_edges=edges)


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain(metric_labels: DiscreteColumn, outcome) -> float:
    """H(outcome) minus outcome entropy conditional on the bin, in bits."""
    y = np.asarray(outcome, dtype=bool)
    labels = metric_labels.labels
    if labels.shape != y.shape:
        raise LengthMismatch(f"{labels.shape} vs {y.shape}")
    n = y.size
    h_outcome = _entropy(np.array([np.count_nonzero(y), n - np.count_nonzero(y)]))
    cond = 0.0
    for b in np.unique(labels):
        in_bin = labels == b
        nb = int(np.count_nonzero(in_bin))
        pos = int(np.count_nonzero(y[in_bin]))
        cond += (nb / n) * _entropy(np.array([pos, nb - pos]))
    return max(0.0, h_outcome - cond)


def chi_squared(metric_labels: DiscreteColumn, outcome) -> float:
    """Sum of (O-E)^2/E over the bins-by-2 contingency table; E=0 cells add 0."""
    y = np.asarray(outcome, dtype=bool)
    labels = metric_labels.labels
    if labels.shape != y.shape:
        raise LengthMismatch(f"{labels.shape} vs {y.shape}")
    n = y.size
    uniq = np.unique(labels)
    observed = np.zeros((uniq.size, 2))
    for i, b in enumerate(uniq):
        in_bin = labels == b
        observed[i, 0] = np.count_nonzero(y[in_bin])
        observed[i, 1] = np.count_nonzero(in_bin) - observed[i, 0]
    row_tot = observed.sum(axis=1, keepdims=True)
    col_tot = observed.sum(axis=0, keepdims=True)
    expected = row_tot * col_tot / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return float(terms.sum())


def inconsistency_rate(d: Dataset, subset, bins: int = 10) -> float:
    """Fraction of rows outside the majority outcome of their discretized pattern."""
    subset = list(subset)
    if not subset:
        raise TooFewValues("inconsistency_rate needs a nonempty subset")
    if d.n_modules < 2:
        return 0.0
    eff_bins = max(2, min(bins, d.n_modules))
    label_matrix = np.column_stack(
        [discretize_equal_frequency(d.column(name), eff_bins).labels for name in subset]
    )
    y = d.outcome
    n = d.n_modules
    _, inverse = np.unique(label_matrix, axis=0, return_inverse=True)
    mismatched = 0
    for g in range(inverse.max() + 1):
        in_group = inverse == g
        count = int(np.count_nonzero(in_group))
        pos = int(np.count_nonzero(y[in_group]))
        mismatched += count - max(pos, count - pos)
    return mismatched / n


def aic(log_likelihood: float, parameter_count: int) -> float:
    """Akaike information criterion, 2k - 2 logLik (lower is better)."""
    if parameter_count < 1:
        raise TooFewValues("parameter_count must be >= 1")
    return 2.0 * parameter_count - 2.0 * log_likelihood
