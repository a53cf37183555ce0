"""Two-phase automated elimination of correlated metrics.

Phase 1 repeatedly takes the strongest-correlated remaining metric pair
(|Spearman| at or above ``sp_t``) and removes the member that is on average
more correlated with the rest of the metrics, so the kept metric is the
better representative. Phase 2 then iteratively recomputes variance
inflation factors on the survivors and removes the single highest scorer
until every VIF is below ``vif_t``.

The procedure is unsupervised (the outcome column is never read) and fully
deterministic; every removal is recorded in an ordered trace.

Conventions pinned here:

* The correlation matrix is computed once up front; the phase-1 mean-|rho|
  criterion for a pair is taken against the full starting metric set minus
  that pair (set ``mean_against_remaining=True`` to use the shrinking
  survivor set instead).
* Both phase thresholds compare with ``>=``.
* Phase-1 pair order: descending |rho|, ties by smallest column-index pair.
  Phase-1 keep-tie: smaller original column index wins. Phase-2 max-VIF
  tie (including several unbounded scores): the largest original column
  index is removed.
* Constant columns are uninformative and break the VIF design matrix, so
  they are removed before phase 1 with a trace entry at statistic 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .stats import spearman_matrix, vif_scores

#: Selector outputs are plain ordered lists of metric names.
MetricSubset = list[str]


@dataclass(frozen=True)
class AutoSpearmanParams:
    sp_t: float = 0.7
    vif_t: float = 5.0

    def __post_init__(self):
        if not 0.0 < self.sp_t <= 1.0:
            raise ValueError("sp_t must be in (0, 1]")
        if not self.vif_t > 1.0:
            raise ValueError("vif_t must be > 1")


@dataclass(frozen=True)
class TraceStep:
    phase: str  # "spearman" | "vif"
    removed: str
    kept: str | None  # retained partner (spearman phase only)
    statistic: float  # |rho| of the pair, or the VIF score


@dataclass(frozen=True)
class EliminationTrace:
    steps: tuple[TraceStep, ...] = field(default_factory=tuple)

    def removed_metrics(self) -> list[str]:
        return [s.removed for s in self.steps]

    def to_json_obj(self) -> list[dict]:
        out = []
        for s in self.steps:
            stat = "inf" if math.isinf(s.statistic) else s.statistic
            out.append(
                {"phase": s.phase, "removed": s.removed, "kept": s.kept, "statistic": stat}
            )
        return out


def _drop_constant_columns(d: Dataset) -> tuple[Dataset, list[TraceStep]]:
    keep, steps = [], []
    for name in d.metric_names:
        col = d.column(name)
        if np.all(col == col[0]):
            steps.append(TraceStep("spearman", name, None, 0.0))
        else:
            keep.append(name)
    if len(keep) == d.n_metrics:
        return d, steps
    return d.project(keep), steps


def spearman_phase(d: Dataset, sp_t: float = 0.7, *, mean_against_remaining: bool = False):
    """Pairwise Spearman elimination; returns (kept subset, trace).

    Constant columns are removed first. The correlation matrix is computed
    once; while any pair of survivors has |rho| >= sp_t, the strongest pair
    is resolved by keeping the member whose mean |rho| against the other
    metrics (excluding the pair itself) is smaller.
    """
    filtered, steps = _drop_constant_columns(d)
    names = filtered.metric_names
    p = len(names)
    corr = np.abs(spearman_matrix(filtered).values)

    alive = list(range(p))
    pairs = [
        (i, j) for i in range(p) for j in range(i + 1, p) if corr[i, j] >= sp_t
    ]

    def mean_abs_corr(member: int, i: int, j: int) -> float:
        if mean_against_remaining:
            others = [k for k in alive if k not in (i, j)]
        else:
            others = [k for k in range(p) if k not in (i, j)]
        if not others:
            return 0.0
        return float(np.mean(corr[member, others]))

    while pairs:
        # strongest pair first; ties by smallest column-index pair
        i, j = max(pairs, key=lambda ij: (corr[ij[0], ij[1]], (-ij[0], -ij[1])))
        mi, mj = mean_abs_corr(i, i, j), mean_abs_corr(j, i, j)
        if mi < mj or (mi == mj and i < j):
            kept, removed = i, j
        else:
            kept, removed = j, i
        steps.append(
            TraceStep("spearman", names[removed], names[kept], float(corr[i, j]))
        )
        alive.remove(removed)
        pairs = [(a, b) for a, b in pairs if removed not in (a, b)]

    kept_set = {names[k] for k in alive}
    kept_names = [n for n in d.metric_names if n in kept_set]
    return kept_names, EliminationTrace(tuple(steps))


def vif_phase(d: Dataset, start: MetricSubset, vif_t: float = 5.0):
    """Iterative highest-VIF elimination; returns (kept subset, trace).

    Scores are recomputed after every removal; exactly one metric leaves
    per pass. Unbounded scores order above every finite score; VIF ties go
    against the metric with the largest original column index.
    """
    current = list(start)
    steps = []
    while current:
        report = vif_scores(d, current)
        offenders = [m for m in current if report.scores[m] >= vif_t]
        if not offenders:
            break
        worst = max(
            offenders,
            key=lambda m: (report.scores[m], d.metric_names.index(m)),
        )
        steps.append(TraceStep("vif", worst, None, report.scores[worst]))
        current.remove(worst)
    return current, EliminationTrace(tuple(steps))


def auto_spearman(d: Dataset, params: AutoSpearmanParams = AutoSpearmanParams()):
    """Full two-phase elimination; returns (kept subset, combined trace).

    The output satisfies: every pairwise |Spearman| < sp_t and every VIF
    finite and < vif_t. The outcome column is never consulted.
    """
    subset, trace1 = spearman_phase(d, params.sp_t)
    subset, trace2 = vif_phase(d, subset, params.vif_t)
    return subset, EliminationTrace(trace1.steps + trace2.steps)
