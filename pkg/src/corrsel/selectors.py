"""The baseline feature-selection techniques behind one dispatch interface.

Four filter-based techniques (CFS, information gain, chi-squared,
consistency-based), five wrapper-based ones (RFE with logistic or forest
backends, stepwise regression in three directions), plus the correlation
based eliminator, all taking a training sample and returning an ordered
list of metric names. Every selector is deterministic given
(train, config, seed), and the supervised ones read only the training
sample handed to them.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

import numpy as np

from .autospearman import AutoSpearmanParams, MetricSubset, auto_spearman
from .classifiers import fit_logistic, fit_random_forest, importance, score_rows
from .data import Dataset, bootstrap_sample
from .errors import (
    ConfigError,
    DegenerateOutcome,
    EmptyTestSet,
    SingleClass,
    UnsupportedSelector,
)
from .evaluation import auc
from .seeding import DEFAULT_SEED, RESEED_OFFSET, derive_seed
from .stats import (
    aic,
    chi_squared,
    discretize_equal_frequency,
    inconsistency_rate,
    information_gain,
    spearman,
    spearman_matrix,
)


class SelectorId(enum.Enum):
    CFS = "CFS"
    IG = "IG"
    CHISQ = "Chisq"
    CON = "CON"
    RFE_LR = "RFE-LR"
    RFE_RF = "RFE-RF"
    STEP_FWD = "Step-FWD"
    STEP_BWD = "Step-BWD"
    STEP_BOTH = "Step-BOTH"
    AUTOSPEARMAN = "AutoSpearman"


def parse_selector(text: str) -> SelectorId:
    """Case-insensitive lookup by abbreviation; '-' and '_' are interchangeable."""
    wanted = text.strip().lower().replace("_", "-")
    for sel in SelectorId:
        if sel.value.lower().replace("_", "-") == wanted:
            return sel
    valid = ", ".join(s.value for s in SelectorId)
    raise UnsupportedSelector(f"unknown selector {text!r}; valid: {valid}")


@dataclass(frozen=True)
class SelectorConfig:
    bins: int = 10
    ranking_rule: str = "positive"  # "positive" | "top_k"
    ranking_top_k: int | None = None
    rfe_resamples: int = 10
    rfe_sizes: tuple[int, ...] | None = None  # default 1..p
    rfe_ntree: int = 100
    stepwise_max_steps: int | None = None  # default 2p + 1
    stall_limit: int = 5
    base_seed: int = DEFAULT_SEED
    sp_t: float = 0.7
    vif_t: float = 5.0

    def __post_init__(self):
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if self.ranking_rule not in ("positive", "top_k"):
            raise ConfigError(f"unknown ranking_rule {self.ranking_rule!r}")
        if self.ranking_rule == "top_k" and (self.ranking_top_k or 0) < 1:
            raise ConfigError("ranking_top_k must be >= 1 for the top_k rule")
        if self.rfe_resamples < 1 or self.rfe_ntree < 1 or self.stall_limit < 1:
            raise ConfigError("counts must be >= 1")


def _require_supervised(train: Dataset) -> None:
    if not train.has_both_classes():
        raise DegenerateOutcome("selector needs both outcome classes in the training sample")


def _in_column_order(train: Dataset, names) -> MetricSubset:
    wanted = set(names)
    return [n for n in train.metric_names if n in wanted]


# -- ranking filters ---------------------------------------------------------

def _discrete_scores(train: Dataset, config: SelectorConfig, scorer) -> dict[str, float]:
    bins = max(2, min(config.bins, train.n_modules))
    out = {}
    for name in train.metric_names:
        labels = discretize_equal_frequency(train.column(name), bins)
        out[name] = scorer(labels, train.outcome)
    return out


def _apply_cutoff(train: Dataset, scores: dict[str, float], config: SelectorConfig) -> MetricSubset:
    # stable order: descending score, original column order on ties
    ranked = sorted(
        train.metric_names, key=lambda n: (-scores[n], train.metric_names.index(n))
    )
    if config.ranking_rule == "top_k":
        k = min(config.ranking_top_k, len(ranked))
        return ranked[:k]
    return [n for n in ranked if scores[n] > 0.0]


def select_ig(train: Dataset, config: SelectorConfig = SelectorConfig()) -> MetricSubset:
    """Information-gain ranking filter, output ordered by descending score."""
    _require_supervised(train)
    return _apply_cutoff(train, _discrete_scores(train, config, information_gain), config)


def select_chisq(train: Dataset, config: SelectorConfig = SelectorConfig()) -> MetricSubset:
    """Chi-squared ranking filter, output ordered by descending score."""
    _require_supervised(train)
    return _apply_cutoff(train, _discrete_scores(train, config, chi_squared), config)


# -- CFS ---------------------------------------------------------------------

def _cfs_merit(members: tuple[int, ...], corr_out: np.ndarray, corr_ff: np.ndarray) -> float:
    k = len(members)
    if k == 0:
        return 0.0
    r_cf = float(np.mean(corr_out[list(members)]))
    if k == 1:
        return r_cf
    pairs = [(a, b) for ai, a in enumerate(members) for b in members[ai + 1:]]
    r_ff = float(np.mean([corr_ff[a, b] for a, b in pairs]))
    return k * r_cf / np.sqrt(k + k * (k - 1) * r_ff)


def _best_first(p: int, score_fn, stall_limit: int):
    """Best-first subset search by single-metric addition.

    Expands the highest-scoring open node; stops after ``stall_limit``
    consecutive expansions that fail to improve on the best score seen.
    Returns the best-scoring subset visited; the first one found wins ties.
    """
    start: tuple[int, ...] = ()
    best, best_score = start, score_fn(start)
    seen = {start}
    open_heap = [(-best_score, start)]
    stall = 0
    while open_heap and stall < stall_limit:
        _, node = heapq.heappop(open_heap)
        improved = False
        for m in range(p):
            if m in node:
                continue
            child = tuple(sorted(node + (m,)))
            if child in seen:
                continue
            seen.add(child)
            s = score_fn(child)
            heapq.heappush(open_heap, (-s, child))
            if s > best_score:
                best, best_score = child, s
                improved = True
        stall = 0 if improved else stall + 1
    return best, best_score


def select_cfs(train: Dataset, config: SelectorConfig = SelectorConfig()) -> MetricSubset:
    """Correlation-based subset search: strong association with the outcome,
    weak correlation within the subset, scored by the standard merit formula."""
    _require_supervised(train)
    p = train.n_metrics
    outcome01 = train.outcome.astype(np.float64)
    corr_out = np.array(
        [abs(spearman(train.rows[:, j], outcome01)) for j in range(p)]
    )
    corr_ff = np.abs(spearman_matrix(train).values)
    best, _ = _best_first(
        p,
        lambda members: _cfs_merit(members, corr_out, corr_ff),
        config.stall_limit,
    )
    return _in_column_order(train, [train.metric_names[i] for i in best])


# -- consistency-based -------------------------------------------------------

def select_consistency(train: Dataset, config: SelectorConfig = SelectorConfig()) -> MetricSubset:
    """Smallest subset whose inconsistency rate matches the full metric set."""
    _require_supervised(train)
    p = train.n_metrics
    names = train.metric_names
    bins = config.bins
    target = inconsistency_rate(train, names, bins) + 1e-9

    n = train.n_modules
    pos = int(np.count_nonzero(train.outcome))
    empty_rate = (n - max(pos, n - pos)) / n

    cache: dict[tuple[int, ...], float] = {(): empty_rate}

    def rate(members: tuple[int, ...]) -> float:
        if members not in cache:
            cache[members] = inconsistency_rate(train, [names[i] for i in members], bins)
        return cache[members]

    _best_first(p, lambda m: -rate(m), config.stall_limit)
    qualifying = [m for m, r in cache.items() if r <= target]
    if not qualifying:
        return list(names)
    best = min(qualifying, key=lambda m: (len(m), rate(m), m))
    return _in_column_order(train, [names[i] for i in best])


# -- recursive feature elimination -------------------------------------------

def _fit_backend(backend: str, d: Dataset, subset, seed: int, config: SelectorConfig):
    if backend == "LR":
        return fit_logistic(d, subset)
    return fit_random_forest(d, subset, ntree=config.rfe_ntree, seed=seed)


def select_rfe(
    train: Dataset,
    backend: str = "LR",
    config: SelectorConfig = SelectorConfig(),
    seed: int | None = None,
) -> MetricSubset:
    """Recursive elimination of the least important metric.

    The elimination path is computed on the full training sample; each
    candidate size is scored by mean out-of-sample bootstrap AUC of the
    training sample only, and the best size wins (smaller on ties).
    """
    if backend not in ("LR", "RF"):
        raise UnsupportedSelector(f"RFE backend must be LR or RF, got {backend!r}")
    _require_supervised(train)
    seed = config.base_seed if seed is None else seed
    p = train.n_metrics
    names = list(train.metric_names)

    path: dict[int, list[str]] = {p: names.copy()}
    current = names.copy()
    while len(current) > 1:
        model = _fit_backend(backend, train, current, derive_seed(seed, 1, len(current)), config)
        scores = importance(model, train).scores
        # lowest importance leaves; ties drop the later column
        drop = min(current, key=lambda m: (scores[m], -names.index(m)))
        current.remove(drop)
        path[len(current)] = current.copy()

    sizes = list(config.rfe_sizes) if config.rfe_sizes else list(range(1, p + 1))
    sizes = [s for s in sizes if s in path]
    if not sizes:
        raise ConfigError("rfe_sizes contains no size in 1..p")

    splits = []
    for r in range(config.rfe_resamples):
        split_seed = derive_seed(seed, 2, r)
        while True:
            try:
                splits.append(bootstrap_sample(train, split_seed))
                break
            except EmptyTestSet:
                split_seed = (split_seed + RESEED_OFFSET) % (1 << 64)

    def mean_auc(size: int) -> float:
        subset = path[size]
        vals = []
        for r, split in enumerate(splits):
            try:
                model = _fit_backend(backend, split.train, subset, derive_seed(seed, 3, size, r), config)
                vals.append(auc(score_rows(model, split.test), split.test.outcome))
            except (DegenerateOutcome, SingleClass):
                continue
        return float(np.mean(vals)) if vals else 0.5

    best_size = max(sizes, key=lambda s: (mean_auc(s), -s))
    return _in_column_order(train, path[best_size])


# -- stepwise regression ------------------------------------------------------

def select_stepwise(
    train: Dataset,
    direction: str = "FWD",
    config: SelectorConfig = SelectorConfig(),
) -> MetricSubset:
    """Greedy AIC search over logistic models.

    FWD starts from the intercept-only model and adds; BWD starts from the
    full model and drops; BOTH starts empty and considers both moves. A move
    is taken only when it strictly lowers AIC.
    """
    if direction not in ("FWD", "BWD", "BOTH"):
        raise UnsupportedSelector(f"stepwise direction must be FWD/BWD/BOTH, got {direction!r}")
    _require_supervised(train)
    names = list(train.metric_names)
    p = len(names)
    max_steps = config.stepwise_max_steps or (2 * p + 1)

    cache: dict[frozenset, float] = {}

    def aic_of(subset: list[str]) -> float:
        key = frozenset(subset)
        if key not in cache:
            model = fit_logistic(train, _in_column_order(train, subset))
            cache[key] = aic(model.log_likelihood, len(subset) + 1)
        return cache[key]

    current = names.copy() if direction == "BWD" else []
    current_aic = aic_of(current)
    for _ in range(max_steps):
        best_move = None  # (aic, new_subset)
        if direction in ("FWD", "BOTH"):
            for m in names:
                if m in current:
                    continue
                cand = current + [m]
                a = aic_of(cand)
                if best_move is None or a < best_move[0]:
                    best_move = (a, cand)
        if direction in ("BWD", "BOTH"):
            for m in current:
                cand = [x for x in current if x != m]
                a = aic_of(cand)
                if best_move is None or a < best_move[0]:
                    best_move = (a, cand)
        if best_move is None or best_move[0] >= current_aic:
            break
        current_aic, current = best_move[0], best_move[1]
    return _in_column_order(train, current)


# -- dispatch ------------------------------------------------------------------

def select(
    id: SelectorId,
    train: Dataset,
    config: SelectorConfig = SelectorConfig(),
    seed: int | None = None,
) -> MetricSubset:
    """Run one selection technique on a training sample."""
    if id is SelectorId.AUTOSPEARMAN:
        subset, _ = auto_spearman(train, AutoSpearmanParams(config.sp_t, config.vif_t))
        return subset
    if id is SelectorId.CFS:
        return select_cfs(train, config)
    if id is SelectorId.IG:
        return select_ig(train, config)
    if id is SelectorId.CHISQ:
        return select_chisq(train, config)
    if id is SelectorId.CON:
        return select_consistency(train, config)
    if id is SelectorId.RFE_LR:
        return select_rfe(train, "LR", config, seed)
    if id is SelectorId.RFE_RF:
        return select_rfe(train, "RF", config, seed)
    if id is SelectorId.STEP_FWD:
        return select_stepwise(train, "FWD", config)
    if id is SelectorId.STEP_BWD:
        return select_stepwise(train, "BWD", config)
    if id is SelectorId.STEP_BOTH:
        return select_stepwise(train, "BOTH", config)
    raise UnsupportedSelector(str(id))
