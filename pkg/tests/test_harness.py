from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from corrsel.data import Dataset, SyntheticSpec, generate_synthetic
from corrsel.errors import ConfigError
from corrsel.harness import (
    consistency_across_samples,
    consistency_across_selectors,
    correlation_flags,
    load_config,
    performance_deltas,
    run_experiment,
    run_selection_grid,
    write_report,
)
from corrsel.selectors import SelectorId


def _clone_fixture(seed=0):
    spec = SyntheticSpec(
        base_metric_count=4,
        module_count=200,
        signal_coefficients=(1.5, 0, 0, 0),
        clone_groups=((0, 1, 0.01),),
        seed=seed,
    )
    return generate_synthetic(spec)


# -- consistency formulas -----------------------------------------------------

def test_consistency_identical_subsets():
    res = consistency_across_samples([["a", "b"]] * 7)
    assert res.percentage == 100.0
    assert res.intersection_size == 2
    assert res.union_size == 2


def test_consistency_disjoint_subsets():
    assert consistency_across_samples([["a"], ["b"], ["c"]]).percentage == 0.0


def test_consistency_partial_overlap():
    res = consistency_across_samples([["a", "b", "c"], ["b", "c", "d"]])
    assert res.percentage == 50.0
    assert res.intersection_size == 2
    assert res.union_size == 4


def test_consistency_all_empty_defined_zero():
    assert consistency_across_samples([[], []]).percentage == 0.0


def test_consistency_across_selectors_examples():
    assert consistency_across_selectors([["a", "b"]] * 9).percentage == 100.0
    assert consistency_across_selectors([["a"], [], ["a", "b"]]).percentage == 0.0
    res = consistency_across_selectors([["a", "b"], ["a", "c"], ["a"]])
    assert res.percentage == pytest.approx(100 / 3, abs=1e-9)


def test_consistency_monotone_under_append_exhaustive():
    universe = ["a", "b", "c", "d"]
    all_subsets = [
        list(c) for r in range(5) for c in itertools.combinations(universe, r)
    ]
    families = [[s] for s in all_subsets]
    families += [list(f) for f in itertools.product(all_subsets, repeat=2)]
    for family in families:
        base = consistency_across_samples(family).percentage
        for extra in all_subsets:
            appended = consistency_across_samples(family + [extra]).percentage
            assert appended <= base + 1e-12


def test_consistency_copies_always_100():
    for b in (1, 2, 5):
        assert consistency_across_samples([["x", "y"]] * b).percentage == 100.0


# -- correlation flags -----------------------------------------------------------

def test_flags_clone_pair_detected():
    d = _clone_fixture(1)
    flags = correlation_flags(["m1", "m1_clone1"], d)
    assert flags.has_collinearity
    assert flags.has_multicollinearity  # pairwise perfect dependence inflates VIF


def test_flags_empty_and_singleton_false():
    d = _clone_fixture(2)
    for subset in ([], ["m2"]):
        flags = correlation_flags(subset, d)
        assert not flags.has_collinearity
        assert not flags.has_multicollinearity


def test_flags_strictly_above_threshold():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(100)
    d = Dataset(("a", "b"), np.column_stack([a, a.copy()]), rng.random(100) < 0.5)
    # exact duplicate: |rho| = 1 > 0.7 -> flagged; at sp_t = 1.0 strictness matters
    assert correlation_flags(["a", "b"], d, sp_t=0.7).has_collinearity
    assert not correlation_flags(["a", "b"], d, sp_t=1.0).has_collinearity


def test_flags_independent_columns_clean():
    rng = np.random.default_rng(4)
    d = Dataset(
        ("a", "b", "c"), rng.standard_normal((400, 3)), rng.random(400) < 0.5
    )
    flags = correlation_flags(["a", "b", "c"], d)
    assert not flags.has_collinearity
    assert not flags.has_multicollinearity


# -- selection grid ----------------------------------------------------------------

def test_grid_shape_and_determinism():
    d = _clone_fixture(5)
    sels = [SelectorId.AUTOSPEARMAN, SelectorId.IG]
    g1 = run_selection_grid(d, sels, B=3, base_seed=11)
    g2 = run_selection_grid(d, sels, B=3, base_seed=11)
    assert set(g1.subsets) == {(s, j) for s in sels for j in range(3)}
    assert g1.subsets == g2.subsets
    assert g1.split_seeds == g2.split_seeds
    assert not g1.failures


def test_grid_b_one():
    d = _clone_fixture(6)
    g = run_selection_grid(d, [SelectorId.AUTOSPEARMAN], B=1, base_seed=1)
    assert g.sample_count == 1
    assert len(g.for_selector(SelectorId.AUTOSPEARMAN)) == 1


def test_grid_threads_env_equivalent(monkeypatch):
    d = _clone_fixture(7)
    sels = [SelectorId.AUTOSPEARMAN, SelectorId.IG]
    sequential = run_selection_grid(d, sels, B=4, base_seed=3)
    monkeypatch.setenv("CORRSEL_THREADS", "4")
    threaded = run_selection_grid(d, sels, B=4, base_seed=3)
    assert sequential.subsets == threaded.subsets


def test_grid_rejects_bad_b():
    with pytest.raises(ConfigError):
        run_selection_grid(_clone_fixture(8), [SelectorId.IG], B=0)


# -- performance deltas ----------------------------------------------------------------

def test_deltas_identity_selector_zero():
    # a selector that returns every metric must produce exactly zero deltas;
    # wire it through the grid by monkeypatching the grid contents
    d = _clone_fixture(9)
    grid = run_selection_grid(d, [SelectorId.AUTOSPEARMAN], B=3, base_seed=21)
    full = {k: list(d.metric_names) for k in grid.subsets}
    grid = type(grid)(full, {}, grid.sample_count, grid.dataset_id, grid.split_seeds)
    deltas, _ = performance_deltas(
        d, [SelectorId.AUTOSPEARMAN], 3, ("logistic",), base_seed=21, grid=grid
    )
    assert deltas
    assert all(x.delta == 0.0 for x in deltas)


def test_deltas_empty_subset_auc_half():
    from corrsel.evaluation import auc
    from corrsel.harness import _intercept_only_scores, _split_with_retry
    from corrsel.seeding import derive_seed

    d = _clone_fixture(10)
    split, _ = _split_with_retry(d, derive_seed(5, 0))
    scores = _intercept_only_scores(split.train, split.test)
    assert len(set(scores.tolist())) == 1
    assert auc(scores, split.test.outcome) == 0.5


def test_deltas_same_split_for_both_terms():
    d = _clone_fixture(11)
    deltas, records = performance_deltas(
        d, [SelectorId.AUTOSPEARMAN], 2, ("logistic",), base_seed=2
    )
    by_sample = {}
    for x in deltas:
        by_sample.setdefault(x.sample_index, []).append(x.measure)
    for measures in by_sample.values():
        assert sorted(measures) == ["AUC", "F", "MCC"]


# -- experiment + report ------------------------------------------------------------------

def _smoke_config(tmp_path, **overrides):
    obj = {
        "dataset": {
            "base_metric_count": 4,
            "module_count": 120,
            "signal_coefficients": [1.5, 0, 0, 0],
            "clone_groups": [[0, 1, 0.01]],
            "seed": 13,
        },
        "selectors": ["AutoSpearman", "IG"],
        "bootstrap_count": 5,
        "base_seed": 77,
        "classifiers": ["logistic"],
        "output": str(tmp_path / "report.json"),
    }
    obj.update(overrides)
    return obj


def test_run_experiment_smoke(tmp_path):
    cfg = load_config(_smoke_config(tmp_path))
    report = run_experiment(cfg)
    path = tmp_path / "report.json"
    assert path.exists()
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert "timestamp" in doc
    assert set(doc["consistency_across_samples"]) == {"AutoSpearman", "IG"}
    assert doc["config"]["sp_t"] == 0.7
    assert doc["config"]["vif_t"] == 5.0
    assert len(doc["consistency_across_selectors"]) == 5
    for key, row in doc["performance_deltas"].items():
        assert row["n"] == 0 or row["median"] is not None


def test_report_validates_against_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    schema = {
        "type": "object",
        "required": [
            "schema_version", "config", "dataset", "split_seeds",
            "consistency_across_samples", "consistency_across_selectors",
            "correlation_flags", "performance_deltas", "failures",
            "records", "warnings", "timestamp",
        ],
        "properties": {
            "schema_version": {"const": 1},
            "split_seeds": {"type": "array", "items": {"type": "integer"}},
            "consistency_across_samples": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["percentage", "intersection_size", "union_size"],
                },
            },
            "correlation_flags": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["samples", "collinearity_pct", "multicollinearity_pct"],
                },
            },
        },
    }
    cfg = load_config(_smoke_config(tmp_path))
    run_experiment(cfg)
    doc = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(doc, schema)


def test_experiment_rerun_identical_payload(tmp_path):
    cfg = load_config(_smoke_config(tmp_path))
    r1 = run_experiment(cfg)
    r2 = run_experiment(cfg)
    assert r1.to_json() == r2.to_json()


def test_experiment_echo_reproduces(tmp_path):
    cfg = load_config(_smoke_config(tmp_path))
    r1 = run_experiment(cfg)
    echoed = json.loads((tmp_path / "report.json").read_text())["config"]
    # drop echo-only fields that load_config does not take
    cfg2 = load_config({k: v for k, v in echoed.items() if v is not None})
    r2 = run_experiment(cfg2)
    assert r1.to_json() == r2.to_json()


def test_experiment_csv_cells(tmp_path):
    cfg = load_config(
        _smoke_config(tmp_path, output_csv=str(tmp_path / "cells.csv"))
    )
    run_experiment(cfg)
    lines = (tmp_path / "cells.csv").read_text().strip().splitlines()
    assert lines[0].startswith("selector,sample,subset_size,metrics")
    assert len(lines) == 1 + 2 * 5  # header + selectors x samples


def test_experiment_autospearman_flags_always_clean(tmp_path):
    cfg = load_config(_smoke_config(tmp_path))
    report = run_experiment(cfg)
    flags = report.payload["correlation_flags"]["AutoSpearman"]
    assert flags["collinearity_pct"] == 0.0
    assert flags["multicollinearity_pct"] == 0.0


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config({"selectors": ["IG"]})  # no dataset
    with pytest.raises(ConfigError):
        load_config({"dataset": "x.csv"})  # no outcome column
    with pytest.raises(ConfigError):
        load_config(_smoke_config(tmp_path, bogus_field=1))
    with pytest.raises(ConfigError):
        load_config(_smoke_config(tmp_path, dataset={"module_count": 5}))
    with pytest.raises(ConfigError):
        # thresholds live at the top level, not inside selector_config
        load_config(_smoke_config(tmp_path, selector_config={"sp_t": 0.9}))


def test_write_report_atomic(tmp_path):
    from corrsel.harness import ExperimentReport

    path = tmp_path / "out.json"
    write_report(ExperimentReport({"schema_version": 1}), str(path))
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert not list(tmp_path.glob("*.tmp"))
