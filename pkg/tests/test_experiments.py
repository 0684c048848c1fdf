import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgdlog.errors import MalformedSpec
from sgdlog.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    check_lex_first_bound,
    commuting_transformations,
    degree_for_size,
    loglog_slope,
    random_abelian_instance,
    rows_to_csv,
    run_experiment,
)
from sgdlog.membership import lower_bound_size


def cfg(**kw):
    base = dict(experiment="perm-inversion", k=2, sizes=[3, 4], trials=2)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


@pytest.mark.parametrize("bad", [
    {"experiment": "nope"},
    {"k": 1},
    {"trials": 0},
    {"sizes": []},
    {"sizes": [0]},
    {"mode": "analog"},
    {"accounting": "free"},
    {"sizes": "abc"},
])
def test_config_validation(bad):
    with pytest.raises(MalformedSpec):
        cfg(**bad)


def test_config_missing_field():
    with pytest.raises(MalformedSpec):
        ExperimentConfig.from_dict({"experiment": "lemma5", "k": 2})


def test_config_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"experiment": "lemma5", "k": 2, "sizes": [3], "trials": 4, "seed": 9}', encoding="utf-8")
    c = ExperimentConfig.load(p)
    assert (c.sizes, c.seed, c.mode) == ((3,), 9, "classical")
    p.write_text("[", encoding="utf-8")
    with pytest.raises(MalformedSpec):
        ExperimentConfig.load(p)


@given(st.integers(1, 10 ** 5), st.integers(2, 4))
def test_degree_for_size_is_least(target, k):
    n = degree_for_size(target, k)
    assert lower_bound_size(n, k) >= target
    assert n == 1 or lower_bound_size(n - 1, k) < target


def test_loglog_slope_exact():
    xs = [10, 100, 1000]
    assert loglog_slope(xs, [3 * x ** 0.25 for x in xs]) == pytest.approx(0.25)


def test_csv_shape_and_determinism():
    c = cfg(seed=5)
    a, b = run_experiment(c), run_experiment(c)
    text = rows_to_csv(a.rows)
    assert text == rows_to_csv(b.rows)
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 4
    assert all(r[-1] == "1" for r in rows[1:])
    assert a.summary["reference_slope"] == pytest.approx(0.25)
    other = run_experiment(cfg(seed=6))
    assert rows_to_csv(other.rows) != text


def test_membership_scaling_rows():
    res = run_experiment(cfg(experiment="membership-scaling", sizes=[20, 60], k=3))
    assert {r.size for r in res.rows} == {lower_bound_size(degree_for_size(s, 3), 3) for s in (20, 60)}
    assert all(r.success and r.charged_queries > 0 for r in res.rows)
    assert "charged_slope" in res.summary


def test_lemma5_experiment_runs():
    res = run_experiment(cfg(experiment="lemma5", sizes=[4], trials=5))
    assert len(res.rows) == 5
    assert "charged_slope" not in res.summary


def test_write_outputs(tmp_path):
    res = run_experiment(cfg())
    csv_path, json_path = res.write(tmp_path / "out")
    assert csv_path.name == "perm-inversion.csv" and json_path.exists()


@pytest.mark.parametrize("seed", range(10))
def test_commuting_transformations_commute(seed):
    rng = np.random.default_rng(seed)
    n, k = 1 + seed % 6, 2 + seed % 3
    fs = commuting_transformations(n, k, rng)
    assert len(fs) == k
    for f in fs:
        assert len(f) == n and all(1 <= v <= n for v in f)
    for f in fs:
        for g in fs:
            assert tuple(g[v - 1] for v in f) == tuple(f[v - 1] for v in g)


def test_lex_first_check_plus_one_is_clean():
    rng = np.random.default_rng(12)
    for _ in range(40):
        res = check_lex_first_bound(random_abelian_instance(rng))
        assert res.violations_plus_one == 0
        assert res.cheap_failures_plus_one == 0
        assert res.violations_plus_one <= res.violations
