import csv
import io
import json
import math

import numpy as np
import pytest

from randlift.errors import ConfigError
from randlift.experiments import (
    THEOREM1_COLUMNS,
    ExperimentConfig,
    format_value,
    records_to_csv,
    run_corollary_experiment,
    run_marginal_check,
    run_markov_experiment,
    run_sharpness_probe,
    run_theorem1_experiment,
    trial_seed,
)
from randlift.graph import complete_graph, cycle_graph, write_graph, make_graph
from randlift.markov import make_chain, random_walk


def cfg(**kw):
    base = dict(graph="complete:2", k=2, trials=4, delta=0.05, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(7, t) for t in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [trial_seed(7, t) for t in range(1000)]
    assert trial_seed(7, 0) != trial_seed(8, 0)


@pytest.mark.parametrize("kw", [
    dict(trials=0), dict(delta=1.0), dict(delta=0.0), dict(k=0), dict(k=None),
    dict(sampler="bogus"), dict(graph=None), dict(graph_file="x.txt"), dict(workers=0),
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        cfg(**kw).validate()


def test_config_ks_validation():
    with pytest.raises(ConfigError):
        cfg(ks=[2, 1]).validate(need_ks=True)
    cfg(ks=[2, 3]).validate(need_ks=True)
    assert cfg(ks=[2, 3]).lift_order == 6


def test_config_from_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"graph": "cycle:5", "k": 3, "trials": 2}))
    c = ExperimentConfig.from_json(p)
    assert (c.graph, c.k, c.trials, c.delta) == ("cycle:5", 3, 2, 0.05)
    p.write_text(json.dumps({"graph": "cycle:5", "colour": "red"}))
    with pytest.raises(ConfigError, match="colour"):
        ExperimentConfig.from_json(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(p)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(tmp_path / "missing.json")


def test_graph_sources(tmp_path):
    write_graph(cycle_graph(4), tmp_path / "g.txt")
    assert cfg(graph=None, graph_file=str(tmp_path / "g.txt")).load_graph() == cycle_graph(4)
    with pytest.raises(ConfigError):
        cfg(graph=None, graph_file=str(tmp_path / "nope.txt")).load_graph()
    with pytest.raises(ConfigError):
        cfg(graph="hypercube:3").load_graph()


def test_size_guardrail():
    with pytest.raises(ConfigError, match="20000"):
        run_theorem1_experiment(cfg(graph="complete:201", k=100))
    cfg(graph="complete:201", k=100, allow_large=True).check_size(complete_graph(201))


def test_k2_theorem1():
    res = run_theorem1_experiment(cfg())
    assert all(r.max_new_adj == pytest.approx(1) for r in res.records)
    assert not any(r.exceeded_adjacency or r.exceeded_laplacian for r in res.records)
    assert res.summary["exceed_fraction_adj"] == 0 and res.summary["prop_equality_ok"]


def test_k1_single_trial():
    res = run_theorem1_experiment(cfg(graph="cycle:5", k=1, trials=1))
    (r,) = res.records
    assert r.max_new_adj == 0 and r.exceeded_adj is False
    assert r.dev_norm_adj == pytest.approx(0, abs=1e-12)


def test_record_invariants():
    res = run_theorem1_experiment(cfg(graph="erdos_renyi:9,0.5", graph_seed=2, k=4, trials=12))
    d_max = res.summary["d_max"]
    for r in res.records:
        assert r.exceeded_adj == (r.max_new_adj > r.adjacency_bound)
        assert abs(r.max_new_adj - r.dev_norm_adj) <= 1e-6 * max(1, d_max)
        if r.exceeded_lap is not None:
            assert r.exceeded_lap == (r.max_new_lap_dev > r.laplacian_bound)
    assert res.summary["exceed_count_adj"] == sum(r.exceeded_adj for r in res.records)


def test_csv_format():
    res = run_theorem1_experiment(cfg(graph="cycle:6", k=3, trials=3))
    text = res.to_csv()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == THEOREM1_COLUMNS
    assert text.splitlines()[0] == ",".join(THEOREM1_COLUMNS)
    for rec, row in zip(res.records, rows):
        assert float(row["dev_norm_adj"]) == rec.dev_norm_adj
        assert row["exceeded_adj"] in ("true", "false")
        assert int(row["seed"]) == rec.seed
    assert "\r" not in text


def test_skipped_laplacian_gives_empty_fields(tmp_path):
    # triangle plus an isolated vertex
    write_graph(make_graph(4, [(1, 2), (1, 3), (2, 3)]), tmp_path / "g.txt")
    res = run_theorem1_experiment(cfg(graph=None, graph_file=str(tmp_path / "g.txt"), k=2, trials=2))
    rows = list(csv.DictReader(io.StringIO(res.to_csv())))
    assert all(r["max_new_lap_dev"] == "" and r["exceeded_lap"] == "" for r in rows)
    assert res.summary["laplacian_skipped"]
    assert json.loads(res.to_json())["records"][0]["dev_norm_lap"] is None


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "true" and format_value(np.bool_(False)) == "false"
    assert format_value(3) == "3"
    assert float(format_value(math.pi)) == math.pi
    assert format_value(0.1) == "0.10000000000000001"


def test_parallel_matches_sequential():
    seq = run_theorem1_experiment(cfg(graph="cycle:7", k=5, trials=6))
    par = run_theorem1_experiment(cfg(graph="cycle:7", k=5, trials=6, workers=2))
    assert seq.to_csv() == par.to_csv()


def test_write_outputs(tmp_path):
    res = run_theorem1_experiment(cfg(trials=2))
    res.write(tmp_path / "sub" / "r.csv", tmp_path / "sub" / "r.json")
    assert (tmp_path / "sub" / "r.csv").read_bytes() == res.to_csv().encode()
    blob = json.loads((tmp_path / "sub" / "r.json").read_text())
    assert blob["experiment"] == "theorem1" and len(blob["records"]) == 2


def test_corollary_k2_fixture():
    res = run_corollary_experiment(complete_graph(2), [2, 2], 10, 0.1, 4)
    assert all(r["diff_norm_adj"] <= 2 + 1e-12 for r in res.records)
    assert res.summary["exceed_fraction_adj"] == 0


def test_corollary_single_stage_runs():
    res = run_corollary_experiment(cycle_graph(5), [2], 5, 0.1, 1)
    assert res.summary["k"] == 2
    assert all(r["diff_norm_lap"] is not None for r in res.records)


@pytest.mark.parametrize("ks", [[], [1, 2], [2, 0]])
def test_corollary_rejects_ks(ks):
    with pytest.raises(ConfigError):
        run_corollary_experiment(complete_graph(3), ks, 2, 0.1, 0)


def test_marginals_k1():
    rep = run_marginal_check(complete_graph(3), 1, "uniform", 1000, 0)
    assert rep.frequencies.tolist() == [[1.0]] and rep.passed


@pytest.mark.parametrize("sampler", ["uniform", "cyclic"])
def test_marginals_k4(sampler):
    rep = run_marginal_check(complete_graph(2), 4, sampler, 10_000, 11)
    assert rep.halfwidth == pytest.approx(3 * math.sqrt(0.25 * 0.75 / 1e4))
    assert rep.passed, rep.max_deviation
    np.testing.assert_allclose(rep.frequencies.sum(axis=1), 1)


def test_marginals_iterated_and_edge_choice():
    rep = run_marginal_check(cycle_graph(4), None, "iterated", 2000, 5, ks=[2, 2], edge=(2, 3))
    assert rep.k == 4 and rep.edge == (2, 3) and rep.passed
    assert len(rep.rows()) == 16


def test_marginals_errors():
    with pytest.warns(RuntimeWarning):
        run_marginal_check(complete_graph(2), 2, "uniform", 50, 0)
    with pytest.raises(ConfigError):
        run_marginal_check(complete_graph(3), 2, "uniform", 1000, 0, edge=(2, 1))
    with pytest.raises(ConfigError):
        run_marginal_check(complete_graph(3), None, "iterated", 1000, 0)
    with pytest.raises(ConfigError):
        run_marginal_check(make_graph(3, []), 2, "uniform", 1000, 0)


def test_sharpness_probe():
    res = run_sharpness_probe(complete_graph(2), 2, 0.05, 3, 0)
    assert all(r["ratio_sqrt_delta"] == pytest.approx(1) for r in res.records)
    res = run_sharpness_probe(cycle_graph(5), 1, 0.05, 2, 0)
    assert all(r["ratio_sqrt_delta"] == 0 and r["ratio_bound"] == 0 for r in res.records)


def test_markov_experiment():
    flip = make_chain([[0, 1], [1, 0]], [0.5, 0.5])
    res = run_markov_experiment(flip, 3, 5, 0.05, 2)
    assert res.summary["c_P"] == pytest.approx(1)
    assert all(r["n_new"] == 4 for r in res.records)
    res = run_markov_experiment(random_walk(cycle_graph(6)), 4, 5, 0.05, 2, sampler="cyclic")
    assert res.summary["detailed_balance_residual_max"] <= 1e-10
    assert res.summary["c_P"] <= res.summary["c_P_upper"] + 1e-12
    with pytest.raises(ConfigError):
        run_markov_experiment(flip, 0, 5, 0.05, 2)
