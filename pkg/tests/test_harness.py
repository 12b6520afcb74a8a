import csv
import json
import math

import numpy as np
import pytest

from giantwalk.errors import ConfigError
from giantwalk.exploration import simulate_summary
from giantwalk.harness import (
    ExperimentConfig,
    run_experiment,
    validate,
    walk_largest_sample,
)
from giantwalk.sampler import ALGORITHM_ID, seed_stream
from giantwalk.theory import Params


def small_config(**kw):
    base = dict(params=Params.from_lambda(5000, 1.5), replicas=60, master_seed=9)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_replica_complete_graph():
    report = run_experiment(ExperimentConfig(Params.from_p(3, 1.0), replicas=1, master_seed=0))
    m = report.L1_moments
    assert (m.count, m.mean) == (1, 3.0)
    assert not m.variance_defined and m.variance == 0.0
    d = json.loads(report.to_json())
    assert d["L1_moments"]["variance_defined"] is False
    assert d["pass_flags"]["variance_ratio"] is False
    assert not report.passed


def test_report_embeds_provenance():
    d = json.loads(run_experiment(small_config()).to_json())
    assert d["rng_algorithm"] == ALGORITHM_ID
    assert d["master_seed"] == 9
    assert d["config"]["n"] == 5000 and d["config"]["replicas"] == 60
    assert "version" in d and "runtime_seconds" not in d
    assert d["thresholds"]["calibrated"] is True


def test_replicas_use_indexed_streams():
    config = small_config(replicas=5)
    report = run_experiment(config)
    for i, s in enumerate(report.summaries):
        assert s == simulate_summary(config.params, seed_stream(config.master_seed, i))
        assert s.replica_index == i


@pytest.mark.parametrize("workers", [1, 4])
def test_rerun_is_byte_identical(workers):
    a = run_experiment(small_config(worker_count=workers)).to_json()
    b = run_experiment(small_config(worker_count=workers)).to_json()
    assert a == b
    assert a == run_experiment(small_config(worker_count=1)).to_json()


def test_pass_flags_follow_from_fields():
    r = run_experiment(small_config())
    th = r.thresholds
    R = r.config["replicas"]
    assert th["mean_offset_max"] == pytest.approx(4 / math.sqrt(R) + 0.02)
    assert th["standardized_ks_max"] == pytest.approx(1.9495 / math.sqrt(R), rel=1e-3)
    assert r.pass_flags["mean_offset"] == (abs(r.mean_offset) <= th["mean_offset_max"])
    lo, hi = th["variance_ratio_window"]
    assert r.pass_flags["variance_ratio"] == (lo <= r.variance_ratio <= hi)
    assert r.pass_flags["standardized_ks"] == (r.standardized_ks <= th["standardized_ks_max"])
    assert r.pass_flags["T1_containment"] == (r.T1_containment_fraction >= th["T1_containment_min"])
    assert r.pass_flags["Z_bound"] == (r.Z_bound_fraction >= th["Z_bound_min"])
    lo, hi = th["condvar_ratio_window"]
    assert r.pass_flags["condvar_ratio"] == (lo <= r.condvar_ratio_median <= hi)
    assert r.pass_flags["L2_max"] == (r.L2_max <= th["L2_max_allowed"])


def test_kept_trajectories_agree_with_fused_summaries():
    fused = run_experiment(small_config(replicas=8))
    kept = run_experiment(small_config(replicas=8, keep_trajectories=True))
    assert len(kept.trajectories) == 8
    for a, b in zip(fused.summaries, kept.summaries):
        assert (a.L1, a.L2, a.T0, a.T1, a.Z) == (b.L1, b.L2, b.T0, b.T1, b.Z)
    assert fused.L1_moments == kept.L1_moments


def test_memory_refusal():
    config = ExperimentConfig(Params.from_lambda(10**6, 1.5), replicas=100, master_seed=0,
                              keep_trajectories=True)
    with pytest.raises(ConfigError, match="GiB"):
        run_experiment(config)


def test_single_trajectory_mode():
    report = run_experiment(small_config(replicas=1, mode="single_trajectory"))
    assert len(report.trajectories) == 1
    with pytest.raises(ConfigError):
        small_config(replicas=2, mode="single_trajectory")


def test_config_errors():
    with pytest.raises(ConfigError):
        small_config(mode="bogus")
    with pytest.raises(ConfigError):
        small_config(replicas=0)
    with pytest.raises(ConfigError):
        small_config(worker_count=0)
    with pytest.raises(ConfigError):
        small_config(mode="validate_enum")  # n = 5000 > 8
    with pytest.raises(ConfigError):
        ExperimentConfig(Params.from_lambda(20000, 1.5), 10, 0, mode="validate_graph")
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(Params.from_p(4, 0.5), 10, 0, mode="validate_enum"))
    with pytest.raises(ConfigError):
        validate(small_config())


def test_validate_enum_degenerate():
    report = validate(ExperimentConfig(Params.from_p(2, 1.0), replicas=100, master_seed=0,
                                       mode="validate_enum"))
    assert report.details["observed"] == {"2": 100}
    assert report.details["exact_pmf"] == {"2": 1.0}
    assert report.passed and report.statistic == 0.0


def test_walk_sample_independent_of_workers():
    config = ExperimentConfig(Params.from_lambda(200, 1.5), replicas=12000, master_seed=3,
                              mode="validate_graph")
    a = walk_largest_sample(config)
    b = walk_largest_sample(ExperimentConfig(**{**config.__dict__, "worker_count": 4}))
    assert np.array_equal(a, b)


def test_validate_graph_small():
    config = ExperimentConfig(Params.from_lambda(50, 1.5), replicas=2000, master_seed=5,
                              mode="validate_graph", worker_count=2)
    report = validate(config)
    assert report.method == "ks_two_sample"
    assert report.passed
    assert report.to_json() == validate(config).to_json()


def test_replica_csv(tmp_path):
    report = run_experiment(small_config(replicas=10))
    path = tmp_path / "rep.csv"
    report.write_replica_csv(path)
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["replica_index", "L1", "L2", "T0", "T1", "Z", "standardized_L1"]
    assert [int(r["L1"]) for r in rows] == [s.L1 for s in report.summaries]
    assert np.allclose([float(r["standardized_L1"]) for r in rows], report.standardized_sample())
