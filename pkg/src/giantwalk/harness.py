"""Monte Carlo experiments over independent seeded replicas.

Replica ``i`` always draws from ``seed_stream(master_seed, i)``, and results
are reduced in replica-index order, so a report depends only on the
configuration and never on how replicas were scheduled across workers.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError
from .exploration import (
    ReplicaSummary,
    Trajectory,
    component_sizes,
    largest_components_many,
    run_walk,
    simulate_summary,
    summarize_replica,
)
from .oracle import MAX_ENUM_N, MAX_GRAPH_N, enumerate_pmf, sample_graph
from .sampler import ALGORITHM_ID, power_table, seed_stream
from .stats import (
    MomentAccumulator,
    chi_square,
    chi_square_pvalue,
    ks_critical,
    ks_one_sample,
    ks_two_sample,
    ks_two_sample_critical,
    standardize,
)
from .theory import Params, condvar_limit, crossing_index, diagnostic_times, theory_values

MODES = ("mc", "validate_enum", "validate_graph", "single_trajectory")

# stored trajectories hold five int64 arrays of length ~n per replica
TRAJECTORY_BYTES_PER_STEP = 5 * 8
MEMORY_LIMIT_BYTES = 2 * 1024**3

ALPHA = 0.001

# pre-drawn uniforms per validation block
_UNIFORM_BLOCK = 1 << 20

# Calibrated thresholds. None of these are constants of the limit theorem;
# they are finite-n allowances and are echoed into every report.
MEAN_OFFSET_SLACK = 0.02
MEAN_OFFSET_SIGMAS = 4.0
DEFAULT_VARIANCE_TOLERANCE = 0.1
WHP_FRACTION = 0.95
CONDVAR_WINDOW = (0.95, 1.05)
L2_FRACTION_OF_GIANT = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    params: Params
    replicas: int
    master_seed: int
    mode: str = "mc"
    worker_count: int = 1
    keep_trajectories: bool = False
    variance_tolerance: float = DEFAULT_VARIANCE_TOLERANCE

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.worker_count < 1:
            raise ConfigError(f"worker_count must be >= 1, got {self.worker_count}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if self.mode == "validate_enum" and self.params.n > MAX_ENUM_N:
            raise ConfigError(f"validate_enum requires n <= {MAX_ENUM_N}, got {self.params.n}")
        if self.mode == "validate_graph" and self.params.n > MAX_GRAPH_N:
            raise ConfigError(f"validate_graph requires n <= {MAX_GRAPH_N}, got {self.params.n}")
        if self.mode == "single_trajectory" and self.replicas != 1:
            raise ConfigError("single_trajectory runs exactly one replica")
        if not self.variance_tolerance > 0:
            raise ConfigError("variance_tolerance must be positive")

    def echo(self) -> dict:
        # worker_count is an execution detail and deliberately left out, so
        # reports are identical whatever the parallelism
        return {
            "n": self.params.n,
            "lambda": self.params.lam,
            "p": self.params.p,
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "mode": self.mode,
            "keep_trajectories": self.keep_trajectories,
            "variance_tolerance": self.variance_tolerance,
        }


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


@dataclass
class MCReport:
    config: dict
    theory: dict
    diagnostics: dict
    L1_moments: MomentAccumulator
    standardized_ks: float
    variance_ratio: float
    mean_offset: float
    T1_containment_fraction: float
    Z_bound_fraction: float
    condvar_ratio_median: float
    local_slope_p90: float
    L2_max: int
    censored_count: int
    thresholds: dict
    pass_flags: dict
    runtime_seconds: float = 0.0
    summaries: list[ReplicaSummary] = field(default_factory=list, repr=False)
    trajectories: list[Trajectory] | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "version": __version__,
            "rng_algorithm": ALGORITHM_ID,
            "master_seed": self.config["master_seed"],
            "config": self.config,
            "theory": self.theory,
            "diagnostics": self.diagnostics,
            "L1_moments": self.L1_moments.as_dict(),
            "standardized_ks": self.standardized_ks,
            "variance_ratio": self.variance_ratio,
            "mean_offset": self.mean_offset,
            "T1_containment_fraction": self.T1_containment_fraction,
            "Z_bound_fraction": self.Z_bound_fraction,
            "condvar_ratio_median": self.condvar_ratio_median,
            "local_slope_p90": self.local_slope_p90,
            "L2_max": self.L2_max,
            "censored_count": self.censored_count,
            "thresholds": self.thresholds,
            "pass_flags": self.pass_flags,
            "passed": self.passed,
        }
        if include_timing:
            out["runtime_seconds"] = self.runtime_seconds
        return out

    def to_json(self, include_timing: bool = False) -> str:
        """Canonical JSON; wall-clock time is excluded by default so reruns are byte-identical."""
        return _dumps(self.to_dict(include_timing))

    def write_replica_csv(self, path) -> None:
        theory_t1, sigma = self.theory["t1"], self.theory["sigma"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("replica_index", "L1", "L2", "T0", "T1", "Z", "standardized_L1"))
            for s in self.summaries:
                z = (s.L1 - theory_t1) / sigma
                writer.writerow((s.replica_index, s.L1, s.L2, s.T0, s.T1, s.Z, format(z, ".17g")))

    def standardized_sample(self) -> np.ndarray:
        L1 = np.array([s.L1 for s in self.summaries], dtype=float)
        return (L1 - self.theory["t1"]) / self.theory["sigma"]


def _map_ordered(fn, count: int, workers: int) -> list:
    if workers == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _check_memory(config: ExperimentConfig) -> None:
    if not config.keep_trajectories:
        return
    need = TRAJECTORY_BYTES_PER_STEP * (config.params.n + 1) * config.replicas
    if need > MEMORY_LIMIT_BYTES:
        raise ConfigError(
            f"keeping {config.replicas} trajectories of n={config.params.n} needs about "
            f"{need / 1024**3:.1f} GiB (limit {MEMORY_LIMIT_BYTES / 1024**3:.0f} GiB)"
        )


def run_experiment(config: ExperimentConfig) -> MCReport:
    """Run R replicas of the walk and aggregate the giant-component statistics."""
    if config.mode not in ("mc", "single_trajectory"):
        raise ConfigError(f"mode {config.mode!r} is a validation mode; use validate()")
    _check_memory(config)
    keep = config.keep_trajectories or config.mode == "single_trajectory"
    params = config.params
    theory = theory_values(params)
    diag = diagnostic_times(params)
    q_table = power_table(params.p, params.n)
    started = time.perf_counter()

    def one(i: int):
        stream = seed_stream(config.master_seed, i)
        if keep:
            traj = run_walk(params, stream, q_table)
            if sum(component_sizes(traj)) != params.n:
                raise AssertionError(f"replica {i}: component sizes do not sum to n")
            return summarize_replica(traj, theory), traj
        return simulate_summary(params, stream, theory, q_table), None

    results = _map_ordered(one, config.replicas, config.worker_count)
    summaries = [s for s, _ in results]
    trajectories = [tr for _, tr in results] if keep else None

    R = config.replicas
    L1 = np.array([s.L1 for s in summaries], dtype=float)
    moments = MomentAccumulator.of(L1)
    z = standardize(L1, theory)
    t1i = crossing_index(params, theory)
    lo, hi = t1i - diag.t0, t1i + diag.t0
    contain = float(np.mean([lo <= s.T1 <= hi for s in summaries]))
    z_frac = float(np.mean([s.Z <= diag.z_bound for s in summaries]))
    condvar = float(np.median([s.condvar_sum_ratio for s in summaries]))
    local90 = float(np.percentile([s.local_slope_dev for s in summaries], 90))
    L2_max = int(max(s.L2 for s in summaries))

    ks = ks_one_sample(z)
    var_ratio = moments.variance / theory.sigma2
    mean_offset = (moments.mean - theory.t1) / theory.sigma

    thresholds = {
        "alpha": ALPHA,
        "mean_offset_max": MEAN_OFFSET_SIGMAS / math.sqrt(R) + MEAN_OFFSET_SLACK,
        "variance_ratio_window": [1.0 - config.variance_tolerance, 1.0 + config.variance_tolerance],
        "standardized_ks_max": ks_critical(ALPHA) / math.sqrt(R),
        "T1_containment_min": WHP_FRACTION,
        "Z_bound_min": WHP_FRACTION,
        "condvar_ratio_window": list(CONDVAR_WINDOW),
        "L2_max_allowed": L2_FRACTION_OF_GIANT * theory.t1,
        "calibrated": True,
    }
    flags = {
        "mean_offset": abs(mean_offset) <= thresholds["mean_offset_max"],
        "variance_ratio": moments.variance_defined
        and abs(var_ratio - 1.0) <= config.variance_tolerance,
        "standardized_ks": ks <= thresholds["standardized_ks_max"],
        "T1_containment": contain >= WHP_FRACTION,
        "Z_bound": z_frac >= WHP_FRACTION,
        "condvar_ratio": CONDVAR_WINDOW[0] <= condvar <= CONDVAR_WINDOW[1],
        "L2_max": L2_max <= thresholds["L2_max_allowed"],
    }
    diagnostics = {
        "omega": diag.omega,
        "sigma0": diag.sigma0,
        "t0": diag.t0,
        "t1_index": t1i,
        "Z_bound": diag.z_bound,
        "condvar_limit": condvar_limit(params, theory),
    }
    return MCReport(
        config=config.echo(),
        theory=theory.as_dict(),
        diagnostics=diagnostics,
        L1_moments=moments,
        standardized_ks=ks,
        variance_ratio=var_ratio,
        mean_offset=mean_offset,
        T1_containment_fraction=contain,
        Z_bound_fraction=z_frac,
        condvar_ratio_median=condvar,
        local_slope_p90=local90,
        L2_max=L2_max,
        censored_count=sum(s.T1_censored for s in summaries),
        thresholds=thresholds,
        pass_flags={k: bool(v) for k, v in flags.items()},
        runtime_seconds=time.perf_counter() - started,
        summaries=summaries,
        trajectories=trajectories,
    )


@dataclass
class ValidationReport:
    config: dict
    method: str
    statistic: float
    threshold: dict
    p_value: float | None
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "rng_algorithm": ALGORITHM_ID,
            "master_seed": self.config["master_seed"],
            "config": self.config,
            "method": self.method,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "passed": self.passed,
            "details": self.details,
        }

    def to_json(self) -> str:
        return _dumps(self.to_dict())


def walk_largest_sample(config: ExperimentConfig, offset: int = 0) -> np.ndarray:
    """L1 of replicas ``offset .. offset+R-1`` of the walk, in index order."""
    params = config.params
    q_table = power_table(params.p, params.n)
    block = max(1, _UNIFORM_BLOCK // params.n)
    starts = list(range(0, config.replicas, block))

    def one(start):
        stop = min(start + block, config.replicas)
        streams = (seed_stream(config.master_seed, offset + i) for i in range(start, stop))
        return largest_components_many(params, streams, q_table)[:, 0]

    parts = _map_ordered(lambda j: one(starts[j]), len(starts), config.worker_count)
    return np.concatenate(parts).astype(np.int64)


def graph_largest_sample(config: ExperimentConfig, offset: int) -> np.ndarray:
    """L1 of directly sampled graphs drawn from streams ``offset .. offset+R-1``."""
    params = config.params
    pairs = np.triu_indices(params.n, k=1)

    def one(i):
        return sample_graph(params.n, params.p, seed_stream(config.master_seed, offset + i), pairs)[0]

    return np.array(_map_ordered(one, config.replicas, config.worker_count), dtype=np.int64)


def validate(config: ExperimentConfig) -> ValidationReport:
    """Compare the walk's law of L1 against an independent oracle.

    ``validate_enum`` tests R walk replicas against the exact pmf by a pooled
    chi-square test. ``validate_graph`` draws R walks (streams 0..R-1) and R
    direct graphs (streams R..2R-1) and compares them by two-sample KS.
    """
    if config.mode == "validate_enum":
        walk = walk_largest_sample(config)
        exact = enumerate_pmf(config.params.n, config.params.p)
        values, counts = np.unique(walk, return_counts=True)
        observed = {int(k): int(c) for k, c in zip(values, counts)}
        stat, dof, pooled = chi_square(observed, exact.mass)
        pval = chi_square_pvalue(stat, dof)
        return ValidationReport(
            config=config.echo(),
            method="chi_square",
            statistic=stat,
            threshold={"alpha": ALPHA, "dof": dof},
            p_value=pval,
            passed=pval > ALPHA,
            details={
                "observed": {str(k): v for k, v in sorted(observed.items())},
                "exact_pmf": {str(k): v for k, v in sorted(exact.mass.items())},
                "pooled_bins": [[list(k), o, e] for k, o, e in pooled],
            },
        )
    if config.mode == "validate_graph":
        walk = walk_largest_sample(config)
        graph = graph_largest_sample(config, offset=config.replicas)
        d = ks_two_sample(walk, graph)
        crit = ks_two_sample_critical(walk.size, graph.size, ALPHA)
        return ValidationReport(
            config=config.echo(),
            method="ks_two_sample",
            statistic=d,
            threshold={"alpha": ALPHA, "critical": crit},
            p_value=None,
            passed=d < crit,
            details={
                "walk_L1_mean": float(walk.mean()),
                "graph_L1_mean": float(graph.mean()),
                "walk_L1_var": float(walk.var(ddof=1)) if walk.size > 1 else 0.0,
                "graph_L1_var": float(graph.var(ddof=1)) if graph.size > 1 else 0.0,
            },
        )
    raise ConfigError(f"mode {config.mode!r} is not a validation mode")
