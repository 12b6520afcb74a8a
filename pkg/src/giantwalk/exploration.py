"""Component exploration of G(n, p) as a random walk.

At each step the first active vertex (or, if there is none, the first unseen
vertex, which starts a new component) is explored: its edges to the ``U'``
remaining unseen vertices are revealed, so the number ``η`` of newly active
vertices is Bin(U', p) given the past. The component structure is a function
of the η sequence alone, so no graph is ever built.

Walk quantities after ``t`` steps:

* ``A`` active vertices, ``C`` components started, ``U = n - t - A`` unseen,
* ``X = A - C = sum(η_i - 1)``, which first hits ``-i`` when the i-th
  component is finished.

Alongside the walk we track the martingale decomposition
``X̃_t = x_t + (1-p)^t S_t`` with ``S_t = Σ (1-p)^{-i} Δ_i`` and
``Δ_i = η_i - 1 - E[η_i - 1 | past]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import ContractViolation
from .sampler import RngStream, power_table, walk_binomial, walk_draw, walk_draw_u, walk_plan
from .theory import (
    Params,
    TheoryValues,
    condvar_limit,
    crossing_index,
    diagnostic_times,
    theory_values,
)

CSV_HEADER = ("t", "eta", "A", "C", "U", "X", "Xtilde")


@dataclass(frozen=True)
class WalkState:
    t: int
    A: int
    U: int
    C: int

    @property
    def X(self) -> int:
        return self.A - self.C

    @classmethod
    def initial(cls, params: Params) -> "WalkState":
        return cls(t=0, A=0, U=params.n, C=0)


def step(state: WalkState, params: Params, stream: RngStream) -> tuple[WalkState, int]:
    """Advance the exploration by one vertex."""
    if state.t >= params.n:
        raise ContractViolation(f"walk already finished at t={state.t}")
    new_component = state.A == 0
    u_prime = state.U - 1 if new_component else state.U
    eta = walk_binomial(stream, u_prime, params.p, params.n)
    if new_component:
        A, C = eta, state.C + 1
    else:
        A, C = state.A + eta - 1, state.C
    t = state.t + 1
    return WalkState(t=t, A=A, U=params.n - t - A, C=C), eta


@dataclass
class Trajectory:
    params: Params
    eta: np.ndarray  # length n, eta[t-1] is η_t
    A: np.ndarray  # length n+1, indexed by t
    C: np.ndarray
    U: np.ndarray
    X: np.ndarray
    seed_info: tuple[int, int]

    @property
    def n(self) -> int:
        return self.params.n


@dataclass
class MartingaleSeries:
    """Per-step martingale quantities, all of length n+1 and indexed by t.

    Index 0 holds the empty-sum value 0 for every series.
    """

    D: np.ndarray
    Delta: np.ndarray
    S: np.ndarray
    Xtilde: np.ndarray
    condvar: np.ndarray


@dataclass
class ReplicaSummary:
    L1: int
    L2: int
    component_count: int
    Z: int
    T0: int
    T1: int
    sup_dev_Xtilde_f: float
    sup_coupling: float
    condvar_sum_ratio: float
    Xtilde_at_t1: float
    local_slope_dev: float
    T1_censored: bool = False
    replica_index: int = field(default=-1, compare=False)


@numba.njit(cache=True, nogil=True)
def _walk_path(rng, n, p, q_table):
    eta_out = np.empty(n, dtype=np.int64)
    A_out = np.empty(n + 1, dtype=np.int64)
    C_out = np.empty(n + 1, dtype=np.int64)
    A = 0
    C = 0
    A_out[0] = 0
    C_out[0] = 0
    flip, ratio, fast = walk_plan(n, p)
    for t in range(n):
        U = n - t - A
        if A == 0:
            eta = walk_draw(rng, U - 1, p, q_table, flip, ratio, fast)
            C += 1
            A = eta
        else:
            eta = walk_draw(rng, U, p, q_table, flip, ratio, fast)
            A += eta - 1
        eta_out[t] = eta
        A_out[t + 1] = A
        C_out[t + 1] = C
    return eta_out, A_out, C_out


@numba.njit(cache=True, nogil=True)
def _walk_summary(rng, n, p, q_table, t0, t1i, a, sigma0):
    q = 1.0 - p
    track = q > 0.0
    # martingale bookkeeping stops once T1 and the window around t1 are behind
    live = track
    A = 0
    C = 0
    t = 0
    r = 1.0
    S = 0.0
    decay = math.exp(-p)
    e = 1.0
    last_zero = 0
    L1 = 0
    L2 = 0
    finished = 0
    Z = 0
    T0 = 0
    T1 = -1
    sup_dev = 0.0
    sup_coup = 0.0
    sup_coup_T1 = 0.0
    condvar_sum = 0.0
    Xt_t1 = 0.0
    lo = max(0, t1i - t0)
    hi = min(n, t1i + t0)
    buf = np.zeros(hi - lo + 1)
    flip, ratio, fast = walk_plan(n, p)
    for _ in range(n):
        # a new component starts exactly when nothing is active; kept
        # branch-free since this is the hot loop
        start = 1 if A == 0 else 0
        Up = n - t - A - start
        D = p * Up - 1.0
        eta = walk_draw(rng, Up, p, q_table, flip, ratio, fast)
        C += start
        A += eta - 1 + start
        t += 1
        X = A - C
        if live:
            r *= q
            S += (eta - 1 - D) / r
            Xt = (n - t - n * r) + r * S
            if t <= t1i:
                condvar_sum += p * q * Up / (r * r)
                e *= decay
                dev = abs(Xt - (n - t - n * e))
                if dev > sup_dev:
                    sup_dev = dev
            if t == t1i:
                Xt_t1 = Xt
            if lo <= t <= hi:
                buf[t - lo] = Xt
            dev = abs(X - Xt)
            if dev > sup_coup:
                sup_coup = dev
        if A == 0:
            finished += 1
            size = t - last_zero
            last_zero = t
            if size > L1:
                L2 = L1
                L1 = size
            elif size > L2:
                L2 = size
            if t <= t0:
                Z = finished
                T0 = t
            elif T1 < 0:
                T1 = t
                sup_coup_T1 = sup_coup
        if live and T1 >= 0 and t >= hi:
            live = False
    censored = T1 < 0
    if censored:
        T1 = n
        sup_coup_T1 = sup_coup
    local = 0.0
    if track and lo <= t1i <= hi:
        ref = buf[t1i - lo]
        for s in range(lo, hi + 1):
            dev = abs(buf[s - lo] - ref - a * (t1i - s))
            if dev > local:
                local = dev
        local /= sigma0
    if not track:
        sup_dev = math.nan
        sup_coup_T1 = math.nan
        condvar_sum = math.nan
        Xt_t1 = math.nan
        local = math.nan
    return (L1, L2, finished, Z, T0, T1, censored,
            sup_dev, sup_coup_T1, condvar_sum, Xt_t1, local)


@numba.njit(cache=True, inline="always")
def _components_step(A, t, last_zero, L1, L2, count, eta):
    A += eta - 1 + (1 if A == 0 else 0)
    if A == 0:
        count += 1
        size = t + 1 - last_zero
        last_zero = t + 1
        if size > L1:
            L2 = L1
            L1 = size
        elif size > L2:
            L2 = size
    return A, last_zero, L1, L2, count


@numba.njit(cache=True, nogil=True)
def _walk_components(rng, n, p, q_table):
    flip, ratio, fast = walk_plan(n, p)
    A = 0
    last_zero = 0
    L1 = 0
    L2 = 0
    count = 0
    for t in range(n):
        start = 1 if A == 0 else 0
        eta = walk_draw(rng, n - t - A - start, p, q_table, flip, ratio, fast)
        A, last_zero, L1, L2, count = _components_step(A, t, last_zero, L1, L2, count, eta)
    return L1, L2, count


@numba.njit(cache=True, nogil=True)
def _walk_components_batch(uniforms, n, p, q_table):
    # row r holds the n uniforms a fast-regime walk would read from stream r
    flip, ratio, _ = walk_plan(n, p)
    out = np.empty((uniforms.shape[0], 3), dtype=np.int64)
    for r in range(uniforms.shape[0]):
        A = 0
        last_zero = 0
        L1 = 0
        L2 = 0
        count = 0
        for t in range(n):
            start = 1 if A == 0 else 0
            eta = walk_draw_u(uniforms[r, t], n - t - A - start, q_table, flip, ratio)
            A, last_zero, L1, L2, count = _components_step(A, t, last_zero, L1, L2, count, eta)
        out[r, 0] = L1
        out[r, 1] = L2
        out[r, 2] = count
    return out


def largest_components(params: Params, stream: RngStream, q_table: np.ndarray | None = None):
    """(L1, L2, component count) of one walk, for any p in [0, 1]."""
    if q_table is None:
        q_table = power_table(params.p, params.n)
    L1, L2, count = _walk_components(stream.generator, params.n, params.p, q_table)
    return int(L1), int(L2), int(count)


def largest_components_many(params: Params, streams, q_table: np.ndarray | None = None) -> np.ndarray:
    """Rows of (L1, L2, component count), one per stream, in stream order.

    Gives the same values as :func:`largest_components` on each stream. When
    every draw is an inversion, each walk reads exactly n uniforms, so the
    uniforms are drawn up front per stream and all walks run in one kernel
    call; this avoids a costly per-call dispatch for tiny n.
    """
    if q_table is None:
        q_table = power_table(params.p, params.n)
    streams = list(streams)
    if not walk_plan(params.n, params.p)[2]:
        return np.array([largest_components(params, s, q_table) for s in streams], dtype=np.int64).reshape(-1, 3)
    uniforms = np.empty((len(streams), params.n))
    for r, s in enumerate(streams):
        uniforms[r] = s.generator.random(params.n)
    return _walk_components_batch(uniforms, params.n, params.p, q_table)


def run_walk(params: Params, stream: RngStream, q_table: np.ndarray | None = None) -> Trajectory:
    """Run all n exploration steps and record the sample path."""
    if q_table is None:
        q_table = power_table(params.p, params.n)
    eta, A, C = _walk_path(stream.generator, params.n, params.p, q_table)
    t = np.arange(params.n + 1, dtype=np.int64)
    return Trajectory(
        params=params,
        eta=eta,
        A=A,
        C=C,
        U=params.n - t - A,
        X=A - C,
        seed_info=(stream.master_seed, stream.replica_index),
    )


def zero_times(traj: Trajectory) -> np.ndarray:
    """Times 0 = t_0 < t_1 < ... < t_k = n with no active vertices."""
    return np.flatnonzero(traj.A == 0)


def component_sizes(traj: Trajectory) -> list[int]:
    """Component sizes in decreasing order, read off the gaps between zero times."""
    sizes = np.diff(zero_times(traj))
    return sorted(sizes.tolist(), reverse=True)


def martingale_series(traj: Trajectory) -> MartingaleSeries:
    n, p = traj.n, traj.params.p
    q = 1.0 - p
    A, U = traj.A, traj.U
    u_prime = U[:-1] - (A[:-1] == 0)
    zero = np.zeros(1)
    D = np.concatenate([zero, p * u_prime - 1.0])
    Delta = np.concatenate([zero, traj.eta - 1 - D[1:]])
    # (1-p)^t by repeated multiplication, matching the walk kernel
    r = np.concatenate([[1.0], np.cumprod(np.full(n, q))])
    t = np.arange(n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.cumsum(Delta / r)
        Xtilde = (n - t - n * r) + r * S
        condvar = np.concatenate([zero, p * q * u_prime / r[1:] ** 2])
    if q == 0.0:
        S[1:] = Xtilde[1:] = condvar[1:] = np.nan
    return MartingaleSeries(D=D, Delta=Delta, S=S, Xtilde=Xtilde, condvar=condvar)


def summarize_replica(
    traj: Trajectory,
    theory: TheoryValues,
    series: MartingaleSeries | None = None,
) -> ReplicaSummary:
    """Giant-component diagnostics computed from a stored trajectory."""
    params = traj.params
    n = params.n
    if series is None:
        series = martingale_series(traj)
    diag = diagnostic_times(params)
    t0 = diag.t0
    t1i = crossing_index(params, theory)
    zeros = zero_times(traj)
    sizes = np.sort(np.diff(zeros))[::-1]
    L1 = int(sizes[0])
    L2 = int(sizes[1]) if len(sizes) > 1 else 0

    Z = int(-traj.X[: t0 + 1].min())
    T0 = int(zeros[Z])
    censored = Z + 1 >= len(zeros)
    T1 = n if censored else int(zeros[Z + 1])

    Xt = series.Xtilde
    ts = np.arange(t1i + 1)
    f = n - ts - n * np.exp(-params.p * ts)
    sup_dev = float(np.max(np.abs(Xt[: t1i + 1] - f)))
    sup_coup = float(np.max(np.abs(traj.X[: T1 + 1] - Xt[: T1 + 1])))
    condvar_ratio = float(series.condvar[1 : t1i + 1].sum()) / condvar_limit(params, theory)
    lo, hi = max(0, t1i - t0), min(n, t1i + t0)
    window = np.arange(lo, hi + 1)
    local = np.abs(Xt[lo : hi + 1] - Xt[t1i] - theory.a * (t1i - window)).max() / diag.sigma0

    return ReplicaSummary(
        L1=L1,
        L2=L2,
        component_count=len(sizes),
        Z=Z,
        T0=T0,
        T1=T1,
        sup_dev_Xtilde_f=sup_dev,
        sup_coupling=sup_coup,
        condvar_sum_ratio=condvar_ratio,
        Xtilde_at_t1=float(Xt[t1i]),
        local_slope_dev=float(local),
        T1_censored=bool(censored),
        replica_index=traj.seed_info[1],
    )


def simulate_summary(
    params: Params,
    stream: RngStream,
    theory: TheoryValues | None = None,
    q_table: np.ndarray | None = None,
) -> ReplicaSummary:
    """Run one replica without storing its path and return its summary.

    Consumes the stream exactly like :func:`run_walk`, so both give the
    same summary for the same seed.
    """
    if theory is None:
        theory = theory_values(params)
    if q_table is None:
        q_table = power_table(params.p, params.n)
    diag = diagnostic_times(params)
    t1i = crossing_index(params, theory)
    (L1, L2, count, Z, T0, T1, censored,
     sup_dev, sup_coup, condvar_sum, xt1, local) = _walk_summary(
        stream.generator, params.n, params.p, q_table, diag.t0, t1i, theory.a, diag.sigma0
    )
    return ReplicaSummary(
        L1=int(L1),
        L2=int(L2),
        component_count=int(count),
        Z=int(Z),
        T0=int(T0),
        T1=int(T1),
        sup_dev_Xtilde_f=float(sup_dev),
        sup_coupling=float(sup_coup),
        condvar_sum_ratio=float(condvar_sum) / condvar_limit(params, theory),
        Xtilde_at_t1=float(xt1),
        local_slope_dev=float(local),
        T1_censored=bool(censored),
        replica_index=stream.replica_index,
    )


def write_trajectory_csv(traj: Trajectory, path, series: MartingaleSeries | None = None) -> None:
    """One row per step t = 1..n; Xtilde written with 17 significant digits."""
    if series is None:
        series = martingale_series(traj)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for t in range(1, traj.n + 1):
            writer.writerow((
                t,
                int(traj.eta[t - 1]),
                int(traj.A[t]),
                int(traj.C[t]),
                int(traj.U[t]),
                int(traj.X[t]),
                format(float(series.Xtilde[t]), ".17g"),
            ))


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(CSV_HEADER)
    out = {}
    for name, col in zip(CSV_HEADER, cols):
        dtype = float if name == "Xtilde" else np.int64
        out[name] = np.array(col, dtype=dtype)
    return out


def check_path_identities(columns: dict[str, np.ndarray], n: int) -> list[str]:
    """Recheck the exact walk identities on a dumped trajectory.

    Returns a list of human-readable violations; empty means the file is
    consistent: ``X_t = Σ(η_i - 1)``, ``X = A - C``, ``U = n - t - A`` and
    ``X_n = -(number of components)``.
    """
    problems = []
    t, eta, A, C, U, X = (columns[k] for k in CSV_HEADER[:6])
    if len(t) != n or not np.array_equal(t, np.arange(1, n + 1)):
        problems.append("rows do not cover t = 1..n")
        return problems
    bad = np.flatnonzero(np.cumsum(eta - 1) != X)
    if bad.size:
        problems.append(f"X != cumulative sum of (eta - 1) at t={int(t[bad[0]])}")
    bad = np.flatnonzero(A - C != X)
    if bad.size:
        problems.append(f"X != A - C at t={int(t[bad[0]])}")
    bad = np.flatnonzero(U != n - t - A)
    if bad.size:
        problems.append(f"U != n - t - A at t={int(t[bad[0]])}")
    components = int(np.count_nonzero(A == 0))
    if X[-1] != -components:
        problems.append(f"X_n={int(X[-1])} but {components} components finished")
    return problems
