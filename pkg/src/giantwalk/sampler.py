"""Seeded random streams and exact binomial variates.

Every random number in the package comes from an :class:`RngStream`.
A stream wraps a PCG64 generator whose seed is derived from
``(master_seed, replica_index)`` through :class:`numpy.random.SeedSequence`:
the replica index becomes the spawn key, which hashes it together with the
master seed so that streams for different replicas are statistically
independent and reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError

ALGORITHM_ID = "pcg64-seedsequence-v1"

# at or below this mean, inversion by sequential search is used
INVERSION_MAX_MEAN = 30.0

_SEED_MASK = (1 << 64) - 1


@dataclass
class RngStream:
    master_seed: int
    replica_index: int
    generator: np.random.Generator
    algorithm_id: str = ALGORITHM_ID

    def raw(self, k: int) -> np.ndarray:
        """Next ``k`` raw 64-bit outputs of the underlying bit generator."""
        return self.generator.bit_generator.random_raw(k)

    def uniform(self) -> float:
        return float(self.generator.random())


def seed_stream(master_seed: int, replica_index: int) -> RngStream:
    if replica_index < 0:
        raise DomainError(f"replica_index must be >= 0, got {replica_index}")
    if not 0 <= master_seed <= _SEED_MASK:
        raise DomainError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replica_index),))
    gen = np.random.Generator(np.random.PCG64(seq))
    return RngStream(int(master_seed), int(replica_index), gen)


@numba.njit(cache=True, inline="always")
def _invert(u, m, ratio, q0):
    # Sequential search through the Bin(m, p) cdf for the uniform u, starting
    # at q0 = (1-p)^m with ratio = p/(1-p). Requires 0 < p <= 1/2 and a mean
    # small enough that q0 does not underflow.
    k = 0
    pk = q0
    cdf = pk
    while u > cdf and k < m:
        pk *= ratio * (m - k) / (k + 1)
        k += 1
        cdf += pk
    return k


@numba.njit(cache=True, inline="always")
def _draw(rng, m, p, q_table):
    """Bin(m, p) draw. ``q_table[j]`` must hold (1 - min(p, 1-p))^j, or be
    empty, in which case the leading probability is computed on the spot."""
    if m == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return m
    flip = p > 0.5
    pe = 1.0 - p if flip else p
    if m * pe <= INVERSION_MAX_MEAN:
        if q_table.shape[0] > m:
            q0 = q_table[m]
        else:
            q0 = math.exp(m * math.log1p(-pe))
        k = _invert(rng.random(), m, pe / (1.0 - pe), q0)
    else:
        k = rng.binomial(m, pe)
    return m - k if flip else k


@numba.njit(cache=True, inline="always")
def walk_plan(n, p):
    """Loop invariants for :func:`walk_draw`: (flip, ratio, fast).

    ``fast`` means every draw Bin(m, p) with m <= n can use inversion
    against a precomputed power table.
    """
    flip = p > 0.5
    pe = 1.0 - p if flip else p
    fast = 0.0 < pe and n * pe <= INVERSION_MAX_MEAN
    ratio = pe / (1.0 - pe) if fast else 0.0
    return flip, ratio, fast


@numba.njit(cache=True, inline="always")
def walk_draw(rng, m, p, q_table, flip, ratio, fast):
    """Same law as :func:`_draw` with the per-call setup hoisted out.

    In the fast regime exactly one uniform is consumed per call, even when
    ``m == 0``, so a walk of n steps reads exactly n uniforms.
    """
    if fast:
        return walk_draw_u(rng.random(), m, q_table, flip, ratio)
    return _draw(rng, m, p, q_table)


@numba.njit(cache=True, inline="always")
def walk_draw_u(u, m, q_table, flip, ratio):
    if m == 0:
        return 0
    k = _invert(u, m, ratio, q_table[m])
    return m - k if flip else k


@numba.njit(cache=True)
def _walk_draw_one(rng, m, p, n):
    flip, ratio, fast = walk_plan(n, p)
    if fast:
        pe = 1.0 - p if flip else p
        q = np.empty(m + 1)
        q[m] = math.exp(m * math.log1p(-pe))
        return walk_draw_u(rng.random(), m, q, flip, ratio)
    return _draw(rng, m, p, np.empty(0))


def walk_binomial(stream: RngStream, m: int, p: float, n: int) -> int:
    """Bin(m, p) draw for step m of a walk on n vertices.

    Same law as :func:`binomial`; it differs only in consuming one uniform
    even when ``m == 0`` whenever the walk runs in the inversion regime, which
    keeps a step-by-step walk in lockstep with the compiled one.
    """
    _check_args(m, p)
    return int(_walk_draw_one(stream.generator, int(m), float(p), int(n)))


@numba.njit(cache=True)
def _draw_one(rng, m, p):
    return _draw(rng, m, p, np.empty(0))


@numba.njit(cache=True)
def _draw_many(rng, m, p, size):
    out = np.empty(size, dtype=np.int64)
    empty = np.empty(0)
    for i in range(size):
        out[i] = _draw(rng, m, p, empty)
    return out


@numba.njit(cache=True)
def power_table(p, n):
    """``(1 - min(p, 1-p))^j`` for j = 0..n, each as exp(j*log1p(-pe))."""
    pe = 1.0 - p if p > 0.5 else p
    out = np.empty(n + 1)
    lg = math.log1p(-pe)
    for j in range(n + 1):
        out[j] = math.exp(j * lg)
    return out


def _check_args(m: int, p: float) -> None:
    if m < 0:
        raise DomainError(f"m must be non-negative, got {m}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


def binomial(stream: RngStream, m: int, p: float) -> int:
    """One exact Bin(m, p) variate.

    Means up to 30 use inversion by sequential search (the only path the
    walk ever needs, since its means never exceed λ); larger means fall
    back to the BTPE rejection sampler of the underlying generator.
    """
    _check_args(m, p)
    return int(_draw_one(stream.generator, int(m), float(p)))


def binomial_array(stream: RngStream, m: int, p: float, size: int) -> np.ndarray:
    """``size`` independent Bin(m, p) variates, drawn as repeated :func:`binomial`."""
    _check_args(m, p)
    return _draw_many(stream.generator, int(m), float(p), int(size))
