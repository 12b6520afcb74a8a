"""Streaming moments and goodness-of-fit statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps
from scipy.special import erfc

from .theory import TheoryValues


@dataclass
class MomentAccumulator:
    """Welford running moments; ``merge`` uses the Chan et al. pairwise update."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def update(self, x: float) -> "MomentAccumulator":
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        self.min = min(self.min, x)
        self.max = max(self.max, x)
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combine with another accumulator into a new one; neither input changes."""
        if other.count == 0:
            return MomentAccumulator(self.count, self.mean, self.m2, self.min, self.max)
        if self.count == 0:
            return MomentAccumulator(other.count, other.mean, other.m2, other.min, other.max)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return MomentAccumulator(count, mean, m2, min(self.min, other.min), max(self.max, other.max))

    @classmethod
    def of(cls, values) -> "MomentAccumulator":
        acc = cls()
        for x in values:
            acc.update(float(x))
        return acc

    @property
    def variance_defined(self) -> bool:
        return self.count >= 2

    @property
    def variance(self) -> float:
        """Unbiased sample variance; 0 when fewer than two values were seen."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "variance_defined": self.variance_defined,
            "min": self.min if self.count else None,
            "max": self.max if self.count else None,
        }


def update(acc: MomentAccumulator, x: float) -> MomentAccumulator:
    return acc.update(x)


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    return a.merge(b)


def standardize(L1, theory: TheoryValues):
    """(L1 - t1) / sigma, where t1 = ρn is the centring of the giant."""
    z = (np.asarray(L1, dtype=float) - theory.t1) / theory.sigma
    return z if np.ndim(L1) else float(z)


def normal_cdf(x):
    """Standard normal cdf via the complementary error function."""
    if np.ndim(x):
        return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def ks_critical(alpha: float) -> float:
    """Asymptotic Kolmogorov constant c(α) = sqrt(-ln(α/2)/2)."""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_one_sample(sample) -> float:
    """sup |ECDF - Φ| over a sorted (or unsorted) sample."""
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    if m == 0:
        raise ValueError("ks_one_sample needs a nonempty sample")
    cdf = normal_cdf(x)
    i = np.arange(1, m + 1)
    # compare against the ECDF just after and just before each jump
    return float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))


def ks_two_sample(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| for two samples; ties are handled exactly."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample_critical(m: int, k: int, alpha: float = 0.001) -> float:
    return ks_critical(alpha) * math.sqrt((m + k) / (m * k))


def chi_square(observed, expected_pmf, min_expected: float = 5.0):
    """Pearson statistic of observed counts against a pmf, with pooling.

    ``observed`` and ``expected_pmf`` are dicts keyed by outcome. Bins whose
    expected count falls below ``min_expected`` are merged into the adjacent
    bin (in key order) until every pooled bin reaches the threshold.
    Returns ``(statistic, dof, pooled_bins)`` where each pooled bin is a
    tuple ``(keys, observed, expected)``.
    """
    keys = sorted(set(expected_pmf) | set(observed))
    total = sum(observed.values())
    stray = [k for k in keys if expected_pmf.get(k, 0.0) == 0.0 and observed.get(k, 0)]
    if stray:
        return math.inf, max(len(keys) - 1, 0), []
    bins = [([k], observed.get(k, 0), total * expected_pmf.get(k, 0.0)) for k in keys
            if expected_pmf.get(k, 0.0) > 0.0]
    pooled = []
    for b in bins:
        if pooled and pooled[-1][2] < min_expected:
            prev = pooled.pop()
            b = (prev[0] + b[0], prev[1] + b[1], prev[2] + b[2])
        pooled.append(b)
    while len(pooled) > 1 and pooled[-1][2] < min_expected:
        last = pooled.pop()
        prev = pooled.pop()
        pooled.append((prev[0] + last[0], prev[1] + last[1], prev[2] + last[2]))
    stat = sum((o - e) ** 2 / e for _, o, e in pooled)
    dof = len(pooled) - 1
    return float(stat), dof, [(tuple(k), o, e) for k, o, e in pooled]


def chi_square_pvalue(stat: float, dof: int) -> float:
    if dof <= 0:
        # one pooled bin: observed and expected totals agree by construction
        return 1.0
    return float(_sps.chi2.sf(stat, dof))


@dataclass(frozen=True)
class HistogramBin:
    left: float
    right: float
    count: int


def histogram(sample, bin_count: int) -> list[HistogramBin]:
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("histogram of an empty sample")
    if bin_count < 1:
        raise ValueError("bin_count must be positive")
    counts, edges = np.histogram(x, bins=bin_count)
    return [HistogramBin(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bin_count)]


def write_histogram_csv(bins: list[HistogramBin], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("bin_left", "bin_right", "count"))
        for b in bins:
            writer.writerow((format(b.left, ".17g"), format(b.right, ".17g"), b.count))
