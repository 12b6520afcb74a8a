import json
from math import comb
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from giantwalk.errors import DomainError
from giantwalk.sampler import (
    ALGORITHM_ID,
    binomial,
    binomial_array,
    power_table,
    seed_stream,
    walk_binomial,
)

FIXTURE = Path(__file__).parent / "fixtures" / "golden_seed42.json"


def test_same_seed_same_sequence():
    a = seed_stream(123, 7).raw(1000)
    b = seed_stream(123, 7).raw(1000)
    assert a.tobytes() == b.tobytes()


def test_replicas_differ():
    a = seed_stream(123, 0).raw(1000)
    b = seed_stream(123, 1).raw(1000)
    assert np.any(a != b)


def test_golden_sequence():
    golden = json.loads(FIXTURE.read_text())
    assert golden["algorithm_id"] == ALGORITHM_ID
    s = seed_stream(golden["master_seed"], golden["replica_index"])
    assert [int(x) for x in s.raw(len(golden["raw64"]))] == golden["raw64"]
    s = seed_stream(42, 0)
    assert [s.uniform() for _ in golden["uniforms"]] == [float(x) for x in golden["uniforms"]]


def test_seed_range():
    with pytest.raises(DomainError):
        seed_stream(1, -1)
    with pytest.raises(DomainError):
        seed_stream(2**64, 0)


def test_degenerate_probabilities():
    s = seed_stream(5, 0)
    assert all(binomial(s, 17, 0.0) == 0 for _ in range(50))
    assert all(binomial(s, 5, 1.0) == 5 for _ in range(50))
    assert binomial(s, 0, 0.4) == 0


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_bad_probability(p):
    with pytest.raises(DomainError):
        binomial(seed_stream(1, 0), 3, p)


def test_inversion_moments():
    # mean mp = 30 sits exactly at the inversion limit
    x = binomial_array(seed_stream(2024, 0), 100, 0.3, 10**6)
    assert abs(x.mean() - 30) < 0.05
    assert abs(x.var() - 21) < 0.5


def test_rejection_path_moments():
    # mean 400 goes through the generator's BTPE sampler
    x = binomial_array(seed_stream(2024, 1), 1000, 0.4, 2 * 10**5)
    sd = np.sqrt(240.0)
    assert abs(x.mean() - 400) < 4 * sd / np.sqrt(x.size)
    assert 0 <= x.min() and x.max() <= 1000


@pytest.mark.parametrize("m", range(1, 7))
@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_exact_law_small_m(m, p):
    draws = binomial_array(seed_stream(99, 10 * m + int(4 * p)), m, p, 10**6)
    assert draws.min() >= 0 and draws.max() <= m
    observed = np.bincount(draws, minlength=m + 1)
    expected = np.array([comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(m + 1)]) * draws.size
    _, pval = stats.chisquare(observed, expected)
    assert pval > 0.001


def test_large_m_small_p_no_underflow():
    # the walk's regime: m ~ 1e6, p ~ 1e-6
    x = binomial_array(seed_stream(3, 0), 10**6, 1.5e-6, 10**5)
    assert abs(x.mean() - 1.5) < 4 * np.sqrt(1.5) / np.sqrt(x.size)


def test_power_table():
    table = power_table(0.3, 50)
    assert table[0] == 1.0
    assert np.allclose(table, 0.7 ** np.arange(51), rtol=1e-12)
    # p above one half is drawn as m - Bin(m, 1 - p), so the table holds p^j
    assert np.allclose(power_table(0.8, 10), 0.8 ** np.arange(11), rtol=1e-12)


def test_walk_binomial_matches_binomial_law():
    s = seed_stream(8, 0)
    x = np.array([walk_binomial(s, 200, 0.005, 400) for _ in range(20000)])
    assert abs(x.mean() - 1.0) < 4 / np.sqrt(x.size)
    # one uniform is spent even on an empty trial in the inversion regime
    a, b = seed_stream(8, 1), seed_stream(8, 1)
    assert walk_binomial(a, 0, 0.005, 400) == 0
    b.uniform()
    assert a.uniform() == b.uniform()
