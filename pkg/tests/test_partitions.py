import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import FixedStream
from hmchaos.chaos import sample_A
from hmchaos.errors import BudgetError, PreconditionError
from hmchaos.partitions import (Partition, a_of_partition, diagonal_second_moment,
                                enumerate_partitions, exact_total_mass,
                                orthogonality_check, partition_count,
                                reconstruct_A_by_largest_part)
from hmchaos.rng import GaussianStream, Seed


def test_enumerate_empty_partition():
    only = list(enumerate_partitions(0))
    assert only == [Partition(())]
    assert only[0].total == 0


def test_enumerate_counts():
    assert len(list(enumerate_partitions(5))) == 7
    for n in range(0, 26):
        assert len(list(enumerate_partitions(n))) == partition_count(n)


def test_enumerate_bounded_parts():
    got = {p.parts for p in enumerate_partitions(4, max_part=2)}
    assert got == {(2, 2), (2, 1, 1), (1, 1, 1, 1)}


def test_enumeration_order_is_stable():
    order = [p.parts for p in enumerate_partitions(4)]
    assert order == [(1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,)]


def test_enumeration_cap():
    with pytest.raises(BudgetError):
        list(enumerate_partitions(41))


def test_partition_views_agree():
    p = Partition.of(3, 1, 3, 2)
    assert p.parts == (3, 3, 2, 1)
    assert p.multiplicities == {3: 2, 2: 1, 1: 1}
    assert p.total == 9
    assert sum(k * m for k, m in p.multiplicities.items()) == p.total


def test_a_of_partition_values():
    assert a_of_partition(Partition(()), {}) == 1.0
    x = 0.4 + 0.9j
    assert a_of_partition(Partition((1, 1)), {1: x}) == pytest.approx(x**2 / 2.0)
    y = -1.2 + 0.3j
    assert a_of_partition(Partition((2,)), {2: y}) == pytest.approx(y / math.sqrt(2.0))


def test_a_of_partition_missing_value():
    with pytest.raises(PreconditionError):
        a_of_partition(Partition((2, 1)), {1: 1.0})


def test_diagonal_second_moment_values():
    assert diagonal_second_moment(Partition((7,))) == Fraction(1, 7)
    assert diagonal_second_moment(Partition((2, 1))) == Fraction(1, 2)
    assert diagonal_second_moment(Partition((1, 1, 1))) == Fraction(1, 6)


def test_exact_total_mass_small():
    assert exact_total_mass(1) == 1
    # the three partitions of 3 contribute 1/3 + 1/2 + 1/6
    assert exact_total_mass(3) == Fraction(1, 3) + Fraction(1, 2) + Fraction(1, 6)
    assert exact_total_mass(3) == 1
    assert exact_total_mass(20) == 1


def _draw_x_map(seed, kmax):
    values = GaussianStream(Seed(seed)).draw(kmax)
    return {k: values[k - 1] for k in range(1, kmax + 1)}, values


def test_partition_sum_equals_sampler():
    for n in range(1, 11):
        x_map, values = _draw_x_map(500 + n, n)
        by_partitions = sum(a_of_partition(p, x_map) for p in enumerate_partitions(n))
        draw = sample_A(n, float(n), FixedStream(values))
        assert abs(by_partitions - draw.coefficient(n)) < 1e-10


@pytest.mark.parametrize("n", [4, 6, 10])
def test_partition_sum_second_moment_mc(n):
    # mean over draws of |sum_lambda a(lambda)|^2 should be 1
    samples = 10000
    parts = list(enumerate_partitions(n))
    x = GaussianStream(Seed(321 + n)).draw(samples * n).reshape(samples, n)
    total = np.zeros(samples, dtype=complex)
    for p in parts:
        term = np.ones(samples, dtype=complex)
        for k, m in p.multiplicities.items():
            term *= (x[:, k - 1] / math.sqrt(k)) ** m / math.factorial(m)
        total += term
    sq = np.abs(total) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(samples)
    assert abs(np.mean(sq) - 1.0) <= 4.0 * se


def test_reconstruct_by_largest_part_sums_to_A():
    x_map, values = _draw_x_map(77, 10)
    bands, smooth_rest, total = reconstruct_A_by_largest_part(10, 3, x_map)
    assert len(bands) == 3
    direct = sample_A(10, 10.0, FixedStream(values)).coefficient(10)
    assert abs(total - direct) < 1e-10


def test_reconstruct_single_part():
    x_map = {1: 0.7 - 0.2j}
    bands, smooth_rest, total = reconstruct_A_by_largest_part(1, 1, x_map)
    assert bands[0] == pytest.approx(x_map[1])
    assert smooth_rest == 0.0
    assert total == pytest.approx(x_map[1])


def test_smooth_rest_second_moment_matches_bounded_weight():
    # E|A~_J(N)|^2 equals the bounded-largest-part weight; N=12, J=2
    from hmchaos.series import smooth_partition_weight

    n, depth, samples = 12, 2, 10000
    x = GaussianStream(Seed(555)).draw(samples * n).reshape(samples, n)
    values = np.zeros(samples, dtype=complex)
    for p in enumerate_partitions(n, max_part=n // 2**depth):
        term = np.ones(samples, dtype=complex)
        for k, m in p.multiplicities.items():
            term *= (x[:, k - 1] / math.sqrt(k)) ** m / math.factorial(m)
        values += term
    sq = np.abs(values) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(samples)
    target = smooth_partition_weight(n, n // 2**depth)
    assert abs(np.mean(sq) - target) <= 4.0 * se


def test_orthogonality_distinct_partitions():
    for pair, samples in ((((2,), (1, 1)), 10**5),
                          (((1,), (2,)), 10**4),
                          (((3, 1), (2, 2)), 10**5)):
        est = orthogonality_check(Partition(pair[0]), Partition(pair[1]),
                                  samples, Seed(9000 + samples))
        assert est.mean <= 4.0 * est.std_error


def test_orthogonality_rejects_diagonal():
    with pytest.raises(PreconditionError):
        orthogonality_check(Partition((2, 1)), Partition((2, 1)), 100, Seed(1))
