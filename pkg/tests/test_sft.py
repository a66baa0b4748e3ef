import numpy as np
import pytest

from mixlab.errors import InadmissibleWord, NotAperiodic, NotOnSameLeaf, PreconditionViolated, ZeroRowOrColumn
from mixlab.sft import (MetricConstant, TwoSidedPoint, agreement_index, build_shift, canonical_rotation, d_lambda,
                        enumerate_prime_orbits, last_difference, on_stable_leaf, on_unstable_leaf, same_point,
                        window_indices, word_lookup)


def test_build_shift_aperiodicity_power(full2, golden_shift):
    assert full2.aperiodicity_power == 1
    assert golden_shift.aperiodicity_power == 2


@pytest.mark.parametrize("matrix, error", [
    ([[0, 1], [1, 0]], NotAperiodic),
    ([[1, 0], [0, 0]], ZeroRowOrColumn),
    ([[1, 2], [1, 1]], ZeroRowOrColumn),
    ([[1, 1, 1], [1, 1, 1]], ZeroRowOrColumn),
])
def test_build_shift_rejects(matrix, error):
    with pytest.raises(error):
        build_shift(matrix)


def test_words_are_fibonacci_on_golden_shift(golden_shift):
    counts = [len(golden_shift.words(k)) for k in range(1, 8)]
    assert counts == [2, 3, 5, 8, 13, 21, 34]
    assert all(golden_shift.count_words(k) == c for k, c in zip(range(1, 8), counts))
    assert (0, 0) not in golden_shift.words(2)
    assert golden_shift.words(3) == sorted(golden_shift.words(3))


def test_periodic_count_is_lucas(golden_shift):
    assert [golden_shift.periodic_count(n) for n in range(1, 7)] == [1, 3, 4, 7, 11, 18]


def test_word_length_must_be_positive(full2):
    with pytest.raises(PreconditionViolated):
        full2.words(0)


def test_check_word(golden_shift):
    assert golden_shift.check_word([1, 0, 1]) == (1, 0, 1)
    with pytest.raises(InadmissibleWord):
        golden_shift.check_word([0, 0])


def test_small_necklaces(full2, golden_shift):
    assert [r.necklace for r in enumerate_prime_orbits(full2, 3)] == [(0,), (1,), (0, 1), (0, 0, 1), (0, 1, 1)]
    assert [r.necklace for r in enumerate_prime_orbits(golden_shift, 3)] == [(1,), (0, 1), (0, 1, 1)]


@pytest.mark.parametrize("fixture", ["full2", "golden_shift", "three_state"])
def test_necklace_counts_match_traces(fixture, request):
    shift = request.getfixturevalue(fixture)
    n_max = 10
    records = enumerate_prime_orbits(shift, n_max)
    per_length = {n: sum(1 for r in records if r.n == n) for n in range(1, n_max + 1)}
    for n in range(1, n_max + 1):
        # each prime orbit of length d | n contributes d periodic points of period n
        total = sum(d * per_length[d] for d in range(1, n + 1) if n % d == 0)
        assert total == shift.periodic_count(n)


def test_necklaces_are_canonical_and_independent_of_threads(three_state):
    serial = enumerate_prime_orbits(three_state, 7, threads=1)
    parallel = enumerate_prime_orbits(three_state, 7, threads=3)
    assert serial == parallel
    for record in serial:
        assert canonical_rotation(record.necklace) == record.necklace
        assert three_state.is_cyclic(record.necklace)


def test_canonical_rotation():
    assert canonical_rotation((1, 0, 1)) == (0, 1, 1)


def test_point_symbols_and_shift():
    x = TwoSidedPoint.periodic((0, 1))
    assert x.symbols(-2, 3) == (0, 1, 0, 1, 0)
    assert x.shifted(1).symbol(0) == 1
    assert x.shifted(3).shifted(-3) == x
    y = TwoSidedPoint((0,), (2, 3), (1,), offset=1)
    assert y.symbols(-3, 4) == (0, 0, 2, 3, 1, 1, 1)


def test_agreement_index_and_metric():
    x = TwoSidedPoint.periodic((0,))
    y = TwoSidedPoint((0,), (0, 0, 0, 1), (0,))
    assert agreement_index(x, y) == 3
    assert d_lambda(x, y, MetricConstant(0.5)) == pytest.approx(0.125)
    assert d_lambda(x, x.shifted(5), MetricConstant(0.5)) == 0.0
    assert same_point(x, TwoSidedPoint((0, 0), (0,), (0,)))


def test_metric_constant_range():
    with pytest.raises(PreconditionViolated):
        MetricConstant(1.0)


def test_leaf_membership():
    x = TwoSidedPoint.periodic((0,))
    ahead = TwoSidedPoint((0,), (0, 0, 0, 1), (0,))  # differs at index 3
    behind = TwoSidedPoint((0,), (1, 0, 0, 0), (0,), offset=3)  # differs at index -3
    assert on_stable_leaf(x, ahead)
    assert on_stable_leaf(x, ahead, 4)
    assert not on_stable_leaf(x, ahead, 3)
    assert on_unstable_leaf(x, behind, 4)
    assert not on_unstable_leaf(x, behind, 3)
    assert not on_stable_leaf(x, TwoSidedPoint.periodic((1,)))


def test_last_difference_requires_stable_leaf():
    with pytest.raises(NotOnSameLeaf):
        last_difference(TwoSidedPoint.periodic((0,)), TwoSidedPoint.periodic((1,)))


def test_check_point(golden_shift):
    golden_shift.check_point(TwoSidedPoint.periodic((0, 1)))
    with pytest.raises(InadmissibleWord):
        golden_shift.check_point(TwoSidedPoint.periodic((0,)))
    with pytest.raises(InadmissibleWord):
        golden_shift.check_point(TwoSidedPoint((1,), (0, 0), (1,)))


def test_window_indices(full2, golden_shift):
    symbols = np.array([[0, 1, 1], [1, 0, 0]])
    assert window_indices(full2, symbols, 1, 2).tolist() == [3, 0]
    assert window_indices(full2, symbols, np.array([0, 0]), 2).tolist() == [1, 2]
    lookup = word_lookup(golden_shift, 2)
    assert lookup.tolist() == [-1, 0, 1, 2]
