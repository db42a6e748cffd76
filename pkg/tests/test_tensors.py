import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import InvalidArgumentError
from app.models.tensor import MergeTensor
from app.rules.tensors import (
    coalescence_extension, diagonal_tensor, diagonal_tensors, empty_tensor, increment,
    pair_coalescence_tensor, random_tensor, same_up_to_permutation, slot_permutations,
    strip_zero_slots, tensor_leq, twos_tensor, unit_tensor,
)


def test_cell_lengths_must_match_j():
    with pytest.raises(InvalidArgumentError):
        MergeTensor(d=1, j=(2,), entries=(((1,),),))
    with pytest.raises(InvalidArgumentError):
        MergeTensor(d=1, j=(1,), entries=(((-1,),),))


def test_empty_tensor_has_no_blocks():
    T0 = empty_tensor(3)
    assert T0.j == (0, 0, 0)
    assert T0.total == 0
    assert T0.describe() == "j=(0,0,0) T0"


def test_extension_and_increment():
    T = coalescence_extension(empty_tensor(2), 1, 0)
    assert T.j == (0, 1)
    assert T.cell(1, 0) == (1,) and T.cell(1, 1) == (0,)
    T = increment(T, 1, 1, 0)
    assert T.pair_counts() == ((0, 0), (1, 1))
    assert T.parent_counts() == (1, 1)
    assert T == pair_coalescence_tensor(1, 0, 1, 2)
    with pytest.raises(InvalidArgumentError):
        increment(T, 0, 0, 0)


def test_pair_coalescence_tensor_same_type():
    T = pair_coalescence_tensor(0, 1, 1, 2)
    assert T.j == (1, 0)
    assert T.cell(0, 1) == (2,)
    assert T.total == 2
    assert not T.is_diagonal


def test_unit_and_twos_tensors():
    assert unit_tensor((2, 1)).diagonal_rows() == ((1, 1), (1,))
    assert twos_tensor((1, 0)).diagonal_rows() == ((2,), ())
    assert unit_tensor((2, 1)).is_diagonal


def test_order_requires_smaller_j():
    small = diagonal_tensor([(1,), ()])
    big = diagonal_tensor([(2, 1), ()])
    assert tensor_leq(small, big)
    assert not tensor_leq(big, small)


def test_slot_permutations_are_cellwise():
    T = MergeTensor.from_cells(2, (2, 0), {(0, 0): (2, 0), (0, 1): (1, 1)})
    images = set(slot_permutations(T))
    assert len(images) == 2
    assert all(same_up_to_permutation(T, image) for image in images)


def test_canonical_sorts_slots_jointly():
    T = MergeTensor.from_cells(2, (2, 0), {(0, 0): (0, 1), (0, 1): (1, 0)})
    assert T.canonical().cell(0, 0) == (1, 0)
    assert T.canonical().cell(0, 1) == (0, 1)


def test_strip_zero_slots():
    T = diagonal_tensor([(2, 0, 1)])
    assert strip_zero_slots(T) == diagonal_tensor([(2, 1)])


def test_json_keys_are_one_based():
    T = pair_coalescence_tensor(0, 0, 1, 2)
    data = T.to_json()
    assert data['entries']['1,2'] == [1]
    assert MergeTensor.from_json(data) == T
    with pytest.raises(InvalidArgumentError):
        MergeTensor.from_json({'j': [1], 'entries': {'2,1': [1]}})


def test_diagonal_tensors_are_partitions_of_the_total():
    tensors = list(diagonal_tensors(1, 4, min_entry=2))
    assert sorted(T.diagonal_rows()[0] for T in tensors) == [(2, 2), (4,)]
    assert len(list(diagonal_tensors(2, 2))) == 5


@given(st.integers(1, 3), st.integers(0, 8), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_random_tensors_fill_every_slot(d, total, seed):
    T = random_tensor(d, total, np.random.default_rng(seed))
    assert T.total == total
    assert all(s >= 1 for k in range(d) for s in T.slot_totals(k))
