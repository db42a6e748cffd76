import itertools
import math

import numpy as np
import pytest

from app.errors import IncompleteTableError, InvalidArgumentError
from app.models.rates import QMeasure, RateTable, XiAtom, XiSpec
from app.rules.tensors import diagonal_tensor, diagonal_tensors, pair_coalescence_tensor
from app.services.limit_service import kingman_rates
from app.services.xi_rates import (
    check_rate_monotonicity, check_reduced_consistency, complete_rates_by_consistency,
    lambda_coalescent_rates, q_measure_from_xi, qj_moment_check, total_binary_rate, xi_rate,
    xi_rate_table, xi_rates,
)


def test_single_atom_rates(xi_spec):
    assert xi_rate(xi_spec, diagonal_tensor([(2,), ()])) == pytest.approx(0.8)
    assert xi_rate(xi_spec, diagonal_tensor([(), (2,)])) == pytest.approx(0.2)
    assert xi_rate(xi_spec, diagonal_tensor([(2,), (2,)])) == pytest.approx(0.05)
    assert xi_rate(xi_spec, diagonal_tensor([(3,), ()])) == pytest.approx(0.4)


def test_distinct_coordinates_are_needed_for_simultaneous_mergers(xi_spec):
    # only one coordinate carries label 1
    assert xi_rate(xi_spec, diagonal_tensor([(2, 2), ()])) == 0.0


def test_kingman_part_only_acts_on_binary_mergers():
    spec = XiSpec(a=(3.0, 0.0))
    assert xi_rate(spec, diagonal_tensor([(2,), ()])) == 3.0
    assert xi_rate(spec, diagonal_tensor([(3,), ()])) == 0.0
    assert xi_rate(spec, diagonal_tensor([(2,), (2,)])) == 0.0


@pytest.mark.parametrize("T", [
    pair_coalescence_tensor(0, 0, 1, 2),
    diagonal_tensor([(2, 1), ()]),
    diagonal_tensor([(), ()]),
])
def test_formula_domain(xi_spec, T):
    with pytest.raises(InvalidArgumentError):
        xi_rate(xi_spec, T)


def test_atom_validation():
    with pytest.raises(InvalidArgumentError):
        XiAtom(mass=1.0, x=(0.2, 0.5), y=(0, 0))
    with pytest.raises(InvalidArgumentError):
        XiAtom(mass=1.0, x=(0.7, 0.6), y=(0, 0))
    with pytest.raises(InvalidArgumentError):
        XiAtom(mass=0.0, x=(0.5,), y=(0,))
    with pytest.raises(InvalidArgumentError):
        XiSpec(a=(0.0,), atoms=(XiAtom(mass=1.0, x=(0.5,), y=(1,)),))
    assert XiAtom(mass=1.0, x=(0.5, 0.0), y=(0,)).x == (0.5,)


def test_completion_of_a_single_type_kingman_table():
    table = lambda_coalescent_rates([[(2.0, 0.0)]], 3)
    assert table.rate(diagonal_tensor([(1,)])) == 0.0
    assert table.rate(diagonal_tensor([(1, 1)])) == pytest.approx(-2.0)
    assert table.rate(diagonal_tensor([(2, 1)])) == pytest.approx(2.0)
    assert table.rate(diagonal_tensor([(1, 1, 1)])) == pytest.approx(-6.0)
    assert table.rate(diagonal_tensor([(3,)])) == 0.0


def test_lambda_with_dirac_at_zero_is_kingman():
    lam = lambda_coalescent_rates([[(1.0, 0.0)], [(2.0, 0.0)]], 3)
    king = kingman_rates((1.0, 2.0))
    for total in range(1, 4):
        for T in diagonal_tensors(2, total):
            assert lam.rate(T) == pytest.approx(king.rate(T)), T.describe()


def test_beta_like_lambda_rates():
    table = lambda_coalescent_rates([[(0.5, 0.5), (0.5, 1.0)]], 3)
    assert table.rate(diagonal_tensor([(2,)])) == pytest.approx(1.0)
    assert table.rate(diagonal_tensor([(3,)])) == pytest.approx(0.75)
    assert table.rate(diagonal_tensor([(2, 1)])) == pytest.approx(0.25)


@pytest.mark.parametrize("depth", [2, 3, 4])
def test_completed_xi_table_is_consistent(xi_spec, depth):
    table = xi_rates(xi_spec, depth)
    report = check_reduced_consistency(table, 2, depth)
    assert report.passed, report.violations[:5]
    assert report.certified_depth == depth


def test_kingman_table_is_consistent():
    assert check_reduced_consistency(kingman_rates((1.0, 0.5, 2.0)), 3, 3).passed


def test_tampered_table_is_inconsistent(xi_spec):
    table = xi_rates(xi_spec, 3)
    broken = table.with_rates({diagonal_tensor([(2, 1), ()]): 5.0})
    assert not check_reduced_consistency(broken, 2, 3).passed


def test_completion_needs_every_base_rate():
    partial = RateTable(d=1, rates={diagonal_tensor([(2,)]): 1.0})
    with pytest.raises(IncompleteTableError) as excinfo:
        complete_rates_by_consistency(partial, 1, 3)
    assert excinfo.value.missing == [diagonal_tensor([(3,)]).describe()]


def test_rate_table_lookup_is_slot_order_free(xi_spec):
    table = xi_rates(xi_spec, 3)
    assert table.rate(diagonal_tensor([(1, 2), ()])) == table.rate(diagonal_tensor([(2, 1), ()]))
    assert table.rate(pair_coalescence_tensor(0, 0, 1, 2)) == 0.0


def test_rate_monotonicity(xi_spec):
    assert check_rate_monotonicity(xi_rate_table(xi_spec, 4), 2, 4).passed
    report = check_rate_monotonicity(xi_rates(xi_spec, 4), 2, 4, min_entry=1)
    assert report.passed, report.violations[:5]


def _single_type_rate(atom, sizes):
    x = atom.x
    total = sum(
        math.prod(x[m] ** i for m, i in zip(choice, sizes))
        for choice in itertools.permutations(range(len(x)), len(sizes))
    )
    return atom.mass * total / sum(v * v for v in x)


def test_single_type_rates_match_the_paintbox_sum():
    rng = np.random.default_rng(31)
    for _ in range(20):
        width = int(rng.integers(1, 5))
        x = sorted(rng.dirichlet(np.ones(width + 1))[:width], reverse=True)
        atom = XiAtom(mass=float(rng.uniform(0.5, 2.0)), x=tuple(x), y=(0,) * width)
        spec = XiSpec(a=(0.0,), atoms=(atom,))
        for total in range(2, 7):
            for T in diagonal_tensors(1, total, min_entry=2):
                expected = _single_type_rate(atom, T.diagonal_rows()[0])
                assert xi_rate(spec, T) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_total_binary_rate(xi_spec):
    assert total_binary_rate(xi_rates(xi_spec, 2)) == pytest.approx(1.0)


def test_q_measure_reproduces_rates(xi_spec):
    Q = q_measure_from_xi(xi_spec, (1, 1))
    for rows in ([(2,), (2,)], [(3,), (2,)], [(2,), (4,)]):
        T = diagonal_tensor(rows)
        integral, target = qj_moment_check(Q, T, xi_rate(xi_spec, T))
        assert integral == pytest.approx(target)


def test_q_measure_kingman_dirac():
    Q = q_measure_from_xi(XiSpec(a=(3.0, 0.0)), (1, 0))
    assert qj_moment_check(Q, diagonal_tensor([(2,), ()]))[0] == 3.0
    assert qj_moment_check(Q, diagonal_tensor([(3,), ()]))[0] == 0.0


def test_dirac_q_measure_moment():
    Q = QMeasure(j=(1,), points=((2.0, ((0.3,),)),))
    assert qj_moment_check(Q, diagonal_tensor([(4,)]))[0] == pytest.approx(0.18)
    with pytest.raises(InvalidArgumentError):
        qj_moment_check(Q, diagonal_tensor([(2, 2)]))
