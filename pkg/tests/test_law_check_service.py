from fractions import Fraction as F

import pytest

from app.errors import DomainViolationError, IncompleteTableError, InvalidArgumentError
from app.models.population import CanningsModel, WrightFisherLaw
from app.models.reports import PpfTable
from app.models.tensor import MergeTensor
from app.rules.tensors import coalescence_extension, empty_tensor
from app.services.law_check_service import (
    check_coalescence_bounds, check_consistency, check_identity_limit, check_meppf,
    check_monotonicity, check_natural_coupling, check_permutation_symmetry, law_check_tensors,
    pair_coalescence_tensors, ppf_table_from_model, tends_to_zero, trend,
)
from app.services.offspring_service import strong_mutation_model, weak_mutation_model


@pytest.mark.parametrize("fixture,depth", [
    ("wf_model", 3),
    ("mutation_model", 3),
    ("strong_model", 3),
    pytest.param("wf_model", 4, marks=pytest.mark.slow),
    pytest.param("mutation_model", 4, marks=pytest.mark.slow),
])
def test_consistency_holds_exactly(request, fixture, depth):
    report = check_consistency(request.getfixturevalue(fixture), depth)
    assert report.passed, report.violations[:5]
    assert report.worst_residual == 0
    assert report.certified_depth == depth


def test_consistency_at_the_empty_tensor_is_normalization(wf_model):
    report = check_consistency(wf_model, 1)
    assert report.passed
    # T0 with l = 1 and l = 2, plus the l-independence of both sums
    assert report.cases_checked == 3


@pytest.mark.parametrize("fixture,depth", [
    ("wf_model", 2),
    ("mutation_model", 2),
    pytest.param("wf_model", 4, marks=pytest.mark.slow),
    pytest.param("mutation_model", 4, marks=pytest.mark.slow),
])
def test_monotonicity(request, fixture, depth):
    report = check_monotonicity(request.getfixturevalue(fixture), depth)
    assert report.passed, report.violations[:5]


@pytest.mark.parametrize("n,m", [(2, 1), (3, 2), (3, 1), pytest.param(4, 3, marks=pytest.mark.slow)])
def test_natural_coupling(wf_model, n, m):
    assert check_natural_coupling(wf_model, n, m).passed


def test_natural_coupling_for_mutation(mutation_model):
    assert check_natural_coupling(mutation_model, 3, 2).passed


def test_natural_coupling_arguments(wf_model):
    with pytest.raises(InvalidArgumentError):
        check_natural_coupling(wf_model, 2, 3)


@pytest.mark.parametrize("fixture", ["wf_model", "mutation_model"])
def test_permutation_symmetry(request, fixture):
    report = check_permutation_symmetry(request.getfixturevalue(fixture), 3)
    assert report.passed, report.violations[:5]


def test_permutation_symmetry_is_capped(wf_model):
    with pytest.raises(InvalidArgumentError):
        check_permutation_symmetry(wf_model, 5)


def test_law_check_tensors_stay_in_domain(wf_model):
    tensors = law_check_tensors(wf_model, 3)
    assert tensors[0] == empty_tensor(2)
    assert all(T.parent_counts()[0] <= 4 and T.parent_counts()[1] <= 6 for T in tensors)
    assert max(T.total for T in tensors) == 3


def test_trend_labels():
    assert trend([0.5, 0.5, 0.5]) == "flat"
    assert trend([0.3, 0.2, 0.1]) == "decreasing"
    assert trend([0.3, 0.4, 0.1]) == "mixed"
    assert tends_to_zero([0.1, 0.01, 0.001])
    assert tends_to_zero([0.0, 0.0])
    assert not tends_to_zero([0.775, 0.7625, 0.756])


def test_weak_mutation_sequence_tends_to_identity():
    models = [weak_mutation_model((m, 2 * m)) for m in (10, 100, 1000)]
    report = check_identity_limit(models)
    assert report.passed, report.violations
    assert report.details['criterion_satisfied']
    assert report.details['converges_to_identity']
    assert report.details['trends']['entries'] == "decreasing"


def test_strong_mutation_sequence_stays_away_from_identity():
    models = [strong_mutation_model(M, 2) for M in (10, 20, 40)]
    report = check_identity_limit(models)
    assert report.passed, report.violations
    assert not report.details['criterion_satisfied']
    assert not report.details['converges_to_identity']
    assert report.details['offidentity_entries'] == [0.5, 0.5, 0.5]
    assert report.details['criterion_residuals'][0] == pytest.approx(0.775)


def test_identity_limit_arguments(wf_model):
    with pytest.raises(InvalidArgumentError):
        check_identity_limit([wf_model])
    tiny = CanningsModel(N=(1, 3), law=WrightFisherLaw(counts=((1, 1), (0, 2))))
    with pytest.raises(DomainViolationError):
        check_identity_limit([tiny, wf_model])


def test_model_table_satisfies_meppf(wf_model):
    report = check_meppf(ppf_table_from_model(wf_model, 3))
    assert report.passed, report.violations[:5]
    assert report.first_failure is None
    assert report.details['axioms'] == {'normalization': True, 'symmetry': True, 'consistency': True}
    assert report.certified_depth == 3


def _tampered(table, T, delta=F(1, 1000)):
    values = dict(table.values)
    values[T] = values[T] + delta
    return PpfTable(d=table.d, values=values, depth=table.depth)


def test_meppf_reports_normalization_first(wf_model):
    table = ppf_table_from_model(wf_model, 2)
    report = check_meppf(_tampered(table, empty_tensor(2)))
    assert report.first_failure == "normalization"


def test_meppf_detects_asymmetry(wf_model):
    table = ppf_table_from_model(wf_model, 3)
    T = MergeTensor.from_cells(2, (2, 0), {(0, 0): (1, 2)})
    assert T in table.values
    report = check_meppf(_tampered(table, T))
    assert report.first_failure == "symmetry"
    assert report.details['axioms']['normalization']


def test_meppf_detects_inconsistency(wf_model):
    table = ppf_table_from_model(wf_model, 3)
    leaf = coalescence_extension(empty_tensor(2), 1, 0)
    report = check_meppf(_tampered(table, leaf))
    assert report.first_failure == "consistency"
    assert report.details['axioms']['symmetry']


def test_meppf_needs_a_closed_table(wf_model):
    table = ppf_table_from_model(wf_model, 2)
    values = {T: v for T, v in table.values.items() if T.total < 2}
    with pytest.raises(IncompleteTableError) as excinfo:
        check_meppf(PpfTable(d=2, values=values, depth=2))
    assert excinfo.value.missing


def test_table_depth_is_bounded_by_population(wf_model):
    with pytest.raises(DomainViolationError):
        ppf_table_from_model(wf_model, 5)


def test_coalescence_bounds(wf_model):
    assert check_coalescence_bounds(wf_model).passed


def test_pair_coalescence_tensors_count():
    assert len(pair_coalescence_tensors(2)) == 6
    assert len(pair_coalescence_tensors(3)) == 18
