from fractions import Fraction as F

import numpy as np
import pytest

from app.errors import DomainViolationError, IncompleteTableError, InvalidArgumentError
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel, WrightFisherLaw
from app.models.rates import RateTable
from app.rules.tensors import diagonal_tensor
from app.services.ancestral_service import transition_matrix
from app.services.limit_service import (
    calibration_weights, discrete_limit_matrix, first_jump_statistics, kingman_rates,
    limit_generator, rho_from_model, simulate_coalescent, simulate_coalescent_replicates,
    standard_scaling, strong_mutation_expansion, strong_mutation_generator,
    strong_mutation_transition, weak_mutation_convergence,
)
from app.services.offspring_service import scaled_model, weak_mutation_model
from app.services.xi_rates import xi_rate_table, xi_rates

PI1, PI2, PI3, PI4, PI5, PI6 = (
    LabeledPartition.parse(text, 2)
    for text in ("1,2:1", "1,2:2", "1:1|2:1", "1:1|2:2", "1:2|2:1", "1:2|2:2")
)


def test_standard_scaling(wf_model, single_type_wf):
    assert standard_scaling(wf_model) == F(1, 8)
    assert standard_scaling(single_type_wf) == F(1, 5)


def test_mutation_scaling_vanishes(mutation_model, caplog):
    assert standard_scaling(mutation_model) == 0
    assert "Standard scaling is 0" in caplog.text


def test_scaling_needs_two_individuals_per_type():
    model = CanningsModel(N=(1, 3), law=WrightFisherLaw(counts=((1, 1), (0, 2))))
    with pytest.raises(DomainViolationError):
        standard_scaling(model)


def test_kingman_generator_for_two_individuals():
    Q = limit_generator(kingman_rates((1.0, 0.0)), 2)
    assert Q.rate(PI3, PI1) == 1.0
    assert Q.rate(PI4, PI1) == 0.0
    assert Q.rate(PI6, PI2) == 0.0
    assert Q.rate(PI3, PI3) == -1.0
    assert all(total == pytest.approx(0.0) for total in Q.row_sums())


def test_kingman_rates_on_tensors():
    rates = kingman_rates((2.0, 0.5))
    assert rates.rate(diagonal_tensor([(2, 1), (1,)])) == 2.0
    assert rates.rate(diagonal_tensor([(1,), (2,)])) == 0.5
    assert rates.rate(diagonal_tensor([(1, 1), (1, 1)])) == -2.5
    assert rates.rate(diagonal_tensor([(2, 2), ()])) == 0.0
    assert rates.rate(diagonal_tensor([(3,), ()])) == 0.0
    with pytest.raises(InvalidArgumentError):
        kingman_rates((1.0, -1.0))


def test_xi_generator_rows_sum_to_zero(xi_spec):
    Q = limit_generator(xi_rates(xi_spec, 3), 3)
    assert Q.size == 22
    assert all(abs(total) < 1e-12 for total in Q.row_sums())
    assert (Q.as_array() - np.diag(np.diag(Q.as_array())) >= 0).all()


def test_generator_reports_missing_rates(xi_spec):
    with pytest.raises(IncompleteTableError) as excinfo:
        limit_generator(xi_rate_table(xi_spec, 3), 3)
    assert excinfo.value.missing


def test_generator_rejects_negative_rates():
    table = RateTable(d=1, rates={diagonal_tensor([(2,)]): -1.0})
    with pytest.raises(InvalidArgumentError):
        limit_generator(table, 2)


def test_weak_mutation_family_converges_to_kingman():
    report = weak_mutation_convergence([(100, 200), (1000, 2000), (10000, 20000)])
    assert report.passed, report.violations
    assert report.details['calibration'] == ['1', '1/2']
    assert report.details['residuals'][0] == pytest.approx(0.02)
    assert report.details['trend'] == "decreasing"


def test_weak_mutation_calibration():
    assert calibration_weights(weak_mutation_model((10, 20))) == (F(1), F(1, 2))
    with pytest.raises(InvalidArgumentError):
        weak_mutation_convergence([(10, 20), (100, 300)])


def test_strong_mutation_expansion_matrices():
    expansion = strong_mutation_expansion(3, 2, 2)
    assert expansion.c_N == F(1, 6)
    A = expansion.A
    for pi in (PI1, PI2):
        assert [A.entry(pi, pi2) for pi2 in (PI1, PI2)] == [F(1, 2), F(1, 2)]
    for pi in (PI3, PI4, PI5, PI6):
        assert [A.entry(pi, pi2) for pi2 in (PI3, PI4, PI5, PI6)] == [F(1, 4)] * 4
        assert A.entry(pi, PI1) == 0
    index = expansion.P.index
    assert list(expansion.B[index[PI3]]) == [F(1, 4), F(1, 4), F(-1, 2), F(1, 4), F(1, 4), F(-1, 2)]
    assert list(expansion.B[index[PI4]]) == [F(1, 4), F(1, 4), F(-1, 4), 0, 0, F(-1, 4)]
    assert expansion.P.entry(PI3, PI1) == F(1, 30)


def test_strong_mutation_residual_shrinks_quadratically():
    small = strong_mutation_expansion(3, 2, 2).residual
    large = strong_mutation_expansion(12, 2, 2).residual
    assert 0 < large < small / 4


def test_strong_mutation_residual_ratios():
    residuals = [strong_mutation_expansion(M, 2, 2).residual for M in (10, 20, 40, 80)]
    for earlier, later in zip(residuals, residuals[1:]):
        assert 0 < later <= F(3, 5) * earlier


def test_strong_mutation_generator():
    A, G = strong_mutation_generator(2, 2)
    assert all(total == pytest.approx(0.0, abs=1e-12) for total in G.row_sums())
    start = strong_mutation_transition(2, 2, 0.0)
    assert np.allclose(start.as_array(), A.as_array())
    later = strong_mutation_transition(2, 2, 1.5)
    assert np.allclose(later.as_array().sum(axis=1), 1.0)
    assert (later.as_array() > -1e-12).all()
    with pytest.raises(InvalidArgumentError):
        strong_mutation_transition(2, 2, -1.0)


def test_discrete_limit_from_model_proportions(wf_model):
    rho = rho_from_model(wf_model)
    assert rho == [[F(3, 4), F(1, 3)], [F(1, 4), F(2, 3)]]
    L = discrete_limit_matrix(rho, 2)
    assert L.provenance == "limit"
    assert list(L.row(PI1)) == [F(3, 4), F(1, 4), 0, 0, 0, 0]
    assert list(L.row(PI3)) == [0, 0, F(9, 16), F(3, 16), F(3, 16), F(1, 16)]
    assert list(L.row(PI4)) == [0, 0, F(1, 4), F(1, 2), F(1, 12), F(1, 6)]
    assert all(total == 1 for total in L.row_sums())


def test_discrete_limit_matches_single_lineage_rows(wf_model):
    P = transition_matrix(wf_model, 1)
    L = discrete_limit_matrix(rho_from_model(wf_model), 1)
    assert P.entries == L.entries


def test_scaled_mutation_family_approaches_discrete_limit(mutation_model):
    L = discrete_limit_matrix(rho_from_model(mutation_model), 2)
    gaps = []
    for factor in (1, 10, 100):
        P = transition_matrix(scaled_model(mutation_model, factor), 2)
        assert rho_from_model(scaled_model(mutation_model, factor)) == rho_from_model(mutation_model)
        gaps.append(max(abs(P.entry(pi, pi2) - L.entry(pi, pi2)) for pi in P.states for pi2 in P.states))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < F(1, 1000)


def test_discrete_limit_with_float_proportions():
    L = discrete_limit_matrix([[0.5, 0.5], [0.5, 0.5]], 2)
    assert all(total == pytest.approx(1.0) for total in L.row_sums())
    with pytest.raises(InvalidArgumentError):
        discrete_limit_matrix([[0.5, 0.5], [0.6, 0.5]], 2)


def test_kingman_simulation_absorbs_after_one_merger():
    Q = limit_generator(kingman_rates((1.0, 0.0)), 2)
    trajectory = simulate_coalescent(Q, PI3, 1e6, np.random.default_rng(9))
    assert len(trajectory.events) == 2
    assert trajectory.final_state == PI1


def test_first_jump_time_is_exponential():
    Q = limit_generator(kingman_rates((1.0, 0.0)), 2)
    trajectories = simulate_coalescent_replicates(Q, PI3, 1e6, 2000, seed=17)
    stats = first_jump_statistics(trajectories)
    assert stats['jumped'] == 2000
    assert stats['mean'] == pytest.approx(1.0, abs=0.12)


def test_replicates_are_reproducible():
    Q = limit_generator(kingman_rates((1.0, 1.0)), 2)
    first = simulate_coalescent_replicates(Q, PI6, 0.5, 20, seed=99)
    second = simulate_coalescent_replicates(Q, PI6, 0.5, 20, seed=99)
    assert [t.events for t in first] == [t.events for t in second]


def test_states_without_exit_never_move():
    Q = limit_generator(kingman_rates((0.0, 0.0)), 2)
    trajectory = simulate_coalescent(Q, PI3, 5.0, np.random.default_rng(0))
    assert trajectory.events == ((0.0, PI3),)
