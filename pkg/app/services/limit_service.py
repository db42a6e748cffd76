"""Limits of the ancestral process as the subpopulations grow.

Covers the scaling constant c_N, discrete-time limit matrices, generators
built from limiting rate tables, the weak-mutation Kingman rates, the
strong-mutation expansion P_N = A + c_N B + o(c_N) and simulation of the
limiting continuous-time chains.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from app.config import config
from app.errors import DomainViolationError, IncompleteTableError, InvalidArgumentError, UnsupportedError
from app.models.matrices import (
    LIMIT, CoalescentTrajectory, GeneratorMatrix, StrongMutationExpansion, TransitionMatrix,
)
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel
from app.models.rates import RateTable
from app.models.reports import LawReport
from app.models.tensor import MergeTensor
from app.rules.partitions import check_enumeration_cap, enumerate_partitions, merge_structure
from app.services.ancestral_service import coalescence_probability, transition_matrix
from app.services.law_check_service import tends_to_zero, trend
from app.services.offspring_service import strong_mutation_model, weak_mutation_model
from app.utils.combinatorics import binom
from app.utils.rng import resolve_seed, spawn_rngs

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]


def standard_scaling(model: CanningsModel) -> Number:
    """
    c_N, the largest of the d^3 coalescence probabilities c_{k,l1,l2}.

    Args:
        model: Cannings model with every N_l > 1

    Returns:
        Exact Fraction for built-in laws; 0 means the standard scaling is
        unusable for this model
    """
    if any(size < 2 for size in model.N):
        raise DomainViolationError(f"standard scaling needs every N_l > 1, got N = {model.N}")
    d = model.d
    c_N = max(
        coalescence_probability(model, k, l1, l2)
        for k in range(d) for l1 in range(d) for l2 in range(d)
    )
    if c_N == 0:
        logger.warning(f"Standard scaling is 0 on {model.describe()}; limit theorems need another c_N")
    else:
        logger.info(f"Standard scaling c_N = {c_N} on {model.describe()}")
    return c_N


def limit_generator(rates: RateTable, n: int) -> GeneratorMatrix:
    """
    Generator Q over P_{n,E} with q_{pi,pi'} = phi_j(T) for pi != pi', pi contained in pi'.

    The diagonal is minus the (compensated) sum of the off-diagonal row.

    Args:
        rates: Limiting rate table
        n: Sample size

    Returns:
        GeneratorMatrix with rows summing to 0

    Raises:
        IncompleteTableError: listing every merge structure the table lacks
    """
    check_enumeration_cap(n, rates.d)
    states = enumerate_partitions(n, rates.d)
    grid = [[0.0] * len(states) for _ in states]
    missing = []
    for a, pi in enumerate(states):
        for b, pi2 in enumerate(states):
            if a == b or pi2.size > pi.size:
                continue
            T = merge_structure(pi, pi2)
            if T is None:
                continue
            value = rates.lookup(T)
            if value is None:
                missing.append(T.describe())
                continue
            if value < -config.rate_tolerance:
                raise InvalidArgumentError(f"negative off-diagonal rate {value} at {T.describe()}")
            grid[a][b] = max(value, 0.0)
        grid[a][a] = -math.fsum(grid[a])
    if missing:
        raise IncompleteTableError(f"rate table does not cover sample size {n}", sorted(set(missing)))
    logger.info(f"Built {len(states)}x{len(states)} generator for n={n} from {rates.description or 'rate table'}")
    return GeneratorMatrix(states=tuple(states), rates=grid)


def _kingman_rule(a: Tuple[float, ...]):
    def rule(T: MergeTensor) -> float:
        rows = T.diagonal_rows()
        entries = [i for row in rows for i in row]
        if all(i == 1 for i in entries):
            return -math.fsum(weight * binom(jk, 2) for weight, jk in zip(a, T.j))
        if entries.count(2) == 1 and all(i in (1, 2) for i in entries):
            k = next(k for k, row in enumerate(rows) if 2 in row)
            return a[k]
        return 0.0
    return rule


def kingman_rates(a: Sequence[float], d: Optional[int] = None) -> RateTable:
    """
    Rates of the multi-type Kingman coalescent.

    Two k-lineages merge at rate a_k, whatever the other lineages do;
    every other non-identity diagonal tensor has rate 0 and the identity
    1_j has rate -sum_k a_k C(j_k, 2).
    """
    a = tuple(float(v) for v in a)
    d = len(a) if d is None else d
    if len(a) != d:
        raise InvalidArgumentError(f"need {d} Kingman weights, got {len(a)}")
    for k, weight in enumerate(a):
        if weight < 0:
            raise InvalidArgumentError(f"a_{k + 1} = {weight} must be nonnegative")
    return RateTable(d=d, rates={}, diagonal_support=True, rule=_kingman_rule(a),
                     description=f"kingman a={list(a)}")


def calibration_weights(model: CanningsModel) -> Tuple[Fraction, ...]:
    """a_k = N_min / N_k for a single model of a weak-mutation family."""
    return tuple(Fraction(model.N_min, size) for size in model.N)


def weak_mutation_convergence(sizes_family: Sequence[Sequence[int]], migrants: int = 1) -> LawReport:
    """
    Residuals max_{k,l} |N_min c_{k,l} - a_k delta_{k,l}| along a weak-mutation family.

    The calibration a_k is read from the first member (N_min / N_k must
    stay constant along the family). The report passes when the residuals
    tend to zero.
    """
    if len(sizes_family) < 2:
        raise InvalidArgumentError(f"need at least 2 family members, got {len(sizes_family)}")
    models = [weak_mutation_model(sizes, migrants) for sizes in sizes_family]
    a = calibration_weights(models[0])
    report = LawReport(law="weak-mutation-convergence", instance=f"sizes {list(map(list, sizes_family))}")
    residuals = []
    for model in models:
        if calibration_weights(model) != a:
            raise InvalidArgumentError(f"N_min / N_k changes along the family at N = {model.N}")
        worst = Fraction(0)
        for k in range(model.d):
            for l in range(model.d):
                c = coalescence_probability(model, k, l, l)
                worst = max(worst, abs(model.N_min * c - (a[k] if k == l else 0)))
        residuals.append(float(worst))
        report.cases_checked += 1
    report.worst_residual = residuals[-1]
    report.details = {
        'calibration': [str(v) for v in a],
        'residuals': residuals,
        'trend': trend(residuals),
    }
    if not tends_to_zero(residuals):
        report.violations.append(f"residuals {residuals} do not tend to zero")
    logger.info(f"Weak-mutation convergence over {len(models)} models: residuals {residuals}")
    return report


def _strong_mutation_matrices(states: Sequence[LabeledPartition], d: int):
    A, B = [], []
    for pi in states:
        scale = Fraction(1, d ** pi.size)
        i = pi.block_counts()
        a_row, b_row = [], []
        for pi2 in states:
            a_value = b_value = Fraction(0)
            if pi.unlabeled == pi2.unlabeled:
                T = merge_structure(pi, pi2)
                j = pi2.block_counts()
                pairs = T.pair_counts()
                kappa = (sum(binom(v, 2) for v in i) - sum(binom(v, 2) for v in j)
                         - d * sum(binom(v, 2) for row in pairs for v in row))
                a_value = scale
                b_value = scale * kappa
            elif pi2.size == pi.size - 1 and merge_structure(pi, pi2) is not None:
                b_value = scale
            a_row.append(a_value)
            b_row.append(b_value)
        A.append(a_row)
        B.append(b_row)
    return A, B


def strong_mutation_expansion(M: int, n: int, d: int) -> StrongMutationExpansion:
    """
    Exact P_N of the uniform model N_{k,l} = M next to its expansion A + c_N B.

    a_{pi,pi'} = d^{-|pi|} when pi and pi' have the same blocks. b_{pi,pi'}
    is d^{-|pi|} kappa(pi,pi') for the same blocks, with
    kappa = sum_l C(i_l,2) - sum_k C(j_k,2) - d sum_{k,l} C(i_{k,l},2),
    d^{-|pi|} when pi' merges exactly two blocks of pi, and 0 otherwise.
    c_N = 1/(dM).

    Args:
        M: Common cell count
        n: Sample size
        d: Number of types

    Returns:
        StrongMutationExpansion with the exact sup-norm residual
    """
    if M < 1:
        raise InvalidArgumentError(f"M = {M} must be positive")
    model = strong_mutation_model(M, d)
    P = transition_matrix(model, n)
    A, B = _strong_mutation_matrices(P.states, d)
    c_N = Fraction(1, d * M)
    residual = max(
        abs(P.entries[a][b] - A[a][b] - c_N * B[a][b])
        for a in range(P.size) for b in range(P.size)
    )
    logger.info(f"Strong-mutation expansion M={M} n={n} d={d}: residual {residual}")
    return StrongMutationExpansion(
        M=M, P=P, A=TransitionMatrix(states=P.states, entries=A, provenance=LIMIT),
        B=tuple(tuple(row) for row in B), c_N=c_N, residual=residual,
    )


def strong_mutation_generator(n: int, d: int) -> Tuple[TransitionMatrix, GeneratorMatrix]:
    """
    The projection A and the limiting generator G = A B A.

    On the time scale 1/c_N the chain started in pi is distributed as row pi
    of A exp(tG).
    """
    check_enumeration_cap(n, d)
    states = enumerate_partitions(n, d)
    A, B = _strong_mutation_matrices(states, d)
    a = np.array([[float(v) for v in row] for row in A])
    b = np.array([[float(v) for v in row] for row in B])
    G = a @ b @ a
    return (TransitionMatrix(states=tuple(states), entries=A, provenance=LIMIT),
            GeneratorMatrix(states=tuple(states), rates=G.tolist()))


def strong_mutation_transition(n: int, d: int, t: float) -> TransitionMatrix:
    """A exp(tG), the limiting transition matrix at coalescent time t."""
    if t < 0:
        raise InvalidArgumentError(f"time t = {t} must be nonnegative")
    A, G = strong_mutation_generator(n, d)
    matrix = A.as_array() @ expm(t * G.as_array())
    return TransitionMatrix(states=A.states, entries=matrix.tolist(), provenance=LIMIT)


def rho_from_model(model: CanningsModel) -> List[List[Fraction]]:
    """rho_{k,l} = N_{k,l} / N_l, the parent-type law of a type-l child."""
    if not model.has_counts:
        raise UnsupportedError("rho needs a deterministic count matrix")
    return [[Fraction(model.counts[k][l], model.N[l]) for l in range(model.d)] for k in range(model.d)]


def discrete_limit_matrix(rho: Sequence[Sequence[Number]], n: int) -> TransitionMatrix:
    """
    Limit of P_N when N_{k,l}/N_l -> rho_{k,l} and no coalescence survives.

    a_{pi,pi'} = prod_{k,l} rho_{k,l}^{i_{k,l}} for pi' a relabeling of pi;
    the diagonal completes each row to 1. Exact when rho holds Fractions.

    Args:
        rho: d x d matrix with columns summing to 1
        n: Sample size

    Returns:
        TransitionMatrix with provenance 'limit'
    """
    d = len(rho)
    if d < 1 or any(len(row) != d for row in rho):
        raise InvalidArgumentError("rho must be a square matrix")
    exact = all(isinstance(v, (int, Fraction)) for row in rho for v in row)
    rho = [[Fraction(v) if exact else float(v) for v in row] for row in rho]
    for k in range(d):
        for l in range(d):
            if rho[k][l] < 0:
                raise InvalidArgumentError(f"rho_{{{k + 1},{l + 1}}} = {rho[k][l]} is negative")
    for l in range(d):
        column = sum(rho[k][l] for k in range(d))
        if abs(column - 1) > (0 if exact else config.rho_tolerance):
            raise InvalidArgumentError(f"rho column {l + 1} sums to {column}, expected 1")
    check_enumeration_cap(n, d)
    states = enumerate_partitions(n, d)
    one = Fraction(1) if exact else 1.0
    rows = []
    for a, pi in enumerate(states):
        row = []
        for pi2 in states:
            value = 0 * one
            if pi2 != pi and pi.unlabeled == pi2.unlabeled:
                value = one
                for k, pair_row in enumerate(merge_structure(pi, pi2).pair_counts()):
                    for l, count in enumerate(pair_row):
                        value *= rho[k][l] ** count
            row.append(value)
        row[a] = one - (sum(row, Fraction(0)) if exact else math.fsum(row))
        rows.append(row)
    logger.info(f"Built {len(states)}x{len(states)} discrete limit matrix for n={n}")
    return TransitionMatrix(states=tuple(states), entries=rows, provenance=LIMIT)


def simulate_coalescent(Q: GeneratorMatrix, initial: LabeledPartition, t_max: float,
                        rng: np.random.Generator, seed: Optional[int] = None) -> CoalescentTrajectory:
    """
    Jump-chain simulation of the chain with generator Q up to time t_max.

    Holding times are exponential with rate -q_{pi,pi}; the trajectory ends
    at an absorbing state or at the first jump after t_max.
    """
    if initial not in Q.index:
        raise InvalidArgumentError(f"initial state {initial} is not a state of the generator")
    rates = Q.as_array()
    state = Q.index[initial]
    t = 0.0
    events = [(0.0, initial)]
    while True:
        exit_rate = -rates[state, state]
        if exit_rate <= 0:
            break
        t += rng.exponential(1.0 / exit_rate)
        if t > t_max:
            break
        jump = np.clip(rates[state], 0.0, None)
        jump[state] = 0.0
        state = int(rng.choice(len(jump), p=jump / jump.sum()))
        events.append((t, Q.states[state]))
    return CoalescentTrajectory(events=tuple(events), seed=seed)


def simulate_coalescent_replicates(Q: GeneratorMatrix, initial: LabeledPartition, t_max: float,
                                   reps: int, seed: Optional[int] = None) -> List[CoalescentTrajectory]:
    """`reps` independent trajectories, one spawned stream each."""
    if reps < 1:
        raise InvalidArgumentError(f"reps = {reps} must be positive")
    seed = resolve_seed(seed)
    trajectories = [simulate_coalescent(Q, initial, t_max, rng, seed) for rng in spawn_rngs(seed, reps)]
    logger.info(f"Simulated {reps} coalescent trajectories from {initial}, seed={seed}")
    return trajectories


def first_jump_statistics(trajectories: Sequence[CoalescentTrajectory]) -> Dict[str, float]:
    """Mean and standard error of the first jump time over trajectories that jumped."""
    times = np.array([trajectory.events[1][0] for trajectory in trajectories if len(trajectory.events) > 1])
    if times.size == 0:
        return {'jumped': 0, 'mean': math.nan, 'stderr': math.nan}
    stderr = float(times.std(ddof=1) / math.sqrt(times.size)) if times.size > 1 else math.nan
    return {'jumped': int(times.size), 'mean': float(times.mean()), 'stderr': stderr}
