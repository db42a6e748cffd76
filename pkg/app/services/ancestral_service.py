"""Exact backward transition probabilities of the multi-type ancestral process.

p_{pi,pi'} = Phi_j(T) for the merge structure (j, T) of pi -> pi', with

    Phi_j(T) = prod_k (N_k)_{j_k} / prod_l (N_l)_{i_l} * E(prod (nu_{k,l,s})_{i_{k,l,s}}).
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple, Union

from app.errors import DomainViolationError, InvalidArgumentError, UnsupportedError
from app.models.matrices import EXACT, BlockCountingMatrix, TransitionMatrix
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel, CustomLaw
from app.models.tensor import MergeTensor
from app.rules.partitions import check_enumeration_cap, enumerate_partitions, merge_structure
from app.rules.tensors import pair_coalescence_tensor, unit_tensor
from app.services.offspring_service import MomentEstimate, joint_factorial_moment
from app.utils.combinatorics import binom, falling, weak_compositions

logger = logging.getLogger(__name__)

Probability = Union[Fraction, float]


def phi(model: CanningsModel, T: MergeTensor) -> Probability:
    """
    Phi_j(T), the probability of any one transition with merge structure T.

    Zero when some j_k exceeds N_k (there are not enough type-k parents).

    Args:
        model: Cannings model
        T: Merge tensor carrying j

    Returns:
        Exact Fraction for built-in laws (float for estimated Custom moments)

    Raises:
        DomainViolationError: if some i_l exceeds N_l
    """
    if T.d != model.d:
        raise InvalidArgumentError(f"tensor over {T.d} types for a model with {model.d} types")
    parents = T.parent_counts()
    for l, i in enumerate(parents):
        if i > model.N[l]:
            raise DomainViolationError(f"i_{l + 1} = {i} exceeds N_{l + 1} = {model.N[l]}")
    if any(jk > model.N[k] for k, jk in enumerate(T.j)):
        return Fraction(0)

    numerator = 1
    for k, jk in enumerate(T.j):
        numerator *= falling(model.N[k], jk)
    denominator = 1
    for l, i in enumerate(parents):
        denominator *= falling(model.N[l], i)
    prefactor = Fraction(numerator, denominator)

    moment = joint_factorial_moment(model, T)
    if isinstance(moment, MomentEstimate):
        return float(prefactor) * moment.value
    return prefactor * moment


def _check_exact_size(model: CanningsModel, n: int) -> None:
    check_enumeration_cap(n, model.d)
    if n > model.N_min:
        raise DomainViolationError(
            f"sample size n = {n} exceeds N_min = {model.N_min}; states with more l-blocks than N_l have no transitions")


def _require_exact(model: CanningsModel) -> None:
    if isinstance(model.law, CustomLaw) and model.law.moment_oracle is None:
        raise UnsupportedError("exact matrices need a built-in law or a custom moment oracle; "
                               "use the Monte-Carlo estimate instead")


def transition_matrix(model: CanningsModel, n: int) -> TransitionMatrix:
    """
    Exact one-step transition matrix over P_{n,E}.

    Args:
        model: Cannings model
        n: Sample size, at most N_min and within the enumeration cap

    Returns:
        TransitionMatrix with provenance 'exact'
    """
    _check_exact_size(model, n)
    _require_exact(model)
    states = enumerate_partitions(n, model.d)
    cache: Dict[MergeTensor, Probability] = {}
    rows = []
    for pi in states:
        row = []
        for pi2 in states:
            T = merge_structure(pi, pi2) if pi2.size <= pi.size else None
            if T is None:
                row.append(Fraction(0))
                continue
            if T not in cache:
                cache[T] = phi(model, T)
            row.append(cache[T])
        rows.append(row)
    logger.info(f"Built exact {len(states)}x{len(states)} transition matrix for n={n} on {model.describe()}")
    return TransitionMatrix(states=tuple(states), entries=rows, provenance=EXACT)


def coalescence_probability(model: CanningsModel, k: int, l1: int, l2: int) -> Probability:
    """
    Probability that two sampled individuals of types l1, l2 share a type-k parent.

    c_{k,l} = N_k E((nu_{k,l,1})_2) / (N_l)_2 when l1 = l2 = l, and
    c_{k,l1,l2} = N_k E(nu_{k,l1,1} nu_{k,l2,1}) / (N_{l1} N_{l2}) otherwise.
    """
    d = model.d
    for t in (k, l1, l2):
        if not 0 <= t < d:
            raise InvalidArgumentError(f"type {t + 1} outside 1..{d}")
    T = pair_coalescence_tensor(k, l1, l2, d)
    if l1 == l2:
        if model.N[l1] < 2:
            raise DomainViolationError(f"c_{{{k + 1},{l1 + 1}}} needs N_{l1 + 1} > 1")
        scale = Fraction(model.N[k], falling(model.N[l1], 2))
    else:
        scale = Fraction(model.N[k], model.N[l1] * model.N[l2])
    moment = joint_factorial_moment(model, T)
    if isinstance(moment, MomentEstimate):
        return float(scale) * moment.value
    return scale * moment


def _tensors_between(i: Sequence[int], j: Sequence[int]) -> List[MergeTensor]:
    """Tensors with induced parent counts i, j child slots, every slot used."""
    d = len(i)
    slots = [(k, s) for k in range(d) for s in range(j[k])]
    tensors = []
    for split in itertools.product(*(list(weak_compositions(i[l], len(slots))) for l in range(d))):
        if any(sum(split[l][index] for l in range(d)) == 0 for index in range(len(slots))):
            continue
        cells = {(k, l): [0] * j[k] for k in range(d) for l in range(d)}
        for l in range(d):
            for index, (k, s) in enumerate(slots):
                cells[(k, l)][s] = split[l][index]
        tensors.append(MergeTensor.from_cells(d, j, cells))
    return tensors


def block_count_states(n: int, d: int) -> List[Tuple[int, ...]]:
    """All i in N_0^d with sum_k i_k <= n, ordered by total then lexicographically."""
    states = [i for i in itertools.product(range(n + 1), repeat=d) if sum(i) <= n]
    return sorted(states, key=lambda i: (sum(i), i))


def block_counting_matrix(model: CanningsModel, n: int) -> BlockCountingMatrix:
    """
    Transition matrix of the block counting process Y_r = (#k-blocks)_k.

    p_{i,j} = prod_k C(N_k, j_k) / prod_l C(N_l, i_l) * sum_T E(prod C(nu_{k,l,s}, i_{k,l,s})),
    the sum running over tensors with induced counts i in which every one
    of the j_k parents of each type receives at least one block.

    Args:
        model: Cannings model
        n: Largest total block count

    Returns:
        BlockCountingMatrix over all i with sum_k i_k <= n
    """
    _check_exact_size(model, n)
    _require_exact(model)
    d = model.d
    states = block_count_states(n, d)
    rows = []
    for i in states:
        row = []
        for j in states:
            if sum(j) > sum(i) or any(jk > model.N[k] for k, jk in enumerate(j)):
                row.append(Fraction(0))
                continue
            prefactor = Fraction(1)
            for k in range(d):
                prefactor *= binom(model.N[k], j[k])
            for l in range(d):
                prefactor /= binom(model.N[l], i[l])
            total = Fraction(0)
            for T in _tensors_between(i, j):
                weight = 1
                for k in range(d):
                    for l in range(d):
                        for v in T.cell(k, l):
                            weight *= math.factorial(v)
                total += Fraction(joint_factorial_moment(model, T)) / weight
            row.append(prefactor * total)
        rows.append(row)
    logger.info(f"Built {len(states)}x{len(states)} block counting matrix for n={n} on {model.describe()}")
    return BlockCountingMatrix(states=states, entries=rows)


def lumped_row(P: TransitionMatrix, pi: LabeledPartition) -> Dict[Tuple[int, ...], Probability]:
    """Row of P at pi summed over target states with equal block-count vectors."""
    lumped: Dict[Tuple[int, ...], Probability] = {}
    for pi2, value in zip(P.states, P.row(pi)):
        key = pi2.block_counts()
        lumped[key] = lumped.get(key, Fraction(0)) + value
    return lumped


def diagonal_entry_formula(model: CanningsModel, pi: LabeledPartition) -> Probability:
    """p_{pi,pi} written as E(prod_k prod_s nu_{k,k,s}) over the k-blocks of pi."""
    moment = joint_factorial_moment(model, unit_tensor(pi.block_counts()))
    return moment.value if isinstance(moment, MomentEstimate) else moment


def distribution_step(mu: Dict[LabeledPartition, Probability], P: TransitionMatrix) -> Dict[LabeledPartition, Probability]:
    """One step of the chain started from the distribution mu (row vector times P)."""
    result: Dict[LabeledPartition, Probability] = {state: Fraction(0) for state in P.states}
    for pi, weight in mu.items():
        if not weight:
            continue
        for pi2, value in zip(P.states, P.row(pi)):
            result[pi2] += weight * value
    return result
