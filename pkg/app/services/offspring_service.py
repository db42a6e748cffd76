"""Offspring laws: joint factorial moments, forward sampling and moment identities.

Moments of the built-in laws are exact rationals. A Custom law answers
through its moment oracle when it has one and otherwise through a
Monte-Carlo estimate tagged with its standard error.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import config
from app.errors import DomainViolationError, InvalidArgumentError, UnsupportedError
from app.models.population import (
    CanningsModel, CustomLaw, GenerationSample, MutationLaw, WrightFisherLaw,
)
from app.models.reports import LawReport
from app.models.tensor import MergeTensor
from app.rules.tensors import pair_coalescence_tensor
from app.utils.combinatorics import falling
from app.utils.rng import make_rng, resolve_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentEstimate:
    """Monte-Carlo estimate of a joint factorial moment."""
    value: float
    stderr: float
    reps: int
    seed: int

    def __float__(self) -> float:
        return self.value


Moment = Union[Fraction, float, MomentEstimate]


def _check_tensor(model: CanningsModel, T: MergeTensor) -> None:
    if T.d != model.d:
        raise InvalidArgumentError(f"tensor over {T.d} types for a model with {model.d} types")


def _wright_fisher_moment(model: CanningsModel, T: MergeTensor) -> Fraction:
    counts = model.counts
    pair = T.pair_counts()
    value = Fraction(1)
    for k in range(model.d):
        for l in range(model.d):
            i = pair[k][l]
            if i:
                value *= Fraction(falling(counts[k][l], i), model.N[k] ** i)
    return value


def _mutation_moment(model: CanningsModel, T: MergeTensor) -> Fraction:
    counts = model.counts
    for k in range(model.d):
        if any(total >= 2 for total in T.slot_totals(k)):
            return Fraction(0)
    pair = T.pair_counts()
    value = Fraction(1)
    for k in range(model.d):
        numerator = 1
        for l in range(model.d):
            numerator *= falling(counts[k][l], pair[k][l])
        value *= Fraction(numerator, falling(model.N[k], sum(pair[k])))
    return value


def _falling_array(values: np.ndarray, order: int) -> np.ndarray:
    result = np.ones(values.shape, dtype=float)
    for step in range(order):
        result *= values - step
    return result


def _custom_moment(model: CanningsModel, T: MergeTensor, seed: Optional[int]) -> Moment:
    law = model.law
    if law.moment_oracle is not None:
        return law.moment_oracle(T)
    if law.sampler is None:
        raise UnsupportedError("custom law has neither a sampler nor a moment oracle")

    seed = resolve_seed(seed)
    reps = config.moment_reps
    batch = sample_generations(model, make_rng(seed), reps)
    product = np.ones(reps, dtype=float)
    for k in range(model.d):
        for l in range(model.d):
            for s, order in enumerate(T.cell(k, l)):
                if order:
                    product *= _falling_array(batch[k][:, l, s], order)
    value = float(product.mean())
    stderr = float(product.std(ddof=1) / math.sqrt(reps)) if reps > 1 else float('nan')
    logger.info(f"Custom moment for {T.describe()}: {value:.6g} +/- {stderr:.2g} ({reps} reps)")
    return MomentEstimate(value=value, stderr=stderr, reps=reps, seed=seed)


def joint_factorial_moment(model: CanningsModel, T: MergeTensor, seed: Optional[int] = None) -> Moment:
    """
    E(prod_{k,l} prod_s (nu_{k,l,s})_{i_{k,l,s}}) for the merge tensor T.

    Args:
        model: Cannings model
        T: Merge tensor; T.j indexes the parents, so j_k <= N_k is required
        seed: Seed for the Monte-Carlo estimate of a Custom law without oracle

    Returns:
        Exact Fraction for built-in laws, oracle value or MomentEstimate otherwise
    """
    _check_tensor(model, T)
    for k, jk in enumerate(T.j):
        if jk > model.N[k]:
            raise DomainViolationError(f"j_{k + 1} = {jk} exceeds N_{k + 1} = {model.N[k]}")
    if isinstance(model.law, WrightFisherLaw):
        return _wright_fisher_moment(model, T)
    if isinstance(model.law, MutationLaw):
        return _mutation_moment(model, T)
    return _custom_moment(model, T, seed)


def _validate_custom_batch(model: CanningsModel, nu: Sequence[np.ndarray]) -> Tuple[np.ndarray, ...]:
    d = model.d
    if len(nu) != d:
        raise InvalidArgumentError(f"custom sampler returned {len(nu)} parent types, expected {d}")
    arrays = []
    for k, arr in enumerate(nu):
        arr = np.asarray(arr, dtype=np.int64)
        if arr.shape != (d, model.N[k]):
            raise InvalidArgumentError(
                f"custom sampler block for parent type {k + 1} has shape {arr.shape}, expected {(d, model.N[k])}")
        if (arr < 0).any():
            raise InvalidArgumentError("custom sampler returned negative offspring numbers")
        arrays.append(arr)
    for l in range(d):
        total = sum(int(arr[l].sum()) for arr in arrays)
        if total != model.N[l]:
            raise InvalidArgumentError(f"custom sample has {total} type-{l + 1} children, expected N_{l + 1} = {model.N[l]}")
    return tuple(arrays)


def sample_generations(model: CanningsModel, rng: np.random.Generator, reps: int) -> Tuple[np.ndarray, ...]:
    """
    Draw `reps` independent generations at once.

    Args:
        model: Cannings model
        rng: Random generator
        reps: Number of generations

    Returns:
        One integer array per parent type k with shape (reps, d, N_k)
    """
    d = model.d
    if isinstance(model.law, WrightFisherLaw):
        batch = []
        for k in range(d):
            uniform = np.full(model.N[k], 1.0 / model.N[k])
            per_type = [rng.multinomial(model.counts[k][l], uniform, size=reps) for l in range(d)]
            batch.append(np.stack(per_type, axis=1))
        return tuple(batch)

    if isinstance(model.law, MutationLaw):
        batch = []
        for k in range(d):
            labels = np.repeat(np.arange(d), model.counts[k])
            arrangement = rng.permuted(np.tile(labels, (reps, 1)), axis=1)
            nu = (arrangement[:, None, :] == np.arange(d)[None, :, None]).astype(np.int64)
            batch.append(nu)
        return tuple(batch)

    law: CustomLaw = model.law
    if law.sampler is None:
        raise UnsupportedError("custom law has no sampler")
    draws = [_validate_custom_batch(model, law.sampler(rng)) for _ in range(reps)]
    return tuple(np.stack([draw[k] for draw in draws]) for k in range(d))


def sample_generation(model: CanningsModel, rng: np.random.Generator) -> GenerationSample:
    """One generation of offspring numbers nu_{k,l,i}."""
    batch = sample_generations(model, rng, 1)
    return GenerationSample(nu=tuple(arr[0] for arr in batch))


def backward_mutation_matrix(model: CanningsModel) -> List[List[Fraction]]:
    """
    Mean backward mutation matrix m_{k,l} = N_{l,k} / N_k.

    Row k gives the parent type distribution of a type-k individual.

    Args:
        model: Model with a deterministic count matrix

    Returns:
        d x d matrix of Fractions with rows summing to 1
    """
    if not model.has_counts:
        raise UnsupportedError("backward mutation matrix needs a deterministic count matrix")
    counts = model.counts
    return [
        [Fraction(counts[l][k], model.N[k]) for l in range(model.d)]
        for k in range(model.d)
    ]


def exact_moment(model: CanningsModel, T: MergeTensor) -> Fraction:
    """joint_factorial_moment, refusing anything that is not an exact rational."""
    value = joint_factorial_moment(model, T)
    if isinstance(value, MomentEstimate):
        raise UnsupportedError("exact moments need a built-in law or a custom moment oracle")
    return value


def moment_identities_check(model: CanningsModel) -> LawReport:
    """
    Verify the first and second moment identities and the coalescence bounds.

    Checks, for every (k, l): E(nu_{k,l,1}) = N_{k,l}/N_k; for N_k > 1 the
    second mixed moment E(nu_{k,l,1} nu_{k,l,2}) against the variance form
    (zero variance of the deterministic counts); c_{k,l} <= E((N_{k,l})_2)/(N_l)_2
    <= E(N_{k,l})/N_l; and for l1 != l2, c_{k,l1,l2} <= N_{k,l1}N_{k,l2}/(N_{l1}N_{l2})
    <= min(N_{k,l1}/N_{l1}, N_{k,l2}/N_{l2}).

    Args:
        model: Model with a deterministic count matrix

    Returns:
        LawReport whose worst residual is the largest violation
    """
    if not model.has_counts:
        raise UnsupportedError("moment identities need a deterministic count matrix")
    d, N, counts = model.d, model.N, model.counts
    report = LawReport(law="moment-identities", instance=model.describe())

    for k in range(d):
        for l in range(d):
            single = MergeTensor.from_cells(d, [1 if t == k else 0 for t in range(d)], {(k, l): (1,)})
            mean1 = exact_moment(model, single)
            report.record(f"mean1 k={k + 1} l={l + 1}", mean1 - Fraction(counts[k][l], N[k]))

            if N[k] < 2:
                report.notices.append(f"N_{k + 1} = 1: second moment identity skipped for k={k + 1}")
                continue
            pair = MergeTensor.from_cells(d, [2 if t == k else 0 for t in range(d)], {(k, l): (1, 1)})
            mixed = exact_moment(model, pair)
            second = exact_moment(model, pair_coalescence_tensor(k, l, l, d)) + mean1
            variance = second - mean1 ** 2
            expected = mean1 ** 2 - variance / (N[k] - 1)
            report.record(f"mean2 k={k + 1} l={l + 1}", mixed - expected)

    for k in range(d):
        for l in range(d):
            if N[l] < 2:
                report.notices.append(f"N_{l + 1} = 1: c_{{{k + 1},{l + 1}}} bound skipped")
                continue
            c = Fraction(N[k], falling(N[l], 2)) * exact_moment(model, pair_coalescence_tensor(k, l, l, d))
            middle = Fraction(falling(counts[k][l], 2), falling(N[l], 2))
            upper = Fraction(counts[k][l], N[l])
            report.record(f"coal1 c_{{{k + 1},{l + 1}}} <= E((N_kl)_2)/(N_l)_2", max(Fraction(0), c - middle))
            report.record(f"coal1 E((N_kl)_2)/(N_l)_2 <= E(N_kl)/N_l k={k + 1} l={l + 1}", max(Fraction(0), middle - upper))
        for l1 in range(d):
            for l2 in range(l1 + 1, d):
                c = Fraction(N[k], N[l1] * N[l2]) * exact_moment(model, pair_coalescence_tensor(k, l1, l2, d))
                middle = Fraction(counts[k][l1] * counts[k][l2], N[l1] * N[l2])
                upper = min(Fraction(counts[k][l1], N[l1]), Fraction(counts[k][l2], N[l2]))
                case = f"k={k + 1} l1={l1 + 1} l2={l2 + 1}"
                report.record(f"coal2 c bound {case}", max(Fraction(0), c - middle))
                report.record(f"coal2 min bound {case}", max(Fraction(0), middle - upper))

    logger.info(f"Moment identities on {model.describe()}: {report.cases_checked} cases, "
                f"worst residual {report.worst_residual}")
    return report


def strong_mutation_model(M: int, d: int) -> CanningsModel:
    """Wright-Fisher model with N_{k,l} = M for all k, l (so N_k = dM)."""
    if M < 1 or d < 1:
        raise InvalidArgumentError(f"need M >= 1 and d >= 1, got M={M}, d={d}")
    return CanningsModel(N=(d * M,) * d, law=WrightFisherLaw(counts=((M,) * d,) * d))


def weak_mutation_model(sizes: Sequence[int], migrants: int = 1) -> CanningsModel:
    """Wright-Fisher model with `migrants` off-diagonal children in every cell
    and the diagonal N_{l,l} = N_l - (d-1) * migrants absorbing the rest."""
    d = len(sizes)
    counts = [[migrants] * d for _ in range(d)]
    for l in range(d):
        counts[l][l] = sizes[l] - (d - 1) * migrants
        if counts[l][l] < 0:
            raise InvalidArgumentError(f"N_{l + 1} = {sizes[l]} too small for {migrants} migrants per type")
    return CanningsModel(N=tuple(sizes), law=WrightFisherLaw(counts=counts))


def scaled_model(model: CanningsModel, factor: int) -> CanningsModel:
    """Same law with every count (and size) multiplied by `factor`."""
    if not model.has_counts or factor < 1:
        raise InvalidArgumentError("scaling needs a deterministic count matrix and a positive factor")
    counts = [[v * factor for v in row] for row in model.counts]
    law = type(model.law)(counts=counts)
    return CanningsModel(N=tuple(v * factor for v in model.N), law=law)
