"""Monte-Carlo simulation of the multi-type ancestral process.

One backward step: draw a generation of offspring numbers, then for every
type l assign the current l-blocks injectively and uniformly at random to
the N_l type-l child slots (parent (k, i) owns nu_{k,l,i} of them). Blocks
landing on the same parent merge and take the parent's type.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.config import config
from app.errors import DomainViolationError, InvalidArgumentError
from app.models.matrices import MONTE_CARLO, AncestryTrajectory, TransitionMatrix
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel
from app.rules.partitions import check_enumeration_cap, enumerate_partitions
from app.services.offspring_service import sample_generations
from app.utils.rng import resolve_seed, spawn_rngs

logger = logging.getLogger(__name__)


def _check_state(model: CanningsModel, pi: LabeledPartition) -> None:
    if pi.d != model.d:
        raise InvalidArgumentError(f"partition over {pi.d} types for a model with {model.d} types")
    for l, count in enumerate(pi.block_counts()):
        if count > model.N[l]:
            raise DomainViolationError(f"{count} blocks of type {l + 1} exceed N_{l + 1} = {model.N[l]}")


def draw_parents(model: CanningsModel, labels: Tuple[int, ...], rng: np.random.Generator, reps: int) -> np.ndarray:
    """
    Parents of the current blocks in `reps` independent backward steps.

    Parents are numbered globally: type-k parent i gets offset_k + i with
    offset_k = N_0 + ... + N_{k-1}.

    Args:
        model: Cannings model
        labels: Type of every current block
        rng: Random generator
        reps: Number of independent steps

    Returns:
        Integer array of shape (reps, len(labels))
    """
    batch = sample_generations(model, rng, reps)
    parents = np.zeros((reps, len(labels)), dtype=np.int64)
    for l in range(model.d):
        positions = [b for b, label in enumerate(labels) if label == l]
        if not positions:
            continue
        slots = np.concatenate([batch[k][:, l, :] for k in range(model.d)], axis=1)
        boundaries = np.cumsum(slots, axis=1)
        chosen = np.argsort(rng.random((reps, model.N[l])), axis=1)[:, :len(positions)]
        owner = (chosen[:, :, None] >= boundaries[:, None, :]).sum(axis=2)
        parents[:, positions] = owner
    return parents


def _parent_types(model: CanningsModel) -> np.ndarray:
    return np.repeat(np.arange(model.d), model.N)


def _merge(pi: LabeledPartition, parents, parent_type: np.ndarray) -> LabeledPartition:
    groups: Dict[int, List[int]] = {}
    for (elements, _), parent in zip(pi.blocks, parents):
        groups.setdefault(int(parent), []).extend(elements)
    return LabeledPartition(
        n=pi.n, d=pi.d,
        blocks=tuple((tuple(elements), int(parent_type[parent])) for parent, elements in groups.items()),
    )


def simulate_ancestry(model: CanningsModel, initial: LabeledPartition, generations: int,
                      rng: np.random.Generator, seed: Optional[int] = None) -> AncestryTrajectory:
    """
    Simulate A_0 = initial, A_1, ..., A_r backwards for r generations.

    Args:
        model: Cannings model
        initial: Starting labeled partition
        generations: Number of backward steps r
        rng: Random generator
        seed: Seed behind `rng`, recorded in the trajectory

    Returns:
        AncestryTrajectory with r + 1 states
    """
    if generations < 0:
        raise InvalidArgumentError(f"generations = {generations} must be nonnegative")
    _check_state(model, initial)
    parent_type = _parent_types(model)
    states = [initial]
    current = initial
    for _ in range(generations):
        parents = draw_parents(model, current.labels, rng, 1)[0]
        current = _merge(current, parents, parent_type)
        states.append(current)
    return AncestryTrajectory(initial=initial, states=tuple(states), seed=seed)


def mc_transition_estimate(model: CanningsModel, n: int, reps: int, seed: Optional[int] = None) -> TransitionMatrix:
    """
    Empirical one-step transition matrix over P_{n,E}.

    Each starting state gets its own stream spawned from the master seed,
    so a fixed seed reproduces the matrix bit for bit. Entries are exact
    frequencies count/reps; standard errors are binomial.

    Args:
        model: Cannings model
        n: Sample size
        reps: Replicates per starting state
        seed: Master seed; generated (and logged) when omitted

    Returns:
        TransitionMatrix with provenance 'monte-carlo'
    """
    if reps < 1:
        raise InvalidArgumentError(f"reps = {reps} must be positive")
    check_enumeration_cap(n, model.d)
    if n > model.N_min:
        raise DomainViolationError(f"sample size n = {n} exceeds N_min = {model.N_min}")
    seed = resolve_seed(seed)
    states = enumerate_partitions(n, model.d)
    index = {state: i for i, state in enumerate(states)}
    parent_type = _parent_types(model)
    streams = spawn_rngs(seed, len(states))

    rows, errors = [], []
    for pi, rng in zip(states, streams):
        counts = np.zeros(len(states), dtype=np.int64)
        remaining = reps
        while remaining > 0:
            size = min(remaining, config.mc_chunk_size)
            parents = draw_parents(model, pi.labels, rng, size)
            outcomes, frequencies = np.unique(parents, axis=0, return_counts=True)
            for outcome, frequency in zip(outcomes, frequencies):
                counts[index[_merge(pi, outcome, parent_type)]] += int(frequency)
            remaining -= size
        rows.append([Fraction(int(c), reps) for c in counts])
        errors.append([math.sqrt(float(p) * (1.0 - float(p)) / reps) for p in rows[-1]])

    logger.info(f"Monte-Carlo transition estimate n={n}, reps={reps}, seed={seed} on {model.describe()}")
    return TransitionMatrix(states=tuple(states), entries=rows, provenance=MONTE_CARLO,
                            stderr=tuple(tuple(row) for row in errors), reps=reps, seed=seed)


def mc_agreement(estimate: TransitionMatrix, exact: TransitionMatrix, sigmas: Optional[float] = None) -> float:
    """
    Share of nonzero exact entries that the estimate matches within `sigmas`
    binomial standard errors (computed from the exact probability).
    """
    sigmas = config.sigma_threshold if sigmas is None else sigmas
    reps = estimate.reps
    agree = total = 0
    for pi in exact.states:
        for pi2 in exact.states:
            p = float(exact.entry(pi, pi2))
            if p == 0.0:
                continue
            total += 1
            band = sigmas * math.sqrt(p * (1.0 - p) / reps)
            if abs(float(estimate.entry(pi, pi2)) - p) <= band:
                agree += 1
    return agree / total if total else 1.0
