"""Machine checks of the structural laws of the ancestral process at finite N.

Every check returns a LawReport. Exact laws are compared with zero
tolerance; float tables (PPF tables with float values) use the configured
rate tolerance.
"""
import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Set

from app.config import config
from app.errors import DomainViolationError, IncompleteTableError, InvalidArgumentError
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel
from app.models.reports import LawReport, PpfTable
from app.models.tensor import MergeTensor
from app.rules.partitions import (
    apply_permutation, check_enumeration_cap, enumerate_partitions, merge_structure,
    restrict, type_preserving_permutations,
)
from app.rules.tensors import (
    coalescence_extension, empty_tensor, increment, pair_coalescence_tensor, random_tensor,
    slot_permutations, tensor_leq,
)
from app.services.ancestral_service import (
    _require_exact, distribution_step, phi, transition_matrix,
)
from app.services.offspring_service import exact_moment, moment_identities_check
from app.utils.rng import make_rng

logger = logging.getLogger(__name__)


def _in_domain(model: CanningsModel, T: MergeTensor) -> bool:
    return all(i <= model.N[l] for l, i in enumerate(T.parent_counts()))


def _merge_structures(model: CanningsModel, n: int) -> Set[MergeTensor]:
    states = enumerate_partitions(n, model.d)
    tensors = set()
    for pi in states:
        for pi2 in states:
            if pi2.size <= pi.size:
                T = merge_structure(pi, pi2)
                if T is not None:
                    tensors.add(T)
    return tensors


def _sampled_tensors(model: CanningsModel, total: int, count: int, seed: int) -> Set[MergeTensor]:
    rng = make_rng(seed + total)
    sampled = set()
    attempts = 0
    while len(sampled) < count and attempts < 20 * count:
        attempts += 1
        T = random_tensor(model.d, total, rng)
        if _in_domain(model, T):
            sampled.add(T)
    return sampled


def law_check_tensors(model: CanningsModel, max_total: int) -> List[MergeTensor]:
    """
    Tensors examined by the law checks: T_0, the merge structures of all
    partition pairs with at most `max_total` blocks, and
    `config.random_tensors_per_depth` sampled abstract tensors per total,
    all restricted to i_l <= N_l.
    """
    tensors = {empty_tensor(model.d)}
    for n in range(1, max_total + 1):
        check_enumeration_cap(n, model.d)
        tensors |= {T for T in _merge_structures(model, n) if _in_domain(model, T)}
        tensors |= _sampled_tensors(model, n, config.random_tensors_per_depth, config.random_tensor_seed)
    return sorted(tensors, key=lambda T: (T.total, T.j, T.entries))


class _PhiCache:
    def __init__(self, model: CanningsModel):
        self.model = model
        self.values: Dict[MergeTensor, Fraction] = {}

    def __call__(self, T: MergeTensor) -> Fraction:
        if T not in self.values:
            self.values[T] = phi(self.model, T)
        return self.values[T]


def consistency_rhs(value, T: MergeTensor, l: int):
    """sum_k value(T(k,l)) + sum_k sum_s value(T(k,l,s))."""
    total = Fraction(0)
    for k in range(T.d):
        total += value(coalescence_extension(T, k, l))
        for s in range(T.j[k]):
            total += value(increment(T, k, l, s))
    return total


def check_consistency(model: CanningsModel, n_max: int) -> LawReport:
    """
    Verify Phi_j(T) = sum_k Phi_{j+e_k}(T(k,l)) + sum_k sum_s Phi_j(T(k,l,s)).

    Checked for every examined tensor with sum_l i_l < n_max and every l with
    i_l < N_l, together with the l-independence of the right side. At T_0
    the equation is the normalization sum_k Phi_{e_k}(T(k,l)) = 1.

    Args:
        model: Model with exact moments
        n_max: Depth bound

    Returns:
        LawReport certified to depth n_max
    """
    _require_exact(model)
    report = LawReport(law="consistency", instance=model.describe(), certified_depth=n_max)
    value = _PhiCache(model)
    for T in law_check_tensors(model, n_max - 1):
        parents = T.parent_counts()
        sides = []
        for l in range(model.d):
            if parents[l] >= model.N[l]:
                continue
            rhs = consistency_rhs(value, T, l)
            sides.append(rhs)
            report.record(f"{T.describe()} l={l + 1}", value(T) - rhs)
        if len(sides) > 1:
            report.record(f"{T.describe()} l-independence", max(sides) - min(sides))
    logger.info(f"Consistency on {model.describe()} to depth {n_max}: "
                f"{report.cases_checked} cases, passed={report.passed}")
    return report


def check_monotonicity(model: CanningsModel, n_max: int) -> LawReport:
    """
    Verify Phi_{j'}(T') <= Phi_j(T) for every comparable pair T <= T' among
    the examined tensors with at most n_max merging blocks.
    """
    _require_exact(model)
    report = LawReport(law="monotonicity", instance=model.describe(), certified_depth=n_max)
    value = _PhiCache(model)
    tensors = law_check_tensors(model, n_max)
    for T in tensors:
        for T2 in tensors:
            if T2.total < T.total or not tensor_leq(T, T2):
                continue
            report.record(f"{T.describe()} <= {T2.describe()}", max(Fraction(0), value(T2) - value(T)))
    logger.info(f"Monotonicity on {model.describe()} to depth {n_max}: "
                f"{report.cases_checked} pairs, passed={report.passed}")
    return report


def check_natural_coupling(model: CanningsModel, n: int, m: int) -> LawReport:
    """
    Verify that restricting the n-sample chain to [m] gives the m-sample chain.

    For every pi in P_{n,E} with restriction tau and every tau' in P_{m,E},
    sum_{pi': pi'|m = tau'} p^(n)_{pi,pi'} must equal p^(m)_{tau,tau'}, which
    also makes the sum independent of the representative pi.
    """
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"natural coupling needs 1 <= m <= n, got n={n}, m={m}")
    report = LawReport(law="natural-coupling", instance=f"{model.describe()} n={n} m={m}")
    P_n = transition_matrix(model, n)
    P_m = P_n if m == n else transition_matrix(model, m)
    restricted = {pi: restrict(pi, m) for pi in P_n.states}
    for pi in P_n.states:
        tau = restricted[pi]
        sums = {tau2: Fraction(0) for tau2 in P_m.states}
        for pi2, value in zip(P_n.states, P_n.row(pi)):
            sums[restricted[pi2]] += value
        for tau2 in P_m.states:
            report.record(f"{pi} -> [{tau2}]", sums[tau2] - P_m.entry(tau, tau2))
    logger.info(f"Natural coupling ({n},{m}) on {model.describe()}: passed={report.passed}")
    return report


def _orbits(states: Sequence[LabeledPartition], n: int) -> List[List[LabeledPartition]]:
    seen: Set[LabeledPartition] = set()
    orbits = []
    perms = list(itertools.permutations(range(1, n + 1)))
    for pi in states:
        if pi in seen:
            continue
        orbit = sorted({apply_permutation(sigma, pi) for sigma in perms}, key=states.index)
        seen.update(orbit)
        orbits.append(orbit)
    return orbits


def check_permutation_symmetry(model: CanningsModel, n: int) -> LawReport:
    """
    Verify p_{pi,pi'} = p_{sigma(pi),sigma(pi')} for every sigma in S_n.

    Also checks two consequences: a uniform distribution on a permutation
    orbit is orbit-uniform after one step, and the row of a singleton state
    is invariant under the permutations preserving individual types.
    """
    if n > 4:
        raise InvalidArgumentError(f"permutation symmetry is checked for n <= 4, got n={n}")
    report = LawReport(law="permutation-symmetry", instance=f"{model.describe()} n={n}")
    P = transition_matrix(model, n)
    states = list(P.states)

    for sigma in itertools.permutations(range(1, n + 1)):
        image = {pi: apply_permutation(sigma, pi) for pi in states}
        for pi in states:
            for pi2 in states:
                report.record(f"sigma={sigma} ({pi}, {pi2})", P.entry(pi, pi2) - P.entry(image[pi], image[pi2]))

    orbits = _orbits(states, n)
    for orbit in orbits:
        mu = {pi: Fraction(1, len(orbit)) for pi in orbit}
        after = distribution_step(mu, P)
        for target in orbits:
            values = [after[pi2] for pi2 in target]
            report.record(f"orbit of {orbit[0]} -> orbit of {target[0]}", max(values) - min(values))

    for pi in states:
        if pi.size != n:
            continue
        for sigma in type_preserving_permutations(pi):
            for pi2 in states:
                report.record(f"type-preserving sigma={sigma} at {pi} -> {pi2}",
                              P.entry(pi, pi2) - P.entry(pi, apply_permutation(sigma, pi2)))

    logger.info(f"Permutation symmetry n={n} on {model.describe()}: "
                f"{report.cases_checked} cases, passed={report.passed}")
    return report


def trend(values: Sequence[float]) -> str:
    if all(v == values[0] for v in values):
        return "flat"
    if all(b <= a for a, b in zip(values, values[1:])):
        return "decreasing"
    return "mixed"


def tends_to_zero(values: Sequence[float]) -> bool:
    if all(v == 0 for v in values):
        return True
    return trend(values) == "decreasing" and values[-1] <= config.trend_shrink_factor * values[0]


def check_identity_limit(models: Sequence[CanningsModel], n: int = 2) -> LawReport:
    """
    Finite evidence for the identity criterion P_N -> I along a model sequence.

    Along the sequence this tracks the criterion residual
    max_k max(|1 - E(nu_{k,k,1})|, |1 - E(nu_{k,k,1} nu_{k,k,2})|), the
    largest off-identity entry of P_N and the side residual
    max_{k,l} |(N_k/N_l)^2 E(nu_{k,l,1} nu_{k,l,2}) - delta_{k,l}|. The report
    passes when the criterion tends to zero exactly when the entries do, and
    when the side residual also tends to zero whenever the criterion does.

    Args:
        models: At least two models, ordered by growing N_min
        n: Sample size for the transition matrices

    Returns:
        LawReport with the residual sequences and their trends in `details`
    """
    if len(models) < 2:
        raise InvalidArgumentError(f"identity limit needs at least 2 models, got {len(models)}")
    if n < 2:
        raise InvalidArgumentError(f"identity limit needs n >= 2, got {n}")
    report = LawReport(law="identity-limit", instance=' ; '.join(m.describe() for m in models))
    criterion, entries, side = [], [], []
    for model in models:
        d = model.d
        worst = Fraction(0)
        side_worst = Fraction(0)
        for k in range(d):
            if model.N[k] < 2:
                raise DomainViolationError(f"N_{k + 1} = 1 leaves E(nu_kk1 nu_kk2) undefined")
            single = MergeTensor.from_cells(d, [1 if t == k else 0 for t in range(d)], {(k, k): (1,)})
            worst = max(worst, abs(1 - exact_moment(model, single)))
            for l in range(d):
                pair = MergeTensor.from_cells(d, [2 if t == k else 0 for t in range(d)], {(k, l): (1, 1)})
                mixed = exact_moment(model, pair)
                if l == k:
                    worst = max(worst, abs(1 - mixed))
                scaled = Fraction(model.N[k], model.N[l]) ** 2 * mixed
                side_worst = max(side_worst, abs(scaled - (1 if k == l else 0)))
        P = transition_matrix(model, n)
        off = max(
            (P.entries[a][b] for a in range(P.size) for b in range(P.size) if a != b),
            default=Fraction(0),
        )
        criterion.append(float(worst))
        entries.append(float(off))
        side.append(float(side_worst))
        report.cases_checked += 1

    criterion_to_zero = tends_to_zero(criterion)
    entries_to_zero = tends_to_zero(entries)
    side_to_zero = tends_to_zero(side)
    report.details = {
        'criterion_residuals': criterion,
        'offidentity_entries': entries,
        'side_residuals': side,
        'trends': {'criterion': trend(criterion), 'entries': trend(entries), 'side': trend(side)},
        'criterion_satisfied': criterion_to_zero,
        'converges_to_identity': entries_to_zero,
    }
    report.worst_residual = abs(criterion[-1])
    if criterion_to_zero != entries_to_zero:
        report.violations.append(
            f"criterion {'tends' if criterion_to_zero else 'does not tend'} to zero but off-identity entries "
            f"{'do' if entries_to_zero else 'do not'}")
    if criterion_to_zero and not side_to_zero:
        report.violations.append("side residual (N_k/N_l)^2 E(nu_kl1 nu_kl2) - delta_kl does not tend to zero")
    logger.info(f"Identity limit over {len(models)} models: criterion {report.details['trends']['criterion']}, "
                f"entries {report.details['trends']['entries']}, passed={report.passed}")
    return report


def _children(T: MergeTensor) -> Iterable[MergeTensor]:
    for k in range(T.d):
        for l in range(T.d):
            yield coalescence_extension(T, k, l)
            for s in range(T.j[k]):
                yield increment(T, k, l, s)


def ppf_table_from_model(model: CanningsModel, depth: int) -> PpfTable:
    """Phi on every tensor reachable from T_0 by extensions and increments,
    up to `depth` merging blocks."""
    if depth > model.N_min:
        raise DomainViolationError(f"table depth {depth} exceeds N_min = {model.N_min}")
    _require_exact(model)
    values: Dict[MergeTensor, Fraction] = {}
    frontier = [empty_tensor(model.d)]
    while frontier:
        T = frontier.pop()
        if T in values:
            continue
        values[T] = phi(model, T)
        if T.total < depth:
            frontier.extend(child for child in _children(T) if child not in values)
    logger.info(f"Built PPF table with {len(values)} tensors to depth {depth} from {model.describe()}")
    return PpfTable(d=model.d, values=values, depth=depth)


def check_meppf(table: PpfTable) -> LawReport:
    """
    Check the M-EPPF axioms on a finite table, in the order normalization,
    symmetry, consistency.

    Normalization is p(T_0) = 1; symmetry compares p(T) with p(sigma(T)) for
    per-(k,l) permutations sigma present in the table; consistency is the
    recursion at every node with fewer than `depth` merging blocks and every l.
    The report names the first failing axiom and certifies only the table's
    depth.

    Raises:
        IncompleteTableError: if T_0 or a child of an interior node is missing
    """
    T0 = empty_tensor(table.d)
    missing = [] if T0 in table.values else [T0.describe()]
    interior = [T for T in table.values if T.total < table.depth]
    for T in interior:
        missing.extend(child.describe() for child in _children(T) if child not in table.values)
    if missing:
        raise IncompleteTableError("PPF table is not closed under the consistency recursion",
                                   sorted(set(missing)))

    exact = all(isinstance(v, Fraction) for v in table.values.values())
    tolerance = 0 if exact else config.rate_tolerance
    report = LawReport(law="m-eppf", instance=f"table with {len(table.values)} tensors",
                       certified_depth=table.depth)
    axioms: Dict[str, bool] = {}

    before = len(report.violations)
    report.record("normalization p(T0) = 1", table.values[T0] - 1, tolerance)
    axioms['normalization'] = len(report.violations) == before

    before = len(report.violations)
    for T, value in table.values.items():
        for image in slot_permutations(T):
            if image != T and image in table.values:
                report.record(f"symmetry {T.describe()} ~ {image.describe()}", value - table.values[image], tolerance)
    axioms['symmetry'] = len(report.violations) == before

    before = len(report.violations)
    for T in interior:
        for l in range(table.d):
            rhs = consistency_rhs(table.values.__getitem__, T, l)
            report.record(f"consistency {T.describe()} l={l + 1}", table.values[T] - rhs, tolerance)
    axioms['consistency'] = len(report.violations) == before

    report.details = {'axioms': axioms}
    report.first_failure = next((name for name, ok in axioms.items() if not ok), None)
    logger.info(f"M-EPPF check to depth {table.depth}: first failure {report.first_failure}")
    return report


def check_coalescence_bounds(model: CanningsModel) -> LawReport:
    """Moment identities and coalescence bounds (the `check bounds` command)."""
    return moment_identities_check(model)


def pair_coalescence_tensors(d: int) -> List[MergeTensor]:
    """All d^3 pair tensors (k, l1, l2) with l1 <= l2."""
    return [pair_coalescence_tensor(k, l1, l2, d)
            for k in range(d) for l1 in range(d) for l2 in range(l1, d)]
