"""Rates of the limiting multi-type Xi-coalescents.

On diagonal tensors with every entry >= 2 the rate has the integral form

    phi_j(T) = sum_k a_k 1{j = e_k, i_{k,1} = 2}
               + int sum_{distinct m} prod_{k,s} x_{m_{k,s}}^{i_{k,s}} 1{y_{m_{k,s}} = k} Xi(d(x,y)) / (x,x),

and the reduced consistency equation

    phi_j(T) = phi_{j+e_l}(T(l,l)) + sum_s phi_j(T(l,l,s))

extends such a table to tensors holding ones, by induction on the number
of ones. Rates are floats; identities are checked against
`config.rate_tolerance`.
"""
import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

from app.config import config
from app.errors import IncompleteTableError, InvalidArgumentError
from app.models.rates import QMeasure, RateTable, XiAtom, XiSpec
from app.models.reports import LawReport
from app.models.tensor import MergeTensor
from app.rules.tensors import (
    coalescence_extension, diagonal_tensor, diagonal_tensors, increment, tensor_leq, unit_tensor,
)

logger = logging.getLogger(__name__)


def _slots(T: MergeTensor) -> List[Tuple[int, int]]:
    """(type k, exponent i_{k,s}) for every child block of a diagonal tensor."""
    return [(k, i) for k, row in enumerate(T.diagonal_rows()) for i in row]


def _check_rate_tensor(T: MergeTensor, d: int) -> None:
    if T.d != d:
        raise InvalidArgumentError(f"tensor over {T.d} types for a rate over {d} types")
    if not T.is_diagonal:
        raise InvalidArgumentError(f"Xi rates are defined on diagonal tensors, got {T.describe()}")
    if not any(T.j):
        raise InvalidArgumentError("Xi rates need at least one merging child block")
    if any(i < 2 for row in T.diagonal_rows() for i in row):
        raise InvalidArgumentError(f"Xi rate formula needs every entry >= 2, got {T.describe()}")


def _assignments(atom: XiAtom, types: Sequence[int]) -> List[Tuple[int, ...]]:
    """Pairwise distinct coordinate indices m_s with y_{m_s} matching each slot's type."""
    candidates = [[m for m in range(len(atom.x)) if atom.y[m] == k] for k in types]
    return [choice for choice in itertools.product(*candidates) if len(set(choice)) == len(choice)]


def _atom_terms(atom: XiAtom, T: MergeTensor) -> List[Tuple[float, Tuple[int, ...]]]:
    slots = _slots(T)
    terms = []
    for choice in _assignments(atom, [k for k, _ in slots]):
        terms.append((math.prod(atom.x[m] ** i for m, (_, i) in zip(choice, slots)), choice))
    return terms


def xi_rate(spec: XiSpec, T: MergeTensor) -> float:
    """
    phi_j(T) for a diagonal tensor with every entry >= 2.

    Args:
        spec: Kingman weights and atomic Xi
        T: Diagonal merge tensor carrying j

    Returns:
        The rate as a float
    """
    _check_rate_tensor(T, spec.d)
    rows = T.diagonal_rows()
    rate = 0.0
    for k, weight in enumerate(spec.a):
        if weight and T.j == tuple(1 if t == k else 0 for t in range(spec.d)) and rows[k] == (2,):
            rate += weight
    for atom in spec.atoms:
        terms = _atom_terms(atom, T)
        if terms:
            rate += atom.mass * math.fsum(value for value, _ in terms) / atom.norm2
    return rate


def xi_rate_table(spec: XiSpec, depth: int) -> RateTable:
    """Rates on all diagonal tensors with entries >= 2 and at most `depth` merging blocks."""
    rates = {}
    for total in range(2, depth + 1):
        for T in diagonal_tensors(spec.d, total, min_entry=2):
            rates[T] = xi_rate(spec, T)
    logger.info(f"Evaluated {len(rates)} Xi rates to depth {depth}")
    return RateTable(d=spec.d, rates=rates, description=f"xi rates (>=2 entries) to depth {depth}")


def _count_ones(T: MergeTensor) -> int:
    return sum(1 for row in T.diagonal_rows() for i in row if i == 1)


def _drop_last_one(T: MergeTensor) -> Tuple[MergeTensor, int]:
    """T minus a trailing 1 in the first row holding one, and that row."""
    rows = [list(row) for row in T.canonical().diagonal_rows()]
    for l, row in enumerate(rows):
        if 1 in row:
            row.remove(1)
            return diagonal_tensor(rows), l
    raise InvalidArgumentError(f"{T.describe()} holds no entry equal to 1")


def complete_rates_by_consistency(partial: RateTable, d: int, depth: int) -> RateTable:
    """
    Extend a table on >=2-entry diagonal tensors to all diagonal tensors.

    For U holding a one in row l, with T = U minus that one,
    phi(U) = phi(T) - sum_s phi(T(l,l,s)); tensors are resolved by total
    and then by decreasing number of ones, with phi(T_0) = 0.

    Args:
        partial: Rates on every >=2-entry diagonal tensor up to `depth`
        d: Number of types
        depth: Largest number of merging blocks

    Returns:
        RateTable over all diagonal tensors up to `depth`

    Raises:
        IncompleteTableError: listing the >=2-entry tensors the table lacks
    """
    if partial.d != d:
        raise InvalidArgumentError(f"table over {partial.d} types completed as {d} types")
    missing = [T.describe() for total in range(2, depth + 1)
               for T in diagonal_tensors(d, total, min_entry=2) if partial.lookup(T) is None]
    if missing:
        raise IncompleteTableError(f"partial rate table does not cover depth {depth}", missing)

    values: Dict[MergeTensor, float] = {}

    def value(T: MergeTensor) -> float:
        key = T.canonical()
        if not any(key.j):
            return 0.0
        if key not in values:
            if _count_ones(key) == 0:
                values[key] = partial.rate(key)
            else:
                base, l = _drop_last_one(key)
                values[key] = value(base) - math.fsum(value(increment(base, l, l, s)) for s in range(base.j[l]))
        return values[key]

    for total in range(1, depth + 1):
        for T in sorted(diagonal_tensors(d, total), key=_count_ones):
            value(T)
    completed = {T: v for T, v in values.items() if T.total <= depth}
    logger.info(f"Completed rate table to depth {depth}: {len(completed)} diagonal tensors")
    return RateTable(d=d, rates=completed, diagonal_support=True,
                     description=f"{partial.description or 'rates'} completed to depth {depth}")


def xi_rates(spec: XiSpec, depth: int) -> RateTable:
    """The completed rate table of a Xi specification."""
    return complete_rates_by_consistency(xi_rate_table(spec, depth), spec.d, depth)


def _table_value(table: RateTable, T: MergeTensor) -> float:
    return 0.0 if not any(T.j) else table.rate(T)


def check_reduced_consistency(table: RateTable, d: int, depth: int) -> LawReport:
    """
    Residuals of phi_j(T) = phi_{j+e_l}(T(l,l)) + sum_s phi_j(T(l,l,s)) at every
    diagonal tensor with fewer than `depth` merging blocks (T_0 included) and every l.
    """
    report = LawReport(law="reduced-consistency", instance=table.description or f"rate table d={d}",
                       certified_depth=depth)
    nodes = [diagonal_tensor([()] * d)]
    for total in range(1, depth):
        nodes.extend(diagonal_tensors(d, total))
    for T in nodes:
        for l in range(d):
            rhs = _table_value(table, coalescence_extension(T, l, l)) + math.fsum(
                _table_value(table, increment(T, l, l, s)) for s in range(T.j[l]))
            report.record(f"{T.describe()} l={l + 1}", _table_value(table, T) - rhs, config.rate_tolerance)
    logger.info(f"Reduced consistency to depth {depth}: worst residual {report.worst_residual}")
    return report


def check_rate_monotonicity(table: RateTable, d: int, depth: int, min_entry: int = 2) -> LawReport:
    """
    Check phi_{j'}(T') <= phi_j(T) for comparable diagonal tensors T <= T'.

    Pairs leading away from an identity tensor 1_j to a proper merger are
    skipped; there the finite-N inequality carries a 1/c_N offset that
    the limit removes.
    """
    report = LawReport(law="rate-monotonicity", instance=table.description or f"rate table d={d}",
                       certified_depth=depth)
    tensors = [T for total in range(1, depth + 1) for T in diagonal_tensors(d, total, min_entry=min_entry)]
    for T in tensors:
        identity = T == unit_tensor(T.j)
        for T2 in tensors:
            if T2.total < T.total or not tensor_leq(T, T2):
                continue
            if identity and T2 != unit_tensor(T2.j):
                continue
            report.record(f"{T.describe()} <= {T2.describe()}",
                          max(0.0, table.rate(T2) - table.rate(T)), config.rate_tolerance)
    return report


def q_measure_from_xi(spec: XiSpec, j: Sequence[int]) -> QMeasure:
    """
    The finitely supported Q_j induced by an atomic Xi.

    Every distinct-index assignment m of an atom contributes the point
    (x_{m_{k,s}}) with weight mass * prod x_{m_{k,s}}^2 / (x,x); for j = e_k
    the Kingman part adds mass a_k at the point 0.
    """
    j = tuple(int(v) for v in j)
    if len(j) != spec.d or not any(j):
        raise InvalidArgumentError(f"j = {j} must be a nonzero vector of length {spec.d}")
    twos = diagonal_tensor([(2,) * jk for jk in j])
    points = []
    for k, weight in enumerate(spec.a):
        if weight and j == tuple(1 if t == k else 0 for t in range(spec.d)):
            points.append((weight, tuple((0.0,) if t == k else () for t in range(spec.d))))
    for atom in spec.atoms:
        types = [k for k, _ in _slots(twos)]
        for choice in _assignments(atom, types):
            rows: List[List[float]] = [[] for _ in range(spec.d)]
            for k, m in zip(types, choice):
                rows[k].append(atom.x[m])
            weight = atom.mass * math.prod(atom.x[m] ** 2 for m in choice) / atom.norm2
            points.append((weight, tuple(tuple(row) for row in rows)))
    return QMeasure(j=j, points=tuple(points))


def qj_moment_check(Q: QMeasure, T: MergeTensor, target: Optional[float] = None) -> Tuple[float, Optional[float]]:
    """
    int prod_{k,s} x_{k,s}^{i_{k,s} - 2} Q_j(dx) next to a target rate.

    Uses 0^0 = 1, so a Dirac at 0 contributes its mass exactly when every
    exponent is 2.
    """
    if T.j != Q.j:
        raise InvalidArgumentError(f"tensor j = {T.j} does not match Q_j with j = {Q.j}")
    if not T.is_diagonal or any(i < 2 for row in T.diagonal_rows() for i in row):
        raise InvalidArgumentError(f"moment check needs a diagonal tensor with entries >= 2, got {T.describe()}")
    rows = T.diagonal_rows()
    integral = math.fsum(
        weight * math.prod(x ** (i - 2) for point_row, row in zip(point, rows) for x, i in zip(point_row, row))
        for weight, point in Q.points
    )
    return integral, target


def lambda_coalescent_rates(lambdas: Sequence[Sequence[Tuple[float, float]]], depth: int) -> RateTable:
    """
    Completed rates of a multi-type Lambda-coalescent.

    `lambdas[k]` lists (weight, point) pairs of the finite measure Lambda_k on
    [0, 1]; only Q_{e_k} = Lambda_k is nonzero, so on >=2-entry tensors
    phi_{e_k}((i)) = int x^{i-2} Lambda_k(dx) and every other rate is 0.
    """
    d = len(lambdas)
    if d < 1:
        raise InvalidArgumentError("need at least one type")
    for k, measure in enumerate(lambdas):
        for weight, point in measure:
            if weight < 0 or not 0.0 <= point <= 1.0:
                raise InvalidArgumentError(f"Lambda_{k + 1} needs weights >= 0 on [0, 1], got ({weight}, {point})")
    rates = {}
    for total in range(2, depth + 1):
        for T in diagonal_tensors(d, total, min_entry=2):
            rate = 0.0
            if sum(T.j) == 1:
                k = T.j.index(1)
                i = T.diagonal_rows()[k][0]
                rate = math.fsum(weight * point ** (i - 2) for weight, point in lambdas[k])
            rates[T] = rate
    partial = RateTable(d=d, rates=rates, description="multi-type Lambda-coalescent")
    return complete_rates_by_consistency(partial, d, depth)


def total_binary_rate(rates: RateTable) -> float:
    """phi_1(2) = sum_k phi_{e_k}(2_k), the total rate of binary same-type mergers."""
    return math.fsum(
        rates.rate(diagonal_tensor([(2,) if t == k else () for t in range(rates.d)]))
        for k in range(rates.d)
    )
