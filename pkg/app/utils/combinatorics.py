"""Exact combinatorial helpers shared by the rules and services."""
import math
from fractions import Fraction
from typing import Iterator, Tuple

from sympy.functions.combinatorial.numbers import stirling


def falling(x: int, k: int) -> int:
    """Descending factorial (x)_k = x(x-1)...(x-k+1); zero when k > x >= 0."""
    if k < 0:
        raise ValueError(f"negative order {k}")
    if x < 0:
        result = 1
        for step in range(k):
            result *= x - step
        return result
    return math.perm(x, k)


def binom(x: int, k: int) -> int:
    if k < 0 or x < 0:
        return 0
    return math.comb(x, k)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k)."""
    return int(stirling(n, k, kind=2))


def labeled_partition_count(n: int, d: int) -> int:
    """Closed form sum_j d^j S(n, j) for the number of d-labeled partitions of [n]."""
    return sum(d ** j * stirling2(n, j) for j in range(1, n + 1))


def dobinski_count(n: int, d: int, terms: int = 80) -> float:
    """Truncated series e^{-d} sum_{j>=0} d^j j^n / j!.

    Terms are accumulated as exact rationals and only the final product
    with e^{-d} is done in floating point.
    """
    total = Fraction(0)
    for j in range(terms):
        total += Fraction(d ** j * j ** n, math.factorial(j))
    return math.exp(-d) * float(total)


def weak_compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in weak_compositions(total - head, parts - 1):
            yield (head,) + tail
