#!/usr/bin/env python3
"""
Desk-scale acceptance run for the Cannings genealogy toolkit.

This script:
1. Checks state counts and the Wright-Fisher golden matrix exactly
2. Runs the structural law checks on both built-in laws
3. Compares Monte-Carlo frequencies with the exact matrices
4. Checks the strong and weak mutation limits, Xi rates and the coalescent simulator

Exits 0 when every criterion holds, 1 otherwise.
"""
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
import itertools
import math
import time
from fractions import Fraction as F

import numpy as np

from app.models.partition import LabeledPartition
from app.models.population import CanningsModel, MutationLaw, WrightFisherLaw
from app.models.rates import XiAtom, XiSpec
from app.models.reports import PpfTable
from app.rules.partitions import count_partitions
from app.rules.tensors import coalescence_extension, diagonal_tensor, diagonal_tensors, empty_tensor
from app.services.ancestral_service import transition_matrix
from app.services.genealogy_simulation import mc_agreement, mc_transition_estimate
from app.services.law_check_service import (
    check_consistency, check_meppf, check_natural_coupling, check_permutation_symmetry,
    ppf_table_from_model,
)
from app.services.limit_service import (
    first_jump_statistics, kingman_rates, limit_generator, simulate_coalescent_replicates,
    strong_mutation_expansion, weak_mutation_convergence,
)
from app.services.xi_rates import check_rate_monotonicity, check_reduced_consistency, xi_rate, xi_rate_table, xi_rates
from app.utils.combinatorics import stirling2

WF = CanningsModel(N=(4, 6), law=WrightFisherLaw(counts=((3, 2), (1, 4))))
MUTATION = CanningsModel(N=(4, 5, 7), law=MutationLaw(counts=((1, 2, 1), (1, 0, 4), (2, 3, 2))))
XI = XiSpec(a=(0.0, 0.0), atoms=(XiAtom(mass=1.0, x=(0.5, 0.25), y=(0, 1)),))

WF_GOLDEN = [
    [F(3, 4), F(1, 4), 0, 0, 0, 0],
    [F(1, 3), F(2, 3), 0, 0, 0, 0],
    [F(1, 8), 0, F(3, 8), F(1, 4), F(1, 4), 0],
    [F(1, 16), F(1, 36), F(3, 16), F(1, 2), F(1, 12), F(5, 36)],
    [F(1, 16), F(1, 36), F(3, 16), F(1, 12), F(1, 2), F(5, 36)],
    [F(1, 60), F(1, 15), F(1, 20), F(4, 15), F(4, 15), F(1, 3)],
]


def enumeration():
    if count_partitions(2, 2) != 6:
        return False, "|P_2| != 6"
    for n in range(1, 7):
        for d in range(1, 4):
            expected = sum(d ** j * stirling2(n, j) for j in range(1, n + 1))
            if count_partitions(n, d) != expected:
                return False, f"n={n} d={d}"
    return True, "counts match the Stirling sums for n <= 6, d <= 3"


def golden_matrix():
    P = transition_matrix(WF, 2)
    entries = [list(row) for row in P.entries]
    return entries == WF_GOLDEN, "36 exact entries"


def consistency():
    worst = []
    for model in (WF, MUTATION):
        report = check_consistency(model, 4)
        if not report.passed:
            return False, f"{model.describe()}: {report.violations[:3]}"
        worst.append(report.worst_residual)
    return True, f"worst residuals {worst}"


def coupling():
    for n, m in ((3, 2), (3, 1), (4, 3)):
        report = check_natural_coupling(WF, n, m)
        if not report.passed:
            return False, f"(n, m) = ({n}, {m}): {report.violations[:3]}"
    return True, "lumpable for (3,2), (3,1), (4,3)"


def symmetry():
    for model in (WF, MUTATION):
        for n in (2, 3):
            report = check_permutation_symmetry(model, n)
            if not report.passed:
                return False, f"{model.describe()} n={n}"
    return True, "n <= 3 on both laws"


def monte_carlo(reps, seed):
    shares = []
    for model in (WF, MUTATION):
        estimate = mc_transition_estimate(model, 2, reps, seed)
        shares.append(mc_agreement(estimate, transition_matrix(model, 2)))
    return all(share >= 0.95 for share in shares), f"agreement {shares}"


def mutation_row_sums():
    for n in range(1, 5):
        if any(total != 1 for total in transition_matrix(MUTATION, n).row_sums()):
            return False, f"n={n}"
    return True, "every row sums to 1 for n <= 4"


def strong_mutation():
    expansion = strong_mutation_expansion(3, 2, 2)
    residuals = [strong_mutation_expansion(M, 2, 2).residual for M in (10, 20, 40, 80)]
    ratios = [later / earlier for earlier, later in zip(residuals, residuals[1:])]
    ok = expansion.c_N == F(1, 6) and all(ratio <= F(3, 5) for ratio in ratios)
    return ok, f"residual ratios {[float(r) for r in ratios]}"


def weak_mutation():
    report = weak_mutation_convergence([(100, 200), (1000, 2000), (10000, 20000)])
    return report.passed, f"residuals {report.details['residuals']}"


def xi(seed):
    single = xi_rate(XI, diagonal_tensor([(2,), ()]))
    double = xi_rate(XI, diagonal_tensor([(2,), (2,)]))
    if abs(single - 0.8) > 1e-12 or abs(double - 0.05) > 1e-12:
        return False, f"rates {single}, {double}"
    consistent = check_reduced_consistency(xi_rates(XI, 4), 2, 4)
    monotone = (check_rate_monotonicity(xi_rate_table(XI, 4), 2, 4).passed
                and check_rate_monotonicity(xi_rates(XI, 4), 2, 4, min_entry=1).passed)
    single_type = single_type_mismatches(20, seed)
    ok = consistent.passed and monotone and not single_type
    return ok, f"worst residual {consistent.worst_residual}, {single_type} single-type mismatches"


def single_type_mismatches(atoms, seed):
    """Compare d = 1 rates on random atoms with the direct sum over distinct coordinates."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(atoms):
        width = int(rng.integers(1, 5))
        x = tuple(sorted(rng.dirichlet(np.ones(width + 1))[:width], reverse=True))
        atom = XiAtom(mass=1.0, x=x, y=(0,) * width)
        spec = XiSpec(a=(0.0,), atoms=(atom,))
        for total in range(2, 7):
            for T in diagonal_tensors(1, total, min_entry=2):
                sizes = T.diagonal_rows()[0]
                direct = sum(math.prod(atom.x[m] ** i for m, i in zip(choice, sizes))
                             for choice in itertools.permutations(range(len(atom.x)), len(sizes)))
                mismatches += abs(xi_rate(spec, T) - direct / atom.norm2) > 1e-12
    return mismatches


def coalescent_simulator(reps, seed):
    Q = limit_generator(kingman_rates((1.0, 0.0)), 2)
    stats = first_jump_statistics(simulate_coalescent_replicates(Q, LabeledPartition.parse("1:1|2:1", 2), 1e6, reps, seed))
    ok = abs(stats['mean'] - 1.0) <= 4 * stats['stderr']
    return ok, f"mean {stats['mean']:.4f} +/- {stats['stderr']:.4f}"


def _tampered(table, T):
    values = dict(table.values)
    values[T] = values[T] + F(1, 1000)
    return PpfTable(d=table.d, values=values, depth=table.depth)


def meppf():
    table = ppf_table_from_model(WF, 3)
    if not check_meppf(table).passed:
        return False, "model table fails"
    failures = [
        check_meppf(_tampered(table, empty_tensor(2))).first_failure,
        check_meppf(_tampered(table, coalescence_extension(empty_tensor(2), 1, 0))).first_failure,
    ]
    return failures == ["normalization", "consistency"], f"tampered tables fail on {failures}"


def main():
    parser = argparse.ArgumentParser(description="Run the desk-scale acceptance criteria")
    parser.add_argument('--seed', type=int, default=20240611)
    parser.add_argument('--quick', action='store_true', help='fewer Monte-Carlo replicates')
    args = parser.parse_args()
    mc_reps = 100000 if args.quick else 1000000
    sim_reps = 10000 if args.quick else 100000

    criteria = [
        ("Enumeration", enumeration),
        ("WF golden matrix", golden_matrix),
        ("Consistency", consistency),
        ("Natural coupling", coupling),
        ("Permutation symmetry", symmetry),
        ("Monte-Carlo oracle", lambda: monte_carlo(mc_reps, args.seed)),
        ("Mutation row sums", mutation_row_sums),
        ("Strong mutation", strong_mutation),
        ("Weak mutation", weak_mutation),
        ("Xi rates", lambda: xi(args.seed)),
        ("Coalescent simulator", lambda: coalescent_simulator(sim_reps, args.seed)),
        ("M-EPPF checker", meppf),
    ]

    print("=" * 60)
    print("Cannings Genealogy Acceptance Run")
    print("=" * 60)
    failed = 0
    for name, criterion in criteria:
        start = time.perf_counter()
        ok, detail = criterion()
        elapsed = time.perf_counter() - start
        mark = "✓" if ok else "✗"
        print(f"{mark} {name} ({elapsed:.1f}s): {detail}")
        failed += not ok

    print("=" * 60)
    print(f"{len(criteria) - failed}/{len(criteria)} criteria passed")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
