"""Command-line entry point: python -m app.main <command> ...

Exit codes: 0 on success with every check passing, 1 when a law check
fails, 2 on invalid input (malformed files, out-of-range arguments).
Artifacts go to stdout or --output; logs go to stderr.
"""
import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.config import config
from app.errors import (
    CanningsError, DomainViolationError, IncompleteTableError, InvalidArgumentError, UnsupportedError,
)
from app.models.matrices import EXACT, LIMIT
from app.models.partition import LabeledPartition
from app.models.population import CanningsModel
from app.models.rates import RateTable, XiSpec
from app.models.reports import LawReport, render_number
from app.models.schemas import (
    ModelFile, PpfTableFile, RateTableFile, RhoFile, RunConfig, XiSpecFile,
)
from app.rules.partitions import count_partitions, enumerate_partitions
from app.services import law_check_service as checks
from app.services import limit_service as limits
from app.services import xi_rates
from app.services.ancestral_service import block_counting_matrix, transition_matrix
from app.services.genealogy_simulation import mc_agreement, mc_transition_estimate, simulate_ancestry
from app.utils import encoding
from app.utils.combinatorics import labeled_partition_count
from app.utils.rng import make_rng, resolve_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

# (artifact text, exit code)
Outcome = Tuple[str, int]


def _load_json(path: str, schema):
    with open(path, 'r') as f:
        data = json.load(f)
    return schema.model_validate(data)


def _load_model(path: Optional[str]) -> CanningsModel:
    if not path:
        raise InvalidArgumentError("--model is required")
    return _load_json(path, ModelFile).to_model()


def _load_spec(path: str) -> XiSpec:
    return _load_json(path, XiSpecFile).to_spec()


def _require(value, flag: str):
    if value is None:
        raise InvalidArgumentError(f"{flag} is required")
    return value


def _envelope(run: RunConfig, body: Dict[str, Any], seed: Optional[int] = None,
              provenance: Optional[str] = None) -> str:
    data = encoding.artifact_metadata(run.model_dump(), seed=seed, provenance=provenance)
    data.update(body)
    return encoding.dump_json(data)


def _report_outcome(run: RunConfig, report: LawReport) -> Outcome:
    if report.passed:
        logger.info(f"{report.law}: passed ({report.cases_checked} cases)")
    else:
        logger.error(f"{report.law}: {len(report.violations)} violations, worst residual "
                     f"{render_number(report.worst_residual)}")
    code = EXIT_OK if report.passed else EXIT_CHECK_FAILED
    return _envelope(run, {'report': report.to_json()}, provenance=EXACT), code


def _rate_table_json(table: RateTable) -> List[Dict[str, Any]]:
    return [
        {'tensor': T.to_json(), 'rate': repr(table.rates[T])}
        for T in sorted(table.keys(), key=lambda T: (T.total, T.j, T.entries))
    ]


def run_enumerate(run: RunConfig) -> Outcome:
    n, d = _require(run.n, "--n"), _require(run.d, "--d")
    count = count_partitions(n, d)
    if run.count_only:
        return f"{count}\n", EXIT_OK
    states = enumerate_partitions(n, d)
    body = {
        'n': n, 'd': d, 'count': count,
        'stirling_count': labeled_partition_count(n, d),
        'states': [pi.encode() for pi in states],
    }
    return _envelope(run, body), EXIT_OK


def run_matrix(run: RunConfig) -> Outcome:
    model = _load_model(run.model)
    P = transition_matrix(model, _require(run.n, "--n"))
    bad_rows = [pi.encode() for pi, total in zip(P.states, P.row_sums()) if total != 1]
    if bad_rows:
        logger.error(f"Row sums differ from 1 at {bad_rows}")
    code = EXIT_CHECK_FAILED if bad_rows else EXIT_OK
    if run.exact or run.format == "csv":
        return encoding.matrix_to_csv(P), code
    return _envelope(run, {'model': model.describe(), 'matrix': encoding.matrix_to_json(P)},
                     provenance=P.provenance), code


def run_block_counting(run: RunConfig) -> Outcome:
    model = _load_model(run.model)
    P = block_counting_matrix(model, _require(run.n, "--n"))
    if run.exact or run.format == "csv":
        return encoding.block_counting_to_csv(P), EXIT_OK
    return _envelope(run, {'model': model.describe(), 'matrix': encoding.block_counting_to_json(P)},
                     provenance=EXACT), EXIT_OK


def run_check(run: RunConfig) -> Outcome:
    action = run.action
    if action == "consistency":
        report = checks.check_consistency(_load_model(run.model), _require(run.depth, "--depth"))
    elif action == "monotonicity":
        report = checks.check_monotonicity(_load_model(run.model), _require(run.depth, "--depth"))
    elif action == "coupling":
        report = checks.check_natural_coupling(_load_model(run.model), _require(run.n, "--n"), _require(run.m, "--m"))
    elif action == "symmetry":
        report = checks.check_permutation_symmetry(_load_model(run.model), _require(run.n, "--n"))
    elif action == "identity-limit":
        report = checks.check_identity_limit([_load_model(path) for path in run.models], run.n or 2)
    elif action == "meppf":
        if run.table:
            table = _load_json(run.table, PpfTableFile).to_table()
        else:
            table = checks.ppf_table_from_model(_load_model(run.model), _require(run.depth, "--depth"))
        report = checks.check_meppf(table)
    elif action == "bounds":
        report = checks.check_coalescence_bounds(_load_model(run.model))
    else:
        raise InvalidArgumentError(f"unknown check '{action}'")
    return _report_outcome(run, report)


def run_mc(run: RunConfig) -> Outcome:
    model = _load_model(run.model)
    n = _require(run.n, "--n")
    reps = run.reps or config.default_reps
    seed = resolve_seed(run.seed)
    logger.info(f"Monte-Carlo run with seed {seed}")
    estimate = mc_transition_estimate(model, n, reps, seed)
    body: Dict[str, Any] = {'model': model.describe(), 'matrix': encoding.matrix_to_json(estimate)}
    code = EXIT_OK
    try:
        exact = transition_matrix(model, n)
    except UnsupportedError:
        logger.warning("No exact matrix for this law; reporting the estimate only")
    else:
        agreement = mc_agreement(estimate, exact)
        body['agreement'] = {
            'share_within_sigma': agreement,
            'sigma_threshold': config.sigma_threshold,
            'required': config.min_agreement,
        }
        if agreement < config.min_agreement:
            logger.error(f"Only {agreement:.3f} of the entries agree within {config.sigma_threshold} sigma")
            code = EXIT_CHECK_FAILED
    if run.format == "csv":
        header = encoding.artifact_metadata(run.model_dump(), seed=seed, provenance=estimate.provenance)
        header['reps'] = estimate.reps
        if 'agreement' in body:
            header['agreement'] = body['agreement']
        return encoding.comment_header(header) + encoding.matrix_to_csv(estimate), code
    return _envelope(run, body, seed=seed, provenance=estimate.provenance), code


def _limit_table(run: RunConfig) -> Tuple[RateTable, LabeledPartition]:
    """Rate table and initial state for a coalescent simulation; Xi tables are
    completed to the sample size of the initial state."""
    text = _require(run.initial, "--initial")
    if run.spec:
        spec = _load_spec(run.spec)
        initial = LabeledPartition.parse(text, spec.d)
        return xi_rates.xi_rates(spec, initial.n), initial
    if run.weights:
        return limits.kingman_rates(run.weights), LabeledPartition.parse(text, len(run.weights))
    raise InvalidArgumentError("coalescent simulation needs --weights or --spec")


def run_simulate(run: RunConfig) -> Outcome:
    seed = resolve_seed(run.seed)
    logger.info(f"Simulation with seed {seed}")
    if run.action == "ancestry":
        model = _load_model(run.model)
        initial = LabeledPartition.parse(_require(run.initial, "--initial"), model.d)
        trajectory = simulate_ancestry(model, initial, _require(run.generations, "--generations"),
                                       make_rng(seed), seed)
        lines = [json.dumps({'generation': r, 'state': state.encode()}, sort_keys=True)
                 for r, state in enumerate(trajectory.states)]
        header = encoding.artifact_metadata(run.model_dump(), seed=seed, provenance="monte-carlo")
        return "\n".join([json.dumps(header, sort_keys=True)] + lines) + "\n", EXIT_OK
    if run.action == "coalescent":
        table, initial = _limit_table(run)
        Q = limits.limit_generator(table, initial.n)
        reps = run.reps or 1
        trajectories = limits.simulate_coalescent_replicates(Q, initial, _require(run.t_max, "--t-max"), reps, seed)
        header = encoding.artifact_metadata(run.model_dump(), seed=seed, provenance=LIMIT)
        header['first_jump'] = limits.first_jump_statistics(trajectories)
        lines = [json.dumps(header, sort_keys=True)]
        for index, trajectory in enumerate(trajectories):
            lines.extend(encoding.trajectory_lines(trajectory, replicate=index if reps > 1 else None))
        return "\n".join(lines) + "\n", EXIT_OK
    raise InvalidArgumentError(f"unknown simulation '{run.action}'")


def run_limit(run: RunConfig) -> Outcome:
    if run.action == "kingman":
        table = limits.kingman_rates(run.weights)
        Q = limits.limit_generator(table, _require(run.n, "--n"))
        if run.format == "csv":
            return encoding.generator_to_csv(Q), EXIT_OK
        return _envelope(run, {'generator': encoding.generator_to_json(Q)}, provenance=LIMIT), EXIT_OK
    if run.action == "strong-mutation":
        n, d = _require(run.n, "--n"), _require(run.d, "--d")
        values = run.M_values or [_require(run.M, "--M")]
        expansions = [limits.strong_mutation_expansion(M, n, d) for M in values]
        last = expansions[-1]
        body = {
            'A': encoding.matrix_to_json(last.A),
            'B': [[render_number(v) for v in row] for row in last.B],
            'P': encoding.matrix_to_json(last.P),
            'residuals': [{'M': e.M, 'c_N': str(e.c_N), 'residual': str(e.residual),
                           'residual_over_c_N': str(e.residual / e.c_N)} for e in expansions],
        }
        return _envelope(run, body, provenance=LIMIT), EXIT_OK
    if run.action == "discrete":
        rho = _load_json(_require(run.rho, "--rho"), RhoFile).to_rho()
        A = limits.discrete_limit_matrix(rho, _require(run.n, "--n"))
        if run.format == "csv":
            return encoding.matrix_to_csv(A), EXIT_OK
        return _envelope(run, {'matrix': encoding.matrix_to_json(A)}, provenance=LIMIT), EXIT_OK
    raise InvalidArgumentError(f"unknown limit '{run.action}'")


def run_rates(run: RunConfig) -> Outcome:
    if run.action == "xi":
        spec = _load_spec(_require(run.spec, "--spec"))
        depth = _require(run.depth, "--depth")
        table = xi_rates.xi_rates(spec, depth)
        d = spec.d
    elif run.action == "complete":
        source = _load_json(_require(run.table, "--table"), RateTableFile)
        depth = run.depth or source.depth
        d = source.d
        table = xi_rates.complete_rates_by_consistency(source.to_table(), d, depth)
    else:
        raise InvalidArgumentError(f"unknown rates action '{run.action}'")
    report = xi_rates.check_reduced_consistency(table, d, depth)
    body = {
        'rates': _rate_table_json(table),
        'total_binary_rate': repr(xi_rates.total_binary_rate(table)) if depth >= 2 else None,
        'report': report.to_json(),
    }
    code = EXIT_OK if report.passed else EXIT_CHECK_FAILED
    return _envelope(run, body, provenance=LIMIT), code


COMMANDS: Dict[str, Callable[[RunConfig], Outcome]] = {
    'enumerate': run_enumerate,
    'matrix': run_matrix,
    'block-counting': run_block_counting,
    'check': run_check,
    'mc': run_mc,
    'simulate': run_simulate,
    'limit': run_limit,
    'rates': run_rates,
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--format', choices=['csv', 'json'], default=config.output_format)
    parser.add_argument('--output', help='write the artifact to this file instead of stdout')
    parser.add_argument('--seed', type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cannings", description="Multi-type Cannings genealogies")
    parser.add_argument('--log-level', default=None, help='override the configured log level')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('enumerate', help='list or count P_{n,E}')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--count-only', action='store_true')
    _common(p)

    for name, help_text in (('matrix', 'exact transition matrix'), ('block-counting', 'block counting chain')):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('--model', required=True)
        p.add_argument('--n', type=int, required=True)
        p.add_argument('--exact', action='store_true', help='print the exact fractions as CSV')
        _common(p)

    p = sub.add_parser('check', help='structural law checks')
    p.add_argument('action', choices=['consistency', 'monotonicity', 'coupling', 'symmetry',
                                      'identity-limit', 'meppf', 'bounds'])
    p.add_argument('--model')
    p.add_argument('--models', nargs='+', default=[])
    p.add_argument('--table')
    p.add_argument('--n', type=int)
    p.add_argument('--m', type=int)
    p.add_argument('--depth', type=int)
    _common(p)

    p = sub.add_parser('mc', help='Monte-Carlo transition estimate')
    p.add_argument('--model', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--reps', type=int)
    _common(p)

    p = sub.add_parser('simulate', help='simulate genealogies')
    p.add_argument('action', choices=['ancestry', 'coalescent'])
    p.add_argument('--model')
    p.add_argument('--spec')
    p.add_argument('--weights', type=float, nargs='+', default=[])
    p.add_argument('--initial')
    p.add_argument('--generations', type=int)
    p.add_argument('--t-max', dest='t_max', type=float)
    p.add_argument('--reps', type=int)
    _common(p)

    p = sub.add_parser('limit', help='limiting objects')
    p.add_argument('action', choices=['kingman', 'strong-mutation', 'discrete'])
    p.add_argument('--weights', type=float, nargs='+', default=[])
    p.add_argument('--rho')
    p.add_argument('--n', type=int)
    p.add_argument('--d', type=int)
    p.add_argument('--M', type=int)
    p.add_argument('--M-values', dest='M_values', type=int, nargs='+', default=[])
    _common(p)

    p = sub.add_parser('rates', help='Xi rates and reduced-consistency completion')
    p.add_argument('action', choices=['xi', 'complete'])
    p.add_argument('--spec')
    p.add_argument('--table')
    p.add_argument('--depth', type=int)
    _common(p)
    return parser


def _field_errors(error: ValidationError) -> str:
    return '; '.join(
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    )


def run(run_config: RunConfig) -> Outcome:
    """Execute one command; input problems become exit code 2."""
    try:
        return COMMANDS[run_config.command](run_config)
    except ValidationError as e:
        logger.error(f"Invalid input: {_field_errors(e)}")
    except json.JSONDecodeError as e:
        logger.error(f"Malformed JSON at line {e.lineno} column {e.colno}: {e.msg}")
    except OSError as e:
        logger.error(f"Cannot read input: {e}")
    except (InvalidArgumentError, DomainViolationError, UnsupportedError, IncompleteTableError) as e:
        logger.error(f"{type(e).__name__}: {e}")
    except CanningsError as e:
        logger.error(f"Command '{run_config.command}' failed: {e}")
        raise
    return "", EXIT_INPUT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or config.log_level).upper(),
        format=config.log_format,
        stream=sys.stderr,
    )
    try:
        run_config = RunConfig.model_validate(vars(args))
    except ValidationError as e:
        logger.error(f"Invalid arguments: {_field_errors(e)}")
        return EXIT_INPUT_ERROR

    artifact, code = run(run_config)
    if artifact:
        if run_config.output:
            with open(run_config.output, 'w') as f:
                f.write(artifact)
            logger.info(f"Wrote {run_config.command} artifact to {run_config.output}")
        else:
            sys.stdout.write(artifact)
    return code


if __name__ == "__main__":
    sys.exit(main())
