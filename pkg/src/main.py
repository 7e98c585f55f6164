#!/usr/bin/env python3
"""
Main entry point for the coherent configuration toolkit.
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from pydantic import TypeAdapter, ValidationError

from config import settings
from src import __version__
from src import algebra, analysis, constructors, feasibility, storage
from src.algebra import AlgebraError, ConsistencyFailure
from src.constructors import ConstructionError
from src.core import Scheme, VerificationFailure
from src.schemas import CommandConfig, FilterVerdict, IdempotentSummary
from src.storage import FormatError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONSISTENT = 2
EXIT_VERIFICATION = 3


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _fiber_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated fiber indices, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    """Parse command line arguments."""
    parser = _Parser(prog="cctool", description='Coherent configurations: verification, idempotents, theorem checks and feasibility.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--seed', type=int, default=settings.DEFAULT_SEED,
                        help=f'Seed for the generic central element (default: {settings.DEFAULT_SEED})')
    parser.add_argument('--eigen-tol', type=float, default=settings.EIGEN_CLUSTER_TOL,
                        help='Eigenvalue clustering tolerance')
    parser.add_argument('--rank-tol', type=float, default=settings.RANK_TOL,
                        help='Relative singular value cutoff for ranks')
    parser.add_argument('--idempotency-tol', type=float, default=settings.IDEMPOTENCY_TOL,
                        help='Accepted residual for P^2 = P')
    parser.add_argument('--verbose', '-v', action='store_true', help='Log progress at INFO level')

    commands = parser.add_subparsers(dest='subcommand', required=True)

    verify = commands.add_parser('verify', help='Check the coherent configuration axioms')
    verify.add_argument('input', help='Scheme file (.cc)')

    info = commands.add_parser('info', help='Print the combinatorial profile')
    info.add_argument('input', help='Scheme file (.cc)')
    info.add_argument('--json', action='store_true', help='Print JSON')

    idempotents = commands.add_parser('idempotents', help='Central primitive idempotents')
    idempotents.add_argument('input', help='Scheme file (.cc)')
    idempotents.add_argument('--json', action='store_true', help='Print JSON')
    idempotents.add_argument('--dump-matrices', metavar='DIR', help='Write P<i>.txt files to DIR')

    check = commands.add_parser('check', help='Check the theorems on a scheme')
    check.add_argument('input', help='Scheme file (.cc)')
    check.add_argument('--theorem', choices=['1', '2', '3', 'all'], default='all')
    check.add_argument('--json', action='store_true', help='Print JSON')

    output = _Parser(add_help=False)
    output.add_argument('-o', '--output', required=True, help='Output scheme file (.cc)')
    construct = commands.add_parser('construct', help='Build a scheme and write it')
    kinds = construct.add_subparsers(dest='kind', required=True)
    trivial = kinds.add_parser('trivial', parents=[output])
    trivial.add_argument('n', type=int)
    tensor = kinds.add_parser('tensor', parents=[output])
    tensor.add_argument('a')
    tensor.add_argument('b')
    restrict = kinds.add_parser('restrict', parents=[output])
    restrict.add_argument('a')
    restrict.add_argument('--fibers', type=_fiber_list, required=True, help='Comma separated fiber indices')
    dsum = kinds.add_parser('dsum', parents=[output])
    dsum.add_argument('a')
    dsum.add_argument('b')
    design = kinds.add_parser('design', parents=[output])
    design.add_argument('design', help='Incidence file (.inc)')
    two_orbit = kinds.add_parser('two-orbit', parents=[output])
    two_orbit.add_argument('group', help='Permutation group file (.perm)')
    fixture = kinds.add_parser('fixture', parents=[output])
    fixture.add_argument('name', choices=sorted(settings.FIXTURES))

    filter_ = commands.add_parser('filter', help='Run the feasibility rules on an (m, r) entry')
    filter_.add_argument('--m', type=int, required=True)
    filter_.add_argument('--r', type=int, required=True)
    filter_.add_argument('--catalog', help='Homogeneous degree catalog file')
    filter_.add_argument('--rules', help=f'Comma separated subset of {",".join(feasibility.RULES)}')
    filter_.add_argument('--json', action='store_true', help='Print JSON')

    table = commands.add_parser('table', help='Feasibility table over r and m')
    table.add_argument('--m-max', type=int, default=settings.TABLE_M_MAX)
    table.add_argument('--catalog', help='Homogeneous degree catalog file')
    table.add_argument('--json', action='store_true', help='Print JSON')
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else settings.LOG_LEVEL,
        format=settings.LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _decompose(s: Scheme, config: CommandConfig) -> algebra.IdempotentDecomposition:
    return algebra.central_primitive_idempotents(
        s, seed=config.seed, eigen_tol=config.eigen_tol,
        rank_tol=config.rank_tol, idempotency_tol=config.idempotency_tol)


def _cmd_verify(args, config: CommandConfig) -> int:
    s = storage.read_scheme(args.input)
    print(f"OK: {s.point_count} points, {s.relation_count} relations, {s.fiber_count} fibers")
    return EXIT_OK


def _cmd_info(args, config: CommandConfig) -> int:
    profile = analysis.profile(storage.read_scheme(args.input))
    if config.json_output:
        print(profile.model_dump_json(indent=2))
        return EXIT_OK
    for key, value in profile.model_dump(mode="json").items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_idempotents(args, config: CommandConfig) -> int:
    s = storage.read_scheme(args.input)
    dec = _decompose(s, config)
    rows = algebra.summarize(dec)
    if args.dump_matrices:
        storage.dump_matrices(list(dec.idempotents), args.dump_matrices)
    if config.json_output:
        print(TypeAdapter(List[IdempotentSummary]).dump_json(rows, indent=2).decode())
        return EXIT_OK
    for row in rows:
        print(f"P{row.index}: m={row.m} n={row.n} supp={row.support} principal={row.principal}")
    return EXIT_OK


def _theorem_lines(number: int, verdict) -> List[str]:
    lines = [f"Theorem {number}: {verdict.status.value}"]
    if number == 1:
        lines.append(f"  balanced: {verdict.is_balanced}")
        for row in verdict.fibers:
            lines.append(f"  fiber {row.fiber}: vanishing={row.vanishing} injective={row.injective} "
                         f"degree_law={row.degree_law}")
    elif number == 2:
        lines.append(f"  idempotents: {verdict.idempotent_count}")
        if verdict.bipartition is not None:
            lines.append(f"  bipartition: {list(verdict.bipartition[0])} | {list(verdict.bipartition[1])}")
    elif verdict.m is not None:
        lines.append(f"  m={verdict.m} n={verdict.n} r={verdict.r}")
    if getattr(verdict, "message", ""):
        lines.append(f"  {verdict.message}")
    if not verdict.consistent:
        lines.append("  INCONSISTENT")
    return lines


def _cmd_check(args, config: CommandConfig) -> int:
    s = storage.read_scheme(args.input)
    wanted = [1, 2, 3] if args.theorem == 'all' else [int(args.theorem)]
    dec = _decompose(s, config) if set(wanted) & {1, 2} else None

    verdicts = {}
    if 1 in wanted:
        verdicts[1] = analysis.check_theorem1(s, dec)
    if 2 in wanted:
        verdicts[2] = analysis.check_theorem2(s, dec)
    if 3 in wanted:
        verdicts[3] = analysis.check_theorem3(s)

    if config.json_output:
        payload = {f"theorem{k}": v.model_dump(mode="json") for k, v in verdicts.items()}
        print(TypeAdapter(Dict[str, dict]).dump_json(payload, indent=2).decode())
    else:
        for number, verdict in verdicts.items():
            print("\n".join(_theorem_lines(number, verdict)))

    if all(v.consistent for v in verdicts.values()):
        return EXIT_OK
    logger.error("A theorem check is inconsistent with the computed data")
    return EXIT_INCONSISTENT


def _construct(args) -> Scheme:
    if args.kind == 'trivial':
        return constructors.trivial_scheme(args.n)
    if args.kind == 'tensor':
        return constructors.tensor_product(storage.read_scheme(args.a), storage.read_scheme(args.b))
    if args.kind == 'restrict':
        return constructors.restriction(storage.read_scheme(args.a), args.fibers)
    if args.kind == 'dsum':
        return constructors.internal_direct_sum(storage.read_scheme(args.a), storage.read_scheme(args.b))
    if args.kind == 'design':
        return constructors.design_scheme(storage.read_design(args.design))
    if args.kind == 'two-orbit':
        return constructors.two_orbit_scheme(storage.read_permutation_group(args.group))
    return constructors.load_fixture(args.name)


def _cmd_construct(args, config: CommandConfig) -> int:
    s = _construct(args)
    storage.write_scheme(s, args.output)
    print(f"OK: wrote {args.output} ({s.point_count} points, {s.relation_count} relations, {s.fiber_count} fibers)")
    return EXIT_OK


def _cmd_filter(args, config: CommandConfig) -> int:
    catalog = storage.read_catalog(args.catalog) if args.catalog else None
    rules = [x.strip() for x in args.rules.split(",") if x.strip()] if args.rules else None
    profiles = feasibility.enumerate_profiles(args.m, args.r, catalog)
    verdicts = [feasibility.apply_rules(p, rules=rules, catalog=catalog) for p in profiles]

    if config.json_output:
        print(TypeAdapter(List[FilterVerdict]).dump_json(verdicts, indent=2).decode())
        return EXIT_OK
    if not verdicts:
        print(f"no profiles for m={args.m} r={args.r}")
    for verdict in verdicts:
        outcome = f"eliminated ({verdict.rule})" if verdict.rule else "survives"
        print(f"{verdict.profile.label()}: {outcome}")
    return EXIT_OK


def _cmd_table(args, config: CommandConfig) -> int:
    catalog = storage.read_catalog(args.catalog) if args.catalog else None
    report = feasibility.table_report(args.m_max, catalog=catalog)
    if config.json_output:
        print(report.model_dump_json(indent=2))
        return EXIT_OK
    for entry in report.entries:
        rule = f" ({entry.rule})" if entry.rule else ""
        print(f"r={entry.r} m={entry.m}: {entry.status.value}{rule}")
        for p in entry.survivors:
            print(f"  survives: {p.label()}")
        for note in entry.notes:
            print(f"  note: {note}")
    return EXIT_OK


COMMANDS: Dict[str, Callable] = {
    'verify': _cmd_verify,
    'info': _cmd_info,
    'idempotents': _cmd_idempotents,
    'check': _cmd_check,
    'construct': _cmd_construct,
    'filter': _cmd_filter,
    'table': _cmd_table,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Main execution function; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr, end="")
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    _configure_logging(args.verbose)
    try:
        config = CommandConfig(
            subcommand=args.subcommand,
            seed=args.seed,
            eigen_tol=args.eigen_tol,
            rank_tol=args.rank_tol,
            idempotency_tol=args.idempotency_tol,
            json_output=getattr(args, 'json', False),
            verbose=args.verbose,
            input_paths=[p for p in (getattr(args, name, None) for name in ('input', 'a', 'b')) if p],
            output_path=getattr(args, 'output', None),
        )
    except ValidationError as e:
        print(f"error: invalid options: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"Running {config.subcommand}")
    try:
        return COMMANDS[config.subcommand](args, config)
    except VerificationFailure as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except ConsistencyFailure as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (FormatError, ConstructionError, AlgebraError, OSError, ValueError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"Error running {config.subcommand}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
