"""
This module contains the ``fmm`` command line interface. Every subcommand is a thin wrapper around library calls.

Schemes are given either as a path to a scheme file or as a specifier (see :func:`.scheme_from_spec`), e.g.
``fmm compose -u 4 -v 3 --uuu kron:strassen,strassen --uuv naive:4,4,3 --vvu naive:3,3,4 -o s777.json``.

Exit codes: 0 on success, 1 when a verification or comparison fails, 2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Callable, Dict, List, Optional

import numpy as np

from fmmscheme.algebra import kronecker, orient, rotate, transpose_dual
from fmmscheme.catalog import (
    bounds_table,
    dump_scheme,
    kron_derivation,
    prop1_derivation,
    save_scheme,
    scheme_from_spec
)
from fmmscheme.compose import compose
from fmmscheme.core import BilinearScheme, Dims, Matrix, describe, omega, op_counts, render_rational
from fmmscheme.exception import FMMDimensionError, FMMException, FMMParameterError
from fmmscheme.verify import (
    FLOAT_TOLERANCE,
    brent_check,
    evaluate,
    evaluate_counted,
    max_abs_difference,
    multiply_recursive,
    naive_mult,
    random_eval_check,
    random_matrix
)

__all__ = ['main']

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _scheme(args: argparse.Namespace, spec: str) -> BilinearScheme:
    return scheme_from_spec(spec, fixtures=args.fixtures)


def _write(scheme: BilinearScheme, output: Optional[str]) -> None:
    # Save to the output path when given, otherwise write the document to stdout.
    if output:
        save_scheme(scheme, output)
        print(f'{scheme.name}: {scheme.dims}, rank {scheme.rank} -> {output}')
    else:
        sys.stdout.write(dump_scheme(scheme))


def _print_brent(scheme: BilinearScheme, workers: int = 1) -> bool:
    report = brent_check(scheme, workers=workers)
    print(f'brent: {report.summary()}')
    for failure in report.first_failures:
        print(f'  {failure}')
    return report.passed


def _cmd_gen(args: argparse.Namespace) -> int:
    _write(_scheme(args, args.scheme), args.output)
    return EXIT_OK


def _cmd_info(args: argparse.Namespace) -> int:
    scheme = _scheme(args, args.scheme)
    counts = op_counts(scheme)
    exponent = omega(scheme)
    print(f'name: {scheme.name}')
    print(f'provenance: {scheme.provenance}')
    print(f'dims: {scheme.dims}')
    print(f'rank: {scheme.rank} (naive {scheme.dims.naive_rank()})')
    print(f'multiplications: {counts.multiplications}')
    print(f'additions: {counts.additions}')
    print(f'scalar multiplications: {counts.scalar_multiplications}')
    print(f'omega: {"undefined" if exponent is None else f"{exponent:.6f}"}')
    if args.show:
        print(describe(scheme))
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    scheme = _scheme(args, args.scheme)
    print(f'{scheme.name or args.scheme}: {scheme.dims}, rank {scheme.rank}')
    return EXIT_OK if _print_brent(scheme, args.workers) else EXIT_FAILED


def _cmd_rotate(args: argparse.Namespace) -> int:
    _write(rotate(_scheme(args, args.scheme)), args.output)
    return EXIT_OK


def _cmd_transpose(args: argparse.Namespace) -> int:
    _write(transpose_dual(_scheme(args, args.scheme)), args.output)
    return EXIT_OK


def _cmd_orient(args: argparse.Namespace) -> int:
    _write(orient(_scheme(args, args.scheme), Dims(*args.dims)), args.output)
    return EXIT_OK


def _cmd_kron(args: argparse.Namespace) -> int:
    _write(kronecker(_scheme(args, args.left), _scheme(args, args.right)), args.output)
    return EXIT_OK


def _cmd_compose(args: argparse.Namespace) -> int:
    scheme, report = compose(
        args.u,
        args.v,
        _scheme(args, args.uuu),
        _scheme(args, args.uuv),
        _scheme(args, args.vvu),
        strict=not args.allow_unverified
    )
    save_scheme(scheme, args.output)
    print(f'dims: {scheme.dims}')
    print(f'rank: {report.arithmetic()}')
    print(f'output: {args.output}')
    if args.no_verify:
        return EXIT_OK
    return EXIT_OK if _print_brent(scheme, args.workers) else EXIT_FAILED


def _render(matrix: Matrix) -> List[str]:
    def cell(x) -> str:
        return render_rational(x) if matrix.exact else f'{x:.12g}'
    return ['  ' + ' '.join(cell(x) for x in row) for row in matrix.entries]


def _cmd_eval(args: argparse.Namespace) -> int:
    scheme = _scheme(args, args.scheme)
    u, v, w = scheme.dims
    rng = np.random.default_rng(args.seed)
    exact = not args.float
    a = random_matrix(u, v, rng, exact)
    b = random_matrix(v, w, rng, exact)
    got = evaluate(scheme, a, b)
    expected = naive_mult(a, b)
    print(f'{scheme.name or args.scheme} on {"integer" if exact else "float"} operands, seed {args.seed}')
    print('C =')
    for line in _render(got):
        print(line)
    if exact:
        agree = got == expected
    else:
        difference = max_abs_difference(got, expected)
        print(f'max |difference|: {difference:.3e}')
        agree = difference <= FLOAT_TOLERANCE
    print(f'oracle: {"EQUAL" if agree else "DIFFERENT"}')
    return EXIT_OK if agree else EXIT_FAILED


def _cmd_check_random(args: argparse.Namespace) -> int:
    scheme = _scheme(args, args.scheme)
    report = random_eval_check(scheme, args.trials, args.seed, exact=not args.float)
    print(f'{scheme.name or args.scheme}: {report.summary()}')
    return EXIT_OK if report.all_equal else EXIT_FAILED


def _cmd_bound(args: argparse.Namespace) -> int:
    dims = Dims(args.u, args.v, args.w)
    table = bounds_table(args.bounds_file)
    best = table.best(dims)
    print(f'{dims} <= {best.rank_bound} ({best.provenance})')
    for entry in table.entries(dims):
        print(f'  {entry.rank_bound}: {entry.provenance}')
    if args.prop1:
        u, v = args.prop1
        if dims.key() != (u + v,) * 3:
            raise FMMParameterError(f'The composition ({u},{v}) gives <{u + v},{u + v},{u + v}>, not {dims}')
        print(f'composition ({u},{v}): {prop1_derivation(u, v, table)}')
    if args.kron:
        d1, d2 = Dims(*args.kron[:3]), Dims(*args.kron[3:])
        product = Dims(*(x * y for x, y in zip(d1, d2)))
        if product.key() != dims.key():
            raise FMMParameterError(f'The Kronecker product of {d1} and {d2} is {product}, not {dims}')
        print(f'kronecker {d1} x {d2}: {kron_derivation(d1, d2, table)}')
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    scheme = _scheme(args, args.scheme)
    u, v, w = scheme.dims
    counts = op_counts(scheme)
    print(f'{scheme.name or args.scheme}: {scheme.dims}, rank {scheme.rank}, additions {counts.additions}, '
          f'scalar multiplications {counts.scalar_multiplications}')
    rng = np.random.default_rng(args.seed)

    if args.recursive:
        size = args.size or u
        if size % u:
            raise FMMDimensionError(f'--size {size} is not a multiple of the scheme size {u}')
        a = rng.uniform(-1.0, 1.0, size=(size, size))
        b = rng.uniform(-1.0, 1.0, size=(size, size))
        started = time.perf_counter()
        for _ in range(args.reps):
            product, multiplications = multiply_recursive(scheme, a, b)
        scheme_time = (time.perf_counter() - started) / args.reps
        started = time.perf_counter()
        for _ in range(args.reps):
            expected = a @ b
        naive_time = (time.perf_counter() - started) / args.reps
        difference = float(np.max(np.abs(product - expected)))
        naive_multiplications = size ** 3
    else:
        if args.size is not None and (len(set(scheme.dims)) != 1 or args.size != u):
            raise FMMDimensionError(f'--size {args.size} does not match {scheme.dims}; use --recursive for multiples')
        a = random_matrix(u, v, rng, exact=False)
        b = random_matrix(v, w, rng, exact=False)
        started = time.perf_counter()
        for _ in range(args.reps):
            product, multiplications = evaluate_counted(scheme, a, b)
        scheme_time = (time.perf_counter() - started) / args.reps
        started = time.perf_counter()
        for _ in range(args.reps):
            expected = naive_mult(a, b)
        naive_time = (time.perf_counter() - started) / args.reps
        difference = max_abs_difference(product, expected)
        naive_multiplications = scheme.dims.naive_rank()

    print(f'multiplications: {multiplications} (naive {naive_multiplications})')
    print(f'time per product: scheme {scheme_time * 1e3:.3f} ms, naive {naive_time * 1e3:.3f} ms')
    print(f'max |difference|: {difference:.3e}')
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f'{text} is not a positive integer')
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fmm', description='Build, transform, compose and verify bilinear matrix '
                                                             'multiplication schemes.')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='Log INFO to stderr, repeat for DEBUG.')
    parser.add_argument('--fixtures', default=None, help='Fixture directory, overriding FMM_FIXTURES.')
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.set_defaults(handler=handler)
        return sub

    def scheme_arg(sub: argparse.ArgumentParser, name: str = 'scheme') -> None:
        sub.add_argument(name, help='Scheme file or specifier (strassen, naive:U,V,W, kron:S,S, ...).')

    def output_arg(sub: argparse.ArgumentParser, required: bool = False) -> None:
        sub.add_argument('-o', '--output', required=required, help='Output scheme file (stdout when omitted).')

    sub = command('gen', _cmd_gen, 'Write the scheme of a specifier.')
    scheme_arg(sub)
    output_arg(sub)

    sub = command('info', _cmd_info, 'Print rank, operation counts and exponent of a scheme.')
    scheme_arg(sub)
    sub.add_argument('--show', action='store_true', help='Also list the multiplications and result cells.')

    sub = command('verify', _cmd_verify, 'Check a scheme against the Brent equations.')
    scheme_arg(sub)
    sub.add_argument('--workers', type=_positive_int, default=1, help='Processes used for the check.')

    sub = command('rotate', _cmd_rotate, 'Turn a <u,v,w> scheme into a <v,w,u> scheme.')
    scheme_arg(sub)
    output_arg(sub)

    sub = command('transpose', _cmd_transpose, 'Turn a <u,v,w> scheme into a <w,v,u> scheme.')
    scheme_arg(sub)
    output_arg(sub)

    sub = command('orient', _cmd_orient, 'Reorient a scheme to a permutation of its dims.')
    scheme_arg(sub)
    sub.add_argument('--dims', type=_positive_int, nargs=3, required=True, metavar=('U', 'V', 'W'))
    output_arg(sub)

    sub = command('kron', _cmd_kron, 'Kronecker product of two schemes.')
    scheme_arg(sub, 'left')
    scheme_arg(sub, 'right')
    output_arg(sub)

    sub = command('compose', _cmd_compose, 'Compose a <u+v,u+v,u+v> scheme from three smaller ones.')
    sub.add_argument('-u', type=_positive_int, required=True, help='Larger part of each axis.')
    sub.add_argument('-v', type=_positive_int, required=True, help='Smaller part of each axis.')
    sub.add_argument('--uuu', required=True, help='<u,u,u> scheme.')
    sub.add_argument('--uuv', required=True, help='Scheme with dims a permutation of (u,u,v).')
    sub.add_argument('--vvu', required=True, help='Scheme with dims a permutation of (v,v,u).')
    output_arg(sub, required=True)
    sub.add_argument('--no-verify', action='store_true', help='Skip checking the composed scheme.')
    sub.add_argument('--allow-unverified', action='store_true', help='Accept inputs failing the Brent equations.')
    sub.add_argument('--workers', type=_positive_int, default=1, help='Processes used for the check.')

    sub = command('eval', _cmd_eval, 'Evaluate a scheme on seeded random operands and compare with the oracle.')
    scheme_arg(sub)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--float', action='store_true', help='Use floats in [-1, 1] instead of integers in [-9, 9].')

    sub = command('check-random', _cmd_check_random, 'Compare a scheme with the oracle on random operands.')
    scheme_arg(sub)
    sub.add_argument('--trials', type=_positive_int, default=100)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--float', action='store_true', help='Use floats in [-1, 1] instead of integers in [-9, 9].')

    sub = command('bound', _cmd_bound, 'Print the best known rank bound of <U,V,W>.')
    sub.add_argument('u', type=_positive_int, metavar='U')
    sub.add_argument('v', type=_positive_int, metavar='V')
    sub.add_argument('w', type=_positive_int, metavar='W')
    sub.add_argument('--prop1', type=_positive_int, nargs=2, metavar=('U', 'V'),
                     help='Also derive the composition bound from (u,v).')
    sub.add_argument('--kron', type=_positive_int, nargs=6, metavar=('U1', 'V1', 'W1', 'U2', 'V2', 'W2'),
                     help='Also derive the Kronecker bound of two dims.')
    sub.add_argument('--bounds-file', default=None, help='Extra bounds file, overriding FMM_BOUNDS.')

    sub = command('bench', _cmd_bench, 'Time a scheme against naive multiplication.')
    scheme_arg(sub)
    sub.add_argument('--size', type=_positive_int, default=None, help='Operand size (multiples need --recursive).')
    sub.add_argument('--reps', type=_positive_int, default=3)
    sub.add_argument('--recursive', action='store_true', help='Apply a square scheme recursively to blocks.')
    sub.add_argument('--seed', type=int, default=0)
    return parser


_LOG_LEVELS: Dict[int, int] = {0: logging.WARNING, 1: logging.INFO}


def main(argv: Optional[List[str]] = None) -> int:
    """Run the ``fmm`` command line.

    :param argv: Arguments without the program name, ``sys.argv[1:]`` when None.
    :return: The exit code.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=_LOG_LEVELS.get(args.verbose, logging.DEBUG), stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.handler(args)
    except (FMMException, OSError) as e:
        _logger.debug('%s failed', args.command, exc_info=True)
        print(f'fmm {args.command}: error: {e}', file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
