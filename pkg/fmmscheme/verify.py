"""
This module contains exact verification of schemes through the Brent equations, the naive multiplication oracle,
evaluation of a scheme on concrete matrices and randomized comparisons of the two.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from fmmscheme.core import BilinearScheme, Matrix, Position
from fmmscheme.exception import FMMDimensionError, FMMParameterError

__all__ = [
    'BrentFailure',
    'BrentReport',
    'EvalMismatch',
    'EvalReport',
    'FLOAT_TOLERANCE',
    'brent_check',
    'evaluate',
    'evaluate_counted',
    'max_abs_difference',
    'multiply_recursive',
    'naive_mult',
    'random_eval_check',
    'random_matrix'
]

_logger = logging.getLogger(__name__)

# Number of failing equations kept in a BrentReport.
_MAX_FAILURES = 10

# Absolute tolerance used when comparing float evaluations with the oracle.
FLOAT_TOLERANCE = 1e-9

# (i, j, j', k, i', k'): an A index, a B index and a result-indexed C index.
_EquationKey = Tuple[int, int, int, int, int, int]

# Entries of one term as plain tuples, which pickle cheaply for worker processes.
_TermEntries = Tuple[Tuple[Tuple[Position, Any], ...], ...]


class BrentFailure(NamedTuple):
    """One Brent equation that does not hold."""

    #: Index ``(i, j)`` into the left operand.
    a_index: Position

    #: Index ``(j', k)`` into the right operand.
    b_index: Position

    #: Result cell ``(i', k')``.
    c_index: Position

    #: 1 on the delta pattern ``i = i', j = j', k = k'``, 0 elsewhere.
    expected: int

    #: The sum of coefficient products actually found.
    got: Fraction

    def __str__(self) -> str:
        return f'A{self.a_index} B{self.b_index} C{self.c_index}: expected {self.expected}, got {self.got}'


@dataclass(frozen=True)
class BrentReport:
    """Outcome of :func:`brent_check`. ``passed`` holds exactly when ``first_failures`` is empty."""

    passed: bool
    total_equations: int
    first_failures: Tuple[BrentFailure, ...] = ()

    def summary(self) -> str:
        return f'{self.total_equations} equations, {"PASS" if self.passed else "FAIL"}'


def _exact(value: Fraction) -> Any:
    # Integral coefficients become ints, which multiply much faster than Fractions.
    return value.numerator if value.denominator == 1 else value


def _term_entries(scheme: BilinearScheme) -> List[_TermEntries]:
    return [
        tuple(tuple((position, _exact(value)) for position, value in coeff) for coeff in term.factors())
        for term in scheme.terms
    ]


def _accumulate(terms: Iterable[_TermEntries]) -> Dict[_EquationKey, Any]:
    # Sum of alpha[i,j] * beta[j',k] * gamma[i',k'] over the given terms, for every nonzero triple product.
    sums: Dict[_EquationKey, Any] = {}
    for alpha, beta, gamma in terms:
        for (i, j), a in alpha:
            for (j2, k), b in beta:
                ab = a * b
                for (i2, k2), g in gamma:
                    key = (i, j, j2, k, i2, k2)
                    sums[key] = sums.get(key, 0) + ab * g
    return sums


def _merge(parts: Iterable[Dict[_EquationKey, Any]]) -> Dict[_EquationKey, Any]:
    merged: Dict[_EquationKey, Any] = {}
    for part in parts:
        for key, value in part.items():
            merged[key] = merged.get(key, 0) + value
    return merged


def brent_check(scheme: BilinearScheme, workers: int = 1) -> BrentReport:
    """Verify *scheme* exactly against the Brent equations: for every ``(i,j)``, ``(j',k)`` and ``(i',k')``,
    ``sum_l alpha_l[i,j] beta_l[j',k] gamma_l[i',k']`` must be 1 when ``i = i'``, ``j = j'`` and ``k = k'``, and 0
    otherwise. Only nonzero triple products are accumulated.

    :param scheme: The scheme to check.
    :param workers: Number of processes sharing the accumulation. Results do not depend on it.
    :return: The report, listing at most 10 failing equations in index order.
    """
    u, v, w = scheme.dims
    total = (u * v) * (v * w) * (u * w)
    entries = _term_entries(scheme)
    if workers > 1 and len(entries) > 1:
        chunks = [entries[n::workers] for n in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            sums = _merge(executor.map(_accumulate, chunks))
    else:
        sums = _accumulate(entries)
    _logger.debug('Brent check of %s: %d nonzero sums over %d equations', scheme.name, len(sums), total)

    failures = []
    for key, value in sums.items():
        i, j, j2, k, i2, k2 = key
        expected = int(i == i2 and j == j2 and k == k2)
        if value != expected:
            failures.append(BrentFailure((i, j), (j2, k), (i2, k2), expected, Fraction(value)))
    # Delta equations nobody contributed to.
    for i in range(u):
        for j in range(v):
            for k in range(w):
                if (i, j, j, k, i, k) not in sums:
                    failures.append(BrentFailure((i, j), (j, k), (i, k), 1, Fraction(0)))
    failures.sort()
    return BrentReport(not failures, total, tuple(failures[:_MAX_FAILURES]))


def naive_mult(a: Matrix, b: Matrix) -> Matrix:
    """Textbook triple-loop product ``a b``, exact when both operands are exact.

    :param a: Left operand.
    :param b: Right operand.
    :return: The product.
    :raise FMMDimensionError: If the inner dimensions differ.
    """
    if a.cols != b.rows:
        raise FMMDimensionError(f'Cannot multiply a {a.rows}x{a.cols} matrix by a {b.rows}x{b.cols} matrix')
    zero = Fraction(0) if a.exact and b.exact else 0.0
    rows = []
    for i in range(a.rows):
        row = []
        for k in range(b.cols):
            total = zero
            for j in range(a.cols):
                total += a[i, j] * b[j, k]
            row.append(total)
        rows.append(tuple(row))
    return Matrix(a.rows, b.cols, tuple(rows))


def evaluate_counted(scheme: BilinearScheme, a: Matrix, b: Matrix) -> Tuple[Matrix, int]:
    """Like :func:`evaluate`, also returning the number of multiplications of two operand-derived values performed.

    :param scheme: The scheme to apply.
    :param a: ``u x v`` left operand.
    :param b: ``v x w`` right operand.
    :return: The product and the multiplication count, which equals the rank.
    :raise FMMDimensionError: If the operands do not match the scheme dims.
    """
    u, v, w = scheme.dims
    if a.shape != (u, v) or b.shape != (v, w):
        raise FMMDimensionError(f'A {scheme.dims} scheme needs {u}x{v} and {v}x{w} operands, got '
                                f'{a.rows}x{a.cols} and {b.rows}x{b.cols}')
    zero = Fraction(0) if a.exact and b.exact else 0.0
    result = [[zero] * w for _ in range(u)]
    multiplications = 0
    for term in scheme.terms:
        left = sum((value * a[position] for position, value in term.alpha), zero)
        right = sum((value * b[position] for position, value in term.beta), zero)
        product = left * right
        multiplications += 1
        for (i, k), value in term.gamma:
            result[i][k] += value * product
    return Matrix(u, w, tuple(tuple(row) for row in result)), multiplications


def evaluate(scheme: BilinearScheme, a: Matrix, b: Matrix) -> Matrix:
    """Apply *scheme* to concrete operands: ``t_l = (sum alpha_l[i,j] a[i,j]) (sum beta_l[j,k] b[j,k])`` and
    ``C[i,k] = sum_l gamma_l[i,k] t_l``.

    :param scheme: The scheme to apply.
    :param a: ``u x v`` left operand.
    :param b: ``v x w`` right operand.
    :return: The ``u x w`` result.
    :raise FMMDimensionError: If the operands do not match the scheme dims.
    """
    return evaluate_counted(scheme, a, b)[0]


def random_matrix(rows: int, cols: int, rng: np.random.Generator, exact: bool = True) -> Matrix:
    """Draw a matrix from *rng*: integers uniform in ``[-9, 9]`` when *exact*, floats uniform in ``[-1, 1]``
    otherwise."""
    if exact:
        return Matrix.from_rows(rng.integers(-9, 10, size=(rows, cols)).tolist(), exact=True)
    return Matrix.from_rows(rng.uniform(-1.0, 1.0, size=(rows, cols)).tolist(), exact=False)


def max_abs_difference(x: Matrix, y: Matrix) -> float:
    if x.shape != y.shape:
        raise FMMDimensionError(f'Cannot compare a {x.rows}x{x.cols} matrix with a {y.rows}x{y.cols} matrix')
    return float(np.max(np.abs(x.to_numpy() - y.to_numpy())))


class EvalMismatch(NamedTuple):
    """The first operands on which a scheme and the oracle disagree."""

    a: Matrix
    b: Matrix
    cell: Position
    scheme_value: Any
    oracle_value: Any


@dataclass(frozen=True)
class EvalReport:
    """Outcome of :func:`random_eval_check`. ``all_equal`` holds exactly when no mismatch is recorded."""

    #: Number of operand pairs compared.
    trials: int
    all_equal: bool
    mismatch_example: Optional[EvalMismatch] = None

    def summary(self) -> str:
        if self.all_equal:
            return f'{self.trials} trials, all equal'
        return f'mismatch in trial {self.trials} at C{self.mismatch_example.cell}: scheme ' \
               f'{self.mismatch_example.scheme_value}, oracle {self.mismatch_example.oracle_value}'


def _first_difference(x: Matrix, y: Matrix, tolerance: Optional[float]) -> Optional[Position]:
    for i in range(x.rows):
        for k in range(x.cols):
            if tolerance is None:
                if x[i, k] != y[i, k]:
                    return i, k
            elif abs(x[i, k] - y[i, k]) > tolerance:
                return i, k
    return None


def random_eval_check(
    scheme: BilinearScheme,
    trials: int,
    seed: int,
    exact: bool = True,
    tolerance: float = FLOAT_TOLERANCE
) -> EvalReport:
    """Compare :func:`evaluate` with :func:`naive_mult` on seeded random operands, stopping at the first
    disagreement. The same seed always gives the same report.

    :param scheme: The scheme to test.
    :param trials: Number of operand pairs to draw.
    :param seed: Seed of the generator.
    :param exact: Draw exact integers in ``[-9, 9]`` and compare exactly when True; draw floats in ``[-1, 1]`` and
        compare up to *tolerance* otherwise.
    :param tolerance: Largest absolute difference accepted in float mode.
    :return: The report.
    :raise FMMParameterError: If *trials* is less than 1.
    """
    if trials < 1:
        raise FMMParameterError(f'trials must be at least 1, got {trials}')
    u, v, w = scheme.dims
    rng = np.random.default_rng(seed)
    for trial in range(1, trials + 1):
        a = random_matrix(u, v, rng, exact)
        b = random_matrix(v, w, rng, exact)
        got = evaluate(scheme, a, b)
        expected = naive_mult(a, b)
        cell = _first_difference(got, expected, None if exact else tolerance)
        if cell is not None:
            _logger.debug('Scheme %s disagrees with the oracle in trial %d', scheme.name, trial)
            return EvalReport(trial, False, EvalMismatch(a, b, cell, got[cell], expected[cell]))
    return EvalReport(trials, True)


def multiply_recursive(scheme: BilinearScheme, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, int]:
    """Multiply square float matrices by applying a square ``<n,n,n>`` scheme recursively to ``n x n`` block
    partitions. Once the size is no longer divisible by ``n`` the blocks are multiplied naively, so a size of
    ``n^k s`` costs ``rank^k s^3`` scalar multiplications.

    :param scheme: A square scheme with ``n >= 2``.
    :param a: Left square operand.
    :param b: Right square operand of the same size.
    :return: The product and the number of scalar multiplications performed.
    :raise FMMParameterError: If the scheme is not square or ``n < 2``.
    :raise FMMDimensionError: If the operands are not square matrices of equal size, or are empty.
    """
    n = scheme.dims.u
    if tuple(scheme.dims) != (n, n, n) or n < 2:
        raise FMMParameterError(f'Recursive application needs a square scheme with n >= 2, got {scheme.dims}')
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape or a.shape[0] == 0:
        raise FMMDimensionError(f'Recursive application needs nonempty square operands of equal size, got '
                                f'{a.shape} and {b.shape}')
    terms = [
        tuple([(position, float(value)) for position, value in coeff] for coeff in term.factors())
        for term in scheme.terms
    ]
    return _multiply_blocks(terms, n, np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def _multiply_blocks(
    terms: List[Tuple[List, List, List]], n: int, a: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, int]:
    # Product of a and b together with the number of scalar multiplications spent.
    size = a.shape[0]
    if size % n:
        return a @ b, size ** 3
    m = size // n

    def block(x: np.ndarray, row: int, col: int) -> np.ndarray:
        return x[row * m:(row + 1) * m, col * m:(col + 1) * m]

    result = np.zeros_like(a)
    multiplications = 0
    for alpha, beta, gamma in terms:
        left = sum(value * block(a, i, j) for (i, j), value in alpha)
        right = sum(value * block(b, j, k) for (j, k), value in beta)
        product, count = _multiply_blocks(terms, n, left, right)
        multiplications += count
        for (i, k), value in gamma:
            block(result, i, k)[...] += value * product
    return result, multiplications
