"""
This module contains the core representation of bilinear matrix multiplication schemes: exact scalars, sparse
coefficient matrices, multiplication terms, schemes and dense matrices, together with canonicalization and the
operation counts of a scheme.

Conventions used across the package:

* A scheme for ``<u,v,w>`` multiplies a ``u x v`` matrix ``A`` by a ``v x w`` matrix ``B``.
* Term ``l`` computes ``t_l = (sum alpha_l[i,j] A[i,j]) * (sum beta_l[j,k] B[j,k])`` and contributes
  ``gamma_l[i,k] * t_l`` to the result cell ``C[i,k]``. ``gamma`` is result-indexed (``u x w``); the third factor of
  the trilinear form ``Trace(A B W)`` is its transpose, ``W[k,i] = gamma[i,k]``.
* Indices are 0-based everywhere.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from fmmscheme.exception import FMMParseError, FMMStructureError, FMMValidationError

__all__ = [
    'BilinearScheme',
    'CoeffMatrix',
    'Dims',
    'Matrix',
    'MulTerm',
    'OpCounts',
    'Position',
    'Rational',
    'describe',
    'make_scheme',
    'omega',
    'op_counts',
    'parse_rational',
    'rank',
    'render_rational'
]

# The scalar of every scheme coefficient. Fraction keeps numerator and denominator coprime with a positive denominator.
Rational = Fraction

# A (row, col) position in a coefficient matrix or a dense matrix.
Position = Tuple[int, int]

# Optional '-', ASCII digits, optional '/digits'. Anything else (including '+1', '1.5', ' 1' or non-ASCII digits) is
# rejected.
_RATIONAL_REGEX = re.compile(r'-?[0-9]+(?:/[0-9]+)?')


def parse_rational(text: str) -> Fraction:
    """Parse an exact rational written as ``-3/2``, ``7`` or ``-1``.

    :param text: The string to parse.
    :return: The parsed value.
    :raise FMMParseError: If *text* does not follow the fraction grammar or has a zero denominator.
    """
    if not isinstance(text, str) or not _RATIONAL_REGEX.fullmatch(text):
        raise FMMParseError(f'"{text}" is not a fraction of the form [-]digits[/digits]')
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise FMMParseError(f'"{text}" has a zero denominator')


def render_rational(value: Union[int, Fraction]) -> str:
    """Render an exact rational so that :func:`parse_rational` gives it back.

    :param value: The value to render.
    :return: ``numerator`` or ``numerator/denominator``.
    """
    return str(Fraction(value))


@dataclass(frozen=True)
class Dims:
    """The shape ``<u,v,w>`` of a matrix product: ``u x v`` times ``v x w``."""

    #: Rows of the left operand.
    u: int

    #: Inner dimension.
    v: int

    #: Columns of the right operand.
    w: int

    def __post_init__(self) -> None:
        for name, value in zip('uvw', (self.u, self.v, self.w)):
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise FMMValidationError(f'{name}={value!r} must be a positive integer')

    def __iter__(self) -> Iterator[int]:
        return iter((self.u, self.v, self.w))

    def __str__(self) -> str:
        return f'<{self.u},{self.v},{self.w}>'

    @staticmethod
    def of(value: Union[Dims, Sequence[int]]) -> Dims:
        """Coerce a triple to :class:`Dims`.

        :param value: Either a :class:`Dims` or a sequence of three positive integers.
        :return: The corresponding :class:`Dims`.
        """
        if isinstance(value, Dims):
            return value
        if len(value) != 3:
            raise FMMValidationError(f'Expected three dimensions, got {value!r}')
        return Dims(*value)

    def key(self) -> Tuple[int, int, int]:
        # Canonical form under the six symmetries: the sorted triple.
        return tuple(sorted(self))

    def naive_rank(self) -> int:
        return self.u * self.v * self.w


@dataclass(frozen=True)
class CoeffMatrix:
    """A sparse ``rows x cols`` matrix of exact coefficients. Zero entries are never stored and entries are kept in
    row-major order, so two coefficient matrices with equal values compare equal.

    Use :meth:`build` rather than the constructor to get zero pruning and sorting.
    """

    rows: int
    cols: int
    entries: Tuple[Tuple[Position, Fraction], ...]

    # Lookup table built from entries.
    _lookup: Dict[Position, Fraction] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise FMMValidationError(f'Coefficient matrix must be at least 1x1, got {self.rows}x{self.cols}')
        lookup = {}
        previous = None
        for (row, col), value in self.entries:
            if not (0 <= row < self.rows and 0 <= col < self.cols):
                raise FMMValidationError(f'Entry ({row}, {col}) outside a {self.rows}x{self.cols} coefficient matrix')
            if value == 0:
                raise FMMValidationError(f'Entry ({row}, {col}) is zero; zero entries must be absent')
            if previous is not None and (row, col) <= previous:
                raise FMMValidationError(f'Entries must be unique and in row-major order, found ({row}, {col}) after '
                                         f'{previous}')
            previous = (row, col)
            lookup[(row, col)] = value
        object.__setattr__(self, '_lookup', lookup)

    @classmethod
    def build(
        cls,
        rows: int,
        cols: int,
        values: Union[Mapping[Position, Any], Iterable[Tuple[Position, Any]]] = ()
    ) -> CoeffMatrix:
        """Build a canonical coefficient matrix, pruning zeros and sorting entries.

        :param rows: Number of rows.
        :param cols: Number of columns.
        :param values: Mapping or iterable of ``((row, col), value)``. Values are converted to :class:`Fraction`.
        :return: The canonical coefficient matrix.
        :raise FMMValidationError: If a position is repeated or out of range.
        """
        items = values.items() if isinstance(values, Mapping) else values
        collected = {}
        for (row, col), value in items:
            position = (row, col)
            if position in collected:
                raise FMMValidationError(f'Duplicate entry at {position}')
            collected[position] = Fraction(value)
        return cls(rows, cols, tuple((p, c) for p, c in sorted(collected.items()) if c != 0))

    @classmethod
    def unit(cls, rows: int, cols: int, row: int, col: int, value: Any = 1) -> CoeffMatrix:
        # The matrix with a single entry, e_{row,col} scaled by value.
        return cls.build(rows, cols, {(row, col): value})

    def __getitem__(self, position: Position) -> Fraction:
        return self._lookup.get(position, Fraction(0))

    def __iter__(self) -> Iterator[Tuple[Position, Fraction]]:
        return iter(self.entries)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def positions(self) -> List[Position]:
        return [p for p, _ in self.entries]

    def transpose(self) -> CoeffMatrix:
        return CoeffMatrix.build(self.cols, self.rows, (((c, r), v) for (r, c), v in self.entries))

    def kron(self, other: CoeffMatrix) -> CoeffMatrix:
        """Kronecker product: ``self`` indexes the coarse blocks, ``other`` the position within a block.

        :param other: The right factor.
        :return: ``(rows * other.rows) x (cols * other.cols)`` coefficient matrix.
        """
        return CoeffMatrix.build(
            self.rows * other.rows,
            self.cols * other.cols,
            (
                ((r1 * other.rows + r2, c1 * other.cols + c2), v1 * v2)
                for (r1, c1), v1 in self.entries
                for (r2, c2), v2 in other.entries
            )
        )

    def to_dense(self) -> List[List[Fraction]]:
        dense = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (r, c), value in self.entries:
            dense[r][c] = value
        return dense


@dataclass(frozen=True)
class MulTerm:
    """One multiplication of a scheme. ``alpha`` weighs entries of the left operand, ``beta`` entries of the right
    operand and ``gamma`` distributes the product into result cells.
    """

    alpha: CoeffMatrix
    beta: CoeffMatrix
    gamma: CoeffMatrix

    def factors(self) -> Tuple[CoeffMatrix, CoeffMatrix, CoeffMatrix]:
        return self.alpha, self.beta, self.gamma


@dataclass(frozen=True)
class BilinearScheme:
    """A rank-``r`` bilinear scheme realizing ``<u,v,w>``. Two schemes are structurally equal when their dims and
    term sequences are equal; ``name``, ``provenance`` and the ``verified`` mark do not take part in comparisons.

    Build schemes with :func:`make_scheme`, which canonicalizes and validates the terms.
    """

    dims: Dims
    terms: Tuple[MulTerm, ...]
    name: str = field(default='', compare=False)
    provenance: str = field(default='', compare=False)

    #: True when the scheme is known to satisfy the Brent equations.
    verified: bool = field(default=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.terms)

    def renamed(self, name: str, provenance: Optional[str] = None) -> BilinearScheme:
        return replace(self, name=name, provenance=self.provenance if provenance is None else provenance)

    def marked(self, verified: bool) -> BilinearScheme:
        return replace(self, verified=verified)


def make_scheme(
    dims: Union[Dims, Sequence[int]],
    terms: Iterable[MulTerm],
    name: str = '',
    provenance: str = '',
    verified: bool = False
) -> BilinearScheme:
    """Build a canonical scheme from its terms.

    :param dims: The dims ``<u,v,w>`` the scheme realizes.
    :param terms: Terms whose ``alpha`` is ``u x v``, ``beta`` is ``v x w`` and ``gamma`` is ``u x w``.
    :param name: Text label for the scheme.
    :param provenance: How the scheme was constructed.
    :param verified: Whether the caller knows the scheme satisfies the Brent equations.
    :return: The canonical scheme.
    :raise FMMStructureError: If a coefficient matrix of a term has the wrong shape.
    :raise FMMValidationError: If a term has an all-zero factor.
    """
    dims = Dims.of(dims)
    expected = {'alpha': (dims.u, dims.v), 'beta': (dims.v, dims.w), 'gamma': (dims.u, dims.w)}
    canonical = []
    for index, term in enumerate(terms):
        factors = {}
        for factor_name, shape in expected.items():
            coeff = getattr(term, factor_name)
            if coeff.shape != shape:
                raise FMMStructureError(
                    index, f'{factor_name} is {coeff.rows}x{coeff.cols}, expected {shape[0]}x{shape[1]} for {dims}'
                )
            if coeff.nnz == 0:
                raise FMMValidationError(f'Term {index} is dead: {factor_name} has no nonzero entry')
            factors[factor_name] = CoeffMatrix.build(coeff.rows, coeff.cols, coeff.entries)
        canonical.append(MulTerm(**factors))
    return BilinearScheme(dims, tuple(canonical), name=name, provenance=provenance, verified=verified)


def rank(scheme: BilinearScheme) -> int:
    """The number of multiplications of *scheme*."""
    return scheme.rank


class OpCounts(NamedTuple):
    #: Products of two operand-derived values, i.e. the rank.
    multiplications: int

    #: Additions forming the operand linear forms plus additions accumulating the result cells.
    additions: int

    #: Coefficients other than 1 and -1, each costing a multiplication by a constant.
    scalar_multiplications: int


def op_counts(scheme: BilinearScheme) -> OpCounts:
    """Count the operations performed when *scheme* is evaluated directly (no common subexpressions).

    :param scheme: The scheme to count.
    :return: Multiplications, additions and scalar multiplications.
    """
    additions = 0
    scalar_multiplications = 0
    contributions: Dict[Position, int] = {}
    for term in scheme.terms:
        additions += (term.alpha.nnz - 1) + (term.beta.nnz - 1)
        for coeff in term.factors():
            scalar_multiplications += sum(1 for _, value in coeff if value not in (1, -1))
        for position in term.gamma.positions():
            contributions[position] = contributions.get(position, 0) + 1
    additions += sum(count - 1 for count in contributions.values())
    return OpCounts(scheme.rank, additions, scalar_multiplications)


def omega(scheme: BilinearScheme) -> Optional[float]:
    """The exponent ``3 log(r) / log(u v w)`` obtained by applying *scheme* recursively, or None for ``<1,1,1>``."""
    size = scheme.dims.naive_rank()
    if size == 1:
        return None
    return 3 * math.log(scheme.rank) / math.log(size)


def _entry_name(symbol: str, row: int, col: int, size: int) -> str:
    # a12 for small matrices, a_10_12 once an index needs two digits.
    if size < 10:
        return f'{symbol}{row + 1}{col + 1}'
    return f'{symbol}_{row + 1}_{col + 1}'


def _combination(pairs: Iterable[Tuple[Fraction, str]]) -> str:
    # Render sum(value * name) as e.g. "a11 - 2*a22".
    parts = []
    for value, name in pairs:
        magnitude = abs(value)
        text = name if magnitude == 1 else f'{magnitude}*{name}'
        if not parts:
            parts.append(text if value > 0 else f'-{text}')
        else:
            parts.append(f'+ {text}' if value > 0 else f'- {text}')
    return ' '.join(parts)


def _linear_form(coeff: CoeffMatrix, symbol: str) -> str:
    size = max(coeff.rows, coeff.cols)
    return _combination((value, _entry_name(symbol, row, col, size)) for (row, col), value in coeff)


def describe(scheme: BilinearScheme) -> str:
    """Human-readable listing of the multiplications and result cells of *scheme*, 1-based as in the literature.

    :param scheme: The scheme to describe.
    :return: Lines ``m1 = (...)*(...)`` followed by ``c11 = ...``.
    """
    lines = [f'{scheme.name or "scheme"}: {scheme.dims}, rank {scheme.rank}']
    cells: Dict[Position, List[Tuple[Fraction, str]]] = {}
    for index, term in enumerate(scheme.terms):
        lines.append(f'm{index + 1} = ({_linear_form(term.alpha, "a")})*({_linear_form(term.beta, "b")})')
        for position, value in term.gamma:
            cells.setdefault(position, []).append((value, f'm{index + 1}'))
    size = max(scheme.dims.u, scheme.dims.w)
    for row, col in sorted(cells):
        lines.append(f'{_entry_name("c", row, col, size)} = {_combination(cells[(row, col)])}')
    return '\n'.join(lines)


@dataclass(frozen=True)
class Matrix:
    """A dense ``rows x cols`` matrix whose entries are either exact (:class:`Fraction`) or ``float``."""

    rows: int
    cols: int
    entries: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows or any(len(row) != self.cols for row in self.entries):
            raise FMMValidationError(f'Matrix entries do not form a {self.rows}x{self.cols} array')

    @classmethod
    def from_rows(cls, data: Sequence[Sequence[Any]], exact: bool = True) -> Matrix:
        """Build a matrix from nested sequences.

        :param data: The rows.
        :param exact: Convert entries to :class:`Fraction` when True, to ``float`` otherwise.
        :return: The matrix.
        """
        convert = Fraction if exact else float
        rows = tuple(tuple(convert(x) for x in row) for row in data)
        if not rows:
            raise FMMValidationError('A matrix needs at least one row')
        return cls(len(rows), len(rows[0]), rows)

    @classmethod
    def zeros(cls, rows: int, cols: int, exact: bool = True) -> Matrix:
        zero = Fraction(0) if exact else 0.0
        return cls(rows, cols, tuple((zero,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, size: int, exact: bool = True) -> Matrix:
        return cls.from_rows([[int(i == j) for j in range(size)] for i in range(size)], exact=exact)

    def __getitem__(self, position: Position) -> Any:
        row, col = position
        return self.entries[row][col]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def exact(self) -> bool:
        return all(isinstance(x, (Fraction, int)) for row in self.entries for x in row)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries], dtype=np.float64)
