"""
This module contains the transformations of schemes that preserve correctness: the six symmetries coming from the
cyclic invariance of ``Trace(A B W)`` and from transposition, the Kronecker product of two schemes, and the zero
padding and peeling used to embed a matrix product into a larger block-structured one.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Sequence, Tuple, Union

from makefun import wraps

from fmmscheme.core import BilinearScheme, CoeffMatrix, Dims, Matrix, MulTerm, make_scheme
from fmmscheme.exception import FMMDimensionError, FMMParameterError, FMMPeelViolation, FMMValidationError

__all__ = [
    'Orientation',
    'PeelMask',
    'kronecker',
    'lift',
    'orient',
    'pad',
    'padded_index',
    'peel',
    'rotate',
    'scheme_transform',
    'transpose_dual',
    'unpad'
]

_logger = logging.getLogger(__name__)


def scheme_transform(label: str) -> Callable:
    # Decorator for functions building a scheme out of one or more input schemes. The decorated function only produces
    # the dims and terms; the name and provenance of the result are derived from the inputs (e.g.
    # "kron(strassen, strassen)") and the result is marked verified exactly when every input is. Every decorated
    # transformation must map Brent-passing schemes to Brent-passing schemes.
    #
    # The generated wrapper has the signature of the decorated function and may receive arguments either positionally
    # or by keyword, so both are searched for input schemes.
    def inner(func: Callable[..., BilinearScheme]) -> Callable[..., BilinearScheme]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> BilinearScheme:
            result = func(*args, **kwargs)
            inputs = [x for x in itertools.chain(args, kwargs.values()) if isinstance(x, BilinearScheme)]
            name = f'{label}({", ".join(s.name or "?" for s in inputs)})'
            provenance = f'{label}({", ".join(s.provenance or s.name or "?" for s in inputs)})'
            return replace(result, name=name, provenance=provenance, verified=all(s.verified for s in inputs))
        return wrapper
    return inner


@scheme_transform('rotate')
def rotate(scheme: BilinearScheme) -> BilinearScheme:
    """Cyclic symmetry ``Trace(A B W) = Trace(B W A)``: turn a ``<u,v,w>`` scheme into a ``<v,w,u>`` scheme of the same
    rank. Term ``l`` becomes ``(beta_l, W_l, alpha_l^T)`` where ``W_l = gamma_l^T`` is the third trilinear factor.

    Applying it three times gives back a structurally equal scheme.

    :param scheme: The scheme to rotate.
    :return: The rotated scheme.
    """
    u, v, w = scheme.dims
    terms = [MulTerm(t.beta, t.gamma.transpose(), t.alpha.transpose()) for t in scheme.terms]
    return make_scheme(Dims(v, w, u), terms)


@scheme_transform('transpose')
def transpose_dual(scheme: BilinearScheme) -> BilinearScheme:
    """Transposition symmetry ``(A B)^T = B^T A^T``: turn a ``<u,v,w>`` scheme into a ``<w,v,u>`` scheme of the same
    rank. Term ``l`` becomes ``(beta_l^T, alpha_l^T, gamma_l^T)``. This is an involution.

    :param scheme: The scheme to transpose.
    :return: The transposed scheme.
    """
    u, v, w = scheme.dims
    terms = [MulTerm(t.beta.transpose(), t.alpha.transpose(), t.gamma.transpose()) for t in scheme.terms]
    return make_scheme(Dims(w, v, u), terms)


class Orientation(Enum):
    """The six symmetries of a scheme, each given by the permutation it applies to ``(u, v, w)`` and by its shortest
    word in the generators :func:`rotate` and :func:`transpose_dual`. They form a group isomorphic to the symmetric
    group on three letters.
    """

    IDENTITY = ((0, 1, 2), ())
    ROTATE = ((1, 2, 0), ('rotate',))
    ROTATE2 = ((2, 0, 1), ('rotate', 'rotate'))
    TRANSPOSE = ((2, 1, 0), ('transpose',))
    ROTATE_TRANSPOSE = ((0, 2, 1), ('rotate', 'transpose'))
    TRANSPOSE_ROTATE = ((1, 0, 2), ('transpose', 'rotate'))

    @property
    def permutation(self) -> Tuple[int, int, int]:
        # Output dims are (dims[p] for p in permutation).
        return self.value[0]

    @property
    def generators(self) -> Tuple[str, ...]:
        return self.value[1]

    @classmethod
    def of_permutation(cls, permutation: Sequence[int]) -> Orientation:
        for orientation in cls:
            if orientation.permutation == tuple(permutation):
                return orientation
        raise FMMParameterError(f'{tuple(permutation)} is not a permutation of (0, 1, 2)')

    def then(self, other: Orientation) -> Orientation:
        """The orientation applying *self* first and *other* second."""
        return Orientation.of_permutation(tuple(self.permutation[p] for p in other.permutation))

    def dims(self, dims: Union[Dims, Sequence[int]]) -> Dims:
        source = tuple(Dims.of(dims))
        return Dims(*(source[p] for p in self.permutation))

    def apply(self, scheme: BilinearScheme) -> BilinearScheme:
        for generator in self.generators:
            scheme = _GENERATORS[generator](scheme)
        return scheme


_GENERATORS: Dict[str, Callable[[BilinearScheme], BilinearScheme]] = {
    'rotate': rotate,
    'transpose': transpose_dual
}


def orient(scheme: BilinearScheme, target: Union[Dims, Sequence[int]]) -> BilinearScheme:
    """Reorient *scheme* so that it realizes exactly *target*, using the first orientation in :class:`Orientation`
    order that maps the scheme dims onto *target*. The rank is unchanged, and a scheme already of the target dims is
    returned as is.

    :param scheme: The scheme to reorient.
    :param target: The wanted dims, a permutation of the scheme dims.
    :return: The reoriented scheme.
    :raise FMMDimensionError: If *target* is not a permutation of the scheme dims.
    """
    target = Dims.of(target)
    if target.key() != scheme.dims.key():
        raise FMMDimensionError(f'Cannot orient a {scheme.dims} scheme to {target}: not a permutation of its dims')
    for orientation in Orientation:
        if orientation.dims(scheme.dims) == target:
            if orientation is not Orientation.IDENTITY:
                _logger.debug('Orienting %s from %s to %s via %s', scheme.name, scheme.dims, target, orientation.name)
            return orientation.apply(scheme)
    # Unreachable: the six orientations realize every permutation.
    raise AssertionError(f'No orientation maps {scheme.dims} to {target}')


@scheme_transform('kron')
def kronecker(left: BilinearScheme, right: BilinearScheme) -> BilinearScheme:
    """Kronecker (tensor) product of two schemes: a ``<u1 u2, v1 v2, w1 w2>`` scheme of rank ``r1 r2``. *left*
    indexes the coarse blocks: entry ``(i2, j2)`` of block ``(i1, j1)`` sits at ``(i1 u2 + i2, j1 v2 + j2)``. Term
    ``(l1, l2)`` is at position ``l1 r2 + l2``.

    :param left: Scheme for the block structure.
    :param right: Scheme for the products within a block.
    :return: The product scheme.
    """
    dims = Dims(*(a * b for a, b in zip(left.dims, right.dims)))
    terms = [
        MulTerm(t1.alpha.kron(t2.alpha), t1.beta.kron(t2.beta), t1.gamma.kron(t2.gamma))
        for t1 in left.terms
        for t2 in right.terms
    ]
    return make_scheme(dims, terms)


def _check_padding(u: int, v: int) -> None:
    if v < 1 or u <= v:
        raise FMMParameterError(f'Padding needs u > v >= 1, got u={u}, v={v}')


def padded_index(index: int, u: int, v: int) -> int:
    """Where index *index* of a ``(u+v)``-sized axis lands once ``u - v`` zero indices are inserted at position
    *v*."""
    return index if index < v else index + (u - v)


def pad(matrix: Matrix, u: int, v: int) -> Matrix:
    """Embed a ``(u+v) x (u+v)`` matrix into a ``2u x 2u`` one by inserting ``u - v`` zero rows and columns at position
    *v*, so that both halves of each axis have ``u`` indices. The product of padded operands is the padded product.

    :param matrix: The matrix to pad.
    :param u: Half of the padded size.
    :param v: Number of leading indices kept in front of the inserted zeros.
    :return: The padded matrix.
    :raise FMMParameterError: If ``u <= v``.
    :raise FMMDimensionError: If *matrix* is not ``(u+v) x (u+v)``.
    """
    _check_padding(u, v)
    size = u + v
    if matrix.shape != (size, size):
        raise FMMDimensionError(f'Expected a {size}x{size} matrix to pad, got {matrix.rows}x{matrix.cols}')
    zero = Fraction(0) if matrix.exact else 0.0
    padded = [[zero] * (2 * u) for _ in range(2 * u)]
    for i in range(size):
        for j in range(size):
            padded[padded_index(i, u, v)][padded_index(j, u, v)] = matrix[i, j]
    return Matrix(2 * u, 2 * u, tuple(tuple(row) for row in padded))


def unpad(matrix: Matrix, u: int, v: int) -> Matrix:
    """Drop the indices :func:`pad` inserted, giving back a ``(u+v) x (u+v)`` matrix.

    :param matrix: A ``2u x 2u`` matrix.
    :param u: Half of the padded size.
    :param v: Number of leading indices in front of the inserted ones.
    :return: The unpadded matrix.
    """
    _check_padding(u, v)
    if matrix.shape != (2 * u, 2 * u):
        raise FMMDimensionError(f'Expected a {2 * u}x{2 * u} matrix to unpad, got {matrix.rows}x{matrix.cols}')
    kept = [padded_index(g, u, v) for g in range(u + v)]
    return Matrix(u + v, u + v, tuple(tuple(matrix[i, j] for j in kept) for i in kept))


@dataclass(frozen=True)
class PeelMask:
    """The rows and columns of a coefficient matrix that survive peeling."""

    kept_rows: Tuple[int, ...]
    kept_cols: Tuple[int, ...]
    original_dims: Tuple[int, int]

    def __post_init__(self) -> None:
        for axis, kept, size in (('rows', self.kept_rows, self.original_dims[0]),
                                 ('cols', self.kept_cols, self.original_dims[1])):
            if not kept:
                raise FMMValidationError(f'A peel mask must keep at least one of its {axis}')
            if list(kept) != sorted(set(kept)) or kept[0] < 0 or kept[-1] >= size:
                raise FMMValidationError(f'Kept {axis} {kept} are not a sorted subset of range({size})')

    @classmethod
    def prefix(cls, rows: int, cols: int, original_dims: Tuple[int, int]) -> PeelMask:
        return cls(tuple(range(rows)), tuple(range(cols)), original_dims)

    @property
    def dims(self) -> Tuple[int, int]:
        return len(self.kept_rows), len(self.kept_cols)


def peel(mask: PeelMask, coeff: CoeffMatrix) -> CoeffMatrix:
    """Restrict *coeff* to the kept rows and columns of *mask*, reindexing them densely.

    :param mask: Rows and columns to keep.
    :param coeff: A coefficient matrix of the mask's original dims.
    :return: The peeled coefficient matrix.
    :raise FMMPeelViolation: If a nonzero coefficient lies outside the kept rows or columns.
    """
    if coeff.shape != mask.original_dims:
        raise FMMDimensionError(f'Cannot peel a {coeff.rows}x{coeff.cols} coefficient matrix with a mask for '
                                f'{mask.original_dims[0]}x{mask.original_dims[1]}')
    row_index = {r: i for i, r in enumerate(mask.kept_rows)}
    col_index = {c: j for j, c in enumerate(mask.kept_cols)}
    entries = []
    for (row, col), value in coeff:
        if row not in row_index or col not in col_index:
            raise FMMPeelViolation(f'Live coefficient {value} at ({row}, {col}) lies outside kept rows '
                                   f'{mask.kept_rows} and columns {mask.kept_cols}')
        entries.append(((row_index[row], col_index[col]), value))
    return CoeffMatrix.build(*mask.dims, entries)


def lift(mask: PeelMask, coeff: CoeffMatrix) -> CoeffMatrix:
    """Inverse of :func:`peel`: place a coefficient matrix of the mask's reduced dims back at the kept rows and
    columns of the original dims.

    :param mask: Rows and columns the entries go to.
    :param coeff: A coefficient matrix of the mask's reduced dims.
    :return: The lifted coefficient matrix.
    """
    if coeff.shape != mask.dims:
        raise FMMDimensionError(f'Cannot lift a {coeff.rows}x{coeff.cols} coefficient matrix with a mask keeping '
                                f'{mask.dims[0]}x{mask.dims[1]}')
    rows, cols = mask.original_dims
    return CoeffMatrix.build(
        rows, cols, (((mask.kept_rows[r], mask.kept_cols[c]), value) for (r, c), value in coeff)
    )
