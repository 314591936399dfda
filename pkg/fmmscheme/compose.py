"""
This module contains the divide-and-conquer composer: a ``<u+v,u+v,u+v>`` scheme is assembled from a ``<u,u,u>``
scheme, a scheme whose dims are a permutation of ``(u,u,v)`` and one whose dims are a permutation of ``(v,v,u)``.

The ``(u+v) x (u+v)`` operands are padded to ``2u x 2u`` by inserting ``u - v`` zero rows and columns after the first
``v`` indices (see :func:`.pad`), split into 2x2 blocks of size ``u`` and multiplied with Strassen's block formulas.
Because of the inserted zeros each of the seven block products only involves a rectangular part of its blocks, which
is a product of one of the three input classes. No padded matrix is ever materialized: padding only exists in the
index maps of a :class:`BlockPlan`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

from fmmscheme.algebra import PeelMask, lift, orient, peel
from fmmscheme.core import BilinearScheme, CoeffMatrix, Dims, MulTerm, make_scheme
from fmmscheme.exception import FMMDimensionError, FMMParameterError, FMMUnverifiedSchemeError
from fmmscheme.verify import brent_check

__all__ = [
    'BlockPlan',
    'CompositionReport',
    'SignedBlock',
    'Summand',
    'compose',
    'make_block_plan'
]

_logger = logging.getLogger(__name__)

# A block of a 2x2 partition ('11', '12', '21' or '22') with the sign it enters a linear combination with.
SignedBlock = Tuple[int, str]

# Strassen's seven block products as (left operand, right operand, result) combinations. Product l contributes to
# every result block of its third combination, with the sign given there.
_STRASSEN_BLOCKS: Tuple[Tuple[Tuple[SignedBlock, ...], Tuple[SignedBlock, ...], Tuple[SignedBlock, ...]], ...] = (
    (((1, '11'), (1, '22')), ((1, '11'), (1, '22')), ((1, '11'), (1, '22'))),
    (((1, '12'), (-1, '22')), ((1, '21'), (1, '22')), ((1, '11'),)),
    (((-1, '11'), (1, '21')), ((1, '11'), (1, '12')), ((1, '22'),)),
    (((1, '11'), (1, '12')), ((1, '22'),), ((-1, '11'), (1, '12'))),
    (((1, '11'),), ((1, '12'), (-1, '22')), ((1, '12'), (1, '22'))),
    (((1, '22'),), ((-1, '11'), (1, '21')), ((1, '11'), (1, '21'))),
    (((1, '21'), (1, '22')), ((1, '11'),), ((1, '21'), (-1, '22')))
)

# Input class of each block product, by position.
_INPUT_CLASSES = ('uuu', 'vvu', 'uuv', 'uuv', 'vvu', 'uuv', 'vvu')


@dataclass(frozen=True)
class Summand:
    """One of the seven block products of a :class:`BlockPlan`.

    The masks are prefix masks in the ``u x u`` block coordinates: a product only needs the leading ``rows`` rows of
    its left combination, the leading ``inner`` columns of it (and rows of the right combination) and the leading
    ``cols`` columns of the right combination.
    """

    #: 1-based position among the seven products.
    index: int
    left_blocks: Tuple[SignedBlock, ...]
    right_blocks: Tuple[SignedBlock, ...]
    out_blocks: Tuple[SignedBlock, ...]

    #: Dims of the rectangular product actually needed.
    effective_dims: Dims

    #: 'uuu', 'uuv' or 'vvu': the input scheme whose orientation realizes the product.
    input_class: str

    alpha_mask: PeelMask
    beta_mask: PeelMask
    gamma_mask: PeelMask

    @property
    def row_mask(self) -> Tuple[int, ...]:
        return self.alpha_mask.kept_rows

    @property
    def inner_mask(self) -> Tuple[int, ...]:
        return self.alpha_mask.kept_cols

    @property
    def col_mask(self) -> Tuple[int, ...]:
        return self.beta_mask.kept_cols


@dataclass(frozen=True)
class BlockPlan:
    """The padded 2x2 block decomposition of a ``(u+v) x (u+v)`` product."""

    u: int
    v: int
    summands: Tuple[Summand, ...]

    @property
    def padded_size(self) -> int:
        return 2 * self.u

    @property
    def size(self) -> int:
        return self.u + self.v

    def extent(self, half: str) -> int:
        """Number of real (not padded) indices in the first (``'1'``) or second (``'2'``) half of an axis."""
        return self.v if half == '1' else self.u

    def original_index(self, half: str, local: int) -> int:
        """Index in the ``(u+v)``-sized axis of real local index *local* of a half."""
        return local if half == '1' else self.v + local

    def combination_mask(self, blocks: Tuple[SignedBlock, ...]) -> PeelMask:
        """The rows and columns of the ``u x u`` block coordinates that are real in at least one of *blocks*."""
        rows = max(self.extent(name[0]) for _, name in blocks)
        cols = max(self.extent(name[1]) for _, name in blocks)
        return PeelMask.prefix(rows, cols, (self.u, self.u))


def _check_plan_parameters(u: int, v: int) -> None:
    if not isinstance(u, int) or not isinstance(v, int) or v < 1 or u <= v:
        raise FMMParameterError(f'A block plan needs u > v >= 1, got u={u}, v={v}')


def make_block_plan(u: int, v: int) -> BlockPlan:
    """Build the seven block products for ``<u+v,u+v,u+v>`` along with the rectangular part each one needs.

    A product keeps the rows real in both its left and its result combination, the inner indices real in both its
    left and its right combination, and the columns real in both its right and its result combination. Product 1 is
    then ``<u,u,u>``, products 3, 4 and 6 are permutations of ``<u,u,v>`` and products 2, 5 and 7 are permutations
    of ``<v,v,u>``.

    :param u: Size of the larger part of each axis.
    :param v: Size of the smaller part of each axis.
    :return: The plan.
    :raise FMMParameterError: If not ``u > v >= 1``.
    """
    _check_plan_parameters(u, v)
    plan = BlockPlan(u, v, ())
    summands = []
    for index, ((left, right, out), input_class) in enumerate(zip(_STRASSEN_BLOCKS, _INPUT_CLASSES), 1):
        left_mask = plan.combination_mask(left)
        right_mask = plan.combination_mask(right)
        out_mask = plan.combination_mask(out)
        rows = min(left_mask.dims[0], out_mask.dims[0])
        inner = min(left_mask.dims[1], right_mask.dims[0])
        cols = min(right_mask.dims[1], out_mask.dims[1])
        dims = Dims(rows, inner, cols)
        if dims.key() != _class_dims(u, v, input_class).key():
            raise AssertionError(f'Block product {index} has dims {dims}, outside the {input_class} class')
        summands.append(Summand(
            index=index,
            left_blocks=left,
            right_blocks=right,
            out_blocks=out,
            effective_dims=dims,
            input_class=input_class,
            alpha_mask=PeelMask.prefix(rows, inner, (u, u)),
            beta_mask=PeelMask.prefix(inner, cols, (u, u)),
            gamma_mask=PeelMask.prefix(rows, cols, (u, u))
        ))
    return BlockPlan(u, v, tuple(summands))


def _class_dims(u: int, v: int, input_class: str) -> Dims:
    return Dims(*({'u': u, 'v': v}[letter] for letter in input_class))


@dataclass(frozen=True)
class CompositionReport:
    """Rank bookkeeping of :func:`compose`."""

    result_rank: int

    #: Ranks of the ``uuu``, ``uuv`` and ``vvu`` inputs.
    input_ranks: Tuple[int, int, int]

    #: Whether the result rank is ``r_uuu + 3 r_uuv + 3 r_vvu``.
    bound_check: bool

    def arithmetic(self) -> str:
        r1, r2, r3 = self.input_ranks
        return f'{self.result_rank} = {r1} + 3·{r2} + 3·{r3}'


def _scatter(plan: BlockPlan, coeff: CoeffMatrix, blocks: Tuple[SignedBlock, ...]) -> CoeffMatrix:
    # Place a u x u block coefficient matrix into every block of a signed combination, in original coordinates.
    # Positions on padded cells of a block are dropped.
    coeff = peel(plan.combination_mask(blocks), coeff)
    entries: Dict[Tuple[int, int], Fraction] = {}
    for sign, (row_half, col_half) in blocks:
        rows, cols = plan.extent(row_half), plan.extent(col_half)
        for (i, j), value in coeff:
            if i < rows and j < cols:
                entries[(plan.original_index(row_half, i), plan.original_index(col_half, j))] = sign * value
    return CoeffMatrix.build(plan.size, plan.size, entries)


def _splice(plan: BlockPlan, summand: Summand, scheme: BilinearScheme) -> List[MulTerm]:
    return [
        MulTerm(
            _scatter(plan, lift(summand.alpha_mask, term.alpha), summand.left_blocks),
            _scatter(plan, lift(summand.beta_mask, term.beta), summand.right_blocks),
            _scatter(plan, lift(summand.gamma_mask, term.gamma), summand.out_blocks)
        )
        for term in scheme.terms
    ]


def _checked_input(input_class: str, scheme: BilinearScheme, expected: Dims, strict: bool) -> BilinearScheme:
    if input_class == 'uuu':
        if scheme.dims != expected:
            raise FMMDimensionError(f'The uuu input must be {expected}, got {scheme.dims}')
    elif scheme.dims.key() != expected.key():
        raise FMMDimensionError(f'The {input_class} input must be a permutation of {expected}, got {scheme.dims}')
    if scheme.verified:
        return scheme
    if not strict:
        _logger.warning('Composing with the unverified %s input %s', input_class, scheme.name or scheme.dims)
        return scheme
    report = brent_check(scheme)
    if not report.passed:
        raise FMMUnverifiedSchemeError(
            f'The {input_class} input {scheme.name or scheme.dims} fails the Brent equations '
            f'({report.summary()}, first failure {report.first_failures[0]})'
        )
    return scheme.marked(True)


def compose(
    u: int,
    v: int,
    s_uuu: BilinearScheme,
    s_uuv: BilinearScheme,
    s_vvu: BilinearScheme,
    strict: bool = True
) -> Tuple[BilinearScheme, CompositionReport]:
    """Compose a ``<u+v,u+v,u+v>`` scheme of rank ``r_uuu + 3 r_uuv + 3 r_vvu``.

    Each of the seven block products is realized by the input of its class, reoriented to the product's dims with
    :func:`.orient`. Every term of it is then spliced into the original coordinates: a coefficient at a block
    position goes, with the block's sign, to that position of every block of the product's combination, unless the
    position lies on padding. Terms come out in block product order, then input term order.

    :param u: Size of the larger part of each axis.
    :param v: Size of the smaller part of each axis.
    :param s_uuu: A ``<u,u,u>`` scheme.
    :param s_uuv: A scheme whose dims are a permutation of ``(u,u,v)``.
    :param s_vvu: A scheme whose dims are a permutation of ``(v,v,u)``.
    :param strict: When True, inputs not marked verified are checked against the Brent equations first. When False,
        they are used after a warning.
    :return: The composed scheme and its report. The scheme is marked verified when all inputs are.
    :raise FMMParameterError: If not ``u > v >= 1``.
    :raise FMMDimensionError: If an input has dims outside its class.
    :raise FMMUnverifiedSchemeError: If strict and an input fails the Brent equations.
    """
    plan = make_block_plan(u, v)
    inputs = {
        input_class: _checked_input(input_class, scheme, _class_dims(u, v, input_class), strict)
        for input_class, scheme in (('uuu', s_uuu), ('uuv', s_uuv), ('vvu', s_vvu))
    }

    terms: List[MulTerm] = []
    for summand in plan.summands:
        sub = orient(inputs[summand.input_class], summand.effective_dims)
        _logger.debug('Block product %d: %s input as %s, %d terms', summand.index, summand.input_class,
                      summand.effective_dims, sub.rank)
        terms.extend(_splice(plan, summand, sub))

    names = ', '.join(s.name or str(s.dims) for s in inputs.values())
    provenances = ', '.join(s.provenance or s.name or str(s.dims) for s in inputs.values())
    scheme = make_scheme(
        Dims(plan.size, plan.size, plan.size),
        terms,
        name=f'compose({u},{v}; {names})',
        provenance=f'compose({u},{v}; {provenances})',
        verified=all(s.verified for s in inputs.values())
    )
    input_ranks = (inputs['uuu'].rank, inputs['uuv'].rank, inputs['vvu'].rank)
    report = CompositionReport(
        scheme.rank, input_ranks, scheme.rank == input_ranks[0] + 3 * input_ranks[1] + 3 * input_ranks[2]
    )
    _logger.info('Composed %s of rank %s', scheme.dims, report.arithmetic())
    return scheme, report
