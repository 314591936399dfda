import logging
from collections import Counter

import numpy as np
import pytest

from fmmscheme import (
    Dims,
    FMMDimensionError,
    FMMParameterError,
    FMMUnverifiedSchemeError,
    brent_check,
    compose,
    kronecker,
    make_block_plan,
    make_scheme,
    naive_scheme,
    orient,
    random_eval_check,
    strassen_scheme
)
from fmmscheme.catalog import Fixtures
from fmmscheme.verify import evaluate, max_abs_difference, naive_mult, random_matrix


def _fixture(name):
    # Schemes published elsewhere are not shipped; tests needing them are skipped when they are absent.
    fixtures = Fixtures()
    if name not in fixtures:
        pytest.skip(f'Fixture {name} not found in {fixtures.directory}; set FMM_FIXTURES to run this test')
    scheme = fixtures.load(name)
    assert scheme.verified, f'Fixture {name} fails the Brent equations'
    return scheme


def _naive_inputs(u, v):
    return naive_scheme(u, u, u), naive_scheme(u, u, v), naive_scheme(v, v, u)


def test_block_plan_4_3():
    plan = make_block_plan(4, 3)
    assert plan.padded_size == 8
    assert plan.size == 7
    assert len(plan.summands) == 7
    assert [tuple(s.effective_dims) for s in plan.summands] == [
        (4, 4, 4), (3, 4, 3), (4, 3, 4), (3, 4, 4), (3, 3, 4), (4, 4, 3), (4, 3, 3)
    ]
    assert [s.input_class for s in plan.summands] == ['uuu', 'vvu', 'uuv', 'uuv', 'vvu', 'uuv', 'vvu']
    assert [s.index for s in plan.summands] == list(range(1, 8))

    second = plan.summands[1]
    assert second.left_blocks == ((1, '12'), (-1, '22'))
    assert second.right_blocks == ((1, '21'), (1, '22'))
    assert second.out_blocks == ((1, '11'),)
    assert second.row_mask == (0, 1, 2)
    assert second.inner_mask == (0, 1, 2, 3)
    assert second.col_mask == (0, 1, 2)
    assert second.gamma_mask.dims == (3, 3)

    fourth = plan.summands[3]
    assert fourth.out_blocks == ((-1, '11'), (1, '12'))

    assert plan.original_index('1', 2) == 2
    assert plan.original_index('2', 0) == 3
    assert plan.extent('1') == 3
    assert plan.extent('2') == 4


def test_block_plan_shapes():
    plan = make_block_plan(6, 3)
    assert plan.summands[0].effective_dims == Dims(6, 6, 6)
    for index in (1, 4, 6):
        assert plan.summands[index].effective_dims.key() == (3, 3, 6)
    for index in (2, 3, 5):
        assert plan.summands[index].effective_dims.key() == (3, 6, 6)

    plan = make_block_plan(2, 1)
    assert Counter(s.effective_dims.key() for s in plan.summands) == {(2, 2, 2): 1, (1, 1, 2): 3, (1, 2, 2): 3}

    for u, v in ((3, 3), (2, 3), (1, 0)):
        with pytest.raises(FMMParameterError, match=f'A block plan needs u > v >= 1, got u={u}, v={v}'):
            make_block_plan(u, v)


def test_compose_7x7():
    strassen = strassen_scheme()
    scheme, report = compose(4, 3, kronecker(strassen, strassen), naive_scheme(4, 4, 3), naive_scheme(3, 3, 4))
    assert scheme.dims == Dims(7, 7, 7)
    assert scheme.rank == 301
    assert report.result_rank == 301
    assert report.input_ranks == (49, 48, 36)
    assert report.bound_check
    assert report.arithmetic() == '301 = 49 + 3·48 + 3·36'
    assert scheme.verified
    assert scheme.name == 'compose(4,3; kron(strassen, strassen), naive:4,4,3, naive:3,3,4)'

    brent = brent_check(scheme)
    assert brent.passed
    assert brent.total_equations == 117649

    assert random_eval_check(scheme, 100, seed=1).all_equal
    assert random_eval_check(scheme, 5, seed=2, exact=False).all_equal


def test_compose_7x7_floats():
    strassen = strassen_scheme()
    scheme, _ = compose(4, 3, kronecker(strassen, strassen), naive_scheme(4, 4, 3), naive_scheme(3, 3, 4))
    rng = np.random.default_rng(9)
    a = random_matrix(7, 7, rng, exact=False)
    b = random_matrix(7, 7, rng, exact=False)
    assert max_abs_difference(evaluate(scheme, a, b), naive_mult(a, b)) <= 1e-9


@pytest.mark.parametrize('u,v,expected_rank', [(2, 1, 26), (3, 2, 117), (3, 1, 63), (4, 1, 124), (5, 2, 335)])
def test_compose_naive(u, v, expected_rank):
    # Every generated plan splices without peel violations and gives an exact scheme.
    scheme, report = compose(u, v, *_naive_inputs(u, v))
    assert scheme.dims == Dims(u + v, u + v, u + v)
    assert scheme.rank == expected_rank
    assert report.bound_check
    assert brent_check(scheme).passed


def test_compose_other_orientations():
    # Class inputs may come in any orientation.
    scheme, report = compose(3, 2, naive_scheme(3, 3, 3), naive_scheme(2, 3, 3), naive_scheme(2, 3, 2))
    assert report.input_ranks == (27, 18, 12)
    assert brent_check(scheme).passed

    # Composed schemes compose again.
    base, _ = compose(2, 1, *_naive_inputs(2, 1))
    again, report = compose(3, 2, base, naive_scheme(3, 3, 2), naive_scheme(2, 2, 3))
    assert report.input_ranks == (26, 18, 12)
    assert brent_check(again).passed


def test_compose_errors():
    uuu, uuv, vvu = _naive_inputs(4, 3)
    with pytest.raises(FMMDimensionError, match=r'The uuu input must be <4,4,4>, got <4,3,4>'):
        compose(4, 3, naive_scheme(4, 3, 4), uuv, vvu)
    with pytest.raises(FMMDimensionError, match=r'The uuv input must be a permutation of <4,4,3>, got <3,3,4>'):
        compose(4, 3, uuu, vvu, vvu)
    with pytest.raises(FMMDimensionError, match=r'The vvu input must be a permutation of <3,3,4>'):
        compose(4, 3, uuu, uuv, uuv)
    with pytest.raises(FMMParameterError, match='u > v >= 1'):
        compose(3, 3, naive_scheme(3, 3, 3), naive_scheme(3, 3, 3), naive_scheme(3, 3, 3))


def test_compose_unverified_inputs(caplog):
    uuu, uuv, vvu = _naive_inputs(2, 1)

    # Unmarked but correct inputs are checked and accepted.
    scheme, _ = compose(2, 1, uuu.marked(False), uuv, vvu)
    assert scheme.verified

    # A broken input: drop the last term of the naive <2,2,1> scheme.
    broken = make_scheme(uuv.dims, uuv.terms[:-1], name='broken')
    with pytest.raises(FMMUnverifiedSchemeError, match='The uuv input broken fails the Brent equations'):
        compose(2, 1, uuu, broken, vvu)

    with caplog.at_level(logging.WARNING, logger='fmmscheme.compose'):
        scheme, report = compose(2, 1, uuu, broken, vvu, strict=False)
    assert 'Composing with the unverified uuv input broken' in caplog.text
    assert not scheme.verified
    assert report.result_rank == 8 + 3 * 3 + 3 * 2
    assert not brent_check(scheme).passed


def test_compose_7x7_rank_250():
    strassen = strassen_scheme()
    s344 = _fixture('smirnov_344')
    s334 = _fixture('smirnov_334')
    scheme, report = compose(4, 3, kronecker(strassen, strassen), s344, s334)
    assert scheme.rank == 250
    assert report.arithmetic() == '250 = 49 + 3·38 + 3·29'
    assert brent_check(scheme).passed


def _compose_9x9(s336):
    # <6,6,6> and <6,6,3> come from the reoriented <3,3,6> scheme by Kronecker products with <1,2,2> and <1,2,1>.
    r = s336.rank
    s633 = orient(s336, (6, 3, 3))
    s666 = kronecker(s633, naive_scheme(1, 2, 2))
    s663 = kronecker(s633, naive_scheme(1, 2, 1))
    assert (s666.dims, s666.rank) == (Dims(6, 6, 6), 4 * r)
    assert (s663.dims, s663.rank) == (Dims(6, 6, 3), 2 * r)

    scheme, report = compose(6, 3, s666, s663, s336)
    assert scheme.dims == Dims(9, 9, 9)
    assert scheme.rank == 4 * r + 3 * 2 * r + 3 * r
    brent = brent_check(scheme)
    assert brent.passed
    assert brent.total_equations == 531441
    return scheme, report


def test_compose_9x9_naive():
    scheme, report = _compose_9x9(naive_scheme(3, 3, 6))
    assert report.arithmetic() == '702 = 216 + 3·108 + 3·54'
    assert scheme.verified


def test_compose_9x9_rank_520():
    s336 = _fixture('smirnov_336')
    assert s336.rank == 40
    scheme, report = _compose_9x9(s336)
    assert scheme.rank == 520
    assert report.arithmetic() == '520 = 160 + 3·80 + 3·40'
