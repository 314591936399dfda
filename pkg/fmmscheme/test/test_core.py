import math
from fractions import Fraction

import pytest

from fmmscheme import (
    BilinearScheme,
    CoeffMatrix,
    Dims,
    FMMParseError,
    FMMStructureError,
    FMMValidationError,
    Matrix,
    MulTerm,
    describe,
    identity_scheme,
    make_scheme,
    naive_scheme,
    omega,
    op_counts,
    rank,
    strassen_scheme
)
from fmmscheme.core import parse_rational, render_rational


def test_parse_rational():
    assert parse_rational('-3/2') == Fraction(-3, 2)
    assert parse_rational('7') == 7
    assert parse_rational('-1') == -1
    # Normalized on parse.
    assert parse_rational('4/6') == Fraction(2, 3)
    assert render_rational(Fraction(-3, 2)) == '-3/2'
    assert render_rational(5) == '5'

    for text in ('+1', '1.5', ' 1', '1/', '/2', '', 'one'):
        with pytest.raises(FMMParseError, match='is not a fraction'):
            parse_rational(text)
    with pytest.raises(FMMParseError, match='zero denominator'):
        parse_rational('1/0')


def test_dims():
    dims = Dims(2, 3, 4)
    assert str(dims) == '<2,3,4>'
    assert tuple(dims) == (2, 3, 4)
    assert dims.key() == (2, 3, 4)
    assert Dims(4, 2, 3).key() == (2, 3, 4)
    assert dims.naive_rank() == 24
    assert Dims.of((2, 3, 4)) == dims
    assert Dims.of(dims) is dims

    with pytest.raises(FMMValidationError, match='u=0 must be a positive integer'):
        Dims(0, 1, 1)
    with pytest.raises(FMMValidationError, match='w=True must be a positive integer'):
        Dims(1, 1, True)
    with pytest.raises(FMMValidationError, match='Expected three dimensions'):
        Dims.of((1, 2))


class TestCoeffMatrix:
    @pytest.fixture(autouse=True)
    def setup(self):
        self.coeff = CoeffMatrix.build(2, 3, {(1, 2): 3, (0, 1): Fraction(-1, 2), (1, 0): 0})
        yield

    def test_build(self):
        # Zeros pruned, entries sorted row-major.
        assert self.coeff.entries == (((0, 1), Fraction(-1, 2)), ((1, 2), Fraction(3)))
        assert self.coeff.nnz == 2
        assert self.coeff.shape == (2, 3)
        assert self.coeff[(0, 1)] == Fraction(-1, 2)
        assert self.coeff[(1, 1)] == 0
        assert self.coeff.positions() == [(0, 1), (1, 2)]

        # Equal values give equal matrices regardless of input order.
        assert CoeffMatrix.build(2, 3, [((1, 2), 3), ((0, 1), Fraction(-1, 2))]) == self.coeff
        assert CoeffMatrix.unit(2, 2, 1, 0) == CoeffMatrix.build(2, 2, {(1, 0): 1})

    def test_build_errors(self):
        with pytest.raises(FMMValidationError, match=r'Duplicate entry at \(0, 0\)'):
            CoeffMatrix.build(2, 2, [((0, 0), 1), ((0, 0), 2)])
        with pytest.raises(FMMValidationError, match=r'Entry \(2, 0\) outside a 2x2 coefficient matrix'):
            CoeffMatrix.build(2, 2, {(2, 0): 1})
        with pytest.raises(FMMValidationError, match=r'Entry \(0, -1\) outside'):
            CoeffMatrix.build(2, 2, {(0, -1): 1})
        with pytest.raises(FMMValidationError, match='is zero'):
            CoeffMatrix(2, 2, (((0, 0), Fraction(0)),))
        with pytest.raises(FMMValidationError, match='row-major order'):
            CoeffMatrix(2, 2, (((1, 0), Fraction(1)), ((0, 0), Fraction(1))))
        with pytest.raises(FMMValidationError, match='at least 1x1'):
            CoeffMatrix.build(0, 2)

    def test_transpose(self):
        transposed = self.coeff.transpose()
        assert transposed.shape == (3, 2)
        assert transposed[(1, 0)] == Fraction(-1, 2)
        assert transposed[(2, 1)] == 3
        assert transposed.transpose() == self.coeff

    def test_kron(self):
        # The left factor selects the block, the right factor the position inside it.
        product = CoeffMatrix.unit(2, 2, 0, 1).kron(CoeffMatrix.unit(3, 3, 2, 0, 5))
        assert product.shape == (6, 6)
        assert product.entries == (((2, 3), Fraction(5)),)

        product = self.coeff.kron(CoeffMatrix.build(1, 2, {(0, 0): 2, (0, 1): 1}))
        assert product.shape == (2, 6)
        assert product[(0, 2)] == -1
        assert product[(0, 3)] == Fraction(-1, 2)
        assert product[(1, 4)] == 6
        assert product.nnz == 4

    def test_to_dense(self):
        assert self.coeff.to_dense() == [[0, Fraction(-1, 2), 0], [0, 0, 3]]


def test_make_scheme():
    scheme = strassen_scheme()
    assert isinstance(scheme, BilinearScheme)
    assert scheme.rank == 7
    assert rank(scheme) == 7
    assert scheme.dims == Dims(2, 2, 2)

    # name, provenance and verified do not take part in structural equality.
    assert make_scheme(scheme.dims, scheme.terms, name='other') == scheme
    assert scheme.renamed('x', 'y').name == 'x'
    assert scheme.renamed('x').provenance == scheme.provenance
    assert not scheme.marked(False).verified

    a = CoeffMatrix.unit(2, 2, 0, 0)
    with pytest.raises(FMMStructureError, match='Term 0: beta is 3x2, expected 2x2 for <2,2,2>') as info:
        make_scheme((2, 2, 2), [MulTerm(a, CoeffMatrix.unit(3, 2, 0, 0), a)])
    assert info.value.term_index == 0

    with pytest.raises(FMMStructureError, match='Term 1: gamma'):
        make_scheme((2, 2, 2), [MulTerm(a, a, a), MulTerm(a, a, CoeffMatrix.unit(2, 3, 0, 0))])

    with pytest.raises(FMMValidationError, match='Term 0 is dead: alpha has no nonzero entry'):
        make_scheme((2, 2, 2), [MulTerm(CoeffMatrix.build(2, 2), a, a)])


def test_op_counts():
    assert op_counts(strassen_scheme()) == (7, 18, 0)
    # Each of the 4 result cells of the naive scheme sums 2 products.
    assert op_counts(naive_scheme(2, 2, 2)) == (8, 4, 0)
    assert op_counts(naive_scheme(1, 1, 1)) == (1, 0, 0)

    half = CoeffMatrix.build(1, 1, {(0, 0): Fraction(1, 2)})
    two = CoeffMatrix.build(1, 1, {(0, 0): -2})
    counts = op_counts(make_scheme((1, 1, 1), [MulTerm(half, two, two)]))
    assert counts.scalar_multiplications == 3
    assert counts.additions == 0


def test_omega():
    assert omega(strassen_scheme()) == pytest.approx(math.log2(7))
    assert omega(naive_scheme(3, 3, 3)) == pytest.approx(3)
    assert omega(identity_scheme()) is None


def test_describe():
    lines = describe(strassen_scheme()).splitlines()
    assert lines[0] == 'strassen: <2,2,2>, rank 7'
    assert lines[1] == 'm1 = (a11 + a22)*(b11 + b22)'
    assert lines[2] == 'm2 = (a12 - a22)*(b21 + b22)'
    assert lines[3] == 'm3 = (-a11 + a21)*(b11 + b12)'
    assert 'c11 = m1 + m2 - m4 + m6' in lines
    assert 'c12 = m4 + m5' in lines
    assert 'c22 = m1 + m3 + m5 - m7' in lines
    assert len(lines) == 1 + 7 + 4

    half = CoeffMatrix.build(1, 1, {(0, 0): Fraction(-1, 2)})
    assert describe(make_scheme((1, 1, 1), [MulTerm(half, half, half)])).splitlines()[1:] == [
        'm1 = (-1/2*a11)*(-1/2*b11)',
        'c11 = -1/2*m1'
    ]


def test_matrix():
    matrix = Matrix.from_rows([[1, 2], [3, 4]])
    assert matrix.shape == (2, 2)
    assert matrix[1, 0] == 3
    assert isinstance(matrix[1, 0], Fraction)
    assert matrix.exact

    floats = Matrix.from_rows([[0.5, 1]], exact=False)
    assert not floats.exact
    assert floats.to_numpy().tolist() == [[0.5, 1.0]]

    assert Matrix.identity(2) == Matrix.from_rows([[1, 0], [0, 1]])
    assert Matrix.zeros(1, 2) == Matrix.from_rows([[0, 0]])

    with pytest.raises(FMMValidationError, match='do not form a 2x2 array'):
        Matrix(2, 2, ((1, 2), (3,)))
    with pytest.raises(FMMValidationError, match='at least one row'):
        Matrix.from_rows([])
