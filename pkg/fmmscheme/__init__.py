from fmmscheme.algebra import Orientation, PeelMask, kronecker, lift, orient, pad, peel, rotate, transpose_dual, unpad
from fmmscheme.catalog import (
    BoundEntry,
    BoundsTable,
    Derivation,
    bounds_table,
    dump_scheme,
    identity_scheme,
    kron_bound,
    load_bounds,
    load_fixture,
    load_scheme,
    loads_scheme,
    naive_scheme,
    prop1_bound,
    save_scheme,
    scheme_from_spec,
    strassen_scheme
)
from fmmscheme.compose import BlockPlan, CompositionReport, Summand, compose, make_block_plan
from fmmscheme.core import (
    BilinearScheme,
    CoeffMatrix,
    Dims,
    Matrix,
    MulTerm,
    OpCounts,
    Rational,
    describe,
    make_scheme,
    omega,
    op_counts,
    rank
)
from fmmscheme.exception import (
    FMMDimensionError,
    FMMException,
    FMMFixtureNotFoundError,
    FMMParameterError,
    FMMParseError,
    FMMPeelViolation,
    FMMStructureError,
    FMMUnverifiedSchemeError,
    FMMValidationError
)
from fmmscheme.verify import (
    BrentFailure,
    BrentReport,
    EvalReport,
    brent_check,
    evaluate,
    multiply_recursive,
    naive_mult,
    random_eval_check,
    random_matrix
)

__all__ = [
    'BilinearScheme', 'BlockPlan', 'BoundEntry', 'BoundsTable', 'BrentFailure', 'BrentReport', 'CoeffMatrix',
    'CompositionReport', 'Derivation', 'Dims', 'EvalReport', 'FMMDimensionError', 'FMMException',
    'FMMFixtureNotFoundError', 'FMMParameterError', 'FMMParseError', 'FMMPeelViolation', 'FMMStructureError',
    'FMMUnverifiedSchemeError', 'FMMValidationError', 'Matrix', 'MulTerm', 'OpCounts', 'Orientation', 'PeelMask',
    'Rational', 'Summand', 'bounds_table', 'brent_check', 'compose', 'describe', 'dump_scheme', 'evaluate',
    'identity_scheme', 'kron_bound', 'kronecker', 'lift', 'load_bounds', 'load_fixture', 'load_scheme',
    'loads_scheme', 'make_block_plan', 'make_scheme', 'multiply_recursive', 'naive_mult', 'naive_scheme', 'omega',
    'op_counts', 'orient', 'pad', 'peel', 'prop1_bound', 'random_eval_check', 'random_matrix', 'rank', 'rotate',
    'save_scheme', 'scheme_from_spec', 'strassen_scheme', 'transpose_dual', 'unpad'
]
