"""
This module contains the built-in schemes, the scheme file format, optional fixture schemes, the scheme specifier
grammar used on the command line, and the table of known rank bounds with the bound calculators built on it.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Literal, NoReturn, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, StrictInt, ValidationError, model_validator

from fmmscheme.algebra import kronecker, orient, rotate, transpose_dual
from fmmscheme.core import (
    BilinearScheme,
    CoeffMatrix,
    Dims,
    MulTerm,
    Position,
    make_scheme,
    parse_rational,
    render_rational
)
from fmmscheme.exception import (
    FMMFixtureNotFoundError,
    FMMParameterError,
    FMMParseError,
    FMMValidationError
)
from fmmscheme.verify import brent_check

__all__ = [
    'BoundEntry',
    'BoundsFile',
    'BoundsTable',
    'Derivation',
    'FORMAT_VERSION',
    'Fixtures',
    'SchemeEncoder',
    'SchemeFile',
    'TermModel',
    'bounds_table',
    'dump_scheme',
    'fixtures_dir',
    'identity_scheme',
    'kron_bound',
    'kron_derivation',
    'load_bounds',
    'load_fixture',
    'load_scheme',
    'loads_scheme',
    'naive_scheme',
    'prop1_bound',
    'prop1_derivation',
    'save_scheme',
    'scheme_from_spec',
    'strassen_scheme'
]

_logger = logging.getLogger(__name__)

#: Version written to and accepted from scheme and bounds files.
FORMAT_VERSION = 1

PathLike = Union[str, os.PathLike]


def naive_scheme(u: int, v: int, w: int) -> BilinearScheme:
    """The textbook ``<u,v,w>`` scheme of rank ``u v w``: term ``(i,j,k)``, in lexicographic order, multiplies
    ``A[i,j]`` by ``B[j,k]`` and adds the product to ``C[i,k]``.

    :param u: Rows of the left operand.
    :param v: Inner dimension.
    :param w: Columns of the right operand.
    :return: The naive scheme, marked verified.
    """
    dims = Dims(u, v, w)
    terms = [
        MulTerm(CoeffMatrix.unit(u, v, i, j), CoeffMatrix.unit(v, w, j, k), CoeffMatrix.unit(u, w, i, k))
        for i in range(u)
        for j in range(v)
        for k in range(w)
    ]
    return make_scheme(dims, terms, name=f'naive:{u},{v},{w}', provenance='naive', verified=True)


# Strassen's seven products, t1 to t7, as (alpha, beta, gamma) with result-indexed gamma. For instance t4 is
# (a11 + a12) b22, subtracted from c11 and added to c12.
_STRASSEN_TERMS: Tuple[Tuple[Dict[Position, int], Dict[Position, int], Dict[Position, int]], ...] = (
    ({(0, 0): 1, (1, 1): 1}, {(0, 0): 1, (1, 1): 1}, {(0, 0): 1, (1, 1): 1}),
    ({(0, 1): 1, (1, 1): -1}, {(1, 0): 1, (1, 1): 1}, {(0, 0): 1}),
    ({(0, 0): -1, (1, 0): 1}, {(0, 0): 1, (0, 1): 1}, {(1, 1): 1}),
    ({(0, 0): 1, (0, 1): 1}, {(1, 1): 1}, {(0, 0): -1, (0, 1): 1}),
    ({(0, 0): 1}, {(0, 1): 1, (1, 1): -1}, {(0, 1): 1, (1, 1): 1}),
    ({(1, 1): 1}, {(0, 0): -1, (1, 0): 1}, {(0, 0): 1, (1, 0): 1}),
    ({(1, 0): 1, (1, 1): 1}, {(0, 0): 1}, {(1, 0): 1, (1, 1): -1})
)


def strassen_scheme() -> BilinearScheme:
    """Strassen's rank-7 ``<2,2,2>`` scheme."""
    terms = [MulTerm(*(CoeffMatrix.build(2, 2, coeff) for coeff in term)) for term in _STRASSEN_TERMS]
    return make_scheme(Dims(2, 2, 2), terms, name='strassen', provenance='Strassen', verified=True)


def identity_scheme() -> BilinearScheme:
    """The rank-1 ``<1,1,1>`` scheme, the unit of :func:`.kronecker`."""
    one = CoeffMatrix.unit(1, 1, 0, 0)
    return make_scheme(Dims(1, 1, 1), [MulTerm(one, one, one)], name='identity', provenance='identity',
                       verified=True)


class SchemeEncoder(json.JSONEncoder):
    """JSON encoder for schemes and their parts. Coefficients are written as exact fraction strings and coefficient
    matrices as lists of ``[row, col, coefficient]``.
    """

    def default(self, o: Any) -> Any:
        if isinstance(o, Fraction):
            return render_rational(o)
        if isinstance(o, CoeffMatrix):
            return [[row, col, value] for (row, col), value in o]
        if isinstance(o, MulTerm):
            return {'alpha': o.alpha, 'beta': o.beta, 'gamma': o.gamma}
        if isinstance(o, Dims):
            return list(o)
        if isinstance(o, BilinearScheme):
            return {
                'format_version': FORMAT_VERSION,
                'name': o.name,
                'provenance': o.provenance,
                'dims': o.dims,
                'rank': o.rank,
                'terms': list(o.terms)
            }
        return super().default(o)


class TermModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    alpha: List[Tuple[StrictInt, StrictInt, str]]
    beta: List[Tuple[StrictInt, StrictInt, str]]
    gamma: List[Tuple[StrictInt, StrictInt, str]]


class SchemeFile(BaseModel):
    """Schema of a scheme file. Indices are 0-based and coefficients are fraction strings such as ``"-3/2"``."""

    model_config = ConfigDict(extra='forbid')

    format_version: Literal[1]
    name: str = ''
    provenance: str = ''
    dims: Tuple[StrictInt, StrictInt, StrictInt]
    rank: StrictInt
    terms: List[TermModel]

    @model_validator(mode='after')
    def check_rank(self) -> SchemeFile:
        if self.rank != len(self.terms):
            raise ValueError(f'rank is {self.rank} but there are {len(self.terms)} terms')
        return self


class _BoundModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    u: StrictInt
    v: StrictInt
    w: StrictInt
    bound: StrictInt
    provenance: str = 'bounds file'


class BoundsFile(BaseModel):
    """Schema of a bounds file: ``{"format_version": 1, "bounds": [{"u", "v", "w", "bound", "provenance"}]}``."""

    model_config = ConfigDict(extra='forbid')

    format_version: Literal[1]
    bounds: List[_BoundModel]


def _validation_message(error: ValidationError) -> str:
    # First pydantic error as "location: message".
    first = error.errors()[0]
    location = '.'.join(str(part) for part in first['loc'])
    return f'{location}: {first["msg"]}' if location else first['msg']


def _decode(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FMMParseError(f'{source} is not valid JSON: {e.msg}', e.lineno, e.colno)


def dump_scheme(scheme: BilinearScheme) -> str:
    """Serialize *scheme* to the scheme file format, one term per line and fields in canonical order.

    :param scheme: The scheme to serialize.
    :return: The document, ending with a newline.
    """
    def dump(value: Any) -> str:
        return json.dumps(value, cls=SchemeEncoder, ensure_ascii=False)

    lines = [
        '{',
        f'  "format_version": {FORMAT_VERSION},',
        f'  "name": {dump(scheme.name)},',
        f'  "provenance": {dump(scheme.provenance)},',
        f'  "dims": {dump(scheme.dims)},',
        f'  "rank": {scheme.rank},'
    ]
    if scheme.terms:
        lines.append('  "terms": [')
        lines.append(',\n'.join(f'    {dump(term)}' for term in scheme.terms))
        lines.append('  ]')
    else:
        lines.append('  "terms": []')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def save_scheme(scheme: BilinearScheme, path: PathLike) -> None:
    """Write *scheme* to *path* in the scheme file format."""
    Path(path).write_text(dump_scheme(scheme), encoding='utf-8')
    _logger.info('Wrote %s (%s, rank %d) to %s', scheme.name, scheme.dims, scheme.rank, path)


def _coeff_matrix(rows: int, cols: int, entries: List[Tuple[int, int, str]], where: str) -> CoeffMatrix:
    values = []
    for index, (row, col, text) in enumerate(entries):
        try:
            value = parse_rational(text)
        except FMMParseError as e:
            raise FMMParseError(f'{where}, entry {index}: {e}')
        if value == 0:
            raise FMMValidationError(f'{where}, entry {index}: zero coefficient "{text}" at ({row}, {col})')
        values.append(((row, col), value))
    try:
        return CoeffMatrix.build(rows, cols, values)
    except FMMValidationError as e:
        raise FMMValidationError(f'{where}: {e}')


def _with_brent_result(scheme: BilinearScheme) -> BilinearScheme:
    report = brent_check(scheme)
    result = 'PASS' if report.passed else 'FAIL'
    verdict = f'brent: {result} ({report.total_equations} equations)'
    provenance = f'{scheme.provenance}; {verdict}' if scheme.provenance else verdict
    return scheme.renamed(scheme.name, provenance).marked(report.passed)


def loads_scheme(text: str, source: str = 'scheme document', verify: bool = False) -> BilinearScheme:
    """Parse a scheme document.

    :param text: The document.
    :param source: Name of the document used in error messages.
    :param verify: Run :func:`.brent_check`, append ``brent: PASS (n equations)`` or ``brent: FAIL (...)`` to the
        provenance and mark the scheme verified when it passes.
    :return: The canonical scheme.
    :raise FMMParseError: If the document is not JSON or a coefficient is not a fraction.
    :raise FMMValidationError: If the document does not follow the schema or violates a scheme invariant.
    """
    data = _decode(text, source)
    try:
        document = SchemeFile.model_validate(data)
    except ValidationError as e:
        raise FMMValidationError(f'{source} is not a valid scheme file: {_validation_message(e)}')
    try:
        dims = Dims(*document.dims)
    except FMMValidationError as e:
        raise FMMValidationError(f'{source}: {e}')
    shapes = {'alpha': (dims.u, dims.v), 'beta': (dims.v, dims.w), 'gamma': (dims.u, dims.w)}
    terms = []
    for index, term in enumerate(document.terms):
        terms.append(MulTerm(**{
            name: _coeff_matrix(*shape, getattr(term, name), f'{source}, term {index}, {name}')
            for name, shape in shapes.items()
        }))
    scheme = make_scheme(dims, terms, name=document.name, provenance=document.provenance)
    return _with_brent_result(scheme) if verify else scheme


def load_scheme(path: PathLike, verify: bool = False) -> BilinearScheme:
    """Read a scheme file. See :func:`loads_scheme`.

    :param path: The file to read.
    :param verify: Check the Brent equations and record the result in the provenance.
    :return: The canonical scheme.
    :raise FMMParseError: If the file cannot be read or parsed.
    :raise FMMValidationError: If the file is not a valid scheme file.
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise FMMParseError(f'Cannot read scheme file {path}: {e.strerror}')
    return loads_scheme(text, str(path), verify=verify)


class Fixtures:
    """Optional scheme files that cannot ship with the package, such as schemes published elsewhere. They live in a
    directory given explicitly, by the ``FMM_FIXTURES`` environment variable or, failing both, the ``fixtures``
    directory next to the package.
    """

    _FIXTURES_ENV: str = 'FMM_FIXTURES'

    def __init__(self, directory: Optional[PathLike] = None) -> None:
        if directory is None:
            directory = os.environ.get(self._FIXTURES_ENV) or Path(__file__).resolve().parent.parent / 'fixtures'
        self.directory = Path(directory)

    def path(self, name: str) -> Path:
        return self.directory / (name if name.endswith('.json') else f'{name}.json')

    def __contains__(self, name: str) -> bool:
        return self.path(name).is_file()

    def load(self, name: str, verify: bool = True) -> BilinearScheme:
        """Load fixture *name* (``smirnov_336`` or ``smirnov_336.json``).

        :param name: The fixture name.
        :param verify: Check the Brent equations, recording the result in the provenance.
        :return: The fixture scheme.
        :raise FMMFixtureNotFoundError: If the fixture file does not exist.
        """
        path = self.path(name)
        if not path.is_file():
            raise FMMFixtureNotFoundError(f'Fixture "{name}" not found in {self.directory}')
        return load_scheme(path, verify=verify)


def fixtures_dir(directory: Optional[PathLike] = None) -> Path:
    """The fixture directory in use for *directory* (or the environment when None)."""
    return Fixtures(directory).directory


def load_fixture(name: str, directory: Optional[PathLike] = None, verify: bool = True) -> BilinearScheme:
    """Load a fixture scheme. See :meth:`Fixtures.load`."""
    return Fixtures(directory).load(name, verify=verify)


# Tokens of the specifier grammar: integers, names and the separators ':' and ','.
_SPEC_TOKEN_REGEX = re.compile(r'\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][\w.\-]*)|(?P<punct>[:,]))', re.ASCII)


class _SpecParser:
    # Recursive descent parser for
    #   spec := strassen | identity | naive:U,V,W | kron:spec,spec | orient:spec:U,V,W | rotate:spec
    #         | transpose:spec | fixture:NAME

    def __init__(self, text: str, fixtures: Fixtures) -> None:
        self.text = text
        self.fixtures = fixtures
        self.tokens: List[Tuple[str, str]] = []
        position = 0
        text = text.rstrip()
        while position < len(text):
            match = _SPEC_TOKEN_REGEX.match(text, position)
            if not match:
                self.fail(f'unexpected character "{text[position:].lstrip()[0]}"')
            kind = match.lastgroup
            self.tokens.append((kind, match.group(kind)))
            position = match.end()
        self.index = 0

    def fail(self, message: str) -> NoReturn:
        raise FMMParameterError(f'Malformed scheme specifier "{self.text}": {message}')

    def next(self, kind: str, value: Optional[str] = None) -> str:
        if self.index >= len(self.tokens):
            self.fail(f'unexpected end, expected {value or kind}')
        token_kind, token_value = self.tokens[self.index]
        if token_kind != kind or (value is not None and token_value != value):
            self.fail(f'expected {value or kind}, found "{token_value}"')
        self.index += 1
        return token_value

    def triple(self) -> Dims:
        values = [int(self.next('int'))]
        for _ in range(2):
            self.next('punct', ',')
            values.append(int(self.next('int')))
        return Dims(*values)

    def parse(self) -> BilinearScheme:
        scheme = self.scheme()
        if self.index < len(self.tokens):
            self.fail(f'trailing "{self.tokens[self.index][1]}"')
        return scheme

    def scheme(self) -> BilinearScheme:
        keyword = self.next('name')
        if keyword == 'strassen':
            return strassen_scheme()
        if keyword == 'identity':
            return identity_scheme()
        self.next('punct', ':')
        if keyword == 'naive':
            return naive_scheme(*self.triple())
        if keyword == 'kron':
            left = self.scheme()
            self.next('punct', ',')
            return kronecker(left, self.scheme())
        if keyword == 'orient':
            inner = self.scheme()
            self.next('punct', ':')
            return orient(inner, self.triple())
        if keyword == 'rotate':
            return rotate(self.scheme())
        if keyword == 'transpose':
            return transpose_dual(self.scheme())
        if keyword == 'fixture':
            return self.fixtures.load(self.next('name'))
        self.fail(f'unknown scheme "{keyword}"')


def scheme_from_spec(spec: str, fixtures: Optional[PathLike] = None) -> BilinearScheme:
    """Build a scheme from a specifier such as ``strassen``, ``naive:4,4,3``, ``kron:strassen,strassen``,
    ``orient:fixture:smirnov_336:6,3,3``, ``rotate:SPEC``, ``transpose:SPEC`` or ``identity``. Anything the grammar
    does not accept is loaded as a scheme file if that file exists, so a file named like a built-in never shadows it.

    :param spec: The specifier.
    :param fixtures: Fixture directory overriding the environment.
    :return: The scheme.
    :raise FMMParameterError: If the specifier is malformed.
    :raise FMMFixtureNotFoundError: If it uses a fixture that is not present.
    """
    try:
        return _SpecParser(spec, Fixtures(fixtures)).parse()
    except FMMParameterError:
        if Path(spec).is_file():
            return load_scheme(spec)
        raise


@dataclass(frozen=True)
class BoundEntry:
    """A known upper bound on the rank of ``<u,v,w>``. The six permutations of a triple share their rank, so entries
    are keyed by the sorted triple.
    """

    dims_key: Tuple[int, int, int]
    rank_bound: int
    provenance: str

    def __post_init__(self) -> None:
        key = Dims.of(self.dims_key).key()
        object.__setattr__(self, 'dims_key', key)
        if not isinstance(self.rank_bound, int) or self.rank_bound < 1:
            raise FMMValidationError(f'Bound {self.rank_bound!r} for {key} must be a positive integer')
        naive = key[0] * key[1] * key[2]
        if self.rank_bound > naive:
            raise FMMValidationError(f'Bound {self.rank_bound} for {key} exceeds the naive bound {naive}')

    def __str__(self) -> str:
        return f'<{",".join(map(str, self.dims_key))}> <= {self.rank_bound} ({self.provenance})'


_SEED_BOUNDS = (
    BoundEntry((2, 2, 2), 7, 'Strassen'),
    BoundEntry((4, 4, 4), 49, 'Kronecker square of Strassen'),
    BoundEntry((3, 3, 3), 23, 'cited: Laderman'),
    BoundEntry((3, 3, 4), 29, 'cited: Smirnov'),
    BoundEntry((3, 4, 4), 38, 'cited: Smirnov'),
    BoundEntry((3, 3, 6), 40, 'cited: Smirnov'),
    BoundEntry((6, 6, 6), 160, 'Kronecker <6,3,3> x <1,2,2>: 40·4'),
    BoundEntry((3, 6, 6), 80, 'Kronecker <6,3,3> x <1,2,1>: 40·2'),
    BoundEntry((7, 7, 7), 258, 'cited: prior divide-and-conquer construction'),
    BoundEntry((7, 7, 7), 250, 'composition (4,3): 49 + 3·38 + 3·29'),
    BoundEntry((9, 9, 9), 522, 'cited: prior divide-and-conquer construction'),
    BoundEntry((9, 9, 9), 520, 'composition (6,3): 160 + 3·80 + 3·40'),
    BoundEntry((9, 9, 9), 514, 'cited: construction not described')
)


class BoundsTable:
    """Immutable table of known rank bounds. Lookups accept any permutation of a triple and fall back to the naive
    bound ``u v w`` for triples without a stored entry.
    """

    _BOUNDS_ENV: str = 'FMM_BOUNDS'

    def __init__(self, entries: Iterable[BoundEntry] = ()) -> None:
        self._entries: Dict[Tuple[int, int, int], List[BoundEntry]] = {}
        for entry in entries:
            self._entries.setdefault(entry.dims_key, []).append(entry)
        for stored in self._entries.values():
            stored.sort(key=lambda e: e.rank_bound)

    @classmethod
    def seeded(cls, bounds_file: Optional[PathLike] = None) -> BoundsTable:
        """The table of built-in bounds, extended with *bounds_file* or, when None, the file named by ``FMM_BOUNDS``
        if set."""
        table = cls(_SEED_BOUNDS)
        bounds_file = bounds_file or os.environ.get(cls._BOUNDS_ENV)
        if bounds_file:
            table = table.extend(load_bounds(bounds_file))
        return table

    def extend(self, entries: Iterable[BoundEntry]) -> BoundsTable:
        return BoundsTable([*self.all_entries(), *entries])

    def all_entries(self) -> List[BoundEntry]:
        return [entry for key in sorted(self._entries) for entry in self._entries[key]]

    def entries(self, dims: Union[Dims, Sequence[int]]) -> List[BoundEntry]:
        """Stored entries for *dims*, best first."""
        return list(self._entries.get(Dims.of(dims).key(), ()))

    def best(self, dims: Union[Dims, Sequence[int]]) -> BoundEntry:
        """The smallest stored bound for *dims*, or the naive bound when nothing is stored."""
        dims = Dims.of(dims)
        stored = self._entries.get(dims.key())
        return stored[0] if stored else BoundEntry(dims.key(), dims.naive_rank(), 'naive')

    def __getitem__(self, dims: Union[Dims, Sequence[int]]) -> int:
        return self.best(dims).rank_bound

    def __contains__(self, dims: Union[Dims, Sequence[int]]) -> bool:
        return Dims.of(dims).key() in self._entries

    def __iter__(self) -> Iterator[Tuple[int, int, int]]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)


def bounds_table(bounds_file: Optional[PathLike] = None) -> BoundsTable:
    """The seeded bounds table. See :meth:`BoundsTable.seeded`."""
    return BoundsTable.seeded(bounds_file)


def load_bounds(path: PathLike) -> List[BoundEntry]:
    """Read a bounds file.

    :param path: The file to read.
    :return: Its entries, in file order.
    :raise FMMParseError: If the file cannot be read or is not JSON.
    :raise FMMValidationError: If the file does not follow the schema or a bound exceeds the naive bound.
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise FMMParseError(f'Cannot read bounds file {path}: {e.strerror}')
    try:
        document = BoundsFile.model_validate(_decode(text, str(path)))
    except ValidationError as e:
        raise FMMValidationError(f'{path} is not a valid bounds file: {_validation_message(e)}')
    return [BoundEntry((b.u, b.v, b.w), b.bound, b.provenance) for b in document.bounds]


@dataclass(frozen=True)
class Derivation:
    """A bound obtained by combining table entries, with the arithmetic behind it."""

    bound: int
    expression: str
    sources: Tuple[BoundEntry, ...]

    def __str__(self) -> str:
        return f'{self.bound} = {self.expression}'


def prop1_derivation(u: int, v: int, table: Optional[BoundsTable] = None) -> Derivation:
    """Bound on ``<u+v,u+v,u+v>`` given by :func:`.compose`: ``T<u,u,u> + 3 T<u,u,v> + 3 T<v,v,u>``.

    :param u: Size of the larger part of each axis.
    :param v: Size of the smaller part of each axis.
    :param table: Table to look bounds up in, the seeded table when None.
    :return: The derivation, e.g. ``250 = 49 + 3·38 + 3·29``.
    :raise FMMParameterError: If not ``u > v >= 1``.
    """
    if v < 1 or u <= v:
        raise FMMParameterError(f'The composition bound needs u > v >= 1, got u={u}, v={v}')
    table = bounds_table() if table is None else table
    sources = (table.best((u, u, u)), table.best((u, u, v)), table.best((v, v, u)))
    b1, b2, b3 = (entry.rank_bound for entry in sources)
    return Derivation(b1 + 3 * b2 + 3 * b3, f'{b1} + 3·{b2} + 3·{b3}', sources)


def prop1_bound(u: int, v: int, table: Optional[BoundsTable] = None) -> int:
    """The bound of :func:`prop1_derivation`."""
    return prop1_derivation(u, v, table).bound


def kron_derivation(
    d1: Union[Dims, Sequence[int]],
    d2: Union[Dims, Sequence[int]],
    table: Optional[BoundsTable] = None
) -> Derivation:
    """Bound on the product dims of *d1* and *d2* given by :func:`.kronecker`: ``T<d1> T<d2>``.

    :param d1: Dims of the left factor.
    :param d2: Dims of the right factor.
    :param table: Table to look bounds up in, the seeded table when None.
    :return: The derivation, e.g. ``529 = 23·23``.
    """
    table = bounds_table() if table is None else table
    sources = (table.best(d1), table.best(d2))
    return Derivation(sources[0].rank_bound * sources[1].rank_bound,
                      f'{sources[0].rank_bound}·{sources[1].rank_bound}', sources)


def kron_bound(
    d1: Union[Dims, Sequence[int]],
    d2: Union[Dims, Sequence[int]],
    table: Optional[BoundsTable] = None
) -> int:
    """The bound of :func:`kron_derivation`."""
    return kron_derivation(d1, d2, table).bound
