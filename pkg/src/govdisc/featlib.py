"""Monomial term libraries, design matrices and column normalisation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, SchemaError

SYMBOLS = {"omega": "ω"}


@dataclass(frozen=True)
class TermSpec:
    """One candidate term. ``exponents`` holds (feature, power) pairs with
    power > 0 in library feature order; empty means the constant 1.

    ``kind`` is reserved for non-monomial extensions; only "monomial" is
    evaluated.
    """

    exponents: tuple = ()
    kind: str = "monomial"

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.exponents)

    def as_dict(self) -> dict:
        return dict(self.exponents)

    def power(self, feature: str) -> int:
        return self.as_dict().get(feature, 0)


@dataclass(frozen=True)
class TermLibrary:
    features: tuple
    max_degree: int
    terms: tuple
    symbols: tuple = ()  # (feature, display symbol) pairs

    def __len__(self):
        return len(self.terms)

    @property
    def P(self) -> int:
        return len(self.terms)

    def symbol(self, feature: str) -> str:
        return dict(self.symbols).get(feature, SYMBOLS.get(feature, feature))

    def index(self, term: TermSpec | Mapping[str, int]) -> int:
        if not isinstance(term, TermSpec):
            term = make_term(self.features, term)
        return self.terms.index(term)

    def names(self) -> list[str]:
        return [term_name(t, self) for t in self.terms]

    def exponent_matrix(self) -> np.ndarray:
        """(P, F) integer matrix of powers."""
        E = np.zeros((len(self.terms), len(self.features)), dtype=int)
        pos = {f: j for j, f in enumerate(self.features)}
        for i, term in enumerate(self.terms):
            for f, p in term.exponents:
                E[i, pos[f]] = p
        return E


def make_term(features: Sequence[str], powers: Mapping[str, int]) -> TermSpec:
    for f, p in powers.items():
        if f not in features:
            raise SchemaError(f, f"term uses unknown feature {f!r}")
        if p < 0:
            raise ConfigError(f"negative exponent for {f}")
    return TermSpec(tuple((f, int(powers[f])) for f in features if powers.get(f, 0) > 0))


def build_library(features: Sequence[str], max_degree: int, symbols: Mapping[str, str] | None = None) -> TermLibrary:
    """All monomials of total degree <= ``max_degree`` in graded-lex order.

    Within a degree, terms follow combinations-with-replacement order over the
    feature list, e.g. ``1, T, u, T^2, T*u, u^2``.
    """
    features = tuple(features)
    if len(set(features)) != len(features):
        raise ConfigError(f"duplicate feature names in {features}")
    if max_degree < 0:
        raise ConfigError("max_degree must be >= 0")
    terms = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(features)), deg):
            powers = {}
            for j in combo:
                powers[features[j]] = powers.get(features[j], 0) + 1
            terms.append(make_term(features, powers))
    assert len(terms) == math.comb(len(features) + max_degree, max_degree)
    symbols = {f: s for f, s in (symbols or {}).items() if f in features}
    return TermLibrary(features, int(max_degree), tuple(terms), tuple(sorted(symbols.items())))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    values: np.ndarray
    library: TermLibrary

    @property
    def column_names(self) -> list[str]:
        return self.library.names()

    @property
    def shape(self):
        return self.values.shape


def evaluate_library(lib: TermLibrary, rows, features: Sequence[str] | None = None) -> DesignMatrix:
    """Evaluate every term at every row.

    ``rows`` is either a mapping feature -> 1-D array, or a 2-D array whose
    columns follow ``features`` (default: the library's own order).
    """
    if isinstance(rows, Mapping):
        cols = {}
        for f in lib.features:
            if f not in rows:
                raise SchemaError(f, f"feature {f!r} missing from rows")
            cols[f] = np.atleast_1d(np.asarray(rows[f], dtype=float))
    else:
        arr = np.atleast_2d(np.asarray(rows, dtype=float))
        names = tuple(features or lib.features)
        if arr.shape[1] != len(names):
            raise SchemaError("rows", f"rows have {arr.shape[1]} columns, expected {len(names)}")
        cols = {}
        for f in lib.features:
            if f not in names:
                raise SchemaError(f, f"feature {f!r} missing from rows")
            cols[f] = arr[:, names.index(f)]
    n = len(next(iter(cols.values()))) if cols else 1
    out = np.empty((n, lib.P))
    for p, term in enumerate(lib.terms):
        col = np.ones(n)
        for f, power in term.exponents:
            col = col * cols[f] ** power
        out[:, p] = col
    return DesignMatrix(out, lib)


@dataclass(frozen=True, eq=False)
class NormalizedProblem:
    """Unit-norm columns and target for support selection.

    Excluded (zero-norm) columns are stored as zeros with norm 1.
    """

    matrix: np.ndarray
    target: np.ndarray
    column_norms: np.ndarray
    target_norm: float
    excluded: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def P(self) -> int:
        return self.matrix.shape[1]

    def denormalize(self, xi_normalized: np.ndarray) -> np.ndarray:
        """Map normalised-scale coefficients back to original units."""
        xi = np.asarray(xi_normalized, dtype=float) * self.target_norm / self.column_norms
        xi[self.excluded] = 0.0
        return xi


def normalize_columns(dm: DesignMatrix | np.ndarray, target) -> NormalizedProblem:
    X = dm.values if isinstance(dm, DesignMatrix) else np.asarray(dm, dtype=float)
    y = np.asarray(target, dtype=float)
    if X.shape[0] < 1:
        raise DataError("normalisation needs at least one sample")
    if len(y) != X.shape[0]:
        raise DataError("target length differs from design matrix rows")
    norms = np.linalg.norm(X, axis=0)
    excluded = norms == 0.0
    safe = np.where(excluded, 1.0, norms)
    A = X / safe
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        raise DataError("target has zero norm")
    return NormalizedProblem(A, y / ynorm, safe, ynorm, excluded)


def _format_coefficient(c: float) -> str:
    sign = "−" if c < 0 or (c == 0 and math.copysign(1.0, c) < 0) else "+"
    mant, exp = f"{abs(c):.4e}".split("e")
    return f"{sign}{mant}e{int(exp)}"


def term_name(term: TermSpec, lib: TermLibrary | None = None) -> str:
    if not term.exponents:
        return "1"
    sym = lib.symbol if lib is not None else (lambda f: SYMBOLS.get(f, f))
    return "·".join(sym(f) if p == 1 else f"{sym(f)}^{p}" for f, p in term.exponents)


def term_to_string(term: TermSpec, coefficient: float, lib: TermLibrary | None = None) -> str:
    """``+2.7640e-9·ω^3·T_f`` style rendering; the constant term is the bare
    coefficient."""
    c = _format_coefficient(float(coefficient))
    if not term.exponents:
        return c
    return f"{c}·{term_name(term, lib)}"
