"""Cardinality-constrained ridge regression solved exactly, then refit.

Stage 1 picks the size-k support minimising

    ||y_n - A_n xi||^2 + lambda2 ||xi||^2

over unit-norm columns ``A_n`` and unit-norm target ``y_n``; the inner
problem for a fixed support is closed-form ridge. Stage 2 refits the chosen
columns by ordinary least squares on the original data.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BigMViolation, ConfigError, DivergenceError, NumericalError
from .featlib import DesignMatrix, NormalizedProblem, TermLibrary, evaluate_library, normalize_columns

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 10**6
TIE_RTOL = 1e-12
COND_LIMIT = 1e12
_BATCH = 8192


@dataclass(frozen=True)
class HyperParams:
    k: int = 3
    lambda2: float = 100.0
    M: float = 1000.0
    max_degree: int = 4

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.lambda2 < 0:
            raise ConfigError("lambda2 must be >= 0")
        if not self.M > 0:
            raise ConfigError("big-M must be > 0")
        if self.max_degree < 0:
            raise ConfigError("max_degree must be >= 0")


@dataclass(frozen=True, eq=False)
class SupportResult:
    gamma: np.ndarray
    objective: float
    method: str
    evaluated: int  # number of ridge subproblems solved

    @property
    def indices(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.gamma))


# --------------------------------------------------------------------------
# ridge subproblems


class _Ridge:
    """Gram-form ridge objective for column subsets of a normalised problem."""

    def __init__(self, problem: NormalizedProblem, lambda2: float):
        A = problem.matrix
        self.G = A.T @ A
        self.b = A.T @ problem.target
        self.yy = float(problem.target @ problem.target)
        self.lam = float(lambda2)
        self.evaluated = 0

    def _objective_one(self, S) -> float:
        S = list(S)
        H = self.G[np.ix_(S, S)] + self.lam * np.eye(len(S))
        b = self.b[S]
        try:
            x = np.linalg.solve(H, b)
            if not np.all(np.isfinite(x)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            x = np.linalg.lstsq(H, b, rcond=None)[0]
        # stationary form: error is second order in the solve error
        return float(self.yy - 2.0 * b @ x + x @ (H @ x))

    def objectives(self, supports: np.ndarray) -> np.ndarray:
        """Objective for each row of an (B, s) integer array of supports."""
        supports = np.asarray(supports, dtype=int)
        B, s = supports.shape
        self.evaluated += B
        if s == 0:
            return np.full(B, self.yy)
        H = self.G[supports[:, :, None], supports[:, None, :]] + self.lam * np.eye(s)
        b = self.b[supports]
        try:
            x = np.linalg.solve(H, b[..., None])[..., 0]
            ok = np.all(np.isfinite(x), axis=1)
        except np.linalg.LinAlgError:
            x = np.zeros_like(b)
            ok = np.zeros(B, dtype=bool)
        out = self.yy - 2.0 * np.einsum("ij,ij->i", b, x) + np.einsum("ij,ijk,ik->i", x, H, x)
        for i in np.flatnonzero(~ok):
            out[i] = self._objective_one(supports[i])
        return out

    def objective(self, S) -> float:
        return float(self.objectives(np.asarray([list(S)], dtype=int).reshape(1, -1))[0])


def _tie_tol(best: float, yy: float) -> float:
    return TIE_RTOL * max(abs(best), yy, 1e-300)


def _pick(candidates: list[tuple[float, tuple]], yy: float) -> tuple[float, tuple]:
    best = min(o for o, _ in candidates)
    tol = _tie_tol(best, yy)
    winners = [S for o, S in candidates if o <= best + tol]
    S = min(winners)
    return best, S


def _active_columns(problem: NormalizedProblem, k: int) -> np.ndarray:
    active = np.flatnonzero(~problem.excluded)
    if k > len(active):
        raise ConfigError(f"k={k} exceeds the {len(active)} usable (non-zero) columns")
    return active


def enumerate_supports(problem: NormalizedProblem, hp: HyperParams, workers: int = 1) -> SupportResult:
    """Exhaustive search over all size-k supports (the oracle path)."""
    k = hp.k
    active = _active_columns(problem, k)
    ridge = _Ridge(problem, hp.lambda2)
    combos = itertools.combinations(active.tolist(), k)

    def chunks():
        while True:
            block = list(itertools.islice(combos, _BATCH))
            if not block:
                return
            yield np.asarray(block, dtype=int)

    blocks = list(chunks())
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(ridge.objectives, blocks))
    else:
        results = [ridge.objectives(b) for b in blocks]
    objs = np.concatenate(results)
    supports = np.concatenate(blocks)
    best = float(objs.min())
    tol = _tie_tol(best, ridge.yy)
    # combinations come out in lexicographic order: first hit wins ties
    first = int(np.flatnonzero(objs <= best + tol)[0])
    gamma = np.zeros(problem.P, dtype=bool)
    gamma[supports[first]] = True
    return SupportResult(gamma, float(objs[first]), "exhaustive", len(objs))


def branch_and_bound(problem: NormalizedProblem, hp: HyperParams) -> SupportResult:
    """Best-first branch and bound over supports.

    A node fixes a set of included columns and has a tail of undecided
    columns; its bound is the ridge objective over included + tail, which no
    completion can beat. Nodes are pruned only when the bound exceeds the
    incumbent by more than the tie tolerance, so every support that could
    tie the optimum is still visited and the lexicographic tie rule matches
    exhaustive enumeration.
    """
    k = hp.k
    cols = tuple(_active_columns(problem, k).tolist())
    n = len(cols)
    ridge = _Ridge(problem, hp.lambda2)

    leaves: list[tuple[float, tuple]] = []
    incumbent = math.inf

    # greedy forward selection seeds the incumbent
    chosen: list[int] = []
    for _ in range(k):
        rest = [c for c in cols if c not in chosen]
        trial = np.asarray([sorted(chosen + [c]) for c in rest], dtype=int)
        objs = ridge.objectives(trial)
        chosen = list(trial[int(np.argmin(objs))])
    S0 = tuple(sorted(int(c) for c in chosen))
    incumbent = ridge.objective(S0)
    leaves.append((incumbent, S0))

    counter = itertools.count()
    root_bound = ridge.objective(cols)
    heap = [(root_bound, next(counter), (), 0)]
    while heap:
        bound, _, included, pos = heapq.heappop(heap)
        if bound > incumbent + _tie_tol(incumbent, ridge.yy):
            break
        need = k - len(included)
        remaining = n - pos
        if need == 0 or need == remaining:
            S = tuple(sorted(included + cols[pos:] if need else included))
            obj = ridge.objective(S)
            leaves.append((obj, S))
            incumbent = min(incumbent, obj)
            continue
        j = cols[pos]
        # include j: same column set as the parent, so the bound carries over
        heapq.heappush(heap, (bound, next(counter), included + (j,), pos + 1))
        # exclude j: drop it from the relaxed set
        if need <= remaining - 1:
            ex_bound = ridge.objective(included + cols[pos + 1 :])
            if ex_bound <= incumbent + _tie_tol(incumbent, ridge.yy):
                heapq.heappush(heap, (ex_bound, next(counter), included, pos + 1))

    best, S = _pick(leaves, ridge.yy)
    gamma = np.zeros(problem.P, dtype=bool)
    gamma[list(S)] = True
    obj = min(o for o, s in leaves if s == S)
    return SupportResult(gamma, obj, "branch-and-bound", ridge.evaluated)


def solve_support(problem: NormalizedProblem, hp: HyperParams, method: str = "auto", workers: int = 1) -> SupportResult:
    """Exact size-k support selection.

    ``method="auto"`` enumerates when C(P, k) <= 1e6 and falls back to
    branch and bound otherwise.
    """
    active = _active_columns(problem, hp.k)
    if method == "auto":
        method = "exhaustive" if math.comb(len(active), hp.k) <= EXHAUSTIVE_LIMIT else "bnb"
    if method == "exhaustive":
        return enumerate_supports(problem, hp, workers=workers)
    if method in ("bnb", "branch-and-bound"):
        return branch_and_bound(problem, hp)
    raise ConfigError(f"unknown support solver {method!r}")


# --------------------------------------------------------------------------
# refit + model


def refit_least_squares(dm: DesignMatrix | np.ndarray, target, gamma) -> np.ndarray:
    """Unregularised least squares on the original selected columns."""
    X = dm.values if isinstance(dm, DesignMatrix) else np.asarray(dm, dtype=float)
    y = np.asarray(target, dtype=float)
    gamma = np.asarray(gamma, dtype=bool)
    idx = np.flatnonzero(gamma)
    xi = np.zeros(X.shape[1])
    if len(idx) == 0:
        return xi
    Xs = X[:, idx]
    norms = np.linalg.norm(Xs, axis=0)
    if np.any(norms == 0):
        raise NumericalError("selected block contains an all-zero column (condition estimate inf)")
    Xn = Xs / norms
    cond = np.linalg.cond(Xn) if Xn.shape[0] >= Xn.shape[1] else math.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(f"selected columns are rank deficient (condition estimate {cond:.3e})")
    coef = np.linalg.lstsq(Xn, y, rcond=None)[0]
    xi[idx] = coef / norms
    return xi


@dataclass(frozen=True)
class FitDiagnostics:
    stage1_objective: float = math.nan
    stage2_residual_norm: float = math.nan
    n_samples: int = 0
    k: int = 0
    lambda2: float = math.nan
    M: float = math.nan
    method: str = ""
    excluded: tuple = ()

    def __eq__(self, other):
        if not isinstance(other, FitDiagnostics):
            return NotImplemented
        a, b = self.__dict__, other.__dict__
        return all(_same(a[key], b[key]) for key in a)


def _same(x, y):
    if isinstance(x, float) and isinstance(y, float):
        return (math.isnan(x) and math.isnan(y)) or x == y
    return x == y


@dataclass(frozen=True, eq=False)
class SparseModel:
    """One discovered right-hand side: library, support and coefficients."""

    library: TermLibrary
    gamma: np.ndarray
    xi: np.ndarray
    state: str
    diagnostics: FitDiagnostics = field(default_factory=FitDiagnostics)

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=bool)
        xi = np.array(self.xi, dtype=float)
        if gamma.shape != (self.library.P,) or xi.shape != (self.library.P,):
            raise ConfigError("gamma/xi must have one entry per library term")
        xi[~gamma] = 0.0
        gamma.flags.writeable = False
        xi.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "xi", xi)
        if self.state not in self.library.features:
            raise ConfigError(f"state {self.state!r} is not a library feature")

    @classmethod
    def from_terms(cls, library: TermLibrary, state: str, coefficients: Mapping, diagnostics=None) -> "SparseModel":
        """Build a model from {term-powers-dict or TermSpec: coefficient}."""
        gamma = np.zeros(library.P, dtype=bool)
        xi = np.zeros(library.P)
        for term, c in (coefficients.items() if isinstance(coefficients, Mapping) else coefficients):
            p = library.index(term if not isinstance(term, tuple) else dict(term))
            gamma[p] = True
            xi[p] = c
        return cls(library, gamma, xi, state, diagnostics or FitDiagnostics())

    def __eq__(self, other):
        if not isinstance(other, SparseModel):
            return NotImplemented
        return (
            self.library == other.library
            and self.state == other.state
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.xi, other.xi)
            and self.diagnostics == other.diagnostics
        )

    @property
    def support(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.gamma))

    @property
    def k(self) -> int:
        return int(self.gamma.sum())

    def support_terms(self):
        return [self.library.terms[p] for p in self.support]

    def coefficients(self) -> dict:
        return {self.library.terms[p]: float(self.xi[p]) for p in self.support}

    def evaluate(self, rows) -> np.ndarray:
        """Right-hand side at each row: Theta(row) . xi."""
        dm = evaluate_library(self.library, rows)
        return dm.values @ self.xi

    def state_polynomial(self, inputs: Mapping[str, np.ndarray], n: int | None = None) -> np.ndarray:
        """Coefficients C with rhs = sum_j C[..., j] * state**j.

        ``inputs`` supplies every non-state feature (arrays broadcast
        together); the result has shape ``broadcast_shape + (max_power+1,)``.
        """
        E = self.library.exponent_matrix()
        s = self.library.features.index(self.state)
        others = [f for f in self.library.features if f != self.state]
        for f in others:
            used = any(E[p, self.library.features.index(f)] > 0 for p in self.support)
            if used and f not in inputs:
                raise ConfigError(f"missing input channel {f!r}")
        arrays = {f: np.asarray(inputs[f], dtype=float) for f in others if f in inputs}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ((n,) if n else ())
        deg = max((E[p, s] for p in self.support), default=0)
        C = np.zeros(shape + (deg + 1,))
        for p in self.support:
            term = np.full(shape, self.xi[p])
            for j, f in enumerate(self.library.features):
                if j == s or E[p, j] == 0:
                    continue
                term = term * arrays[f] ** E[p, j]
            C[..., E[p, s]] += term
        return C


def discover(dm: DesignMatrix, target, hp: HyperParams = HyperParams(), state: str | None = None,
             method: str = "auto", workers: int = 1, check_big_m: bool = True) -> SparseModel:
    """Normalise, select the support exactly, refit on original data."""
    y = np.asarray(target, dtype=float)
    problem = normalize_columns(dm, y)
    support = solve_support(problem, hp, method=method, workers=workers)
    xi = refit_least_squares(dm, y, support.gamma)
    if check_big_m:
        over = np.flatnonzero(support.gamma & (np.abs(xi) > hp.M))
        if len(over):
            names = [dm.library.names()[p] for p in over]
            raise BigMViolation(f"big-M violation: |xi| > {hp.M} for {', '.join(names)}")
    resid = float(np.linalg.norm(y - dm.values @ xi))
    diag = FitDiagnostics(
        stage1_objective=support.objective,
        stage2_residual_norm=resid,
        n_samples=len(y),
        k=hp.k,
        lambda2=float(hp.lambda2),
        M=float(hp.M),
        method=support.method,
        excluded=tuple(int(i) for i in np.flatnonzero(problem.excluded)),
    )
    return SparseModel(dm.library, support.gamma, xi, state or dm.library.features[0], diag)


@dataclass(frozen=True)
class TuningResult:
    best: HyperParams
    table: tuple  # (k, MAPE or None, message)


def tune_k(candidates: Sequence[HyperParams], fit: Callable[[HyperParams], object],
           score: Callable[[object], float]) -> TuningResult:
    """Pick the candidate with the lowest validation score (ties -> smaller k).

    ``score`` raises :class:`DivergenceError` when a candidate's simulation
    blows up; such candidates are recorded and skipped.
    """
    if not candidates:
        raise ConfigError("no candidate hyperparameters")
    if len(candidates) == 1:
        return TuningResult(candidates[0], ((candidates[0].k, None, "single candidate"),))
    rows = []
    scored = []
    for hp in candidates:
        try:
            value = float(score(fit(hp)))
        except DivergenceError as exc:
            rows.append((hp.k, None, f"diverged: {exc}"))
            continue
        rows.append((hp.k, value, "ok"))
        scored.append((value, hp.k, hp))
    if not scored:
        raise ConfigError("all candidates diverged: " + "; ".join(f"k={k}: {m}" for k, _, m in rows))
    best = min(scored, key=lambda s: (s[0], s[1]))[2]
    return TuningResult(best, tuple(rows))
