import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govdisc.errors import BigMViolation, ConfigError, DivergenceError, NumericalError
from govdisc.featlib import DesignMatrix, build_library, evaluate_library, normalize_columns
from govdisc.simulate import IntegratorConfig, integrate_polynomial
from govdisc.smoothdiff import differentiate
from govdisc.sparsereg import (
    HyperParams,
    SparseModel,
    branch_and_bound,
    discover,
    enumerate_supports,
    refit_least_squares,
    solve_support,
    tune_k,
)


def _problem(X, y):
    lib = build_library(tuple(f"x{i}" for i in range(X.shape[1] - 1)), 1)
    return DesignMatrix(X, lib), normalize_columns(X, y)


def _random_matrix(rng, n=60, p=6):
    X = rng.normal(size=(n, p))
    X[:, 0] = 1.0
    return X


def test_exact_single_column(rng):
    X = _random_matrix(rng)
    _, prob = _problem(X, 2 * X[:, 3])
    res = solve_support(prob, HyperParams(k=1, lambda2=0.0))
    assert res.indices == (3,)


def test_k_equals_p_selects_everything(rng):
    X = _random_matrix(rng)
    _, prob = _problem(X, rng.normal(size=60))
    assert solve_support(prob, HyperParams(k=6, lambda2=100.0)).gamma.all()


@pytest.mark.parametrize("method", ["exhaustive", "bnb"])
def test_duplicate_columns_tie_goes_to_lower_index(rng, method):
    X = _random_matrix(rng)
    X[:, 5] = X[:, 2]
    _, prob = _problem(X, 3 * X[:, 2])
    for lam in (0.0, 100.0):
        assert solve_support(prob, HyperParams(k=1, lambda2=lam), method=method).indices == (2,)


def test_infeasible_k(rng):
    X = _random_matrix(rng, p=3)
    _, prob = _problem(X, rng.normal(size=60))
    with pytest.raises(ConfigError):
        solve_support(prob, HyperParams(k=4))


def test_excluded_columns_never_selected(rng):
    X = _random_matrix(rng)
    X[:, 4] = 0.0
    _, prob = _problem(X, rng.normal(size=60))
    for method in ("exhaustive", "bnb"):
        res = solve_support(prob, HyperParams(k=5, lambda2=0.0), method=method)
        assert not res.gamma[4] and res.gamma.sum() == 5


def test_refit_exact_scaling(rng):
    X = _random_matrix(rng)
    xi = refit_least_squares(X, 2 * X[:, 1], np.array([0, 1, 0, 0, 0, 0], dtype=bool))
    assert xi[1] == pytest.approx(2.0, rel=1e-12)
    assert np.count_nonzero(xi) == 1


def test_refit_identical_columns_is_numerical_error(rng):
    X = _random_matrix(rng)
    X[:, 3] = X[:, 2]
    with pytest.raises(NumericalError, match="condition"):
        refit_least_squares(X, X[:, 2], np.array([0, 0, 1, 1, 0, 0], dtype=bool))


def test_refit_inverts_cooling_generation():
    # fine grid so the central difference is accurate to well below 1e-6
    t = np.arange(0.0, 150.0, 0.02)
    C = np.tile([0.3282, -0.0135, -6.0601e-6], (len(t) - 1, 1))
    T = integrate_polynomial(C, 340.0, t, IntegratorConfig(substeps=10)).values
    d = differentiate(T, t)
    lib = build_library(("T_tool",), 4)
    dm = evaluate_library(lib, {"T_tool": T[d.valid]})
    gamma = np.array([1, 1, 1, 0, 0], dtype=bool)
    xi = refit_least_squares(dm, d.values[d.valid], gamma)
    np.testing.assert_allclose(xi[:3], [0.3282, -0.0135, -6.0601e-6], rtol=1e-6)


def test_pure_noise_k1_returns_feasible_support(rng):
    X = _random_matrix(rng)
    lib = build_library(tuple(f"x{i}" for i in range(5)), 1)
    m = discover(DesignMatrix(X, lib), rng.normal(size=60), HyperParams(k=1))
    assert m.k == 1 and m.diagnostics.stage2_residual_norm > 0


def test_big_m_violation(rng):
    X = _random_matrix(rng)
    lib = build_library(tuple(f"x{i}" for i in range(5)), 1)
    with pytest.raises(BigMViolation):
        discover(DesignMatrix(X, lib), 5000 * X[:, 1], HyperParams(k=1, lambda2=0.0))


def test_lambda_zero_full_support_is_ols(rng):
    X = _random_matrix(rng)
    y = rng.normal(size=60)
    _, prob = _problem(X, y)
    res = solve_support(prob, HyperParams(k=6, lambda2=0.0))
    coef = np.linalg.lstsq(prob.matrix, prob.target, rcond=None)[0]
    resid = np.sum((prob.target - prob.matrix @ coef) ** 2)
    assert res.objective == pytest.approx(resid, rel=1e-9, abs=1e-12)


def test_workers_do_not_change_result(rng):
    X = rng.normal(size=(80, 14))
    y = X[:, 2] - 0.5 * X[:, 9] + 0.1 * rng.normal(size=80)
    _, prob = _problem(X, y)
    hp = HyperParams(k=3, lambda2=1.0)
    a = enumerate_supports(prob, hp, workers=1)
    import govdisc.sparsereg as sr

    old = sr._BATCH
    sr._BATCH = 17
    try:
        b = enumerate_supports(prob, hp, workers=4)
    finally:
        sr._BATCH = old
    assert a.indices == b.indices and a.objective == b.objective


def test_sparse_model_equality_and_state_polynomial():
    lib = build_library(("T", "u"), 2)
    m = SparseModel.from_terms(lib, "T", [({"T": 2}, -1.0), ({"T": 1, "u": 1}, 2.0), ({"u": 2}, 3.0)])
    assert m == SparseModel.from_terms(lib, "T", [({"T": 2}, -1.0), ({"T": 1, "u": 1}, 2.0), ({"u": 2}, 3.0)])
    C = m.state_polynomial({"u": np.array([1.0, 2.0])})
    np.testing.assert_allclose(C, [[3, 2, -1], [12, 4, -1]])
    rows = {"T": np.array([0.5, 1.5]), "u": np.array([1.0, 2.0])}
    np.testing.assert_allclose(m.evaluate(rows), [C[i] @ [1, rows["T"][i], rows["T"][i] ** 2] for i in range(2)])


def test_tune_k_selects_lowest_and_breaks_ties_small():
    cands = [HyperParams(k=k) for k in (3, 4, 5)]
    scores = {3: 2.0, 4: 1.0, 5: 1.0}
    res = tune_k(cands, lambda hp: hp.k, lambda k: scores[k])
    assert res.best.k == 4 and len(res.table) == 3


def test_tune_k_single_and_all_diverged():
    hp = HyperParams(k=4)
    assert tune_k([hp], None, None).best is hp

    def boom(k):
        raise DivergenceError(f"t={k * 10}")

    with pytest.raises(ConfigError, match="t=30"):
        tune_k([HyperParams(k=k) for k in (3, 4)], lambda hp: hp.k, boom)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 4), st.sampled_from([0.0, 100.0]))
def test_branch_and_bound_matches_enumeration(seed, P, k, lam):
    k = min(k, P)
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(200, P))
    beta = np.zeros(P)
    beta[rng.choice(P, size=k, replace=False)] = rng.normal(size=k)
    y = X @ beta + 0.5 * rng.normal(size=200)
    prob = normalize_columns(X, y)
    hp = HyperParams(k=k, lambda2=lam)
    a = enumerate_supports(prob, hp)
    b = branch_and_bound(prob, hp)
    assert a.indices == b.indices
    assert b.objective == pytest.approx(a.objective, rel=1e-10, abs=1e-14)
    assert b.gamma.sum() == k


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 1.0, 100.0]))
def test_objective_non_increasing_in_k(seed, lam):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 7))
    prob = normalize_columns(X, rng.normal(size=50))
    objs = [solve_support(prob, HyperParams(k=k, lambda2=lam)).objective for k in range(1, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
