import numpy as np
import pytest
import scipy.sparse as sp

from conftest import (
    canonical_1d,
    oracle_infsup,
    oracle_solution_norms,
    oracle_weighted_norm,
    random_spd,
)

from helmprec.errors import (
    InvalidArgumentError,
    NotPositiveDefiniteError,
    SingularSystemError,
)
from helmprec.numerics import (
    discrete_inf_sup,
    gram_factor,
    mass_extremes,
    solution_operator_norms,
    weighted_operator_norm,
)


def test_gram_factor_trivials():
    g = gram_factor(np.eye(3))
    assert np.allclose(g.L.toarray(), np.eye(3))
    g2 = gram_factor(np.array([[4.0]]))
    assert g2.L.toarray()[0, 0] == pytest.approx(2.0, rel=1e-15)


def test_gram_factor_reproduces_single_element_d():
    D = canonical_1d(1.0, 1).D
    g = gram_factor(D)
    assert abs(g.L @ g.L.T - D).max() <= 1e-14 * abs(D).max()


def test_gram_factor_is_lower_triangular_positive_diagonal():
    D = canonical_1d(6.0, 25).D
    g = gram_factor(D)
    L = g.L.toarray()
    assert np.all(np.triu(L, k=1) == 0.0)
    assert np.all(np.diag(L) > 0)
    assert np.abs(L @ L.T - D.toarray()).max() <= 1e-12 * np.abs(D.toarray()).max()


def test_gram_factor_rejects_bad_input():
    with pytest.raises(NotPositiveDefiniteError):
        gram_factor(np.diag([1.0, -2.0]))
    with pytest.raises(InvalidArgumentError):
        gram_factor(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidArgumentError):
        gram_factor(np.array([[1.0 + 1j, 0], [0, 1.0]]))


def test_weighted_norm_identity_and_scaling(rng):
    D = random_spd(rng, 12)
    g = gram_factor(D)
    for mode in ("D", "D_inv", "euclid"):
        assert weighted_operator_norm(np.eye(12), g, mode) == pytest.approx(
            1.0, rel=1e-10
        )
        assert weighted_operator_norm(2 * np.eye(12), g, mode) == pytest.approx(
            2.0, rel=1e-10
        )


def test_weighted_norm_matches_dense_svd(rng):
    for n in (20, 45):
        C = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        D = random_spd(rng, n)
        g = gram_factor(D)
        for mode in ("D", "D_inv", "euclid"):
            est = weighted_operator_norm(C, g, mode)
            ora = oracle_weighted_norm(C, D, mode)
            assert est == pytest.approx(ora, rel=1e-8)


def test_weighted_norm_mode_validation(rng):
    g = gram_factor(random_spd(rng, 5))
    with pytest.raises(InvalidArgumentError):
        weighted_operator_norm(np.eye(5), g, "frobenius")
    with pytest.raises(InvalidArgumentError):
        weighted_operator_norm(np.eye(5), None, "D")
    with pytest.raises(InvalidArgumentError):
        weighted_operator_norm(np.eye(4), g, "D")
    # euclid ignores the factor entirely
    assert weighted_operator_norm(3 * np.eye(7), None, "euclid") == pytest.approx(3.0)


def test_discrete_inf_sup_trivials():
    s = canonical_1d(5.0, 30)
    g = gram_factor(s.D)
    rep = discrete_inf_sup(s.D.astype(complex), g)
    assert rep.gamma == pytest.approx(1.0, rel=1e-10)
    rep2 = discrete_inf_sup((2 * s.D).astype(complex), g)
    assert rep2.gamma == pytest.approx(2.0, rel=1e-10)
    assert rep2.gamma * rep2.c_dis == pytest.approx(1.0, rel=1e-12)


def test_discrete_inf_sup_vs_dense_oracle():
    s = canonical_1d(1.0, 1)
    g = gram_factor(s.D)
    rep = discrete_inf_sup(s.A, g)
    assert rep.gamma == pytest.approx(oracle_infsup(s.A, s.D), rel=1e-10)
    s2 = canonical_1d(8.0, 60)
    rep2 = discrete_inf_sup(s2.A, gram_factor(s2.D))
    assert rep2.gamma == pytest.approx(oracle_infsup(s2.A, s2.D), rel=1e-8)


def test_discrete_inf_sup_singular_is_report_not_exception():
    s = canonical_1d(5.0, 20)
    bad = s.A.tolil()
    bad[3, :] = 0
    rep = discrete_inf_sup(bad.tocsr(), gram_factor(s.D))
    assert rep.singular
    assert rep.gamma == 0.0
    assert rep.c_dis == np.inf


def test_mass_extremes_identity_and_scaling():
    me = mass_extremes(sp.eye(10).tocsr())
    assert me.m_minus_sq == pytest.approx(1.0, rel=1e-12)
    assert me.m_plus_sq == pytest.approx(1.0, rel=1e-12)
    M = canonical_1d(1.0, 2).M
    me1 = mass_extremes(M)
    me2 = mass_extremes((2 * M).tocsr())
    assert me2.m_minus_sq == pytest.approx(2 * me1.m_minus_sq, rel=1e-10)
    assert me2.m_plus_sq == pytest.approx(2 * me1.m_plus_sq, rel=1e-10)
    assert me2.ratio == pytest.approx(me1.ratio, rel=1e-10)


def test_mass_extremes_two_element_closed_form():
    M = canonical_1d(1.0, 2).M  # (1/12) [[2,1,0],[1,4,1],[0,1,2]]
    expected = np.array([3 - np.sqrt(3), 2.0, 3 + np.sqrt(3)]) / 12
    me = mass_extremes(M)
    assert me.m_minus_sq == pytest.approx(expected[0], rel=1e-12)
    assert me.m_plus_sq == pytest.approx(expected[-1], rel=1e-12)
    assert me.ratio == pytest.approx(np.sqrt(expected[-1] / expected[0]), rel=1e-12)
    assert me.ratio == pytest.approx(1.932, abs=5e-4)


def test_mass_extremes_rejects_non_spd():
    with pytest.raises(NotPositiveDefiniteError):
        mass_extremes(np.diag([1.0, -1.0, 2.0]))


def test_solution_operator_norms_closed_forms():
    s = canonical_1d(5.0, 25)
    g = gram_factor(s.D)
    same = solution_operator_norms(s.D.astype(complex), g, g)
    for v in (same.hstar_to_h, same.h0_to_h, same.h0_to_h0):
        assert v == pytest.approx(1.0, rel=1e-10)
    quarter = gram_factor((s.D / 4).tocsr())
    scaled = solution_operator_norms(s.D.astype(complex), g, quarter)
    assert scaled.hstar_to_h == pytest.approx(1.0, rel=1e-10)
    assert scaled.h0_to_h == pytest.approx(0.5, rel=1e-10)
    assert scaled.h0_to_h0 == pytest.approx(0.25, rel=1e-10)


def test_solution_operator_norms_vs_dense():
    s = canonical_1d(5.0, 50)
    trio = solution_operator_norms(s.A, gram_factor(s.D), gram_factor(s.M))
    o1, o2, o3 = oracle_solution_norms(s.A, s.D, s.M)
    assert trio.hstar_to_h == pytest.approx(o1, rel=1e-8)
    assert trio.h0_to_h == pytest.approx(o2, rel=1e-8)
    assert trio.h0_to_h0 == pytest.approx(o3, rel=1e-8)


def test_solution_operator_norms_singular_raises():
    s = canonical_1d(5.0, 10)
    bad = s.A.tolil()
    bad[0, :] = 0
    with pytest.raises(SingularSystemError):
        solution_operator_norms(bad.tocsr(), gram_factor(s.D), gram_factor(s.M))


@pytest.mark.parametrize("k,n", [(5, 50), (20, 400)])
def test_norm_chains_and_route_agreement(k, n):
    s = canonical_1d(float(k), n)
    g, r = gram_factor(s.D), gram_factor(s.M)
    trio = solution_operator_norms(s.A, g, r)
    slack = 1e-10 * trio.hstar_to_h
    assert trio.h0_to_h <= trio.hstar_to_h + slack
    assert trio.hstar_to_h <= 1 + 2 * trio.h0_to_h + slack
    assert trio.h0_to_h0 <= trio.h0_to_h + slack
    assert trio.h0_to_h <= trio.h0_to_h0 * np.sqrt(2 + 1 / trio.h0_to_h0) + slack
    rep = discrete_inf_sup(s.A, g)
    assert rep.c_dis == pytest.approx(trio.hstar_to_h, rel=1e-8)


def test_l2_embedding_contraction():
    # ||L^{-1} R||_2 <= 1 since D - M is positive semidefinite
    s = canonical_1d(7.0, 35)
    L = np.linalg.cholesky(s.D.toarray())
    R = np.linalg.cholesky(s.M.toarray())
    sv = np.linalg.svd(np.linalg.solve(L, R), compute_uv=False)
    assert sv[0] <= 1 + 1e-12


def test_linear_operator_input(rng):
    import scipy.sparse.linalg as spla

    n = 24
    C = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    op = spla.aslinearoperator(C)
    D = random_spd(rng, n)
    g = gram_factor(D)
    assert weighted_operator_norm(op, g, "D") == pytest.approx(
        oracle_weighted_norm(C, D, "D"), rel=1e-8
    )
