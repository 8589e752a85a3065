"""Shared fixtures: canonical test problems and dense oracles.

The oracle helpers use dense scipy.linalg factorizations only, so they
stay independent of the package's sparse/iterative code paths.
"""

import numpy as np
import pytest
import scipy.linalg as sla

from helmprec import (
    ProblemSpec,
    Role,
    assemble_system,
    build_interval_mesh,
    build_rect_mesh,
    constant_field,
)
from helmprec.mesh import BoundaryTag

IMP = BoundaryTag.IMPEDANCE
DIR = BoundaryTag.DIRICHLET
NEU = BoundaryTag.NEUMANN


def canonical_spec_1d(k, n, left=IMP, right=IMP, theta=1.0, a=0.0, b=1.0):
    mesh = build_interval_mesh(a, b, n, left, right)
    return ProblemSpec(
        k, mesh, constant_field(mesh, 1.0, Role.MU_INV),
        constant_field(mesh, 1.0, Role.EPS), theta,
    )


def canonical_1d(k, n, **kw):
    return assemble_system(canonical_spec_1d(k, n, **kw))


def canonical_spec_2d(k, nx, ny, tags=IMP, theta=1.0):
    mesh = build_rect_mesh(1.0, 1.0, nx, ny, tags)
    return ProblemSpec(
        k, mesh, constant_field(mesh, 1.0, Role.MU_INV),
        constant_field(mesh, 1.0, Role.EPS), theta,
    )


def canonical_2d(k, nx, ny, **kw):
    return assemble_system(canonical_spec_2d(k, nx, ny, **kw))


# -- dense oracles -------------------------------------------------------------

def dense_chol(D):
    return sla.cholesky(np.asarray(D.toarray() if hasattr(D, "toarray") else D),
                        lower=True)


def oracle_weighted_norm(C, D, mode):
    """sigma_max of the conjugated matrix via dense Cholesky + SVD."""
    C = np.asarray(C.toarray() if hasattr(C, "toarray") else C)
    if mode == "euclid":
        return sla.svdvals(C)[0]
    L = dense_chol(D)
    if mode == "D":
        T = L.conj().T @ C @ sla.inv(L).conj().T
    else:
        T = sla.inv(L) @ C @ L
    return sla.svdvals(T)[0]


def oracle_infsup(A, D):
    """sigma_min of L^{-1} A L^{-*} via dense SVD."""
    A = np.asarray(A.toarray() if hasattr(A, "toarray") else A)
    L = dense_chol(D)
    T = sla.solve_triangular(L, A, lower=True) @ sla.inv(L).conj().T
    return sla.svdvals(T)[-1]


def oracle_solution_norms(A, D, M):
    A = np.asarray(A.toarray() if hasattr(A, "toarray") else A)
    L, R = dense_chol(D), dense_chol(M)
    Ainv = sla.inv(A)
    return (
        sla.svdvals(L.conj().T @ Ainv @ L)[0],
        sla.svdvals(L.conj().T @ Ainv @ R)[0],
        sla.svdvals(R.conj().T @ Ainv @ R)[0],
    )


def random_spd(rng, n, shift=None):
    Q = rng.standard_normal((n, n))
    return Q @ Q.T + (n if shift is None else shift) * np.eye(n)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
