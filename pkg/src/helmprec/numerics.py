"""Weighted matrix norms, inf-sup constants, and mass-matrix extremes.

Everything here reduces a functional-analytic quantity to a singular
value of a conjugated matrix. With D = L L* the Gram (energy-norm)
matrix and M = R R* the mass matrix:

    ||C||_D            = sigma_max(L* C L^{-*})     operator norm in the D norm
    ||C||_{D^{-1}}     = sigma_max(L^{-1} C L)
    gamma_dis          = sigma_min(L^{-1} A L^{-*}) discrete inf-sup constant
    C_dis = 1/gamma    = ||L* A^{-1} L||_2          discrete solution-operator norm
    ||A^{-1}||_{0->H}  = ||L* A^{-1} R||_2
    ||A^{-1}||_{0->0}  = ||R* A^{-1} R||_2

Each sigma_max is the top eigenvalue of a Hermitian pencil (X, B) with
X PSD and B PD, computed by Krylov iteration on B^{-1} X. That map is
self-adjoint in the B inner product, so the Ritz value comes with a
computable residual bound: |lambda - lambda_exact| <= ||B^{-1}X v -
lambda v||_B for a B-normalized iterate v. Iterations stop on that
bound (relative tolerance 1e-10 by default) and are capped; hitting the
cap raises, carrying the last estimate. Start vectors are seeded, so
all reported numbers are reproducible.

Conjugations never form L^{-1} explicitly: matrix inverses are applied
through sparse LU factorizations, and the pencil formulation needs only
products and solves with D, M, and A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    InvalidArgumentError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    SingularSystemError,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAXIT = 50_000
DEFAULT_SEED = 0

_MODES = ("D", "D_inv", "euclid")


def _as_csc(X) -> sp.csc_matrix:
    if sp.issparse(X):
        return X.tocsc()
    return sp.csc_matrix(np.asarray(X))


@dataclass(frozen=True, eq=False)
class GramFactor:
    """Cholesky-type factorization D = L L^T of a real SPD matrix.

    Holds the sparse lower factor plus a reusable solver for D itself;
    ``norm`` evaluates the induced vector norm sqrt(v* D v).
    """

    L: sp.csc_matrix
    n: int
    D: sp.csc_matrix
    _lu: spla.SuperLU

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.D @ x

    def solve(self, b: np.ndarray) -> np.ndarray:
        # the factorization is real; split complex right-hand sides
        b = np.asarray(b)
        if np.iscomplexobj(b):
            return self._lu.solve(b.real) + 1j * self._lu.solve(b.imag)
        return self._lu.solve(b)

    def inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        return complex(np.vdot(x, self.D @ y))

    def norm(self, x: np.ndarray) -> float:
        return math.sqrt(max(self.inner(x, x).real, 0.0))


def gram_factor(D) -> GramFactor:
    """Factor a real symmetric positive definite matrix as L L^T.

    Uses a no-pivot sparse LU in symmetric mode; for SPD input this is
    exactly the Cholesky factorization (L scaled by sqrt of the pivot).
    Non-SPD input surfaces as a non-positive pivot.
    """
    Dc = _as_csc(D)
    if Dc.shape[0] != Dc.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got {Dc.shape}")
    if np.iscomplexobj(Dc):
        if Dc.nnz and abs(Dc.imag).max() > 0:
            raise InvalidArgumentError("gram_factor needs a real matrix")
        Dc = Dc.real.tocsc()
        Dc.data = np.ascontiguousarray(Dc.data)  # .real is a strided view
    scale = abs(Dc).max() if Dc.nnz else 0.0
    asym = abs(Dc - Dc.T)
    if Dc.nnz and asym.nnz and asym.max() > 1e-12 * scale:
        raise InvalidArgumentError("gram_factor needs a symmetric matrix")
    try:
        lu = spla.splu(
            Dc,
            permc_spec="NATURAL",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise NotPositiveDefiniteError(f"factorization failed: {exc}") from exc
    piv = lu.U.diagonal().real
    if not np.all(piv > 0) or not np.all(np.isfinite(piv)):
        raise NotPositiveDefiniteError(
            f"non-positive pivot encountered (min {piv.min():g})"
        )
    L = (lu.L.real @ sp.diags(np.sqrt(piv))).tocsc()
    resid = abs(L @ L.T - Dc)
    if resid.nnz and resid.max() > 1e-12 * max(scale, 1e-300):
        raise NotPositiveDefiniteError("factor residual too large; matrix not SPD")
    return GramFactor(L=L, n=Dc.shape[0], D=Dc, _lu=lu)


@dataclass(frozen=True)
class MassExtremes:
    """Extreme eigenvalues m_-^2 <= m_+^2 of the mass matrix.

    m_+/m_- is the norm-equivalence constant between the Euclidean norm
    of a coefficient vector and the L2 norm of its function; its square
    is the condition number of M.
    """

    m_minus_sq: float
    m_plus_sq: float

    @property
    def m_minus(self) -> float:
        return math.sqrt(self.m_minus_sq)

    @property
    def m_plus(self) -> float:
        return math.sqrt(self.m_plus_sq)

    @property
    def ratio(self) -> float:
        return self.m_plus / self.m_minus


@dataclass(frozen=True)
class InfSupReport:
    """Discrete inf-sup constant gamma_dis and its reciprocal C_dis."""

    gamma: float
    c_dis: float
    iterations: int
    residual: float
    singular: bool = False


@dataclass(frozen=True)
class SolutionOperatorNorms:
    """The three discrete solution-operator norms (dual->H, L2->H, L2->L2)."""

    hstar_to_h: float
    h0_to_h: float
    h0_to_h0: float


_DENSE_PENCIL_N = 8


def _pencil_lambda_max(
    apply_x: Callable[[np.ndarray], np.ndarray],
    apply_b: Callable[[np.ndarray], np.ndarray],
    solve_b: Callable[[np.ndarray], np.ndarray],
    n: int,
    tol: float,
    max_it: int,
    seed: int,
) -> tuple[float, int, float]:
    """Top eigenvalue of the Hermitian pencil X v = lambda B v (X PSD, B PD).

    Krylov iteration on B^{-1} X in the B inner product (ARPACK Lanczos
    with a seeded start vector); plain power iteration cannot be used
    here because the extreme eigenvalues of finite-element mass and
    Gram matrices cluster, which stalls single-vector iterations.
    Returns (lambda, operator applications, final residual in the B
    norm); hitting the cap raises, carrying the last estimate.
    """
    if n <= _DENSE_PENCIL_N:
        eye = np.eye(n, dtype=complex)
        X = np.column_stack([apply_x(eye[:, j]) for j in range(n)])
        B = np.column_stack([apply_b(eye[:, j]) for j in range(n)])
        import scipy.linalg as sla

        vals = sla.eigh(
            0.5 * (X + X.conj().T), 0.5 * (B + B.conj().T), eigvals_only=True
        )
        return max(float(vals[-1]), 0.0), n, 0.0

    counter = {"n": 0}

    def counted_x(v):
        counter["n"] += 1
        return apply_x(v)

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if not np.any(apply_x(v0)):
        # X annihilates a random probe: the (PSD) pencil top is zero.
        return 0.0, 1, 0.0
    ncv = min(n, 20)
    x_op = spla.LinearOperator((n, n), matvec=counted_x, dtype=complex)
    b_op = spla.LinearOperator((n, n), matvec=apply_b, dtype=complex)
    binv_op = spla.LinearOperator((n, n), matvec=solve_b, dtype=complex)
    try:
        vals, vecs = spla.eigsh(
            x_op,
            k=1,
            M=b_op,
            Minv=binv_op,
            which="LA",
            v0=v0,
            ncv=ncv,
            tol=tol,
            maxiter=max(100, max_it // ncv),
        )
    except spla.ArpackNoConvergence as exc:
        est = float(exc.eigenvalues[-1]) if len(exc.eigenvalues) else None
        raise NoConvergenceError(
            f"eigensolver did not reach tolerance {tol:g} within the "
            f"iteration cap ({counter['n']} operator applications)",
            estimate=math.sqrt(est) if est and est > 0 else est,
            iterations=counter["n"],
        ) from exc
    lam = max(float(vals[0]), 0.0)
    v = vecs[:, 0]
    bv = apply_b(v)
    nb = math.sqrt(max(np.vdot(v, bv).real, 0.0))
    if nb > 0:
        v = v / nb
    r = solve_b(apply_x(v)) - lam * v
    res = math.sqrt(max(np.vdot(r, apply_b(r)).real, 0.0))
    return lam, counter["n"], res


def _operator_pair(op):
    """(matvec, adjoint matvec, n) for an ndarray/sparse/LinearOperator."""
    if isinstance(op, spla.LinearOperator):
        return op.matvec, op.rmatvec, op.shape[0]
    if sp.issparse(op):
        oph = op.getH().tocsr()
        opc = op.tocsr()
        return (lambda x: opc @ x), (lambda x: oph @ x), op.shape[0]
    arr = np.asarray(op)
    arrh = arr.conj().T
    return (lambda x: arr @ x), (lambda x: arrh @ x), arr.shape[0]


def weighted_operator_norm(
    op,
    gram: Optional[GramFactor],
    mode: str,
    tol: float = DEFAULT_TOL,
    max_it: int = DEFAULT_MAXIT,
    seed: int = DEFAULT_SEED,
) -> float:
    """Operator norm of ``op`` in the D norm, the D^{-1} norm, or Euclidean.

    ``op`` may be an ndarray, a sparse matrix, or a LinearOperator with
    ``matvec`` and ``rmatvec`` (the adjoint is required: the norm is a
    largest singular value, computed through the normal operator).
    ``mode`` selects 'D', 'D_inv', or 'euclid'; the Gram factor is
    ignored for 'euclid'.
    """
    if mode not in _MODES:
        raise InvalidArgumentError(f"mode must be one of {_MODES}, got {mode!r}")
    mv, rmv, n = _operator_pair(op)
    if mode == "euclid":
        apply_x = lambda v: rmv(mv(v))
        ident = lambda v: v
        lam, _, _ = _pencil_lambda_max(apply_x, ident, ident, n, tol, max_it, seed)
        return math.sqrt(lam)
    if gram is None:
        raise InvalidArgumentError(f"mode {mode!r} requires a Gram factor")
    if gram.n != n:
        raise InvalidArgumentError(f"operator dim {n} != Gram factor dim {gram.n}")
    if mode == "D":
        # sigma_max(L* C L^{-*})^2 = lambda_max(C* D C, D)
        apply_x = lambda v: rmv(gram.apply(mv(v)))
        lam, _, _ = _pencil_lambda_max(
            apply_x, gram.apply, gram.solve, n, tol, max_it, seed
        )
    else:
        # sigma_max(L^{-1} C L)^2 = lambda_max(C* D^{-1} C, D^{-1})
        apply_x = lambda v: rmv(gram.solve(mv(v)))
        lam, _, _ = _pencil_lambda_max(
            apply_x, gram.solve, gram.apply, n, tol, max_it, seed
        )
    return math.sqrt(lam)


def _lu_or_none(A) -> Optional[spla.SuperLU]:
    try:
        return spla.splu(_as_csc(A).astype(complex))
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            return None
        raise


def discrete_inf_sup(
    A,
    gram: GramFactor,
    tol: float = DEFAULT_TOL,
    max_it: int = DEFAULT_MAXIT,
    seed: int = DEFAULT_SEED,
) -> InfSupReport:
    """Discrete inf-sup constant sigma_min(L^{-1} A L^{-*}) of a system.

    Computed as the reciprocal of ||L* A^{-1} L||_2 through an LU
    factorization of A; an exactly singular A yields gamma = 0 (a
    legitimate outcome near discrete eigenvalues), not an exception.
    """
    n = A.shape[0]
    if A.shape != (n, n) or gram.n != n:
        raise InvalidArgumentError("A and Gram factor dimensions disagree")
    lu = _lu_or_none(A)
    if lu is None:
        return InfSupReport(
            gamma=0.0, c_dis=math.inf, iterations=0, residual=0.0, singular=True
        )
    # C_dis^2 = lambda_max(A^{-*} D A^{-1}, D^{-1})
    apply_x = lambda v: lu.solve(gram.apply(lu.solve(v)), trans="H")
    lam, it, res = _pencil_lambda_max(
        apply_x, gram.solve, gram.apply, n, tol, max_it, seed
    )
    c_dis = math.sqrt(lam)
    if c_dis == 0.0:
        return InfSupReport(
            gamma=0.0, c_dis=math.inf, iterations=it, residual=res, singular=True
        )
    return InfSupReport(gamma=1.0 / c_dis, c_dis=c_dis, iterations=it, residual=res)


def mass_extremes(
    M,
    tol: float = DEFAULT_TOL,
    max_it: int = DEFAULT_MAXIT,
    seed: int = DEFAULT_SEED,
) -> MassExtremes:
    """Extreme eigenvalues of a real SPD mass matrix by (inverse) power iteration."""
    g = gram_factor(M)  # also certifies SPD
    Mc = g.D
    ident = lambda v: v
    lam_max, _, _ = _pencil_lambda_max(
        lambda v: Mc @ v, ident, ident, g.n, tol, max_it, seed
    )
    inv_max, _, _ = _pencil_lambda_max(g.solve, ident, ident, g.n, tol, max_it, seed)
    if inv_max <= 0:
        raise NotPositiveDefiniteError("mass matrix has non-positive spectrum")
    return MassExtremes(m_minus_sq=1.0 / inv_max, m_plus_sq=lam_max)


def solution_operator_norms(
    A,
    gram_d: GramFactor,
    gram_m: GramFactor,
    tol: float = DEFAULT_TOL,
    max_it: int = DEFAULT_MAXIT,
    seed: int = DEFAULT_SEED,
) -> SolutionOperatorNorms:
    """The three discrete solution-operator norms of A^{-1}.

    ||L* A^{-1} L||_2, ||L* A^{-1} R||_2 and ||R* A^{-1} R||_2 for
    D = L L^T and M = R R^T. Raises on singular A.
    """
    n = A.shape[0]
    if gram_d.n != n or gram_m.n != n:
        raise InvalidArgumentError("Gram factor dimensions disagree with A")
    lu = _lu_or_none(A)
    if lu is None:
        raise SingularSystemError("matrix is exactly singular")

    def z_apply(metric_mid):
        return lambda v: lu.solve(metric_mid(lu.solve(v)), trans="H")

    # ||L* A^{-1} L||^2 = lambda_max(A^{-*} D A^{-1}, D^{-1})
    lam_hstar, _, _ = _pencil_lambda_max(
        z_apply(gram_d.apply), gram_d.solve, gram_d.apply, n, tol, max_it, seed
    )
    # ||L* A^{-1} R||^2 = lambda_max(A^{-*} D A^{-1}, M^{-1})
    lam_h0h, _, _ = _pencil_lambda_max(
        z_apply(gram_d.apply), gram_m.solve, gram_m.apply, n, tol, max_it, seed
    )
    # ||R* A^{-1} R||^2 = lambda_max(A^{-*} M A^{-1}, M^{-1})
    lam_h0h0, _, _ = _pencil_lambda_max(
        z_apply(gram_m.apply), gram_m.solve, gram_m.apply, n, tol, max_it, seed
    )
    return SolutionOperatorNorms(
        hstar_to_h=math.sqrt(lam_hstar),
        h0_to_h=math.sqrt(lam_h0h),
        h0_to_h0=math.sqrt(lam_h0h0),
    )
