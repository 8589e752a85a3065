"""Direct solves, preconditioned fixed-point iteration, and GMRES.

The iterative solvers exist to exercise convergence envelopes: when the
contraction factor c = ||I - A2^{-1} A1||_D is below one,

    fixed point   ||x - x^n||_D  <=  c^n ||x - x^0||_D,
    GMRES in D    ||r^n||_D      <=  c^n ||r^0||_D,

where the GMRES bound follows from the minimal-residual property with
the polynomial (1-z)^n. The classical Elman-type envelope
(2 sqrt(c) / (1+c)^2)^n is also reported for comparison; for c < 1 it
is the weaker of the two.

GMRES is full (non-restarted), with modified Gram-Schmidt
orthogonalization in a caller-chosen inner product: Euclidean, or
<u, v> = v* D u supplied through a Gram factor. Residual norms come
from the Givens recurrence, hence are non-increasing by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, SingularSystemError
from .numerics import GramFactor

_BREAKDOWN = 1e-14


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Per-iteration norms of one solver run.

    ``norms[j]`` is the error norm (fixed point) or residual norm
    (GMRES) after j iterations; envelopes are attached with
    :meth:`with_envelopes` once a contraction factor is known.
    """

    kind: str
    norms: np.ndarray
    converged: bool
    final_relative: float
    inner: str = "euclid"
    solution: Optional[np.ndarray] = None
    c: Optional[float] = None
    envelope_c: Optional[np.ndarray] = None
    envelope_elman: Optional[np.ndarray] = None

    @property
    def iterations(self) -> int:
        return len(self.norms) - 1

    def with_envelopes(self, c: float) -> "IterationTrace":
        env_c, env_elman = envelopes(c, self.iterations)
        initial = float(self.norms[0])
        return replace(
            self, c=c, envelope_c=env_c * initial, envelope_elman=env_elman * initial
        )


def envelopes(c: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Envelope sequences (c^n) and ((2 sqrt(c)/(1+c)^2)^n) for n = 0..n_max.

    Both sequences start at 1; the second is the Elman-type GMRES rate.
    """
    if c < 0:
        raise InvalidArgumentError(f"contraction factor must be >= 0, got {c}")
    n = np.arange(n_max + 1)
    env_c = np.where(n == 0, 1.0, float(c) ** n)
    elman_rate = 2.0 * math.sqrt(c) / (1.0 + c) ** 2
    env_elman = np.where(n == 0, 1.0, elman_rate ** n)
    return env_c, env_elman


def _solve_lu(A, b: np.ndarray):
    try:
        return spla.splu(sp.csc_matrix(A, dtype=complex)).solve(b)
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            raise SingularSystemError("matrix is exactly singular") from exc
        raise


def direct_solve(A, b: np.ndarray) -> np.ndarray:
    """LU-based reference solve with a backward-error check."""
    b = np.asarray(b, dtype=complex)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise InvalidArgumentError(f"shape mismatch: A {A.shape}, b {b.shape}")
    x = _solve_lu(A, b)
    norm_a1 = abs(A).sum(axis=0).max() if sp.issparse(A) else np.abs(A).sum(0).max()
    resid = np.linalg.norm(A @ x - b)
    bound = 1e-10 * (float(norm_a1) * np.linalg.norm(x) + np.linalg.norm(b))
    if resid > bound:
        raise SingularSystemError(
            f"solve residual {resid:.3e} exceeds stability bound {bound:.3e}"
        )
    return x


def fixed_point(
    sys1,
    sys2,
    b: np.ndarray,
    x0: np.ndarray,
    max_it: int = 200,
    tol: float = 1e-10,
    gram: Optional[GramFactor] = None,
) -> IterationTrace:
    """Preconditioned fixed-point iteration x <- x + A2^{-1} (b - A1 x).

    Error norms are measured in the D norm against a direct reference
    solve of A1 x = b, so the trace matches the contraction estimate
    exactly. Stops at relative error ``tol`` or after ``max_it`` steps.
    """
    from .numerics import gram_factor

    A1, A2, D = sys1.A, sys2.A, sys1.D
    if gram is None:
        gram = gram_factor(D)
    x_ref = direct_solve(A1, b)
    try:
        lu2 = spla.splu(sp.csc_matrix(A2, dtype=complex))
    except RuntimeError as exc:
        raise SingularSystemError("preconditioner matrix is singular") from exc
    x = np.asarray(x0, dtype=complex).copy()
    err0 = gram.norm(x_ref - x)
    norms = [err0]
    converged = err0 == 0.0
    for _ in range(max_it):
        if converged:
            break
        x = x + lu2.solve(b - A1 @ x)
        err = gram.norm(x_ref - x)
        norms.append(err)
        if err <= tol * err0:
            converged = True
    final_rel = norms[-1] / err0 if err0 > 0 else 0.0
    return IterationTrace(
        kind="fixed_point",
        norms=np.array(norms),
        converged=converged,
        final_relative=final_rel,
        inner="D",
        solution=x,
    )


def gmres(
    apply_op: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    inner: Optional[GramFactor] = None,
    max_it: int = 200,
    tol: float = 1e-10,
) -> IterationTrace:
    """Full GMRES from a zero start in the chosen inner product.

    ``inner=None`` means Euclidean; a Gram factor selects <u, v> = v* D u.
    Happy breakdown returns a converged trace; hitting the iteration cap
    returns a non-converged trace rather than raising.
    """
    b = np.asarray(b, dtype=complex)
    n = b.shape[0]
    if inner is not None and inner.n != n:
        raise InvalidArgumentError("inner-product dimension does not match b")

    if inner is None:
        ip = lambda u, v: complex(np.vdot(u, v))
    else:
        ip = lambda u, v: complex(np.vdot(u, inner.D @ v))

    def ip_norm(u):
        return math.sqrt(max(ip(u, u).real, 0.0))

    r0 = b  # zero initial guess
    beta = ip_norm(r0)
    if beta == 0.0:
        return IterationTrace(
            kind="gmres",
            norms=np.array([0.0]),
            converged=True,
            final_relative=0.0,
            inner="euclid" if inner is None else "D",
            solution=np.zeros(n, dtype=complex),
        )

    max_it = min(max_it, n)
    V = np.zeros((n, max_it + 1), dtype=complex)
    H = np.zeros((max_it + 1, max_it), dtype=complex)
    cs = np.zeros(max_it, dtype=complex)
    sn = np.zeros(max_it, dtype=complex)
    g = np.zeros(max_it + 1, dtype=complex)
    V[:, 0] = r0 / beta
    g[0] = beta
    res_norms = [beta]
    converged = False
    j_done = 0

    for j in range(max_it):
        w = apply_op(V[:, j])
        for i in range(j + 1):  # modified Gram-Schmidt in the chosen inner product
            H[i, j] = ip(V[:, i], w)
            w = w - H[i, j] * V[:, i]
        hnext = ip_norm(w)
        H[j + 1, j] = hnext
        breakdown = hnext <= _BREAKDOWN * abs(H[: j + 2, j]).max()
        if not breakdown:
            V[:, j + 1] = w / hnext

        # apply stored Givens rotations, then a new one to kill H[j+1, j]
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + np.conj(cs[i]) * H[i + 1, j]
            H[i, j] = t
        denom = math.hypot(abs(H[j, j]), abs(H[j + 1, j]))
        if denom == 0.0:
            cs[j], sn[j] = 1.0, 0.0
        else:
            cs[j] = np.conj(H[j, j]) / denom
            sn[j] = np.conj(H[j + 1, j]) / denom
        H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]

        res_norms.append(abs(g[j + 1]))
        j_done = j + 1
        if res_norms[-1] <= tol * beta or breakdown:
            converged = True
            break

    y = np.linalg.solve(H[:j_done, :j_done], g[:j_done]) if j_done else np.array([])
    x = V[:, :j_done] @ y if j_done else np.zeros(n, dtype=complex)
    return IterationTrace(
        kind="gmres",
        norms=np.array(res_norms),
        converged=converged,
        final_relative=res_norms[-1] / beta,
        inner="euclid" if inner is None else "D",
        solution=x,
    )
