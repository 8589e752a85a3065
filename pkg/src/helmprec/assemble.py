"""Galerkin assembly for continuous piecewise-linear elements.

For a problem with wavenumber k, coefficients (mu^{-1}, eps), and
impedance weight theta, the assembled complex matrices are

    S      weighted stiffness,   S_ij = k^{-2} (mu^{-1} grad phi_j, grad phi_i),
    B      impedance boundary,   B_ij = -i k^{-1} (theta phi_j, phi_i)_boundary,
    M_eps  weighted mass,        (M_eps)_ij = (eps phi_j, phi_i),
    A      = S + B - M_eps,

together with the real SPD pair

    D = k^{-2} K + M   (K the unweighted stiffness, M the plain mass),

so that the squared energy norm ||k^{-1} grad v||^2 + ||v||^2 of a
finite-element function equals V* D V for its coefficient vector V.
All element integrals are closed-form (exact for affine elements and
piecewise-constant coefficients). Dirichlet dofs are eliminated by
symmetric row/column deletion, which keeps D and M SPD on the free set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .coeffs import CoefficientField, Role
from .errors import (
    DegenerateSystemError,
    InvalidArgumentError,
    InvalidSystemError,
    NotPositiveDefiniteError,
)
from .mesh import BoundaryTag, Mesh

_HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A concrete variational problem: k, mesh, coefficients, impedance weight.

    ``theta`` is a positive real, either one scalar for all impedance
    facets or one value per impedance facet (in mesh facet order).
    """

    k: float
    mesh: Mesh
    mu_inv: CoefficientField
    eps: CoefficientField
    theta: float | np.ndarray = 1.0

    def __post_init__(self):
        if self.k <= 0:
            raise InvalidArgumentError(f"wavenumber must be positive, got {self.k}")
        if self.mu_inv.role != Role.MU_INV or self.eps.role != Role.EPS:
            raise InvalidArgumentError("coefficient roles do not match their slots")
        if self.mu_inv.mesh is not self.mesh or self.eps.mesh is not self.mesh:
            raise InvalidArgumentError("coefficient fields built on a different mesh")
        n_imp = sum(1 for f in self.mesh.facets if f.tag == BoundaryTag.IMPEDANCE)
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.size == 1:
            theta = np.full(max(n_imp, 1), float(theta[0]))
        elif theta.size != n_imp:
            raise InvalidArgumentError(
                f"{theta.size} theta values for {n_imp} impedance facets"
            )
        if n_imp > 0 and not theta.min() > 0:
            raise InvalidArgumentError("theta must be positive on impedance facets")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def impedance_thetas(self) -> list[tuple[int, float]]:
        """(facet index, theta) pairs for all impedance facets."""
        out = []
        j = 0
        for i, f in enumerate(self.mesh.facets):
            if f.tag == BoundaryTag.IMPEDANCE:
                out.append((i, float(self.theta[j])))
                j += 1
        return out

    def with_eps(self, eps: CoefficientField) -> "ProblemSpec":
        return ProblemSpec(self.k, self.mesh, self.mu_inv, eps, self.theta)


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    """Assembled matrices of one problem, restricted to free dofs."""

    n: int
    S: sp.csr_matrix
    B: sp.csr_matrix
    M_eps: sp.csr_matrix
    A: sp.csr_matrix
    D: sp.csr_matrix
    M: sp.csr_matrix
    free_nodes: np.ndarray
    spec: ProblemSpec


@dataclass(frozen=True, eq=False)
class ExternalSystem:
    """A pair of systems supplied as matrices (e.g. from another code).

    Carries both Galerkin matrices of a nearby pair plus the shared
    norm matrices; coefficient-difference sup norms are optional
    metadata (they cannot be recovered from the matrices alone).
    """

    A1: sp.csr_matrix
    A2: sp.csr_matrix
    D: sp.csr_matrix
    M: sp.csr_matrix
    n: int
    dmu: Optional[float] = None
    deps: Optional[float] = None


def _free_nodes(mesh: Mesh) -> np.ndarray:
    dirichlet = set(mesh.nodes_with_tag(BoundaryTag.DIRICHLET).tolist())
    return np.array([i for i in range(mesh.n_nodes) if i not in dirichlet], dtype=int)


def _stiffness_entries(mesh: Mesh):
    """COO pattern (rows, cols, vals_per_element) of the unweighted stiffness.

    vals has shape (n_elements, nodes_per_el**2) so per-element weights
    can be broadcast in before summation.
    """
    elems = mesh.elements
    if mesh.dimension == 1:
        h = mesh.element_measures()
        local = np.array([1.0, -1.0, -1.0, 1.0])
        vals = local[None, :] / h[:, None]
        rows = elems[:, [0, 0, 1, 1]]
        cols = elems[:, [0, 1, 0, 1]]
        return rows.ravel(), cols.ravel(), vals
    pts = mesh.coords[elems]
    area = mesh.element_measures()
    # grad of barycentric i: ([y_{i+1}-y_{i+2}, x_{i+2}-x_{i+1}]) / (2 * signed area)
    x, y = pts[:, :, 0], pts[:, :, 1]
    sgn_area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    grads = np.empty((elems.shape[0], 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (y[:, j] - y[:, k]) / sgn_area2
        grads[:, i, 1] = (x[:, k] - x[:, j]) / sgn_area2
    vals = np.einsum("eia,eja->eij", grads, grads) * area[:, None, None]
    idx = np.arange(3)
    rows = elems[:, np.repeat(idx, 3)]
    cols = elems[:, np.tile(idx, 3)]
    return rows.ravel(), cols.ravel(), vals.reshape(len(elems), 9), grads


def _weighted_stiffness_vals(mesh: Mesh, mu: CoefficientField, grads, area):
    mu_m = mu.as_matrix() if mesh.dimension == 2 else None
    if mesh.dimension == 1:
        h = mesh.element_measures()
        local = np.array([1.0, -1.0, -1.0, 1.0])
        return (mu.values / h)[:, None] * local[None, :]
    vals = np.einsum("eia,eab,ejb->eij", grads, mu_m, grads) * area[:, None, None]
    return vals.reshape(mesh.n_elements, 9)


def _mass_entries(mesh: Mesh):
    elems = mesh.elements
    meas = mesh.element_measures()
    if mesh.dimension == 1:
        local = np.array([2.0, 1.0, 1.0, 2.0]) / 6.0
        rows = elems[:, [0, 0, 1, 1]]
        cols = elems[:, [0, 1, 0, 1]]
    else:
        local = np.array([2, 1, 1, 1, 2, 1, 1, 1, 2], dtype=float) / 12.0
        idx = np.arange(3)
        rows = elems[:, np.repeat(idx, 3)]
        cols = elems[:, np.tile(idx, 3)]
    vals = meas[:, None] * local[None, :]
    return rows.ravel(), cols.ravel(), vals


def _boundary_entries(spec: ProblemSpec):
    """COO entries of the theta-weighted boundary mass on impedance facets."""
    mesh = spec.mesh
    rows, cols, vals = [], [], []
    for fi, theta in spec.impedance_thetas():
        f = mesh.facets[fi]
        if mesh.dimension == 1:
            (j,) = f.nodes
            rows.append(j)
            cols.append(j)
            vals.append(theta)
        else:
            a, b = f.nodes
            length = float(np.linalg.norm(mesh.coords[b] - mesh.coords[a]))
            for (r, c, w) in (
                (a, a, 2.0),
                (a, b, 1.0),
                (b, a, 1.0),
                (b, b, 2.0),
            ):
                rows.append(r)
                cols.append(c)
                vals.append(theta * length * w / 6.0)
    return np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(vals)


def _tocsr(rows, cols, vals, n, dtype):
    return sp.coo_matrix(
        (np.asarray(vals, dtype=dtype).ravel(), (rows, cols)), shape=(n, n)
    ).tocsr()


def assemble_system(spec: ProblemSpec) -> GalerkinSystem:
    """Assemble all matrices of the problem and eliminate Dirichlet dofs."""
    mesh = spec.mesh
    nn = mesh.n_nodes
    k2 = spec.k ** -2

    if mesh.dimension == 1:
        rows_k, cols_k, kvals = _stiffness_entries(mesh)
        grads = None
    else:
        rows_k, cols_k, kvals, grads = _stiffness_entries(mesh)
    area = mesh.element_measures()
    rows_m, cols_m, mvals = _mass_entries(mesh)

    K = _tocsr(rows_k, cols_k, kvals, nn, float)
    M = _tocsr(rows_m, cols_m, mvals, nn, float)
    svals = k2 * _weighted_stiffness_vals(mesh, spec.mu_inv, grads, area)
    S = _tocsr(rows_k, cols_k, svals, nn, complex)
    M_eps = _tocsr(rows_m, cols_m, spec.eps.values[:, None] * mvals, nn, complex)

    rows_b, cols_b, bvals = _boundary_entries(spec)
    if rows_b.size:
        B = _tocsr(rows_b, cols_b, (-1j / spec.k) * bvals.astype(complex), nn, complex)
    else:
        B = sp.csr_matrix((nn, nn), dtype=complex)

    free = _free_nodes(mesh)
    if free.size == 0:
        raise DegenerateSystemError("all dofs eliminated by Dirichlet conditions")

    def cut(X):
        return X[free][:, free].tocsr()

    S, B, M_eps, M = cut(S), cut(B), cut(M_eps), cut(M)
    D = (k2 * cut(K) + M).tocsr()
    A = (S + B - M_eps).tocsr()
    return GalerkinSystem(
        n=free.size, S=S, B=B, M_eps=M_eps, A=A, D=D, M=M, free_nodes=free, spec=spec
    )


def assemble_load(spec: ProblemSpec, f) -> np.ndarray:
    """Load vector F_i = (f, phi_i) for per-element data f, on free dofs."""
    mesh = spec.mesh
    f = np.asarray(f, dtype=complex)
    if f.ndim == 0:
        f = np.full(mesh.n_elements, complex(f))
    if f.shape != (mesh.n_elements,):
        raise InvalidArgumentError(
            f"load needs one value per element ({mesh.n_elements}), got {f.shape}"
        )
    meas = mesh.element_measures()
    npe = mesh.dimension + 1
    contrib = (f * meas / npe)[:, None].repeat(npe, axis=1)
    F = np.zeros(mesh.n_nodes, dtype=complex)
    np.add.at(F, mesh.elements.ravel(), contrib.ravel())
    return F[_free_nodes(mesh)]


def _check_hermitian(X, name: str):
    diff = abs(X - X.getH())
    scale = abs(X).max() if X.nnz else 0.0
    if X.nnz and diff.max() > _HERMITIAN_RTOL * max(scale, 1e-300):
        raise InvalidSystemError(f"matrix {name} is not Hermitian")


def validate_external(system: ExternalSystem) -> ExternalSystem:
    """Check an imported pair: consistent dimensions, D and M Hermitian PD."""
    mats = {"A1": system.A1, "A2": system.A2, "D": system.D, "M": system.M}
    for name, X in mats.items():
        if X.shape[0] != X.shape[1]:
            raise InvalidSystemError(f"matrix {name} is not square: {X.shape}")
        if X.shape[0] != system.n:
            raise InvalidSystemError(
                f"matrix {name} has dimension {X.shape[0]}, expected {system.n}"
            )
    from .numerics import gram_factor

    for name in ("D", "M"):
        X = mats[name]
        _check_hermitian(X, name)
        if X.nnz and abs(X.imag).max() > _HERMITIAN_RTOL * abs(X).max():
            raise InvalidSystemError(f"matrix {name} must be real symmetric")
        try:
            gram_factor(X.real.tocsr())
        except NotPositiveDefiniteError as exc:
            raise InvalidSystemError(f"matrix {name} is not positive definite") from exc
    return system


def pair_as_external(
    sys1: GalerkinSystem,
    sys2: GalerkinSystem,
    dmu: Optional[float] = None,
    deps: Optional[float] = None,
) -> ExternalSystem:
    """Package two assembled systems on the same space as an external pair."""
    if sys1.n != sys2.n:
        raise InvalidArgumentError("systems have different dimensions")
    return ExternalSystem(
        A1=sys1.A, A2=sys2.A, D=sys1.D, M=sys1.M, n=sys1.n, dmu=dmu, deps=deps
    )
