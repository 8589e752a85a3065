"""Two-sided evaluation of the preconditioner-quality inequalities.

For a pair of systems (A1, A2) sharing the norm matrices D and M, the
central estimates are

    max{ ||I - A2^{-1} A1||_D, ||I - A1 A2^{-1}||_{D^{-1}} }
        <= (dmu + deps) * C_dis_2,                       (nearby bound)

    max{ ||I - A2^{-1} A1||_2, ||I - A1 A2^{-1}||_2 }
        <= (m+/m-) * deps * C_dis_2      when mu1 = mu2, (Euclidean bound)

where dmu, deps are the sup norms of the coefficient differences and
C_dis_2 is the discrete solution-operator norm (reciprocal inf-sup
constant) of the perturbed system. Under the smallness condition
(dmu + deps) * C_dis_1 <= 1/2 the perturbed constant obeys
C_dis_2 <= 2 C_dis_1, turning the right-hand sides into quantities of
the unperturbed problem only. Reports evaluate both sides of every
inequality with a multiplicative slack absorbing the norm-estimation
tolerance and carry pass/fail margins.

Note the smallness-condition checks use the measured discrete constant
C_dis_1 as a stand-in for its continuous counterpart; the refinement
ladder (:func:`infsup_ladder`) is the empirical instrument for that
identification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assemble import (
    ExternalSystem,
    GalerkinSystem,
    ProblemSpec,
    assemble_system,
)
from .coeffs import (
    AbsorptionSpec,
    absorption_shift,
    field_diff_sup_norm,
    resample_field,
)
from .errors import InvalidArgumentError, InvalidPairError, SingularSystemError
from .mesh import BoundaryTag, build_interval_mesh, build_rect_mesh
from .numerics import (
    discrete_inf_sup,
    gram_factor,
    mass_extremes,
    solution_operator_norms,
    weighted_operator_norm,
)

DEFAULT_SLACK = 1e-9
_IDENTITY_RTOL = 1e-12

AnySystem = Union[GalerkinSystem, ExternalSystem]


@dataclass(frozen=True)
class GardingConstants:
    """Constants (C_g1, C_g2) of the shifted-coercivity inequality.

    The theory needs both positive; C_g2 = 0 is admitted so that
    deliberately wrong constants can be fed to the sampling check.
    """

    c_g1: float
    c_g2: float

    def __post_init__(self):
        if self.c_g1 <= 0 or self.c_g2 < 0:
            raise InvalidArgumentError(
                f"need C_g1 > 0 and C_g2 >= 0, got ({self.c_g1}, {self.c_g2})"
            )


CANONICAL_GARDING = GardingConstants(1.0, 2.0)


@dataclass(frozen=True)
class Check:
    """One inequality: lhs <= rhs up to slack, with margin = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    passed: bool
    margin: float


def _make_check(name: str, lhs: float, rhs: float, slack: float) -> Check:
    return Check(name, lhs, rhs, lhs <= rhs * (1.0 + slack), rhs - lhs)


def _make_lower_check(name: str, value: float, lower: float, slack: float) -> Check:
    """value >= lower up to slack (stored as lhs=lower, rhs=value)."""
    return Check(name, lower, value, value >= lower * (1.0 - slack), value - lower)


@dataclass(frozen=True, eq=False)
class GardingReport:
    """Sampled verification of |v*Av + C_g2 v*Mv| >= C_g1 v*Dv."""

    constants: GardingConstants
    n_samples: int
    violations: int
    worst_rel_margin: float
    canonical: bool
    identity_max_rel_err: Optional[float]

    @property
    def passed(self) -> bool:
        ok = self.violations == 0
        if self.identity_max_rel_err is not None:
            ok = ok and self.identity_max_rel_err <= _IDENTITY_RTOL
        return ok


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Both sides of every inequality for one pair of systems."""

    n: int
    dmu: float
    deps: float
    c_dis1: float
    c_dis2: float
    mass_ratio: float
    lhs_D: float
    lhs_Dinv: float
    lhs_2: float
    lhs_2p: float
    rhs_lemma: float
    rhs_lemma2: Optional[float]
    cond: float
    checks: tuple[Check, ...]
    singular: bool = False
    k: Optional[float] = None
    h: Optional[float] = None
    alpha: Optional[float] = None

    @property
    def contraction(self) -> float:
        """Fixed-point/GMRES contraction factor c = ||I - A2^{-1} A1||_D."""
        return self.lhs_D

    @property
    def passed(self) -> bool:
        return not self.singular and all(c.passed for c in self.checks)


@dataclass(frozen=True, eq=False)
class NormEquivalenceReport:
    """Solution-operator norm chains and the inf-sup lower bound."""

    constants: GardingConstants
    hstar_to_h: float
    h0_to_h: float
    h0_to_h0: float
    gamma: float
    c_dis: float
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class LadderEntry:
    k: float
    h: float
    h_ref: float
    n: int
    n_ref: int
    gamma: float
    gamma_ref: float
    ratio: float
    singular: bool


@dataclass(frozen=True, eq=False)
class InfSupLadder:
    """(k, h, inf-sup) triples at a working and a reference resolution."""

    entries: tuple[LadderEntry, ...]

    def ratios(self) -> np.ndarray:
        return np.array([e.ratio for e in self.entries])


def garding_constants_for(spec: ProblemSpec) -> GardingConstants:
    """Valid shifted-coercivity constants derived from coefficient ranges.

    With m = min eigenvalue of Re(mu^{-1}) over elements and
    E = max(Re eps, 0), the real part of the form is bounded below by
    m ||v||_H^2 - (m + E) ||v||_0^2, so (C_g1, C_g2) = (m, m + E) works;
    the homogeneous case gives exactly (1, 2).
    """
    mu = spec.mu_inv
    if mu.is_matrix:
        m = min(float(np.linalg.eigvalsh(v.real).min()) for v in mu.values)
    else:
        m = float(mu.values.real.min())
    e_max = max(float(spec.eps.values.real.max()), 0.0)
    return GardingConstants(m, m + e_max)


def garding_check(
    sys: GalerkinSystem,
    constants: GardingConstants = CANONICAL_GARDING,
    n_samples: int = 1000,
    seed: int = 0,
    rtol: float = _IDENTITY_RTOL,
) -> GardingReport:
    """Sample random coefficient vectors against the shifted-coercivity bound.

    For the canonical homogeneous impedance problem (mu^{-1} = eps = 1,
    real theta) the inequality with constants (1, 2) follows from the
    exact identity Re(v*Av) + 2 v*Mv = v*Dv, which is then asserted at
    relative tolerance ``rtol``.
    """
    rng = np.random.default_rng(seed)
    A, M, D = sys.A, sys.M, sys.D
    spec = sys.spec
    canonical = bool(
        not spec.mu_inv.is_matrix
        and np.all(spec.mu_inv.values == 1.0)
        and np.all(spec.eps.values == 1.0)
    )
    violations = 0
    worst = math.inf
    ident_err = 0.0
    for _ in range(n_samples):
        v = rng.standard_normal(sys.n) + 1j * rng.standard_normal(sys.n)
        qa = complex(np.vdot(v, A @ v))
        qm = float(np.vdot(v, M @ v).real)
        qd = float(np.vdot(v, D @ v).real)
        lhs = abs(qa + constants.c_g2 * qm)
        rhs = constants.c_g1 * qd
        margin = (lhs - rhs) / rhs if rhs > 0 else 0.0
        worst = min(worst, margin)
        if margin < -rtol:
            violations += 1
        if canonical:
            ident_err = max(ident_err, abs(qa.real + 2.0 * qm - qd) / qd)
    return GardingReport(
        constants=constants,
        n_samples=n_samples,
        violations=violations,
        worst_rel_margin=worst if n_samples else 0.0,
        canonical=canonical,
        identity_max_rel_err=ident_err if canonical else None,
    )


def _system_view(s: AnySystem, position: int):
    """(A, D, M, field pair or None) for either kind of system argument."""
    if isinstance(s, GalerkinSystem):
        return s.A, s.D, s.M, (s.spec.mu_inv, s.spec.eps)
    if isinstance(s, ExternalSystem):
        A = s.A1 if position == 1 else s.A2
        return A, s.D, s.M, None
    raise InvalidArgumentError(f"unsupported system type {type(s).__name__}")


def _matrices_match(X, Y) -> bool:
    if X.shape != Y.shape:
        return False
    diff = abs(X - Y)
    if diff.nnz == 0:
        return True
    scale = max(abs(X).max(), abs(Y).max(), 1e-300)
    return diff.max() <= 1e-12 * scale


def _factor_or_raise(A2) -> spla.SuperLU:
    try:
        return spla.splu(sp.csc_matrix(A2, dtype=complex))
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            raise SingularSystemError("perturbed matrix is singular") from exc
        raise


def residual_operators(A1, A2) -> tuple[spla.LinearOperator, spla.LinearOperator]:
    """Actions of I - A2^{-1} A1 (left) and I - A1 A2^{-1} (right).

    Both come with adjoints (rmatvec) through the conjugate-transpose
    solve of the same LU factorization, as required for norm estimation.
    Raises SingularSystemError when A2 cannot be factored.
    """
    lu2 = _factor_or_raise(A2)
    A1c = sp.csr_matrix(A1, dtype=complex)
    A1h = A1c.getH().tocsr()
    n = A1c.shape[0]
    left = spla.LinearOperator(
        (n, n),
        matvec=lambda x: x - lu2.solve(A1c @ x),
        rmatvec=lambda y: y - A1h @ lu2.solve(y, trans="H"),
        dtype=complex,
    )
    right = spla.LinearOperator(
        (n, n),
        matvec=lambda x: x - A1c @ lu2.solve(x),
        rmatvec=lambda y: y - lu2.solve(A1h @ y, trans="H"),
        dtype=complex,
    )
    return left, right


def _difference_operators(A1, A2):
    """The same two residual operators in the cancellation-free form.

    I - A2^{-1} A1 = A2^{-1} (A2 - A1) and I - A1 A2^{-1} =
    (A2 - A1) A2^{-1}; applying the difference matrix first makes an
    identical pair give exactly zero.
    """
    lu2 = _factor_or_raise(A2)
    E = (sp.csr_matrix(A2, dtype=complex) - sp.csr_matrix(A1, dtype=complex)).tocsr()
    Eh = E.getH().tocsr()
    n = E.shape[0]
    left = spla.LinearOperator(
        (n, n),
        matvec=lambda x: lu2.solve(E @ x),
        rmatvec=lambda y: Eh @ lu2.solve(y, trans="H"),
        dtype=complex,
    )
    right = spla.LinearOperator(
        (n, n),
        matvec=lambda x: E @ lu2.solve(x),
        rmatvec=lambda y: lu2.solve(Eh @ y, trans="H"),
        dtype=complex,
    )
    zero = E.nnz == 0 or abs(E).max() == 0.0
    return left, right, zero


def nearby_bound_report(
    sys1: AnySystem,
    sys2: AnySystem,
    dmu: Optional[float] = None,
    deps: Optional[float] = None,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    k: Optional[float] = None,
    h: Optional[float] = None,
    alpha: Optional[float] = None,
) -> BoundReport:
    """Evaluate every nearby-preconditioner inequality for a system pair.

    Both arguments may be assembled systems or the two halves of an
    :class:`ExternalSystem` (pass the external object in both slots; the
    first position reads A1, the second A2). Coefficient-difference
    norms are taken from the fields when available and can be
    overridden; for bare external matrices they must be supplied.
    """
    A1, D1, M1, fields1 = _system_view(sys1, 1)
    A2, D2, M2, fields2 = _system_view(sys2, 2)
    if A1.shape != A2.shape:
        raise InvalidPairError(f"dimension mismatch: {A1.shape} vs {A2.shape}")
    if not (_matrices_match(D1, D2) and _matrices_match(M1, M2)):
        raise InvalidPairError("systems do not share the same D and M")

    if dmu is None or deps is None:
        if fields1 is not None and fields2 is not None:
            dmu = field_diff_sup_norm(fields1[0], fields2[0]) if dmu is None else dmu
            deps = field_diff_sup_norm(fields1[1], fields2[1]) if deps is None else deps
        else:
            ext = sys1 if isinstance(sys1, ExternalSystem) else sys2
            if isinstance(ext, ExternalSystem):
                dmu = ext.dmu if dmu is None else dmu
                deps = ext.deps if deps is None else deps
    if dmu is None or deps is None:
        raise InvalidArgumentError(
            "coefficient-difference norms unavailable; pass dmu and deps"
        )

    n = A1.shape[0]
    if isinstance(sys1, GalerkinSystem):
        if k is None:
            k = sys1.spec.k
        if h is None:
            h = sys1.spec.mesh.h

    G = gram_factor(D1)
    Rm = gram_factor(M1)
    inf2 = discrete_inf_sup(A2, G, seed=seed)
    nan = math.nan
    if inf2.singular:
        return BoundReport(
            n=n, dmu=dmu, deps=deps, c_dis1=nan, c_dis2=math.inf, mass_ratio=nan,
            lhs_D=nan, lhs_Dinv=nan, lhs_2=nan, lhs_2p=nan,
            rhs_lemma=math.inf, rhs_lemma2=None, cond=nan, checks=(),
            singular=True, k=k, h=h, alpha=alpha,
        )
    inf1 = discrete_inf_sup(A1, G, seed=seed)
    me = mass_extremes(M1, seed=seed)
    op_left, op_right, zero_pair = _difference_operators(A1, A2)

    if zero_pair:
        lhs_D = lhs_Dinv = lhs_2 = lhs_2p = 0.0
    else:
        lhs_D = weighted_operator_norm(op_left, G, "D", seed=seed)
        lhs_Dinv = weighted_operator_norm(op_right, G, "D_inv", seed=seed)
        lhs_2 = weighted_operator_norm(op_left, None, "euclid", seed=seed)
        lhs_2p = weighted_operator_norm(op_right, None, "euclid", seed=seed)

    rhs_lemma = (dmu + deps) * inf2.c_dis
    rhs_lemma2 = me.ratio * deps * inf2.c_dis if dmu == 0.0 else None
    cond = (dmu + deps) * inf1.c_dis

    checks = [
        _make_check("nearby_D", lhs_D, rhs_lemma, slack),
        _make_check("nearby_Dinv", lhs_Dinv, rhs_lemma, slack),
    ]
    if rhs_lemma2 is not None:
        checks.append(_make_check("euclid_left", lhs_2, rhs_lemma2, slack))
        checks.append(_make_check("euclid_right", lhs_2p, rhs_lemma2, slack))
    if cond <= 0.5:
        checks.append(
            _make_check("perturbed_factor2", inf2.c_dis, 2.0 * inf1.c_dis, slack)
        )
        rhs_small = 2.0 * (dmu + deps) * inf1.c_dis
        checks.append(_make_check("small_cond_D", lhs_D, rhs_small, slack))
        checks.append(_make_check("small_cond_Dinv", lhs_Dinv, rhs_small, slack))

    return BoundReport(
        n=n, dmu=float(dmu), deps=float(deps),
        c_dis1=inf1.c_dis, c_dis2=inf2.c_dis, mass_ratio=me.ratio,
        lhs_D=lhs_D, lhs_Dinv=lhs_Dinv, lhs_2=lhs_2, lhs_2p=lhs_2p,
        rhs_lemma=rhs_lemma, rhs_lemma2=rhs_lemma2, cond=cond,
        checks=tuple(checks), k=k, h=h, alpha=alpha,
    )


def absorption_report(
    sys1: GalerkinSystem,
    alpha: AbsorptionSpec | float,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
) -> BoundReport:
    """Bound report for the absorption perturbation eps -> (1 + i*alpha) eps."""
    if not isinstance(alpha, AbsorptionSpec):
        alpha = AbsorptionSpec(float(alpha))
    eps2 = absorption_shift(sys1.spec.eps, alpha)
    sys2 = assemble_system(sys1.spec.with_eps(eps2))
    return nearby_bound_report(
        sys1, sys2, slack=slack, seed=seed, alpha=alpha.alpha
    )


def norm_equivalence_report(
    sys: AnySystem,
    constants: GardingConstants = CANONICAL_GARDING,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
) -> NormEquivalenceReport:
    """Check the norm-equivalence chains of the discrete solution operator.

    With valid constants (C_g1, C_g2) the three norms obey

        h0_to_h <= hstar_to_h <= (1/C_g1) (1 + C_g2 * h0_to_h),
        h0_to_h0 <= h0_to_h <= C_g1^{-1/2} h0_to_h0 sqrt(C_g2 + 1/h0_to_h0),

    and the inf-sup constant is bounded below through the same argument,
    gamma >= 1 / ((1/C_g1)(1 + C_g2 * h0_to_h)). The report also checks
    that the two independent routes to the solution-operator norm (the
    inf-sup reciprocal and the conjugated-matrix norm) agree.
    """
    A, D, M, _ = _system_view(sys, 1)
    G = gram_factor(D)
    Rm = gram_factor(M)
    trio = solution_operator_norms(A, G, Rm, seed=seed)
    rep = discrete_inf_sup(A, G, seed=seed)
    if rep.singular:
        raise SingularSystemError("system matrix is singular")
    cg1, cg2 = constants.c_g1, constants.c_g2
    upper1 = (1.0 / cg1) * (1.0 + cg2 * trio.h0_to_h)
    upper2 = trio.h0_to_h0 * math.sqrt(cg2 + 1.0 / trio.h0_to_h0) / math.sqrt(cg1)
    gamma_lower = 1.0 / upper1
    route_diff = abs(rep.c_dis - trio.hstar_to_h)
    checks = (
        _make_check("chain1_lower", trio.h0_to_h, trio.hstar_to_h, slack),
        _make_check("chain1_upper", trio.hstar_to_h, upper1, slack),
        _make_check("chain2_lower", trio.h0_to_h0, trio.h0_to_h, slack),
        _make_check("chain2_upper", trio.h0_to_h, upper2, slack),
        _make_lower_check("infsup_lower", rep.gamma, gamma_lower, slack),
        _make_check("two_routes", route_diff, 1e-8 * trio.hstar_to_h, 0.0),
    )
    return NormEquivalenceReport(
        constants=constants,
        hstar_to_h=trio.hstar_to_h,
        h0_to_h=trio.h0_to_h,
        h0_to_h0=trio.h0_to_h0,
        gamma=rep.gamma,
        c_dis=rep.c_dis,
        checks=checks,
    )


def _interval_tags(spec: ProblemSpec) -> tuple[BoundaryTag, BoundaryTag]:
    mesh = spec.mesh
    xs = mesh.coords[:, 0]
    left = right = None
    for f in mesh.facets:
        x = xs[f.nodes[0]]
        if x == xs.min():
            left = f.tag
        elif x == xs.max():
            right = f.tag
    return left, right


def _rect_tags(spec: ProblemSpec) -> dict[str, BoundaryTag]:
    mesh = spec.mesh
    xs, ys = mesh.coords[:, 0], mesh.coords[:, 1]
    w, ht = xs.max(), ys.max()
    tags = {}
    for f in mesh.facets:
        pts = mesh.coords[list(f.nodes)]
        if np.all(pts[:, 0] == 0):
            tags["left"] = f.tag
        elif np.all(pts[:, 0] == w):
            tags["right"] = f.tag
        elif np.all(pts[:, 1] == 0):
            tags["bottom"] = f.tag
        elif np.all(pts[:, 1] == ht):
            tags["top"] = f.tag
    return tags


def remesh_problem(spec: ProblemSpec, k: float, h: float) -> ProblemSpec:
    """Rebuild the problem at wavenumber k on a mesh of target size h.

    The domain, boundary tags, impedance weight, and (re-sampled)
    coefficient fields are inherited from ``spec``; requires a uniform
    impedance weight and at least two elements at the target size.
    """
    mesh = spec.mesh
    thetas = np.unique(spec.theta)
    if thetas.size > 1:
        raise InvalidArgumentError("remesh requires a uniform impedance weight")
    theta = float(thetas[0]) if thetas.size else 1.0
    if mesh.dimension == 1:
        a, b = mesh.coords[:, 0].min(), mesh.coords[:, 0].max()
        n = math.ceil((b - a) / h)
        if n < 2:
            raise InvalidArgumentError(f"h={h:g} yields {n} elements (need >= 2)")
        left, right = _interval_tags(spec)
        new_mesh = build_interval_mesh(a, b, n, left, right)
    else:
        w, ht = mesh.coords[:, 0].max(), mesh.coords[:, 1].max()
        cell = h / math.sqrt(2.0)
        nx, ny = math.ceil(w / cell), math.ceil(ht / cell)
        if nx < 2 or ny < 2:
            raise InvalidArgumentError(f"h={h:g} yields a {nx}x{ny} grid (need >= 2)")
        new_mesh = build_rect_mesh(w, ht, nx, ny, _rect_tags(spec))
    mu = resample_field(spec.mu_inv, new_mesh)
    eps = resample_field(spec.eps, new_mesh)
    return ProblemSpec(k, new_mesh, mu, eps, theta)


def infsup_ladder(
    base_spec: ProblemSpec,
    k_values: Sequence[float],
    h_rule: Callable[[float], float],
    reference_h_rule: Callable[[float], float],
    seed: int = 0,
) -> InfSupLadder:
    """Discrete inf-sup constants along a refinement ladder in k.

    For each k the constant is computed at h(k) and at the finer
    reference size; the recorded ratio C_dis(h)/C_dis(h_ref) is the
    empirical stability constant of the working resolution. Singular
    systems are recorded in the ladder rather than raised.
    """
    entries = []
    for k in k_values:
        h = float(h_rule(k))
        h_ref = float(reference_h_rule(k))
        gammas = []
        sizes = []
        singular = False
        for hh in (h, h_ref):
            spec = remesh_problem(base_spec, k, hh)
            system = assemble_system(spec)
            rep = discrete_inf_sup(system.A, gram_factor(system.D), seed=seed)
            gammas.append(rep.gamma)
            sizes.append(system.n)
            singular = singular or rep.singular
        if singular or gammas[0] == 0.0 or gammas[1] == 0.0:
            ratio = math.nan
            singular = True
        else:
            # C_dis(h) / C_dis(h_ref) = gamma(h_ref) / gamma(h)
            ratio = gammas[1] / gammas[0]
        entries.append(
            LadderEntry(
                k=float(k), h=h, h_ref=h_ref, n=sizes[0], n_ref=sizes[1],
                gamma=gammas[0], gamma_ref=gammas[1], ratio=ratio, singular=singular,
            )
        )
    return InfSupLadder(tuple(entries))
