"""Critical points, Hessian forms, local-minimum certificates, and the
numerical verification of local additivity at tensor products.

The Hessian of S(X X^dag) on the sphere of a subspace at a positive
definite critical point X acts block-diagonally on Hermitian pairs (W, Z)
from the split Y = W + iZ:

    H_+(X) = -2 S(X^2) I - 2 R_{log X^2} - phi(+D_X)
    H_-(X) = -2 S(X^2) I - 2 R_{log X^2} - phi(-D_X)

so that D2[X, W + iZ] = <W, H_+ W> + <Z, H_- Z>.  The tangent W-space is
the real span of the Hermitian parts of the complex tangent directions
(and of i times them); when the subspace is closed under the adjoint this
is exactly its self-adjoint part.  A certificate consists of criticality,
the smallest Hessian eigenvalue nu over both blocks, a third-derivative
bound R valid on a positivity radius tau, and the certified neighborhood
|t| < min(tau, 3 nu / R) on which the entropy strictly exceeds S(X^2).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import MatrixSubspace, tensor_subspace
from .derivatives import (
    SpectralData,
    second_derivative_modular,
    spectral_data,
    wz_split,
)
from .errors import CertifyRadiusError, MembershipError, ValidationError
from .linalg import as_complex_matrix, dagger, hs_inner, hs_norm
from .reduction import ReducedProblem, reduce_to_positive_definite

DEFAULT_NU_TOL = 1e-8
DEFAULT_CRIT_TOL = 1e-7


# ---------------------------------------------------------------------------
# tangent bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentBasis:
    """Bases of the tangent space of the subspace sphere at ``base``.

    ``complex_basis`` is a complex orthonormal basis of K intersect
    base-perp.  ``w_basis`` is a real-orthonormal set of Hermitian
    matrices spanning the Hermitian parts of those directions; it serves
    both Hessian blocks (W and Z directions).
    """

    base: np.ndarray = field(repr=False)
    complex_basis: np.ndarray = field(repr=False)  # (m, d, d)
    w_basis: np.ndarray = field(repr=False)  # (k, d, d) Hermitian

    @property
    def complex_dim(self):
        return self.complex_basis.shape[0]

    @property
    def w_dim(self):
        return self.w_basis.shape[0]


def _orthonormalize_complex(mats, drop_tol=1e-9):
    # SVD-based: rank revealing, so near-zero input elements (e.g. the
    # projected-out base point) cannot contaminate the kept directions.
    if not mats:
        return np.zeros((0, 0, 0), dtype=np.complex128)
    d1, d2 = mats[0].shape
    flat = np.stack([m.ravel() for m in mats]).T
    u, sv, _ = np.linalg.svd(flat, full_matrices=False)
    scale = sv[0] if sv.size else 0.0
    keep = sv > drop_tol * max(scale, 1e-300)
    return u[:, keep].T.reshape(-1, d1, d2)


def _orthonormalize_hermitian(mats, drop_tol=1e-9):
    """Real-orthonormalize Hermitian matrices under Tr(A B)."""
    if not mats:
        return np.zeros((0, 0, 0), dtype=np.complex128)
    stack = np.stack(mats)
    n = stack.shape[0]
    gram = np.einsum("iab,jba->ij", stack, stack).real
    vals, vecs = np.linalg.eigh(gram)
    keep = vals > drop_tol * max(vals[-1], 1e-300)
    combo = vecs[:, keep] / np.sqrt(vals[keep])
    out = np.einsum("ij,iab->jab", combo, stack)
    return np.ascontiguousarray(out[::-1])  # largest-weight elements first


def tangent_basis(s, subspace, drop_tol=1e-9):
    """Tangent bases of the subspace sphere at the base point of ``s``."""
    x = s.matrix
    projected = []
    for b in subspace.basis:
        t = b - hs_inner(x, b) * x
        projected.append(t)
    complex_basis = _orthonormalize_complex(projected, drop_tol)
    herm = []
    for t in complex_basis:
        herm.append(0.5 * (t + dagger(t)))
        herm.append(0.5j * (dagger(t) - t))
    w_basis = _orthonormalize_hermitian(herm, drop_tol)
    return TangentBasis(base=x, complex_basis=complex_basis, w_basis=w_basis)


def random_tangent(rng, tb):
    """Haar-like random unit element of the complex tangent space."""
    m = tb.complex_dim
    if m == 0:
        raise ValidationError("tangent space is empty")
    c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    y = np.einsum("k,kab->ab", c, tb.complex_basis)
    y -= hs_inner(tb.base, y) * tb.base
    return y / hs_norm(y)


# ---------------------------------------------------------------------------
# criticality and the Hessian form
# ---------------------------------------------------------------------------

def gradient_components(s, tb):
    """D1[X, W_i] = -2 Tr(W_i X log X^2) over the Hermitian tangent basis."""
    if tb.w_dim == 0:
        return np.zeros(0)
    t_mat = s.from_eigenbasis(np.diag(s.eigs * s.log_sq))
    return -2.0 * np.einsum("kab,ba->k", tb.w_basis, t_mat).real


def is_critical_point(x, subspace, tol=DEFAULT_CRIT_TOL, s=None, tb=None):
    """Criticality of S(X X^dag) at a positive definite reduced point."""
    if s is None:
        s = spectral_data(x)
    if tb is None:
        tb = tangent_basis(s, subspace)
    g = gradient_components(s, tb)
    norm = float(np.linalg.norm(g))
    worst = float(np.max(np.abs(g))) if g.size else 0.0
    return worst < tol, norm


@dataclass(frozen=True)
class HessianForm:
    """The Hessian of D2 at a critical point.

    ``h_plus`` / ``h_minus`` are the <W_i, H_+-(X) W_j> blocks over the
    Hermitian tangent basis.  ``nu`` is the smallest eigenvalue of the form
    restricted to the achievable tangent pairs (W(Y), Z(Y)) for Y in the
    complex tangent space -- the infimum of D2[X, Y] over unit tangent Y,
    which is what the product-minimum bound consumes.  ``nu_blocks`` is
    the smaller block eigenvalue; it equals ``nu`` when the subspace is
    adjoint-closed and is a (possibly strictly) conservative lower bound
    otherwise.  ``full_matrix`` is the form over the real tangent basis
    {B_i} + {i B_i}.
    """

    h_plus: np.ndarray
    h_minus: np.ndarray
    nu: float | None
    nu_blocks: float | None
    full_matrix: np.ndarray

    @property
    def dim(self):
        return self.h_plus.shape[0]


def _h_bilinear(s, a_stack, b_stack, kernel, log_diag):
    """<A_i, H(B_j)> with H = -2S I - 2 R_log - (kernel form); real part."""
    gram = np.einsum("iab,jba->ij", a_stack, b_stack).real
    lb = b_stack * log_diag[None, None, :]
    log_term = np.einsum("iab,jba->ij", a_stack, lb).real
    phi_term = np.einsum("ab,iab,jab->ij", kernel, a_stack, b_stack.conj()).real
    return -2.0 * s.entropy * gram - 2.0 * log_term - phi_term


def assemble_hessian(s, tb):
    """Hessian blocks over the Hermitian basis plus the achievable-tangent
    form and its smallest eigenvalue nu (None for an empty tangent space)."""
    kp = _kernels.phi_kernel(s.eigs, +1)
    km = _kernels.phi_kernel(s.eigs, -1)
    ub = s.basis
    if tb.w_dim == 0 or tb.complex_dim == 0:
        z = np.zeros((0, 0))
        return HessianForm(h_plus=z, h_minus=z, nu=None, nu_blocks=None,
                           full_matrix=z)
    wt_basis = np.einsum("pa,kab,bq->kpq", ub.conj().T, tb.w_basis, ub)
    h_plus = _h_bilinear(s, wt_basis, wt_basis, kp, s.log_sq)
    h_minus = _h_bilinear(s, wt_basis, wt_basis, km, s.log_sq)
    h_plus = 0.5 * (h_plus + h_plus.T)
    h_minus = 0.5 * (h_minus + h_minus.T)
    nu_blocks = float(
        min(np.linalg.eigvalsh(h_plus)[0], np.linalg.eigvalsh(h_minus)[0])
    )
    # achievable pairs: J(B_i) = (W_i, Z_i), J(i B_i) = (-Z_i, W_i)
    cb = tb.complex_basis
    w_stack = 0.5 * (cb + np.conj(np.transpose(cb, (0, 2, 1))))
    z_stack = 0.5j * (np.conj(np.transpose(cb, (0, 2, 1))) - cb)
    wt = np.einsum("pa,kab,bq->kpq", ub.conj().T, w_stack, ub)
    zt = np.einsum("pa,kab,bq->kpq", ub.conj().T, z_stack, ub)
    p_ww = _h_bilinear(s, wt, wt, kp, s.log_sq)
    p_wz = _h_bilinear(s, wt, zt, kp, s.log_sq)
    p_zz = _h_bilinear(s, zt, zt, kp, s.log_sq)
    m_ww = _h_bilinear(s, wt, wt, km, s.log_sq)
    m_wz = _h_bilinear(s, wt, zt, km, s.log_sq)
    m_zz = _h_bilinear(s, zt, zt, km, s.log_sq)
    top_left = p_ww + m_zz
    top_right = -p_wz + m_wz.T  # -<W_i, H+ Z_j> + <Z_i, H- W_j>
    bottom_right = p_zz + m_ww
    full = np.block([[top_left, top_right], [top_right.T, bottom_right]])
    full = 0.5 * (full + full.T)
    nu = float(np.linalg.eigvalsh(full)[0])
    return HessianForm(
        h_plus=h_plus,
        h_minus=h_minus,
        nu=nu,
        nu_blocks=nu_blocks,
        full_matrix=full,
    )


def hessian_quadratic_value(hess, tb, y):
    """Evaluate the Hessian form on the (W, Z) split of a tangent direction."""
    wz = wz_split(y)
    c = np.einsum("kab,ba->k", tb.w_basis, wz.w).real
    d = np.einsum("kab,ba->k", tb.w_basis, wz.z).real
    return float(c @ hess.h_plus @ c + d @ hess.h_minus @ d)


# ---------------------------------------------------------------------------
# third-derivative bound, uniform over unit tangent directions
# ---------------------------------------------------------------------------

def third_derivative_bound_uniform(s, tau, safety=0.9, pd_floor=1e-12):
    """Bound R on |d^3/dt^3 S| valid for every unit tangent direction.

    Uses the direction-independent floor sigma_min(X(t)) >=
    sqrt(1-tau^2) x_min - tau (operator norms of unit-HS matrices are at
    most one), so alpha = safety * (sqrt(1-tau^2) x_min - tau)^2 bounds the
    smallest path eigenvalue; the remaining constants are as in the
    single-direction bound.
    """
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise CertifyRadiusError("tau must lie in (0, 1)", max_tau=None)
    x_min = float(s.eigs[0])
    sigma_floor = math.sqrt(1.0 - tau * tau) * x_min - tau
    alpha = safety * sigma_floor * sigma_floor if sigma_floor > 0.0 else 0.0
    if alpha <= pd_floor:
        max_tau = x_min / math.sqrt(1.0 + x_min * x_min)
        raise CertifyRadiusError(
            f"positivity cannot be certified uniformly at tau = {tau:.6g}; "
            f"the uniform radius limit is {max_tau:.6g}",
            max_tau=max_tau,
        )
    d = s.dim
    a0 = d * abs(math.log(alpha))
    a1 = d / alpha
    a2 = d / (alpha * alpha)
    sc = 1.0 / math.sqrt(1.0 - tau * tau)
    b1 = 2.0 * tau + 2.0 * sc
    b2 = 2.0 + 6.0 * tau * sc ** 3
    b3 = 6.0 * sc ** 5
    return b3 * a0 + 2.0 * b1 * b2 * a1 + (b1 * b2 * a1 + 2.0 * b1 ** 3 * a2)


def _search_certified_radius(s, nu, tau_points=24, safety=0.9):
    """Coarse 1-D search maximizing min(tau, 3 nu / R(tau))."""
    x_min = float(s.eigs[0])
    tau_cap = 0.95 * x_min / math.sqrt(1.0 + x_min * x_min)
    best = (0.0, 0.0, 0.0)  # (radius, tau, r_bound)
    for frac in np.linspace(0.02, 1.0, tau_points):
        tau = float(frac * tau_cap)
        if tau <= 0.0:
            continue
        try:
            r_bound = third_derivative_bound_uniform(s, tau, safety=safety)
        except CertifyRadiusError:
            continue
        if nu is None:
            radius = tau
        elif nu <= 0.0:
            radius = 0.0
        else:
            radius = min(tau, 3.0 * nu / r_bound)
        if radius > best[0] or (radius == best[0] and best[2] == 0.0):
            best = (radius, tau, r_bound)
    return best


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class MinimumCertificate:
    """Outcome of the local-minimum certification pipeline."""

    is_critical: bool
    gradient_norm: float
    nu: float | None
    r_bound: float | None
    tau: float
    certified_radius: float
    nondegenerate: bool
    rank: int
    seed: int
    tolerances: dict
    warnings: list
    entropy: float
    reduced: ReducedProblem = field(repr=False)
    spectral: SpectralData = field(repr=False)
    tangent: TangentBasis = field(repr=False)
    hessian: HessianForm = field(repr=False)

    def to_json_dict(self):
        return {
            "is_critical": self.is_critical,
            "gradient_norm": self.gradient_norm,
            "nu": self.nu,
            "r_bound": self.r_bound,
            "tau": self.tau,
            "certified_radius": self.certified_radius,
            "nondegenerate": self.nondegenerate,
            "entropy_nats": self.entropy,
            "reduced_rank": self.rank,
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
            "warnings": list(self.warnings),
        }


def certify_local_minimum(
    x,
    subspace,
    rank_tol=1e-10,
    crit_tol=DEFAULT_CRIT_TOL,
    nu_tol=DEFAULT_NU_TOL,
    seed=0,
    tau_points=24,
    bound_safety=0.9,
    membership_tol=1e-8,
):
    """Reduce, test criticality, assemble the Hessian, and bound the
    third derivative; returns a MinimumCertificate."""
    red = reduce_to_positive_definite(
        x, subspace, rank_tol=rank_tol, membership_tol=membership_tol
    )
    s = spectral_data(red.x_pd)
    tb = tangent_basis(s, red.k_b)
    critical, grad_norm = is_critical_point(red.x_pd, red.k_b, tol=crit_tol, s=s, tb=tb)
    warnings = []
    if not critical:
        warnings.append(
            f"base point is not critical (gradient norm {grad_norm:.3e}); "
            "the Hessian form is still reported"
        )
    hess = assemble_hessian(s, tb)
    nu = hess.nu
    radius, tau, r_bound = _search_certified_radius(
        s, nu, tau_points=tau_points, safety=bound_safety
    )
    if tb.w_dim == 0:
        warnings.append("tangent space is empty; the minimum is trivially nondegenerate")
    nondegenerate = bool(critical and (nu is None or nu > nu_tol))
    certified_radius = float(radius) if (nondegenerate and critical) else 0.0
    return MinimumCertificate(
        is_critical=bool(critical),
        gradient_norm=float(grad_norm),
        nu=None if nu is None else float(nu),
        r_bound=float(r_bound) if r_bound else None,
        tau=float(tau),
        certified_radius=certified_radius,
        nondegenerate=nondegenerate,
        rank=red.rank,
        seed=int(seed),
        tolerances={
            "rank_tol": rank_tol,
            "crit_tol": crit_tol,
            "nu_tol": nu_tol,
            "bound_safety": bound_safety,
        },
        warnings=warnings,
        entropy=s.entropy,
        reduced=red,
        spectral=s,
        tangent=tb,
        hessian=hess,
    )


def monte_carlo_minimum_check(cert, samples=10000, seed=0, margin=1e-12):
    """Sample tangent directions and |t| <= certified radius; returns the
    worst S(X(t)X(t)^dag) - S(X^2) (must exceed -margin for a true minimum)."""
    s = cert.spectral
    tb = cert.tangent
    radius = cert.certified_radius
    if radius <= 0.0 or tb.complex_dim == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = s.matrix
    base_entropy = s.entropy
    worst = np.inf
    for _ in range(samples):
        y = random_tangent(rng, tb)
        t = rng.uniform(-radius, radius)
        xt = math.sqrt(1.0 - t * t) * x + t * y
        vals = np.linalg.svd(xt, compute_uv=False)
        ent = _kernels.entropy_from_probs(vals * vals, 0.0)
        worst = min(worst, ent - base_entropy)
        if worst < -margin:
            break
    return float(worst)


# ---------------------------------------------------------------------------
# the sphere optimizer
# ---------------------------------------------------------------------------

@dataclass
class OptimizerConfig:
    n_starts: int = 8
    max_iter: int = 3000
    grad_tol: float = 1e-9
    step0: float = 0.5
    grow: float = 1.3
    shrink: float = 0.5
    max_backtracks: int = 50
    support_tol: float = 1e-12


@dataclass
class OptimizationResult:
    x: np.ndarray
    entropy: float
    gradient_norm: float
    converged: bool
    iterations: int
    start_index: int
    starts: list


def _entropy_and_gradient(x, subspace, support_tol):
    rho = x @ dagger(x)
    vals, u = np.linalg.eigh(rho)
    cut = support_tol * max(float(vals[-1]), 0.0)
    on = vals > cut
    ent = float(-np.sum(vals[on] * np.log(vals[on]))) if np.any(on) else 0.0
    logvals = np.where(on, np.log(np.where(on, vals, 1.0)), 0.0)
    log_rho = (u * logvals) @ u.conj().T
    grad = -2.0 * (log_rho @ x)
    coeffs = subspace.coefficients(grad)
    grad_k = subspace.assemble(coeffs)
    grad_t = grad_k - hs_inner(x, grad_k).real * x
    return ent, grad_t


def find_local_minimum(subspace, seed=0, config=None):
    """Multi-start projected gradient descent of S(X X^dag) on the unit
    sphere of a subspace.  The Riemannian gradient is the projection of
    the Euclidean one onto the sphere tangent inside the subspace; steps
    use backtracking with geometric growth on success."""
    cfg = config or OptimizerConfig()
    if subspace.dim == 0:
        raise ValidationError("cannot optimize over an empty subspace")
    rng = np.random.default_rng(seed)
    starts = []
    best = None
    for start in range(cfg.n_starts):
        c = rng.standard_normal(subspace.dim) + 1j * rng.standard_normal(subspace.dim)
        x = subspace.assemble(c)
        x /= hs_norm(x)
        step = cfg.step0
        ent, grad = _entropy_and_gradient(x, subspace, cfg.support_tol)
        gnorm = hs_norm(grad)
        it = 0
        converged = False
        for it in range(1, cfg.max_iter + 1):
            if gnorm < cfg.grad_tol:
                converged = True
                break
            moved = False
            for _ in range(cfg.max_backtracks):
                cand = x - step * grad
                cand /= hs_norm(cand)
                cand_ent, cand_grad = _entropy_and_gradient(
                    cand, subspace, cfg.support_tol
                )
                if cand_ent <= ent - 1e-4 * step * gnorm * gnorm:
                    x, ent, grad = cand, cand_ent, cand_grad
                    gnorm = hs_norm(grad)
                    step *= cfg.grow
                    moved = True
                    break
                step *= cfg.shrink
            if not moved:
                converged = gnorm < 10.0 * cfg.grad_tol
                break
        record = {
            "start": start,
            "entropy": ent,
            "gradient_norm": gnorm,
            "iterations": it,
            "converged": converged,
        }
        starts.append(record)
        if best is None or ent < best[1]:
            best = (x, ent, gnorm, converged, it, start)
    return OptimizationResult(
        x=best[0],
        entropy=float(best[1]),
        gradient_norm=float(best[2]),
        converged=bool(best[3]),
        iterations=int(best[4]),
        start_index=int(best[5]),
        starts=starts,
    )


# ---------------------------------------------------------------------------
# product perturbations and local additivity
# ---------------------------------------------------------------------------

@dataclass
class ProductPerturbationDecomposition:
    """Y_BC = u1 X_B (x) Y_C0 + u2 Y_B0 (x) X_C + eta sum_j xi_j Y_B^j (x) Y_C^j."""

    u1: complex
    u2: complex
    eta: complex
    y_b0: np.ndarray | None
    y_c0: np.ndarray | None
    xis: np.ndarray
    t_bc_factors: list

    def reassemble(self, x_b, x_c):
        d_b = x_b.shape[0] * x_c.shape[0]
        d_e = x_b.shape[1] * x_c.shape[1]
        out = np.zeros((d_b, d_e), dtype=np.complex128)
        if self.y_c0 is not None:
            out += self.u1 * np.kron(x_b, self.y_c0)
        if self.y_b0 is not None:
            out += self.u2 * np.kron(self.y_b0, x_c)
        for xi, (yb, yc) in zip(self.xis, self.t_bc_factors):
            out += self.eta * xi * np.kron(yb, yc)
        return out

    def t_bc(self):
        if not self.t_bc_factors:
            return None
        return sum(
            xi * np.kron(yb, yc) for xi, (yb, yc) in zip(self.xis, self.t_bc_factors)
        )


def _fix_leading_phase(a, b, tol=1e-12):
    flat = a.ravel()
    idx = np.argmax(np.abs(flat) > tol * max(np.max(np.abs(flat)), 1e-300))
    lead = flat[idx]
    if abs(lead) == 0.0:
        return a, b
    ph = lead / abs(lead)
    return a / ph, b * ph


def decompose_product_perturbation(
    y_bc, x_b, x_c, tb_b, tb_c, membership_tol=1e-8
):
    """Split a unit product-tangent perturbation into its three components.

    ``tb_b`` / ``tb_c`` are factor tangent bases; the remainder in
    (X_B-perp (x) X_C-perp) is decomposed by the singular value
    decomposition of its coefficient matrix, with biorthonormal factors
    and the leading entry of each left factor made real nonnegative.
    """
    y_bc = as_complex_matrix(y_bc, "y_bc")
    alphas = tb_b.complex_basis
    betas = tb_c.complex_basis
    db1, de1 = x_b.shape
    db2, de2 = x_c.shape
    y4 = y_bc.reshape(db1, db2, de1, de2).transpose(0, 2, 1, 3)
    # <X_B (x) beta_k, Y>, <alpha_i (x) X_C, Y>, <alpha_i (x) beta_k, Y>
    c0 = np.einsum("ae,kbf,aebf->k", x_b.conj(), betas.conj(), y4)
    c1 = np.einsum("iae,bf,aebf->i", alphas.conj(), x_c.conj(), y4)
    cmat = np.einsum("iae,kbf,aebf->ik", alphas.conj(), betas.conj(), y4)
    norm_sq = float(hs_norm(y_bc) ** 2)
    captured = float(
        np.sum(np.abs(c0) ** 2) + np.sum(np.abs(c1) ** 2) + np.sum(np.abs(cmat) ** 2)
    )
    if abs(captured - norm_sq) > membership_tol:
        raise MembershipError(
            "perturbation is not inside the product tangent space "
            f"(missing weight {norm_sq - captured:.3e})",
            residual=norm_sq - captured,
        )
    u1 = math.sqrt(float(np.sum(np.abs(c0) ** 2)))
    u2 = math.sqrt(float(np.sum(np.abs(c1) ** 2)))
    y_c0 = None
    y_b0 = None
    if u1 > 1e-14:
        y_c0 = np.einsum("k,kab->ab", c0, betas) / u1
    if u2 > 1e-14:
        y_b0 = np.einsum("i,iab->ab", c1, alphas) / u2
    eta = float(np.linalg.norm(cmat))
    xis = np.zeros(0)
    factors = []
    if eta > 1e-14:
        uu, sing, vh = np.linalg.svd(cmat)
        keep = sing > 1e-14 * sing[0]
        for j in np.nonzero(keep)[0]:
            a_j = np.einsum("i,iab->ab", uu[:, j], alphas)
            b_j = np.einsum("k,kab->ab", vh[j, :].conj(), betas)
            a_j, b_j = _fix_leading_phase(a_j, b_j)
            factors.append((a_j, b_j))
        xis = sing[keep] / eta
    return ProductPerturbationDecomposition(
        u1=complex(u1),
        u2=complex(u2),
        eta=complex(eta),
        y_b0=y_b0,
        y_c0=y_c0,
        xis=xis,
        t_bc_factors=factors,
    )


def operator_inequality_check(s_b, s_c, sign=+1):
    """Minimum slack of phi(D_B^2) (x) I + I (x) phi(D_C^2) - 2 phi(+-D_B (x) D_C)
    over all eigenvalue-ratio quadruples (diagonal in the product basis)."""
    return _kernels.quadruple_min_slack(s_b.eigs, s_c.eigs, +1 if sign >= 0 else -1)


@dataclass
class TensorVerificationReport:
    """Outcome of the numerical product-minimum verification."""

    samples: int
    max_d1: float
    max_decomposition_error: float
    min_bound_slack: float
    min_d2: float
    product_nu: float | None
    product_certificate: MinimumCertificate | None
    monte_carlo_margin: float | None
    strict_floor: float
    failures: list

    @property
    def passed(self):
        return not self.failures

    def to_json_dict(self):
        return {
            "samples": self.samples,
            "max_d1": self.max_d1,
            "max_decomposition_error": self.max_decomposition_error,
            "min_bound_slack": self.min_bound_slack,
            "min_d2": self.min_d2,
            "product_nu": self.product_nu,
            "monte_carlo_margin": self.monte_carlo_margin,
            "strict_floor": self.strict_floor,
            "passed": self.passed,
            "failures": self.failures,
        }


def _d2_quadratic_modular(s, y):
    return second_derivative_modular(s, y, check=False)


def verify_tensor_minimum(
    cert_b,
    cert_c,
    k_b=None,
    k_c=None,
    samples=1000,
    seed=0,
    d1_tol=1e-9,
    decomposition_tol=1e-8,
    bound_tol=1e-8,
    monte_carlo_samples=0,
):
    """Numerically verify that the product of two certified nondegenerate
    minima is a nondegenerate minimum of the product problem.

    Per sampled product-tangent direction: the first derivative vanishes;
    the second derivative splits exactly into the u1/u2/eta components;
    and it dominates the superadditivity lower bound built from the factor
    second derivatives, which itself stays above min(nu_B, nu_C).
    """
    if not (cert_b.nondegenerate and cert_c.nondegenerate):
        raise ValidationError(
            "both factor certificates must be nondegenerate for the product check"
        )
    k_b = k_b if k_b is not None else cert_b.reduced.k_b
    k_c = k_c if k_c is not None else cert_c.reduced.k_b
    s_b = cert_b.spectral
    s_c = cert_c.spectral
    x_b, x_c = s_b.matrix, s_c.matrix
    tb_b = cert_b.tangent
    tb_c = cert_c.tangent
    k_prod = tensor_subspace(k_b, k_c)
    x_prod = np.kron(x_b, x_c)
    s_prod = spectral_data(x_prod)
    tb_prod = tangent_basis(s_prod, k_prod)
    hess_prod = assemble_hessian(s_prod, tb_prod)
    g = gradient_components(s_prod, tb_prod)

    nu_b = cert_b.nu if cert_b.nu is not None else np.inf
    nu_c = cert_c.nu if cert_c.nu is not None else np.inf
    nu_floor = min(nu_b, nu_c)
    strict_floor = nu_floor * (1.0 - 1e-6)
    rng = np.random.default_rng(seed)
    failures = []
    max_d1 = float(np.max(np.abs(g))) if g.size else 0.0
    max_dec = 0.0
    min_slack = np.inf
    min_d2 = np.inf
    t_mat = s_prod.from_eigenbasis(np.diag(s_prod.eigs * s_prod.log_sq))
    for i in range(samples):
        y = random_tangent(rng, tb_prod)
        d1 = -2.0 * float(np.trace(wz_split(y).w @ t_mat).real)
        max_d1 = max(max_d1, abs(d1))
        if abs(d1) > d1_tol:
            failures.append({"sample": i, "kind": "first_derivative", "value": d1})
        dec = decompose_product_perturbation(y, x_b, x_c, tb_b, tb_c)
        d2_direct = _d2_quadratic_modular(s_prod, y)
        min_d2 = min(min_d2, d2_direct)
        rhs = 0.0
        if dec.y_c0 is not None:
            rhs += abs(dec.u1) ** 2 * _d2_quadratic_modular(s_c, dec.y_c0)
        if dec.y_b0 is not None:
            rhs += abs(dec.u2) ** 2 * _d2_quadratic_modular(s_b, dec.y_b0)
        t_bc = dec.t_bc()
        d2_t = 0.0 if t_bc is None else _d2_quadratic_modular(s_prod, t_bc)
        lemma = rhs + abs(dec.eta) ** 2 * d2_t
        dec_err = abs(d2_direct - lemma)
        max_dec = max(max_dec, dec_err)
        if dec_err > decomposition_tol * max(1.0, abs(d2_direct)):
            failures.append(
                {"sample": i, "kind": "decomposition", "value": dec_err,
                 "d2": d2_direct, "lemma": lemma}
            )
        bound = rhs
        for xi, (yb, yc) in zip(dec.xis, dec.t_bc_factors):
            term = (
                _d2_quadratic_modular(s_b, yb)
                + _d2_quadratic_modular(s_b, 1j * yb)
                + _d2_quadratic_modular(s_c, yc)
                + _d2_quadratic_modular(s_c, 1j * yc)
            )
            bound += abs(dec.eta) ** 2 * 0.5 * abs(xi) ** 2 * term
        slack = d2_direct - bound
        min_slack = min(min_slack, slack)
        if slack < -bound_tol:
            failures.append(
                {"sample": i, "kind": "superadditivity_bound", "value": slack}
            )
        if d2_direct < strict_floor - bound_tol:
            failures.append(
                {"sample": i, "kind": "strict_positivity", "value": d2_direct,
                 "floor": strict_floor}
            )
    product_cert = None
    mc_margin = None
    if monte_carlo_samples > 0:
        product_cert = certify_local_minimum(x_prod, k_prod, seed=seed)
        if product_cert.certified_radius > 0.0:
            mc_margin = monte_carlo_minimum_check(
                product_cert, samples=monte_carlo_samples, seed=seed
            )
            if mc_margin < -1e-12:
                failures.append({"kind": "monte_carlo", "value": mc_margin})
    return TensorVerificationReport(
        samples=samples,
        max_d1=float(max_d1),
        max_decomposition_error=float(max_dec),
        min_bound_slack=float(min_slack) if samples else 0.0,
        min_d2=float(min_d2) if samples else 0.0,
        product_nu=hess_prod.nu,
        product_certificate=product_cert,
        monte_carlo_margin=mc_margin,
        strict_floor=float(strict_floor),
        failures=failures,
    )
