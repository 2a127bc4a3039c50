"""Reduction of rectangular, possibly singular base points to square
positive definite form, plus the block asymptotics of singular directions.

For a unit X with support projections P_B (rows) and P_E (columns) and
polar form X = sqrt(X X^dag) V, perturbations split into four blocks
relative to (P_B, P_E).  Off-support blocks can only increase the entropy:
Y12/Y21 contribute positive log terms, and a nonzero Y22 block makes the
second derivative diverge to +infinity.  Whether S has a local minimum at
X is therefore decided entirely inside the support, where the problem
becomes: x_pd = sqrt(X X^dag) restricted to its range (an r x r positive
definite matrix of unit Hilbert-Schmidt norm) over the compressed subspace
P_B K V^dag, with directions mapped isometrically by Y -> Y V^dag.

The epsilon embedding pads x_pd back to full shape with an epsilon-scaled
co-isometry block; sweeping epsilon exposes the divergence law of Y22
directions (affine in -log eps^2 with slope 2 Tr Y22 Y22^dag) and the
finite limit of the net Y21 contribution, -2 Tr Y21^dag Y21 log x_pd^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels
from .channel import MatrixSubspace
from .derivatives import _d2_integral_arrays
from .errors import (
    DegenerateInputError,
    DimensionError,
    DomainError,
    ValidationError,
)
from .linalg import (
    DEFAULT_RANK_TOL,
    as_complex_matrix,
    dagger,
    hs_norm,
    majorizes,
)


@dataclass(frozen=True)
class SupportProjectors:
    """Support projections of X and orthonormal frames adapted to them.

    ``row_frame`` / ``col_frame`` are unitary; their first ``rank`` columns
    span the ranges of X X^dag and X^dag X respectively.
    """

    p_b: np.ndarray = field(repr=False)
    p_e: np.ndarray = field(repr=False)
    rank: int
    row_frame: np.ndarray = field(repr=False)
    col_frame: np.ndarray = field(repr=False)


def support_projectors(x, rank_tol=DEFAULT_RANK_TOL):
    x = as_complex_matrix(x, "x")
    u, s, vh = np.linalg.svd(x, full_matrices=True)
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateInputError("support of the zero matrix is undefined")
    r = int(np.sum(s > rank_tol * s[0]))
    ur = u[:, :r]
    vr = vh.conj().T[:, :r]
    return SupportProjectors(
        p_b=ur @ ur.conj().T,
        p_e=vr @ vr.conj().T,
        rank=r,
        row_frame=u,
        col_frame=vh.conj().T,
    )


@dataclass(frozen=True)
class BlockSplit:
    """Blocks of Y in the support frames: shapes r x r, r x (dE-r),
    (dB-r) x r, (dB-r) x (dE-r)."""

    y11: np.ndarray
    y12: np.ndarray
    y21: np.ndarray
    y22: np.ndarray

    def stack(self):
        top = np.hstack([self.y11, self.y12])
        bottom = np.hstack([self.y21, self.y22])
        return np.vstack([top, bottom])


def block_split(y, sp):
    """Split y into blocks relative to the support frames of sp.

    The blocks are coordinates in the (row_frame, col_frame) bases; their
    stack equals row_frame^dag @ y @ col_frame entry for entry.
    """
    y = as_complex_matrix(y, "y")
    if y.shape != (sp.row_frame.shape[0], sp.col_frame.shape[0]):
        raise DimensionError(
            f"shape {y.shape} incompatible with frames "
            f"{(sp.row_frame.shape[0], sp.col_frame.shape[0])}"
        )
    r = sp.rank
    m = sp.row_frame.conj().T @ y @ sp.col_frame
    return BlockSplit(
        y11=m[:r, :r].copy(),
        y12=m[:r, r:].copy(),
        y21=m[r:, :r].copy(),
        y22=m[r:, r:].copy(),
    )


def reassemble_blocks(bs, sp):
    """Inverse of block_split: rotate the stacked blocks back to the ambient frame."""
    return sp.row_frame @ bs.stack() @ sp.col_frame.conj().T


@dataclass(frozen=True)
class ReducedProblem:
    """Square positive definite reduction of a critical point.

    ``x_pd`` is sqrt(X X^dag) in the support frame (r x r, unit HS norm,
    here diagonal with the singular values of X); ``k_b`` the compressed
    subspace; ``isometry`` the polar partial isometry V with V V^dag = P_B,
    V^dag V = P_E.  Directions supported in P_B . P_E map isometrically via
    ``compress_direction``.
    """

    x_pd: np.ndarray
    k_b: MatrixSubspace
    isometry: np.ndarray = field(repr=False)
    support: SupportProjectors
    rank_tol: float

    @property
    def rank(self):
        return self.support.rank

    def compress_direction(self, y):
        r = self.support.rank
        return self.support.row_frame[:, :r].conj().T @ y @ self.support.col_frame[:, :r]


def reduce_to_positive_definite(x, subspace, rank_tol=DEFAULT_RANK_TOL,
                                membership_tol=1e-8, norm_tol=1e-8):
    """Reduce (X, K) to the square positive definite problem on the support."""
    x = as_complex_matrix(x, "x")
    n = hs_norm(x)
    if abs(n - 1.0) > norm_tol:
        raise ValidationError(f"Tr X X^dag = {n**2:.12g}, expected 1")
    subspace.require_member(x, tol=membership_tol)
    sp = support_projectors(x, rank_tol)
    r = sp.rank
    ur = sp.row_frame[:, :r]
    vr = sp.col_frame[:, :r]
    x_pd = ur.conj().T @ x @ vr
    x_pd = 0.5 * (x_pd + dagger(x_pd))
    compressed = [ur.conj().T @ b @ vr for b in subspace.basis]
    k_b = MatrixSubspace.from_matrices(compressed, d_b=r, d_e=r, drop_tol=1e-9)
    isometry = ur @ vr.conj().T
    return ReducedProblem(
        x_pd=x_pd, k_b=k_b, isometry=isometry, support=sp, rank_tol=rank_tol
    )


@dataclass(frozen=True)
class BlockContributions:
    """Per-block second-derivative contributions at a singular base point.

    ``y22_divergent`` is a typed flag: a nonzero Y22 block sends the second
    derivative to +infinity, which is never represented as a float here.
    """

    d2_core: float
    y12_term: float
    y21_term: float
    y22_divergent: bool
    y22_norm: float


def block_d2_contributions(x11, bs, y22_tol=1e-12):
    x11 = as_complex_matrix(x11, "x11")
    vals, u = np.linalg.eigh(0.5 * (x11 + dagger(x11)))
    if vals[0] <= 0.0:
        raise DomainError("x11 must be positive definite")
    log_sq_matrix = (u * (2.0 * np.log(vals))) @ u.conj().T
    d2_core = _d2_integral_arrays(x11, bs.y11) if hs_norm(bs.y11) > 0 else 0.0
    y12_term = float(-np.trace(bs.y12 @ dagger(bs.y12) @ log_sq_matrix).real) \
        if bs.y12.size else 0.0
    y21_term = float(-np.trace(dagger(bs.y21) @ bs.y21 @ log_sq_matrix).real) \
        if bs.y21.size else 0.0
    y22_norm = hs_norm(bs.y22) if bs.y22.size else 0.0
    return BlockContributions(
        d2_core=float(d2_core),
        y12_term=y12_term,
        y21_term=y21_term,
        y22_divergent=y22_norm > y22_tol,
        y22_norm=y22_norm,
    )


def complement_coisometry(p, q):
    """A p x q matrix F with F F^dag = I_p (requires p <= q)."""
    if p > q:
        raise DimensionError(
            "the row complement is larger than the column complement; "
            "transpose the problem (S(X X^dag) = S(X^dag X)) first"
        )
    return np.eye(p, q, dtype=np.complex128)


def epsilon_embed(x11, f_isometry, eps):
    """Embed x11 into the full shape with an eps-scaled complement block.

    Returns [[X_eps, 0], [0, eps F]] with X_eps = (1 - eps^2 p)^(1/2) x11,
    p the complement row count; the result has unit Hilbert-Schmidt norm
    when x11 does.
    """
    x11 = as_complex_matrix(x11, "x11")
    f = as_complex_matrix(f_isometry, "f_isometry")
    p, q = f.shape
    if hs_norm(f @ dagger(f) - np.eye(p)) > 1e-10:
        raise ValidationError("f_isometry must satisfy F F^dag = I")
    eps = float(eps)
    scale_sq = 1.0 - eps * eps * p
    if not 0.0 < scale_sq <= 1.0:
        raise ValidationError(
            f"eps^2 * Tr P_Bperp = {eps * eps * p:.6g} must be below 1"
        )
    r, rc = x11.shape
    out = np.zeros((r + p, rc + q), dtype=np.complex128)
    out[:r, :rc] = math.sqrt(scale_sq) * x11
    out[r:, rc:] = eps * f
    return out


def singular_kernel_check(x11, eps, quad_tol=1e-10):
    """Max discrepancy between the closed form of the resolvent integral

        int_0^inf du / ((eps^2 + u)(lambda + u))
          = (log lambda - log eps^2) / (lambda - eps^2)

    over the eigenvalues lambda of x11^2, and adaptive quadrature."""
    x11 = as_complex_matrix(x11, "x11")
    lams = np.linalg.eigvalsh(x11 @ dagger(x11))
    if lams[0] <= 0.0:
        raise DomainError("x11 must have positive definite square")
    e2 = float(eps) ** 2
    worst = 0.0
    for lam in lams:
        closed = _kernels._dd_log_core(float(lam), e2)
        val, _ = integrate.quad(
            lambda u: 1.0 / ((e2 + u) * (lam + u)),
            0.0,
            np.inf,
            epsabs=quad_tol,
            epsrel=quad_tol,
        )
        worst = max(worst, abs(closed - val))
    return worst


def y22_direction_d2(x11, y22, eps):
    """D2 along a unit direction whose only nonzero block is y22.

    The direction block must be orthogonal to the embedding co-isometry F
    so that the perturbation stays tangent; grows affinely in -log eps^2
    with slope 2 Tr y22 y22^dag.
    """
    y22 = as_complex_matrix(y22, "y22")
    p, q = y22.shape
    f = complement_coisometry(p, q)
    if abs(np.sum(f.conj() * y22)) > 1e-10 * max(hs_norm(y22), 1e-300):
        raise ValidationError("y22 must be HS-orthogonal to the embedding block F")
    x = epsilon_embed(x11, f, eps)
    r, rc = as_complex_matrix(x11, "x11").shape
    y = np.zeros_like(x)
    y[r:, rc:] = y22 / hs_norm(y22)
    return _d2_integral_arrays(x, y)


def y21_net_contribution(x11, y21, eps):
    """D2 + 2 S(X X^dag) for a unit y21-only direction at the eps embedding.

    Converges to -2 Tr y21^dag y21 log x11^2 as eps -> 0.
    """
    y21 = as_complex_matrix(y21, "y21")
    p, r = y21.shape
    x11 = as_complex_matrix(x11, "x11")
    if r != x11.shape[0]:
        raise DimensionError("y21 column count must match the rank block")
    f = complement_coisometry(p, p)
    x = epsilon_embed(x11, f, eps)
    y = np.zeros_like(x)
    y[r:, :r] = y21 / hs_norm(y21)
    rho = x @ dagger(x)
    vals = np.linalg.eigvalsh(rho)
    ent = _kernels.entropy_from_probs(vals, 0.0)
    return _d2_integral_arrays(x, y) + 2.0 * ent


def majorization_threshold(x11, y22, tol=1e-12, steps=60):
    """Largest eps (by bisection) with eigs(diag(x11^2, 0)) majorizing
    eigs(diag((1 - eps^2 |y22|^2) x11^2, eps^2 y22 y22^dag))."""
    x11 = as_complex_matrix(x11, "x11")
    y22 = as_complex_matrix(y22, "y22")
    a_eigs = np.linalg.eigvalsh(x11 @ dagger(x11))
    b_block = np.linalg.eigvalsh(y22 @ dagger(y22))
    wsq = float(np.sum(b_block))

    def holds(eps):
        e2 = eps * eps
        if e2 * wsq >= 1.0:
            return False
        b = np.concatenate([(1.0 - e2 * wsq) * a_eigs, e2 * b_block])
        a = np.concatenate([a_eigs, np.zeros_like(b_block)])
        return majorizes(np.sort(a)[::-1], np.sort(b)[::-1], tol=tol)

    lo, hi = 0.0, 1.0
    if holds(hi):
        return hi
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo
