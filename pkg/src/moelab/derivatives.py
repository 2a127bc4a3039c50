"""Entropy derivatives along constrained paths, in kernel and modular form.

The object of study is g(t) = S(X(t) X(t)^dag) for the norm-preserving
path X(t) = sqrt(1-t^2) X + t Y with Tr X X^dag = Tr Y Y^dag = 1 and
Tr X Y^dag = 0.  First and second derivatives at t = 0 are

    D1[X,Y] = -Tr Gamma_1 log(X X^dag),        Gamma_1 = Y X^dag + X Y^dag
    D2[X,Y] = -2 Tr Gamma_2 log(X X^dag) - Tr Gamma_1 T(Gamma_1),
              Gamma_2 = Y Y^dag - X X^dag

where T is the integral kernel int (rho+u)^-1 . (rho+u)^-1 du, realized in
closed form as the divided-difference kernel of log on the spectrum.

For a positive definite Hermitian base point the second derivative takes
the modular form

    D2[X,Y] = -2 S(X^2) - 2 Tr (W^2 + Z^2) log X^2
              - Tr W phi(D_X)(W) - Tr Z phi(-D_X)(Z)

with Y = W + iZ the Hermitian split, D_X the modular operator (left times
inverse-right multiplication by X, with eigenvalues x_i/x_j), and
phi(a) = (a+1)/(a-1) log a^2 applied entrywise in the eigenbasis.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    CertifyRadiusError,
    DomainError,
    NumericalInconsistencyError,
    ValidationError,
)
from .linalg import as_complex_matrix, dagger, eigh, hs_inner, hs_norm

PD_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# the scalar kernel family
# ---------------------------------------------------------------------------

def phi(a):
    """phi(a) = (a+1)/(a-1) * log a^2, with phi(1) = 4 and phi(-1) = 0 by limit."""
    a = float(a)
    if a == 0.0:
        raise DomainError("phi is undefined at a = 0")
    return _kernels.phi_scalar(a)


def zeta(x):
    """zeta(x) = x log x / (x^2 - 1) for x > 0, zeta(1) = 1/2 by limit."""
    x = float(x)
    if x <= 0.0:
        raise DomainError("zeta requires a positive argument")
    return _kernels.zeta_scalar(x)


def chi(x):
    """chi(x) = phi(e^x) = 2x (e^x + 1)/(e^x - 1), chi(0) = 4 by limit."""
    return _kernels.chi_scalar(x)


def chi_second_derivative(x):
    """chi''(x) = (chi(x) - 4) / (2 sinh^2(x/2)), 2/3 at x = 0 by limit."""
    return _kernels.chi_second_derivative_scalar(x)


def check_phi_inequality(a, b):
    """Slack phi(a^2) + phi(b^2) - 2 phi(ab) of the key inequality (>= 0)."""
    a = float(a)
    b = float(b)
    if a == 0.0 or b == 0.0:
        raise DomainError("the key inequality is evaluated at nonzero arguments")
    return _kernels._pair_slack_core(a, b)


def key_inequality_min_slack(a_vals, b_vals):
    """Minimum slack of the key inequality over paired argument arrays."""
    return _kernels.min_pair_slack(a_vals, b_vals)


def phi_values(a_vals):
    a = np.asarray(a_vals, dtype=np.float64)
    if np.any(a == 0.0):
        raise DomainError("phi is undefined at a = 0")
    return _kernels.phi_values(a)


# ---------------------------------------------------------------------------
# perturbations and base-point spectral data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """A unit base point with a unit, Hilbert-Schmidt-orthogonal direction.

    ``scale`` represents a direction scale*Y without changing the stored
    unit direction; derivative values honor D1[X, sY] = s D1[X, Y] and the
    quadratic scaling of D2.
    """

    base: np.ndarray
    direction: np.ndarray
    scale: float = 1.0
    norm_tol: float = ORTHOGONALITY_TOL

    def __post_init__(self):
        x = as_complex_matrix(self.base, "base")
        y = as_complex_matrix(self.direction, "direction")
        if x.shape != y.shape:
            raise ValidationError(f"base {x.shape} and direction {y.shape} differ in shape")
        nx = hs_norm(x)
        ny = hs_norm(y)
        if abs(nx - 1.0) > self.norm_tol:
            raise ValidationError(f"Tr X X^dag = {nx**2:.12g}, expected 1")
        if abs(ny - 1.0) > self.norm_tol:
            raise ValidationError(f"Tr Y Y^dag = {ny**2:.12g}, expected 1")
        ov = abs(hs_inner(x, y))
        if ov > self.norm_tol:
            raise ValidationError(f"|Tr X Y^dag| = {ov:.3e}, expected 0")
        object.__setattr__(self, "base", x)
        object.__setattr__(self, "direction", y)


@dataclass(frozen=True)
class WZDecomposition:
    """Hermitian split Y = W + iZ with W = (Y^dag + Y)/2, Z = i(Y^dag - Y)/2."""

    w: np.ndarray
    z: np.ndarray


def wz_split(y):
    y = as_complex_matrix(y, "y")
    w = 0.5 * (dagger(y) + y)
    z = 0.5j * (dagger(y) - y)
    return WZDecomposition(w=w, z=z)


@dataclass(frozen=True)
class SpectralData:
    """Eigendata of a positive definite Hermitian base point X.

    Caches log x_i^2, the matrix log X^2 and S(X^2); the modular kernels
    phi(+-x_i/x_j) act entrywise in this eigenbasis.
    """

    matrix: np.ndarray = field(repr=False)
    eigs: np.ndarray
    basis: np.ndarray = field(repr=False)
    log_sq: np.ndarray
    log_sq_matrix: np.ndarray = field(repr=False)
    entropy: float

    @property
    def dim(self):
        return self.eigs.shape[0]

    def to_eigenbasis(self, m):
        return self.basis.conj().T @ m @ self.basis

    def from_eigenbasis(self, m):
        return self.basis @ m @ self.basis.conj().T


def spectral_data(x, pd_tol=PD_TOL):
    """Validate X Hermitian positive definite and cache its spectral data."""
    ed = eigh(x)
    vals = ed.eigenvalues
    if vals[0] <= pd_tol * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DomainError(
            f"base point is not positive definite above tolerance "
            f"(min eigenvalue {vals[0]:.3e})"
        )
    log_sq = 2.0 * np.log(vals)
    u = ed.eigenvectors
    log_sq_matrix = (u * log_sq) @ u.conj().T
    ent = float(-np.sum(vals * vals * log_sq))
    return SpectralData(
        matrix=0.5 * (np.asarray(x, dtype=np.complex128) + dagger(np.asarray(x))),
        eigs=vals,
        basis=u,
        log_sq=log_sq,
        log_sq_matrix=log_sq_matrix,
        entropy=ent,
    )


# ---------------------------------------------------------------------------
# the perturbation path and its closed-form derivatives
# ---------------------------------------------------------------------------

def path_state(p, t):
    """rho(t) = X(t) X(t)^dag along the unit-scale path; trace one for |t| < 1."""
    t = float(t)
    if not -1.0 < t < 1.0:
        raise DomainError(f"path parameter t = {t} outside (-1, 1)")
    x, y = p.base, p.direction
    c = 1.0 - t * t
    s = t * math.sqrt(c)
    gamma1 = y @ dagger(x) + x @ dagger(y)
    return c * (x @ dagger(x)) + s * gamma1 + (t * t) * (y @ dagger(y))


def path_derivative(p, t, order=1):
    """Closed-form rho'(t), rho''(t) or rho'''(t) along the path."""
    t = float(t)
    if not -1.0 < t < 1.0:
        raise DomainError(f"path parameter t = {t} outside (-1, 1)")
    x, y = p.base, p.direction
    gamma1 = y @ dagger(x) + x @ dagger(y)
    gamma2 = y @ dagger(y) - x @ dagger(x)
    c = 1.0 - t * t
    if order == 1:
        return 2.0 * t * gamma2 + ((1.0 - 2.0 * t * t) / math.sqrt(c)) * gamma1
    if order == 2:
        return 2.0 * gamma2 + (t * (2.0 * t * t - 3.0) / c ** 1.5) * gamma1
    if order == 3:
        return (-3.0 / c ** 2.5) * gamma1
    raise ValidationError("order must be 1, 2 or 3")


# ---------------------------------------------------------------------------
# kernel and derivative evaluations
# ---------------------------------------------------------------------------

def dlog_kernel_apply(rho, gamma, pd_tol=PD_TOL):
    """d(log)/d(rho) Frechet derivative applied to gamma.

    Entry (i,j) in the eigenbasis of rho is gamma_ij * k(l_i, l_j) with
    k the divided difference of log and k(l, l) = 1/l; this is the closed
    form of the resolvent integral int (rho+u)^-1 gamma (rho+u)^-1 du.
    """
    ed = eigh(rho)
    vals = ed.eigenvalues
    if vals[0] <= pd_tol * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DomainError("rho must be positive definite above tolerance")
    u = ed.eigenvectors
    g = u.conj().T @ as_complex_matrix(gamma, "gamma") @ u
    k = _kernels.dd_log_kernel(vals)
    return u @ (g * k) @ u.conj().T


def _log_pd(rho, pd_tol=PD_TOL):
    ed = eigh(rho)
    vals = ed.eigenvalues
    if vals[0] <= pd_tol * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DomainError("matrix must be positive definite above tolerance")
    u = ed.eigenvectors
    return (u * np.log(vals)) @ u.conj().T


def _d1_arrays(x, y, pd_tol=PD_TOL):
    rho = x @ dagger(x)
    log_rho = _log_pd(rho, pd_tol)
    gamma1 = y @ dagger(x) + x @ dagger(y)
    return float(-np.trace(gamma1 @ log_rho).real)


def first_derivative(p, pd_tol=PD_TOL):
    """D1[X, Y] = -Tr Gamma_1 log(X X^dag); requires X X^dag nonsingular."""
    try:
        val = _d1_arrays(p.base, p.direction, pd_tol)
    except DomainError as exc:
        raise DomainError(
            "X X^dag is singular; reduce to the support first "
            "(moelab.reduction.reduce_to_positive_definite)"
        ) from exc
    return p.scale * val


def _d2_integral_arrays(x, y, pd_tol=PD_TOL):
    """Homogeneous degree-2 form in y; equals D2[X, Y] when Tr Y Y^dag = 1."""
    rho = x @ dagger(x)
    ed = eigh(rho)
    vals = ed.eigenvalues
    if vals[0] <= pd_tol * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DomainError("X X^dag must be positive definite above tolerance")
    u = ed.eigenvectors
    log_rho = (u * np.log(vals)) @ u.conj().T
    gamma1 = y @ dagger(x) + x @ dagger(y)
    g = u.conj().T @ gamma1 @ u
    k = _kernels.dd_log_kernel(vals)
    q = float(np.sum(k * np.abs(g) ** 2))  # Tr gamma1 K(gamma1), gamma1 Hermitian
    ent = float(-np.sum(vals * np.log(vals)))
    norm_sq = float(np.linalg.norm(y)) ** 2
    r = float(-2.0 * np.trace((y @ dagger(y)) @ log_rho).real) - 2.0 * ent * norm_sq
    return r - q


def second_derivative_integral(p, pd_tol=PD_TOL):
    """D2[X, Y] via the divided-difference kernel; X X^dag must be PD."""
    return p.scale ** 2 * _d2_integral_arrays(p.base, p.direction, pd_tol)


def apply_phi_modular(s, m, sign=+1):
    """phi(+-D_X) applied to m: entrywise phi(+-x_i/x_j) in the X eigenbasis."""
    g = s.to_eigenbasis(as_complex_matrix(m, "m"))
    k = _kernels.phi_kernel(s.eigs, +1 if sign >= 0 else -1)
    return s.from_eigenbasis(g * k)


def apply_phi_sq_modular(s, m):
    """phi(D_X^2) applied to m: entrywise phi((x_i/x_j)^2)."""
    g = s.to_eigenbasis(as_complex_matrix(m, "m"))
    return s.from_eigenbasis(g * _kernels.phi_sq_kernel(s.eigs))


def _phi_quad_form(s, h, sign):
    """Tr H phi(+-D_X)(H) for Hermitian H, as a real kernel sum."""
    g = s.to_eigenbasis(h)
    k = _kernels.phi_kernel(s.eigs, sign)
    return float(np.sum(k * np.abs(g) ** 2))


def _check_tangent(s, y, tol):
    ov = abs(hs_inner(s.matrix, y))
    if ov > tol * max(hs_norm(y), 1e-300):
        raise ValidationError(
            f"direction is not orthogonal to the base point: |<X, Y>| = {ov:.3e}"
        )


def second_derivative_modular(s, y, check=True, orth_tol=1e-8):
    """D2[X, Y] in modular form for a positive definite Hermitian base."""
    y = as_complex_matrix(y, "y")
    if check:
        _check_tangent(s, y, orth_tol)
    wz = wz_split(y)
    w, z = wz.w, wz.z
    grad_term = float(
        -2.0 * np.trace((w @ w + z @ z) @ s.log_sq_matrix).real
    )
    norm_sq = float((hs_norm(w) ** 2 + hs_norm(z) ** 2))
    return (
        -2.0 * s.entropy * norm_sq
        + grad_term
        - _phi_quad_form(s, w, +1)
        - _phi_quad_form(s, z, -1)
    )


def q_tilde(s, y, check=True, tol=1e-9):
    """Q-tilde evaluated through both routes; returns the phi form.

    Route one: Q[X,Y] with the divided-difference kernel for X^2 minus the
    commutator cross term.  Route two: Tr W phi(D)(W) + Tr Z phi(-D)(Z).
    Disagreement beyond tolerance raises NumericalInconsistencyError.
    """
    y = as_complex_matrix(y, "y")
    x = s.matrix
    wz = wz_split(y)
    w, z = wz.w, wz.z
    phi_form = _phi_quad_form(s, w, +1) + _phi_quad_form(s, z, -1)
    if check:
        gamma1 = y @ x + x @ dagger(y)
        g = s.to_eigenbasis(gamma1)
        k = _kernels.dd_log_kernel(s.eigs * s.eigs)
        q_form = float(np.sum(k * np.abs(g) ** 2))
        cross = np.trace((w @ z - z @ w) @ s.log_sq_matrix)
        q_route = q_form - float((2.0j * cross).real)
        scale = max(1.0, abs(phi_form))
        if abs(q_route - phi_form) > tol * scale:
            raise NumericalInconsistencyError(
                f"Q-tilde routes disagree: {q_route:.15g} vs {phi_form:.15g}"
            )
    return phi_form


def d2_mixed_average(s, y, check=True, tol=1e-9):
    """(D2[X,Y] + D2[X,iY]) / 2 via the phi(D^2) kernel form.

    Returns -2 S(X^2) - Tr (Y Y^dag + Y^dag Y) log X^2
    - 1/2 Tr Y phi(D_X^2)(Y^dag), asserted against the direct average.
    """
    y = as_complex_matrix(y, "y")
    g = s.to_eigenbasis(y)
    quad = float(np.sum(_kernels.phi_sq_kernel(s.eigs) * np.abs(g) ** 2))
    norm_sq = float(hs_norm(y) ** 2)
    grad_term = float(
        -np.trace((y @ dagger(y) + dagger(y) @ y) @ s.log_sq_matrix).real
    )
    rhs = -2.0 * s.entropy * norm_sq + grad_term - 0.5 * quad
    if check:
        direct = 0.5 * (
            second_derivative_modular(s, y, check=False)
            + second_derivative_modular(s, 1j * y, check=False)
        )
        if abs(direct - rhs) > tol * max(1.0, abs(rhs)):
            raise NumericalInconsistencyError(
                f"mixed-average routes disagree: {direct:.15g} vs {rhs:.15g}"
            )
    return rhs


# ---------------------------------------------------------------------------
# third derivative: finite differences and the certified bound
# ---------------------------------------------------------------------------

def _entropy_at(p, t, pd_tol):
    rho = path_state(p, t)
    vals = np.linalg.eigvalsh(rho)
    if vals[0] <= pd_tol * max(vals[-1], 0.0):
        raise DomainError(
            f"path leaves the positive definite cone at t = {t:.6g} "
            f"(min eigenvalue {vals[0]:.3e})"
        )
    return _kernels.entropy_from_probs(vals, 0.0)


def third_derivative_fd(p, t=0.0, h=1e-2, pd_tol=PD_TOL):
    """Five-point central difference for d^3/dt^3 S(rho(t)); O(h^2) accurate."""
    g = [_entropy_at(p, t + k * h, pd_tol) for k in (-2, -1, 1, 2)]
    return (g[3] - 2.0 * g[2] + 2.0 * g[1] - g[0]) / (2.0 * h ** 3)


def _grid_min_eig(p, tau, grid_points):
    ts = np.linspace(-tau, tau, grid_points)
    best = np.inf
    for t in ts:
        vals = np.linalg.eigvalsh(path_state(p, t))
        if vals[0] < best:
            best = float(vals[0])
    return best


def third_derivative_bound(
    p, tau, grid_points=64, safety=0.9, pd_floor=1e-12
):
    """Certified bound R on |d^3/dt^3 S(rho(t))| over (-tau, tau).

    The state-dependent constants are estimated from the minimum path
    eigenvalue alpha over a grid (with a conservative safety factor, a
    documented heuristic): |Tr log rho| <= d |log alpha| = A0,
    Tr rho^-1 <= d/alpha = A1, Tr rho^-2 <= d/alpha^2 = A2.  The path
    derivative norms use ||X||, ||Y|| <= 1:

        B1 = 2 tau + 2 (1-tau^2)^-1/2
        B2 = 2 + 6 tau (1-tau^2)^-3/2
        B3 = 6 (1-tau^2)^-5/2

    and R = B3 A0 + 2 B1 B2 A1 + (B1 B2 A1 + 2 B1^3 A2).
    """
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise DomainError("tau must lie in (0, 1)")
    m = _grid_min_eig(p, tau, grid_points)
    if safety * m <= pd_floor:
        lo, hi = 0.0, tau
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid <= 0.0:
                break
            if safety * _grid_min_eig(p, mid, grid_points) > pd_floor:
                lo = mid
            else:
                hi = mid
        raise CertifyRadiusError(
            f"path loses positive definiteness inside (-{tau:.6g}, {tau:.6g}); "
            f"largest admissible tau is about {lo:.6g}",
            max_tau=lo,
        )
    alpha = safety * m
    d = p.base.shape[0]
    a0 = d * abs(math.log(alpha))
    a1 = d / alpha
    a2 = d / (alpha * alpha)
    s = 1.0 / math.sqrt(1.0 - tau * tau)
    b1 = 2.0 * tau + 2.0 * s
    b2 = 2.0 + 6.0 * tau * s ** 3
    b3 = 6.0 * s ** 5
    return b3 * a0 + 2.0 * b1 * b2 * a1 + (b1 * b2 * a1 + 2.0 * b1 ** 3 * a2)
