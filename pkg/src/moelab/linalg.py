"""Dense complex linear algebra primitives.

The carrier type for all matrix data is a 2-D complex128 ``numpy.ndarray``
(row-major).  ``as_complex_matrix`` validates shape and finiteness at API
boundaries; everything downstream works on plain arrays.

Conventions: all entropies and logarithms are natural (nats); the support
cutoff for matrix functions defaults to 1e-12 relative to the largest
eigenvalue.  Degenerate eigenvalues receive no special handling here; the
divided-difference kernels in :mod:`moelab.derivatives` take the analytic
limit at coincident eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateInputError,
    DimensionError,
    DomainError,
    NumericalError,
    ValidationError,
)

DEFAULT_SUPPORT_TOL = 1e-12
DEFAULT_RANK_TOL = 1e-10
DEFAULT_HERMITICITY_TOL = 1e-10


def as_complex_matrix(a, name="matrix"):
    """Validate and return ``a`` as a 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError(f"{name} contains non-finite entries")
    return m


def dagger(a):
    return a.conj().T


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Tr(a^dag b)."""
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a.conj() * b))


def hs_norm(a):
    a = np.asarray(a, dtype=np.complex128)
    return float(np.linalg.norm(a))


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    dimension: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def eigh(a, hermiticity_tol=DEFAULT_HERMITICITY_TOL):
    """Hermitian eigendecomposition with an input hermiticity check."""
    a = as_complex_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    scale = hs_norm(a)
    dev = hs_norm(a - dagger(a))
    if dev > hermiticity_tol * max(scale, 1e-300):
        raise ValidationError(
            f"matrix is not Hermitian: ||A - A^dag|| = {dev:.3e} > "
            f"{hermiticity_tol:.1e} * ||A||"
        )
    h = 0.5 * (a + dagger(a))
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return HermitianEigen(a.shape[0], vals, vecs)


def matrix_function_psd(a, f, support_tol=DEFAULT_SUPPORT_TOL):
    """Apply a scalar function to a PSD matrix through its spectrum.

    Eigenvalues at or below ``support_tol`` (relative to the largest) are
    mapped to zero; this realizes the support convention for log.
    """
    ed = eigh(a)
    vals = ed.eigenvalues
    top = float(vals[-1]) if vals.size else 0.0
    if top < 0.0 and abs(top) > support_tol * max(abs(vals[0]), 1e-300):
        raise DomainError("matrix is not positive semidefinite")
    cut = support_tol * max(top, 0.0)
    fvals = np.zeros_like(vals)
    on = vals > cut
    if np.any(on):
        with np.errstate(all="raise"):
            try:
                fvals[on] = f(vals[on])
            except FloatingPointError as exc:
                raise DomainError(
                    f"function undefined on an eigenvalue above the support cutoff: {exc}"
                ) from exc
        if not np.all(np.isfinite(fvals[on])):
            raise DomainError("function returned a non-finite value on the support")
    u = ed.eigenvectors
    return (u * fvals) @ u.conj().T


def entropy_of_state(rho, support_tol=DEFAULT_SUPPORT_TOL):
    """von Neumann entropy -Tr rho log rho in nats, support convention."""
    rho = as_complex_matrix(rho, "rho")
    vals = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    return _kernels.entropy_from_probs(vals, support_tol)


def entropy_of_gram(x, support_tol=DEFAULT_SUPPORT_TOL):
    """S(x x^dag) for a rectangular matrix x, via its singular values."""
    x = as_complex_matrix(x, "x")
    s = np.linalg.svd(x, compute_uv=False)
    return _kernels.entropy_from_probs(s * s, support_tol)


@dataclass(frozen=True)
class PolarFactors:
    """Polar form x = positive_part @ isometry_part.

    ``positive_part`` is sqrt(x x^dag); ``isometry_part`` is a partial
    isometry v with v v^dag and v^dag v the support projections of x.
    """

    positive_part: np.ndarray
    isometry_part: np.ndarray
    rank: int


def polar_decompose(x, rank_tol=DEFAULT_RANK_TOL):
    x = as_complex_matrix(x, "x")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateInputError("cannot take the polar decomposition of the zero matrix")
    r = int(np.sum(s > rank_tol * s[0]))
    pos = (u * s) @ u.conj().T
    iso = u[:, :r] @ vh[:r, :]
    return PolarFactors(positive_part=pos, isometry_part=iso, rank=r)


def majorizes(a, b, tol=1e-10):
    """True iff the descending list ``a`` majorizes ``b``.

    Lists are zero-padded to equal length; their sums must agree within
    ``tol`` or a ValidationError is raised.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))[::-1]
    b = np.sort(np.asarray(b, dtype=np.float64))[::-1]
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    if abs(a.sum() - b.sum()) > tol:
        raise ValidationError(
            f"sums differ beyond tolerance: {a.sum():.12g} vs {b.sum():.12g}"
        )
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - tol))


def random_unit_vector(rng, n):
    """Haar-random unit vector in C^n."""
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_positive_definite_unit(rng, n, floor=0.1):
    """Random Hermitian PD matrix with unit Hilbert-Schmidt norm."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = a @ a.conj().T + floor * np.eye(n)
    return h / np.linalg.norm(h)
