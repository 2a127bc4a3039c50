"""Quantum channels and their matrix-subspace reformulation.

A channel given by Kraus operators {A_k} (all d_B x d_A, sum A_k^dag A_k
= I) is carried by the Stinespring isometry K : C_dA -> C_dB (x) C_dE
with d_E the number of Kraus operators.  The reshaping Omega|u (x) v> =
u v^T turns K|psi> into the d_B x d_E matrix whose k-th column is
A_k|psi>, so that X X^dag is the channel output on |psi><psi| and the
image of the input sphere is the unit sphere of the subspace spanned by
{Omega(K e_i)}.

Index conventions are row-major throughout: (A (x) B)(u (x) v) = Au (x) Bv
holds entrywise for numpy's ``kron`` and ``reshape``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, MembershipError, ValidationError
from .linalg import as_complex_matrix, dagger, hs_norm

KRAUS_COMPLETENESS_TOL = 1e-8
GRAM_TOL = 1e-10


@dataclass(frozen=True)
class ChannelSpec:
    """A channel in Kraus form; the Stinespring isometry is derived."""

    d_a: int
    d_b: int
    d_e: int
    kraus: np.ndarray  # shape (d_e, d_b, d_a)

    @classmethod
    def from_kraus(cls, kraus_ops, completeness_tol=KRAUS_COMPLETENESS_TOL):
        ops = [as_complex_matrix(a, f"kraus[{i}]") for i, a in enumerate(kraus_ops)]
        if not ops:
            raise ValidationError("at least one Kraus operator is required")
        d_b, d_a = ops[0].shape
        for i, a in enumerate(ops):
            if a.shape != (d_b, d_a):
                raise DimensionError(
                    f"kraus[{i}] has shape {a.shape}, expected {(d_b, d_a)}"
                )
        stack = np.stack(ops)
        total = np.einsum("kij,kil->jl", stack.conj(), stack)
        residual = hs_norm(total - np.eye(d_a))
        if residual > completeness_tol:
            raise ValidationError(
                f"Kraus operators are not trace preserving: "
                f"||sum A^dag A - I|| = {residual:.3e}"
            )
        return cls(d_a=d_a, d_b=d_b, d_e=len(ops), kraus=stack)

    @classmethod
    def from_isometry(cls, k, d_b, d_e, completeness_tol=KRAUS_COMPLETENESS_TOL):
        k = as_complex_matrix(k, "isometry")
        if k.shape[0] != d_b * d_e:
            raise DimensionError(
                f"isometry has {k.shape[0]} rows, expected d_b*d_e = {d_b * d_e}"
            )
        d_a = k.shape[1]
        ops = k.reshape(d_b, d_e, d_a).transpose(1, 0, 2)
        return cls.from_kraus(list(ops), completeness_tol=completeness_tol)

    @property
    def isometry(self):
        """Stacked isometry K with row index (b, e) -> b*d_e + e."""
        k = np.zeros((self.d_b * self.d_e, self.d_a), dtype=np.complex128)
        view = k.reshape(self.d_b, self.d_e, self.d_a)
        for e in range(self.d_e):
            view[:, e, :] = self.kraus[e]
        return k

    def to_json_dict(self):
        return {
            "d_in": self.d_a,
            "d_out": self.d_b,
            "kraus": [
                [[[float(z.real), float(z.imag)] for z in row] for row in op]
                for op in self.kraus
            ],
        }


def isometry_from_kraus(kraus_ops, completeness_tol=KRAUS_COMPLETENESS_TOL):
    """Stack Kraus operators into the Stinespring isometry K (K^dag K = I)."""
    return ChannelSpec.from_kraus(kraus_ops, completeness_tol=completeness_tol).isometry


def omega_reshape(v, d_b, d_e):
    """Reshape a vector in C_dB (x) C_dE into a d_B x d_E matrix.

    Linear bijection with Omega|u (x) v> = u v^T; preserves inner products
    (Hilbert-Schmidt on the matrix side).
    """
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != d_b * d_e:
        raise DimensionError(f"vector length {v.size} != d_b*d_e = {d_b * d_e}")
    return v.reshape(d_b, d_e).copy()


@dataclass(frozen=True)
class MatrixSubspace:
    """Orthonormal (Hilbert-Schmidt) basis of a subspace of d_B x d_E matrices."""

    d_b: int
    d_e: int
    basis: np.ndarray = field(repr=False)  # shape (k, d_b, d_e)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.ndim != 3 or b.shape[1:] != (self.d_b, self.d_e):
            raise DimensionError(
                f"basis must have shape (k, {self.d_b}, {self.d_e}), got {b.shape}"
            )
        if b.shape[0] > self.d_b * self.d_e:
            raise ValidationError("basis has more elements than the ambient dimension")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.basis.shape[0]

    def gram(self):
        flat = self.basis.reshape(self.dim, -1)
        return flat.conj() @ flat.T

    def check_orthonormal(self, tol=GRAM_TOL):
        dev = hs_norm(self.gram() - np.eye(self.dim))
        if dev > tol:
            raise ValidationError(f"basis is not orthonormal: ||G - I|| = {dev:.3e}")

    def coefficients(self, y):
        """Hilbert-Schmidt coefficients of y against the basis."""
        y = as_complex_matrix(y, "y")
        if y.shape != (self.d_b, self.d_e):
            raise DimensionError(f"element shape {y.shape} != {(self.d_b, self.d_e)}")
        return np.einsum("kij,ij->k", self.basis.conj(), y)

    def assemble(self, coeffs):
        return np.einsum("k,kij->ij", np.asarray(coeffs, dtype=np.complex128), self.basis)

    def projection_residual(self, y):
        c = self.coefficients(y)
        return hs_norm(y - self.assemble(c))

    def require_member(self, y, tol=1e-10):
        res = self.projection_residual(y)
        if res > tol * max(hs_norm(y), 1e-300):
            raise MembershipError(
                f"matrix is not in the subspace (residual {res:.3e})", residual=res
            )
        return self.coefficients(y)

    @classmethod
    def from_matrices(cls, mats, d_b=None, d_e=None, drop_tol=1e-9):
        """Orthonormalize a spanning set, dropping (near-)dependent elements.

        Uses the SVD of the stacked set so that near-zero or dependent
        elements cannot contaminate the kept directions.
        """
        mats = [as_complex_matrix(m, f"mats[{i}]") for i, m in enumerate(mats)]
        if not mats:
            raise ValidationError("cannot build a subspace from an empty set")
        db = d_b if d_b is not None else mats[0].shape[0]
        de = d_e if d_e is not None else mats[0].shape[1]
        flat = np.stack([m.ravel() for m in mats]).T  # (db*de, k)
        u, sv, _ = np.linalg.svd(flat, full_matrices=False)
        scale = sv[0] if sv.size else 0.0
        keep = sv > drop_tol * max(scale, 1e-300)
        basis = u[:, keep].T.reshape(-1, db, de)
        return cls(d_b=db, d_e=de, basis=basis)


def subspace_from_channel(spec):
    """The subspace spanned by {Omega(K e_i)} for the input basis {e_i}."""
    basis = np.transpose(spec.kraus, (1, 0, 2))  # (d_b, d_e, d_a) -> columns A_e e_i
    mats = np.transpose(basis, (2, 0, 1)).copy()  # (d_a, d_b, d_e)
    return MatrixSubspace(d_b=spec.d_b, d_e=spec.d_e, basis=mats)


def output_matrix(spec, psi):
    """X = Omega(K psi): columns A_k psi."""
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.size != spec.d_a:
        raise DimensionError(f"input vector length {psi.size} != d_a = {spec.d_a}")
    return np.einsum("kij,j->ik", spec.kraus, psi)


def apply_channel(spec, rho, state_tol=1e-8):
    """Phi(rho) = sum_k A_k rho A_k^dag, with input-state validation."""
    rho = as_complex_matrix(rho, "rho")
    if rho.shape != (spec.d_a, spec.d_a):
        raise DimensionError(f"state shape {rho.shape} != {(spec.d_a, spec.d_a)}")
    if hs_norm(rho - dagger(rho)) > state_tol:
        raise ValidationError("input state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > state_tol:
        raise ValidationError(f"input state has trace {np.trace(rho).real:.6g} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0] < -state_tol:
        raise ValidationError("input state has a negative eigenvalue")
    return np.einsum("kij,jl,kml->im", spec.kraus, rho, spec.kraus.conj())


def complementary_output(x, norm_tol=1e-8):
    """Output of the complementary channel: X^T conj(X) on the environment."""
    x = as_complex_matrix(x, "x")
    n = hs_norm(x)
    if abs(n - 1.0) > norm_tol:
        raise ValidationError(f"Tr X X^dag = {n**2:.6g}, expected 1")
    return x.T @ x.conj()


def tensor_channel(spec_a, spec_b):
    """The product channel with Kraus set {A_j (x) B_k}."""
    ops = [
        np.kron(a, b)
        for a in spec_a.kraus
        for b in spec_b.kraus
    ]
    return ChannelSpec.from_kraus(ops)


def tensor_subspace(kb, kc):
    """Kronecker-product subspace with basis {B_i (x) C_j}."""
    mats = np.einsum("iab,jcd->ijacbd", kb.basis, kc.basis)
    k = kb.dim * kc.dim
    d_b = kb.d_b * kc.d_b
    d_e = kb.d_e * kc.d_e
    basis = mats.reshape(k, d_b, d_e)
    return MatrixSubspace(d_b=d_b, d_e=d_e, basis=basis)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def _decode_complex_matrix(rows, where):
    try:
        arr = np.asarray(
            [[complex(cell[0], cell[1]) for cell in row] for row in rows],
            dtype=np.complex128,
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise ValidationError(f"{where}: entries must be [re, im] pairs ({exc})") from exc
    return arr

def channel_from_json_dict(doc):
    """Parse {"d_in": int, "d_out": int, "kraus": [...]} into a ChannelSpec."""
    if not isinstance(doc, dict):
        raise ValidationError("channel document must be a JSON object")
    for key in ("d_in", "d_out", "kraus"):
        if key not in doc:
            raise ValidationError(f"channel document is missing the '{key}' field")
    d_in, d_out = int(doc["d_in"]), int(doc["d_out"])
    ops = []
    for idx, rows in enumerate(doc["kraus"]):
        a = _decode_complex_matrix(rows, f"kraus[{idx}]")
        if a.shape != (d_out, d_in):
            raise ValidationError(
                f"kraus[{idx}] has shape {a.shape}, expected ({d_out}, {d_in})"
            )
        ops.append(a)
    return ChannelSpec.from_kraus(ops)


def load_channel(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return channel_from_json_dict(doc)


def save_channel(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_json_dict(), fh, indent=2)


# ---------------------------------------------------------------------------
# stock channels (used by tests, docs and the CLI examples)
# ---------------------------------------------------------------------------

def identity_channel(d):
    return ChannelSpec.from_kraus([np.eye(d)])


def depolarizing_channel(p):
    """Qubit depolarizing channel Phi(rho) = (1-p) rho + p I/2."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("depolarizing strength must lie in [0, 1]")
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    if p == 0.0:
        return ChannelSpec.from_kraus([eye])
    ops = [
        np.sqrt(1.0 - 3.0 * p / 4.0) * eye,
        np.sqrt(p / 4.0) * sx,
        np.sqrt(p / 4.0) * sy,
        np.sqrt(p / 4.0) * sz,
    ]
    return ChannelSpec.from_kraus(ops)


def random_channel(rng, d_a, d_b, d_e):
    """Channel from a Haar-random isometry split into Kraus slices."""
    g = rng.standard_normal((d_b * d_e, d_a)) + 1j * rng.standard_normal((d_b * d_e, d_a))
    q, _ = np.linalg.qr(g)
    return ChannelSpec.from_isometry(q[:, :d_a], d_b, d_e)
