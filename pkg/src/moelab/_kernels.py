"""Scalar spectral kernels and their hot loops.

This module holds the numeric inner loops that dominate the runtime of the
large property sweeps: the phi/zeta/chi kernel family, pair and quadruple
slack scans of the key inequality, divided-difference kernels of the log,
and entropy from a spectrum.

Every loop exists twice: a numba ``@njit`` version and a pure-numpy
fallback.  The fallback is selected by setting the environment variable
``MOELAB_NO_NUMBA=1`` (or when numba is not importable).  Both paths use
identical branch cutoffs and operation order, so they agree to the last
few ulps; ``benchmarks/bench_kernels.py`` times them against each other.

Branch cutoffs:
  phi(a)  : series inside |a - 1| < 1e-6 and |a + 1| < 1e-6 (removable
            singularities, phi(1) = 4 and phi(-1) = 0 by limit);
            arguments in (-1, 1) are inverted first via phi(a) = phi(1/a).
  zeta(x) : series inside |x - 1| < 1e-4, zeta(1) = 1/2.
  chi(x)  : series inside |x| < 1e-4, chi(0) = 4; 2|x| beyond |x| > 700.
"""

import math
import os

import numpy as np

_FORCE_NUMPY = os.environ.get("MOELAB_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

try:
    if _FORCE_NUMPY:
        raise ImportError("numpy fallback forced via MOELAB_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # pragma: no cover - trivial shim
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def active_backend():
    """Name of the loop backend in use: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# scalar cores (plain python; njit-compiled twins are made from these)
# ---------------------------------------------------------------------------

def _phi_core(a):
    # phi(a) = (a+1)/(a-1) * log(a^2), extended by continuity at a = +-1.
    # Caller guarantees a != 0.  Inversion first: phi(a) == phi(1/a), which
    # also makes the symmetry exact in floating point.
    if -1.0 < a < 1.0:
        a = 1.0 / a
    u = a - 1.0
    if -1e-6 < u < 1e-6:
        uu = u * u
        return 4.0 + uu / 3.0 - uu * u / 3.0
    v = a + 1.0
    if -1e-6 < v < 1e-6:
        vv = v * v
        return vv + vv * v
    t = 2.0 * math.log(abs(a))
    return (v / u) * t


def _zeta_core(x):
    # zeta(x) = x log x / (x^2 - 1) for x > 0, zeta(1) = 1/2 by limit.
    if 0.0 < x < 1.0:
        x = 1.0 / x
    u = x - 1.0
    if u < 1e-4:
        uu = u * u
        return 0.5 - uu / 12.0 + uu * u / 12.0
    return x * math.log(x) / ((x - 1.0) * (x + 1.0))


def _chi_core(x):
    # chi(x) = phi(e^x) = 2x (e^x + 1)/(e^x - 1); even in x, chi(0) = 4.
    t = abs(x)
    if t < 1e-4:
        tt = t * t
        return 4.0 + tt / 3.0 - tt * tt / 180.0
    if t > 700.0:
        return 2.0 * t
    e = math.exp(t)
    return 2.0 * t * (e + 1.0) / (e - 1.0)


def _chi_dd_core(x):
    # chi''(x) = (chi(x) - 4) / (2 sinh^2(x/2)); limit 2/3 at x = 0.
    t = abs(x)
    if t < 1e-3:
        return 2.0 / 3.0 - t * t / 15.0
    s = math.sinh(0.5 * t)
    return (_chi_core(t) - 4.0) / (2.0 * s * s)


def _pair_slack_core(a, b):
    # slack of the key inequality: phi(a^2) + phi(b^2) - 2 phi(ab) >= 0.
    return _phi_core(a * a) + _phi_core(b * b) - 2.0 * _phi_core(a * b)


def _dd_log_core(x, y):
    # divided difference of log: (log x - log y)/(x - y), 1/x at x == y.
    d = x - y
    if d == 0.0:
        return 1.0 / x
    return math.log1p(d / y) / d


# ---------------------------------------------------------------------------
# pure-numpy vectorized implementations
# ---------------------------------------------------------------------------

def _phi_values_np(a):
    a = np.asarray(a, dtype=np.float64)
    a = np.where(np.abs(a) < 1.0, np.divide(1.0, np.where(a == 0.0, 1.0, a)), a)
    u = a - 1.0
    v = a + 1.0
    near_one = np.abs(u) < 1e-6
    near_minus = np.abs(v) < 1e-6
    general = ~(near_one | near_minus)
    out = np.empty_like(a)
    uu = u * u
    out[near_one] = (4.0 + uu / 3.0 - uu * u / 3.0)[near_one]
    vv = v * v
    out[near_minus] = (vv + vv * v)[near_minus]
    safe_u = np.where(general, u, 1.0)
    t = 2.0 * np.log(np.abs(np.where(general, a, 1.0)))
    out[general] = ((v / safe_u) * t)[general]
    return out


def _zeta_values_np(x):
    x = np.asarray(x, dtype=np.float64)
    x = np.where(x < 1.0, np.divide(1.0, np.where(x == 0.0, 1.0, x)), x)
    u = x - 1.0
    near = u < 1e-4
    out = np.empty_like(x)
    uu = u * u
    out[near] = 0.5 - uu[near] / 12.0 + (uu * u)[near] / 12.0
    safe = np.where(near, 2.0, x)
    out[~near] = (safe * np.log(safe) / ((safe - 1.0) * (safe + 1.0)))[~near]
    return out


def _chi_values_np(x):
    t = np.abs(np.asarray(x, dtype=np.float64))
    out = np.empty_like(t)
    near = t < 1e-4
    big = t > 700.0
    mid = ~(near | big)
    tt = t * t
    out[near] = 4.0 + tt[near] / 3.0 - (tt * tt)[near] / 180.0
    out[big] = 2.0 * t[big]
    e = np.exp(np.where(mid, t, 0.0))
    out[mid] = (2.0 * t * (e + 1.0) / np.where(mid, e - 1.0, 1.0))[mid]
    return out


def _pair_slack_values_np(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return _phi_values_np(a * a) + _phi_values_np(b * b) - 2.0 * _phi_values_np(a * b)


def _min_pair_slack_np(a, b):
    return float(np.min(_pair_slack_values_np(a, b)))


def _quadruple_min_slack_np(b_eigs, c_eigs, sign):
    rb = (b_eigs[:, None] / b_eigs[None, :]).ravel()
    rc = (c_eigs[:, None] / c_eigs[None, :]).ravel()
    pb = _phi_values_np(rb * rb)
    pc = _phi_values_np(rc * rc)
    cross = _phi_values_np(sign * np.outer(rb, rc))
    slack = pb[:, None] + pc[None, :] - 2.0 * cross
    return float(np.min(slack))


def _dd_log_kernel_np(lams):
    lams = np.asarray(lams, dtype=np.float64)
    d = lams[:, None] - lams[None, :]
    zero = d == 0.0
    safe_d = np.where(zero, 1.0, d)
    k = np.log1p(safe_d / lams[None, :]) / safe_d
    return np.where(zero, 1.0 / lams[:, None], k)


def _phi_kernel_np(x, sign):
    r = sign * (x[:, None] / x[None, :])
    return _phi_values_np(r.ravel()).reshape(r.shape)


def _phi_sq_kernel_np(x):
    r = x[:, None] / x[None, :]
    return _phi_values_np((r * r).ravel()).reshape(r.shape)


def _entropy_from_probs_np(p, rel_tol):
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        return 0.0
    cut = rel_tol * float(np.max(p))
    q = p[p > cut]
    if q.size == 0:
        return 0.0
    return float(-np.sum(q * np.log(q)))


_np_impls = {
    "phi_values": _phi_values_np,
    "zeta_values": _zeta_values_np,
    "chi_values": _chi_values_np,
    "pair_slack_values": _pair_slack_values_np,
    "min_pair_slack": _min_pair_slack_np,
    "quadruple_min_slack": _quadruple_min_slack_np,
    "dd_log_kernel": _dd_log_kernel_np,
    "phi_kernel": _phi_kernel_np,
    "phi_sq_kernel": _phi_sq_kernel_np,
    "entropy_from_probs": _entropy_from_probs_np,
}


# ---------------------------------------------------------------------------
# numba implementations (compiled from the scalar cores)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _phi_nb = njit(cache=True)(_phi_core)
    _zeta_nb = njit(cache=True)(_zeta_core)
    _chi_nb = njit(cache=True)(_chi_core)
    _dd_log_nb = njit(cache=True)(_dd_log_core)

    @njit(cache=True)
    def _phi_values_nb(a):
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = _phi_nb(a[i])
        return out

    @njit(cache=True)
    def _zeta_values_nb(x):
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            out[i] = _zeta_nb(x[i])
        return out

    @njit(cache=True)
    def _chi_values_nb(x):
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            out[i] = _chi_nb(x[i])
        return out

    @njit(cache=True)
    def _pair_slack_values_nb(a, b):
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = _phi_nb(a[i] * a[i]) + _phi_nb(b[i] * b[i]) - 2.0 * _phi_nb(a[i] * b[i])
        return out

    @njit(cache=True)
    def _min_pair_slack_nb(a, b):
        best = np.inf
        for i in range(a.shape[0]):
            s = _phi_nb(a[i] * a[i]) + _phi_nb(b[i] * b[i]) - 2.0 * _phi_nb(a[i] * b[i])
            if s < best:
                best = s
        return best

    @njit(cache=True)
    def _quadruple_min_slack_nb(b_eigs, c_eigs, sign):
        nb = b_eigs.shape[0]
        nc = c_eigs.shape[0]
        best = np.inf
        for i in range(nb):
            for j in range(nb):
                rb = b_eigs[i] / b_eigs[j]
                pb = _phi_nb(rb * rb)
                for k in range(nc):
                    for l in range(nc):
                        rc = c_eigs[k] / c_eigs[l]
                        s = pb + _phi_nb(rc * rc) - 2.0 * _phi_nb(sign * rb * rc)
                        if s < best:
                            best = s
        return best

    @njit(cache=True)
    def _dd_log_kernel_nb(lams):
        n = lams.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = _dd_log_nb(lams[i], lams[j])
        return out

    @njit(cache=True)
    def _phi_kernel_nb(x, sign):
        n = x.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = _phi_nb(sign * (x[i] / x[j]))
        return out

    @njit(cache=True)
    def _phi_sq_kernel_nb(x):
        n = x.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                r = x[i] / x[j]
                out[i, j] = _phi_nb(r * r)
        return out

    @njit(cache=True)
    def _entropy_from_probs_nb(p, rel_tol):
        if p.shape[0] == 0:
            return 0.0
        pmax = p[0]
        for i in range(p.shape[0]):
            if p[i] > pmax:
                pmax = p[i]
        cut = rel_tol * pmax
        acc = 0.0
        for i in range(p.shape[0]):
            if p[i] > cut:
                acc -= p[i] * math.log(p[i])
        return acc

    _nb_impls = {
        "phi_values": _phi_values_nb,
        "zeta_values": _zeta_values_nb,
        "chi_values": _chi_values_nb,
        "pair_slack_values": _pair_slack_values_nb,
        "min_pair_slack": _min_pair_slack_nb,
        "quadruple_min_slack": _quadruple_min_slack_nb,
        "dd_log_kernel": _dd_log_kernel_nb,
        "phi_kernel": _phi_kernel_nb,
        "phi_sq_kernel": _phi_sq_kernel_nb,
        "entropy_from_probs": _entropy_from_probs_nb,
    }
else:
    _nb_impls = {}

_impls = _nb_impls if HAVE_NUMBA else _np_impls


def _as_f64(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def phi_scalar(a):
    return _phi_core(float(a))


def zeta_scalar(x):
    return _zeta_core(float(x))


def chi_scalar(x):
    return _chi_core(float(x))


def chi_second_derivative_scalar(x):
    return _chi_dd_core(float(x))


def phi_values(a):
    return _impls["phi_values"](_as_f64(a))


def zeta_values(x):
    return _impls["zeta_values"](_as_f64(x))


def chi_values(x):
    return _impls["chi_values"](_as_f64(x))


def pair_slack_values(a, b):
    return _impls["pair_slack_values"](_as_f64(a), _as_f64(b))


def min_pair_slack(a, b):
    return float(_impls["min_pair_slack"](_as_f64(a), _as_f64(b)))


def quadruple_min_slack(b_eigs, c_eigs, sign):
    return float(
        _impls["quadruple_min_slack"](_as_f64(b_eigs), _as_f64(c_eigs), float(sign))
    )


def dd_log_kernel(lams):
    return _impls["dd_log_kernel"](_as_f64(lams))


def phi_kernel(x, sign):
    return _impls["phi_kernel"](_as_f64(x), float(sign))


def phi_sq_kernel(x):
    return _impls["phi_sq_kernel"](_as_f64(x))


def entropy_from_probs(p, rel_tol=1e-12):
    return float(_impls["entropy_from_probs"](_as_f64(p), float(rel_tol)))
