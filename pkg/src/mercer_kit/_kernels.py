"""Inner loops used by the basis and expansion modules.

Each kernel exists twice: a vectorised numpy version and a numba ``@njit``
version.  The numba path is used when numba imports and the environment
variable ``MERCER_KIT_NUMBA`` is not set to ``0``/``false``/``off``.  Both
paths are always importable as ``numpy_impl`` and ``numba_impl`` so tests and
the benchmark can compare them directly.
"""
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_CHUNK = 2048
_RESYNC = 32


def _flag_enabled():
    value = os.environ.get("MERCER_KIT_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_meyer_table(u, xi0, dxi, weights, i_max):
    """Derivatives 0..i_max of ``(1/pi) sum_k w_k sin(xi_k u)`` at points ``u``.

    ``xi_k = xi0 + k*dxi``.  The returned array is real; callers multiply by
    ``1j`` to obtain the (purely imaginary) wavelet values.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    xi = xi0 + dxi * np.arange(weights.size)
    out = np.empty((i_max + 1, u.size))
    coeffs = [weights * xi**i / np.pi for i in range(i_max + 1)]
    for lo in range(0, u.size, _CHUNK):
        ang = np.multiply.outer(u[lo:lo + _CHUNK], xi)
        sin, cos = np.sin(ang), np.cos(ang)
        # d^i/du^i sin(xi u) cycles through sin, cos, -sin, -cos
        for i in range(i_max + 1):
            base = (sin, cos, sin, cos)[i % 4] @ coeffs[i]
            out[i, lo:lo + _CHUNK] = base if i % 4 < 2 else -base
    return out


def _np_hermite_table(x, nmax):
    x = np.asarray(x, dtype=np.float64)
    h = np.zeros((nmax + 1, x.size))
    h[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        h[1] = np.sqrt(2.0) * x * h[0]
    for n in range(1, nmax):
        h[n + 1] = np.sqrt(2.0 / (n + 1)) * x * h[n] - np.sqrt(n / (n + 1)) * h[n - 1]
    return h


def _np_bilinear_kahan(a, b):
    """``K[s, t] = sum_n a[s, n] * conj(b[t, n])`` summed in n order, compensated."""
    acc = np.zeros((a.shape[0], b.shape[0]), dtype=np.complex128)
    comp = np.zeros_like(acc)
    bc = np.conj(b)
    for n in range(a.shape[1]):
        y = np.multiply.outer(a[:, n], bc[:, n]) - comp
        tmp = acc + y
        comp = (tmp - acc) - y
        acc = tmp
    return acc


numpy_impl = SimpleNamespace(
    meyer_table=_np_meyer_table,
    hermite_table=_np_hermite_table,
    bilinear_kahan=_np_bilinear_kahan,
    name="numpy",
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def _nb_meyer_table(u, xi0, dxi, weights, i_max):
        npts = u.size
        nk = weights.size
        out = np.zeros((i_max + 1, npts))
        acc = np.zeros(i_max + 1)
        for p in range(npts):
            up = u[p]
            step_c = np.cos(dxi * up)
            step_s = np.sin(dxi * up)
            for i in range(i_max + 1):
                acc[i] = 0.0
            c = 1.0
            s = 0.0
            for k in range(nk):
                xk = xi0 + k * dxi
                if k % _RESYNC == 0:
                    c = np.cos(xk * up)
                    s = np.sin(xk * up)
                pw = weights[k]
                for i in range(i_max + 1):
                    r = i % 4
                    if r == 0:
                        acc[i] += pw * s
                    elif r == 1:
                        acc[i] += pw * c
                    elif r == 2:
                        acc[i] -= pw * s
                    else:
                        acc[i] -= pw * c
                    pw *= xk
                cn = c * step_c - s * step_s
                s = s * step_c + c * step_s
                c = cn
            for i in range(i_max + 1):
                out[i, p] = acc[i] / np.pi
        return out

    @numba.njit(cache=True)
    def _nb_hermite_table(x, nmax):
        h = np.zeros((nmax + 1, x.size))
        c0 = np.pi**-0.25
        for p in range(x.size):
            xp = x[p]
            h[0, p] = c0 * np.exp(-0.5 * xp * xp)
            if nmax >= 1:
                h[1, p] = np.sqrt(2.0) * xp * h[0, p]
            for n in range(1, nmax):
                h[n + 1, p] = (np.sqrt(2.0 / (n + 1)) * xp * h[n, p]
                               - np.sqrt(n / (n + 1)) * h[n - 1, p])
        return h

    @numba.njit(cache=True)
    def _nb_bilinear_kahan(a, b):
        ns, nterms = a.shape
        nt = b.shape[0]
        out = np.zeros((ns, nt), dtype=np.complex128)
        bc = np.conj(b)
        for i in range(ns):
            for j in range(nt):
                acc = 0.0 + 0.0j
                comp = 0.0 + 0.0j
                for n in range(nterms):
                    y = a[i, n] * bc[j, n] - comp
                    tmp = acc + y
                    comp = (tmp - acc) - y
                    acc = tmp
                out[i, j] = acc
        return out

    def _wrap_meyer(u, xi0, dxi, weights, i_max):
        return _nb_meyer_table(np.ascontiguousarray(u, dtype=np.float64), float(xi0),
                               float(dxi), np.ascontiguousarray(weights, dtype=np.float64),
                               int(i_max))

    def _wrap_hermite(x, nmax):
        return _nb_hermite_table(np.ascontiguousarray(x, dtype=np.float64), int(nmax))

    def _wrap_bilinear(a, b):
        return _nb_bilinear_kahan(np.ascontiguousarray(a, dtype=np.complex128),
                                  np.ascontiguousarray(b, dtype=np.complex128))

    numba_impl = SimpleNamespace(
        meyer_table=_wrap_meyer,
        hermite_table=_wrap_hermite,
        bilinear_kahan=_wrap_bilinear,
        name="numba",
    )
else:  # pragma: no cover
    numba_impl = None


def _select():
    if numba_impl is not None and _flag_enabled():
        return numba_impl
    return numpy_impl


active = _select()
USE_NUMBA = active is numba_impl


def set_threads(count):
    """Cap numba's worker threads (no-op on the numpy path)."""
    if numba is not None and count:
        numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


def meyer_table(u, xi0, dxi, weights, i_max):
    return active.meyer_table(u, xi0, dxi, weights, i_max)


def hermite_table(x, nmax):
    return active.hermite_table(x, nmax)


def bilinear_kahan(a, b):
    return active.bilinear_kahan(a, b)
