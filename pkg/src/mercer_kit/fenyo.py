"""Generalized Schmidt decomposition by the two-sequence recursion.

Starting from kappa_0 = 0 and x_0 = y_0 = 0 the recursion

    mu_{n-1} x_n        = T y_{n-1} - kappa_{n-1} x_{n-1}
    conj(kappa_n) y_n   = T^* x_n   - conj(mu_{n-1}) y_{n-1}

produces orthonormal x_n spanning Ran T and y_n spanning Ran T^*, after which

    T f = sum_n alpha_n <f, v_n> x_n = sum_n beta_n <f, y_n> w_n.

Both new vectors are re-orthogonalized against all earlier ones.  When the
right side of the x-step vanishes the next x_n is the first left singular
vector not yet spanned; the same rule (with right singular vectors) picks
y_n when kappa_n vanishes.
"""
from dataclasses import dataclass

import numpy as np

from .expand import _assemble, direct_kernel
from .opcore import OperatorMatrix, svd

RANK_TOL = 1e-10
FREE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FenyoDecomposition:
    """x, y are (N, K) with orthonormal columns; mu has length K + 1 (mu_0..mu_K)."""

    T: OperatorMatrix
    x: np.ndarray
    y: np.ndarray
    kappa: np.ndarray
    mu: np.ndarray
    free_choices: tuple

    @property
    def size(self):
        return self.kappa.size

    @property
    def alpha(self):
        return np.sqrt(np.abs(self.kappa) ** 2 + np.abs(self.mu[:-1]) ** 2)

    @property
    def beta(self):
        return np.sqrt(np.abs(self.kappa) ** 2 + np.abs(self.mu[1:]) ** 2)

    @property
    def v(self):
        """v_n = (conj(kappa_n) y_n + conj(mu_{n-1}) y_{n-1}) / alpha_n."""
        prev = np.hstack([np.zeros((self.y.shape[0], 1)), self.y[:, :-1]])
        num = self.y * np.conj(self.kappa) + prev * np.conj(self.mu[:-1])
        return num / _safe(self.alpha)

    @property
    def w(self):
        """w_n = (kappa_n x_n + mu_n x_{n+1}) / beta_n."""
        nxt = np.hstack([self.x[:, 1:], np.zeros((self.x.shape[0], 1))])
        num = self.x * self.kappa + nxt * self.mu[1:]
        return num / _safe(self.beta)

    def orthonormality(self):
        k = self.size
        ex = np.abs(self.x.conj().T @ self.x - np.eye(k)).max(initial=0.0)
        ey = np.abs(self.y.conj().T @ self.y - np.eye(k)).max(initial=0.0)
        return float(ex), float(ey)


def _safe(a):
    return np.where(a > 0, a, 1.0)


def _orthogonalize(vec, basis):
    """Two passes of classical Gram-Schmidt against the columns of ``basis``."""
    for _ in range(2):
        if basis.shape[1]:
            vec = vec - basis @ (basis.conj().T @ vec)
    return vec


def _first_unspanned(candidates, basis):
    for k in range(candidates.shape[1]):
        r = _orthogonalize(candidates[:, k], basis)
        nr = np.linalg.norm(r)
        if nr > 1e-3:
            r = _orthogonalize(r / nr, basis)
            return r / np.linalg.norm(r)
    return None


def fenyo_decompose(T, rank_tol=RANK_TOL, free_tol=FREE_TOL):
    a = T.entries
    n = a.shape[0]
    f = svd(T)
    tnorm = float(f.singular[0]) if n else 0.0
    if tnorm == 0.0:
        empty = np.zeros((n, 0), dtype=complex)
        return FenyoDecomposition(T, empty, empty.copy(), np.zeros(0), np.zeros(1), ())
    r = int(np.sum(f.singular > rank_tol * tnorm))
    ran_t = f.left[:, :r]
    ran_ts = f.right[:, :r]
    ftol = free_tol * tnorm

    xs = np.zeros((n, 0), dtype=complex)
    ys = np.zeros((n, 0), dtype=complex)
    kappa, mu, free = [], [], []
    x_prev = np.zeros(n, dtype=complex)
    y_prev = np.zeros(n, dtype=complex)
    k_prev = 0.0
    while xs.shape[1] < r:
        defect = np.linalg.norm(ran_t - xs @ (xs.conj().T @ ran_t), 2)
        if defect <= rank_tol:
            break
        step = len(kappa) + 1
        res = _orthogonalize(a @ y_prev - k_prev * x_prev, xs)
        nres = float(np.linalg.norm(res))
        if nres > ftol:
            mu.append(nres)
            x_new = res / nres
        else:
            mu.append(0.0)
            x_new = _first_unspanned(ran_t, xs)
            if x_new is None:
                break
            free.append(("x", step))
        xs = np.column_stack([xs, x_new])

        res = _orthogonalize(a.conj().T @ x_new - np.conj(mu[-1]) * y_prev, ys)
        nres = float(np.linalg.norm(res))
        if nres > ftol:
            kappa.append(nres)
            y_new = res / nres
        else:
            kappa.append(0.0)
            y_new = _first_unspanned(ran_ts, ys)
            if y_new is None:
                y_new = np.zeros(n, dtype=complex)
            free.append(("y", step))
        ys = np.column_stack([ys, y_new])
        x_prev, y_prev, k_prev = x_new, y_new, kappa[-1]

    mu.append(0.0)
    return FenyoDecomposition(T, xs, ys, np.asarray(kappa, dtype=float),
                              np.asarray(mu, dtype=float), tuple(free))


def fenyo_reconstruct(dec, f):
    """Both sums sum alpha_n <f, v_n> x_n and sum beta_n <f, y_n> w_n."""
    f = np.asarray(f, dtype=complex)
    first = dec.x @ (dec.alpha * (dec.v.conj().T @ f))
    second = dec.w @ (dec.beta * (dec.y.conj().T @ f))
    return first, second


def fenyo_bilinear_kernel(dec, basis, i=0, j=0, points=None):
    """Kernel sum alpha_n x_n^(i)(s) conj(v_n^(j)(t)) with the beta/w/y form as a check.

    Reports the largest deviation of either series from the kernel built
    straight from T's matrix entries; no convergence claim is made.
    """
    first = _assemble(basis, dec.x * dec.alpha, dec.v, 0.0, i, j, points)
    second = _assemble(basis, dec.w * dec.beta, dec.y, 0.0, i, j, points)
    direct = direct_kernel(dec.T, basis, first.s, first.t, i, j)
    first.diagnostics.update(
        second_series=second.samples,
        deviation_first=float(np.abs(first.samples - direct).max(initial=0.0)),
        deviation_second=float(np.abs(second.samples - direct).max(initial=0.0)),
    )
    return first
