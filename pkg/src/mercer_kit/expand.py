"""Truncated bilinear kernel expansions and the associated diagnostics.

A factorization T = W V^* over a basis {u_n} gives the kernel

    K(s, t) = sum_n [R W u_n]^(i)(s) * conj([V u_n]^(j)(t))

of the operator R T (R = I for the plain kernel).  The columns of R W and V
are kept as coefficient vectors and evaluated on demand.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .basis import gauss_legendre_grid, resolving_grid
from .errors import InvalidArgument, NotRegularValue, UnsupportedInput
from .opcore import OperatorMatrix, psd_sqrt

DEFAULT_SAMPLES = 64
NORMALITY_TOL = 1e-8


def _sample_axes(basis, points):
    if points is None:
        points = DEFAULT_SAMPLES
    if isinstance(points, (int, np.integer)):
        s = basis.sample_points(int(points))
        return s, s
    if isinstance(points, tuple) and len(points) == 2:
        return (np.atleast_1d(np.asarray(points[0], dtype=float)),
                np.atleast_1d(np.asarray(points[1], dtype=float)))
    s = np.atleast_1d(np.asarray(points, dtype=float))
    return s, s


def _check_orders(basis, *orders):
    for k in orders:
        if not 0 <= int(k) <= basis.i_max:
            raise InvalidArgument(
                f"derivative order {k} exceeds basis i_max={basis.i_max}")


@dataclass(frozen=True, eq=False)
class KernelApprox:
    """Sampled truncated kernel sum_n a_n^(i)(s) conj(b_n^(j)(t))."""

    left_columns: np.ndarray
    right_columns: np.ndarray
    lam: complex
    orders: tuple
    s: np.ndarray
    t: np.ndarray
    samples: np.ndarray
    tail_bound: float
    n_terms: int
    basis: object = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def factors(self, s, t):
        i, j = self.orders
        n = self.n_terms
        a = self.basis.evaluate(s, i).T @ self.left_columns[:, :n]
        b = self.basis.evaluate(t, j).T @ self.right_columns[:, :n]
        return a, b

    def evaluate(self, s, t, compensated=True):
        """Kernel values on the tensor grid s x t.

        The compensated path sums terms in index order; the plain path is a
        single matrix product and is used by the quadrature oracle.
        """
        a, b = self.factors(s, t)
        if compensated:
            return _kernels.bilinear_kahan(a, b)
        return a @ b.conj().T

    @property
    def coefficient_matrix(self):
        n = self.n_terms
        return self.left_columns[:, :n] @ self.right_columns[:, :n].conj().T

    def majorant_profile(self):
        """max over the grid of sum_{n>m} |a_n(s)| |b_n(t)| for m = 0..n_terms."""
        a, b = self.factors(self.s, self.t)
        aa, bb = np.abs(a), np.abs(b)
        out = np.zeros(self.n_terms + 1)
        for m in range(self.n_terms):
            out[m] = (aa[:, m:] @ bb[:, m:].T).max()
        return out


def _assemble(basis, left, right, lam, i, j, points, n_terms=None, diagnostics=None):
    _check_orders(basis, i, j)
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    total = left.shape[1]
    n = total if n_terms is None else int(n_terms)
    if not 0 <= n <= total:
        raise InvalidArgument(f"n_terms must lie in 0..{total}")
    s, t = _sample_axes(basis, points)
    a_all = basis.evaluate(s, i).T @ left
    b_all = basis.evaluate(t, j).T @ right
    samples = _kernels.bilinear_kahan(a_all[:, :n], b_all[:, :n])
    tail = 0.0
    if n < total:
        tail = float(np.linalg.norm(a_all[:, n:], axis=1).max()
                     * np.linalg.norm(b_all[:, n:], axis=1).max())
    return KernelApprox(left, right, complex(lam), (int(i), int(j)), s, t, samples,
                        tail, n, basis, dict(diagnostics or {}))


def bilinear_kernel(fact, resolvent=None, basis=None, i=0, j=0, points=None, n_terms=None):
    """Kernel of R T from the factorization T = W V^* (R = I when absent)."""
    W, V = fact.W.entries, fact.V.entries
    if W.shape[0] != basis.size:
        raise InvalidArgument(f"factorization size {W.shape[0]} != basis size {basis.size}")
    lam = 0.0
    if resolvent is not None:
        R = resolvent.R.entries if hasattr(resolvent, "R") else resolvent.entries
        lam = getattr(resolvent, "lam", 0.0)
        W = R @ W
    return _assemble(basis, W, V, lam, i, j, points, n_terms)


def direct_kernel(T, basis, s, t, i=0, j=0):
    """sum_{m,n} T_mn [u_m]^(i)(s) conj([u_n]^(j)(t)) straight from matrix entries."""
    _check_orders(basis, i, j)
    a = T.entries if isinstance(T, OperatorMatrix) else np.asarray(T)
    us = basis.evaluate(s, i)
    ut = basis.evaluate(t, j)
    return us.T @ a @ ut.conj()


def oracle_grid(basis, n_check=8):
    """Quadrature rule for double-integral checks against the first ``n_check`` functions.

    It covers the interval holding the mass of those functions and uses unit
    panels with as many nodes as the basis' resolved frequency requires, which
    is far cheaper than the basis grid on the tensor product.
    """
    funcs = basis.functions[:n_check]
    half = min(basis.grid.L, float(np.ceil(max(f.extent for f in funcs))))
    if basis.grid.frequency <= 0:
        return basis.grid
    return resolving_grid(half, basis.grid.frequency, panels_per_unit=1)


def quadrature_matrix(kernel, n_check=8, grid=None, block=1024):
    """Double quadrature M[m, n] = iint K(s,t) u_n(t) conj(u_m(s)) dt ds.

    The kernel is evaluated on the full tensor grid of quadrature nodes (in
    row blocks), independently of the stored coefficient matrix.
    """
    basis = kernel.basis
    if kernel.orders != (0, 0):
        raise InvalidArgument("quadrature check needs derivative orders (0, 0)")
    n_check = min(n_check, basis.size)
    grid = oracle_grid(basis, n_check) if grid is None else grid
    nodes, w = grid.nodes, grid.weights
    u = basis.evaluate(nodes, 0)[:n_check]
    rhs = (u * w).T
    out = np.zeros((n_check, n_check), dtype=complex)
    for lo in range(0, nodes.size, block):
        sl = slice(lo, lo + block)
        k = kernel.evaluate(nodes[sl], nodes, compensated=False)
        out += (np.conj(u[:, sl]) * w[sl]) @ (k @ rhs)
    return out


# ---------------------------------------------------------------------------
# Carleman functions and operator images
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CarlemanFunctionApprox:
    """s -> coefficient vector of a Carleman function, sampled at ``points``."""

    order: int
    points: np.ndarray
    vectors: np.ndarray
    _rows: np.ndarray = field(repr=False)
    _cols: np.ndarray = field(repr=False)
    basis: object = field(repr=False)

    def evaluate(self, s):
        return _carleman_vectors(self.basis, self.order, self._rows, self._cols, s)

    def norms(self):
        return np.linalg.norm(self.vectors, axis=1)

    def continuity_ok(self, factor=10.0):
        """No jump in the norm larger than ``factor`` times its neighbours' jumps."""
        d = np.abs(np.diff(self.norms()))
        if d.size < 3:
            return True
        scale = np.maximum(np.r_[d[1:], 0.0], np.r_[0.0, d[:-1]])
        return bool(np.all(d <= factor * scale + 1e-12 * (1.0 + self.norms().max())))


def _carleman_vectors(basis, order, rows, cols, s):
    vals = basis.evaluate(s, order).T @ rows
    return np.conj(vals) @ cols.T


def carleman_functions(fact, resolvent, basis, i=0, j=None, points=None):
    """The pair t^(i)(s) = sum conj(a_n^(i)(s)) d_n and t'^(j)(t) = sum conj(b_n^(j)(t)) c_n."""
    j = i if j is None else j
    _check_orders(basis, i, j)
    W = fact.W.entries
    if resolvent is not None:
        W = resolvent.R.entries @ W
    V = fact.V.entries
    s, _ = _sample_axes(basis, points)
    first = CarlemanFunctionApprox(i, s, _carleman_vectors(basis, i, W, V, s), W, V, basis)
    second = CarlemanFunctionApprox(j, s, _carleman_vectors(basis, j, V, W, s), V, W, basis)
    return first, second


def apply_expansion(fact, resolvent, basis, f, i=0, points=None):
    """[T_lam f]^(i)(s) = sum_n <f, V u_n> [R W u_n]^(i)(s) on the sample grid."""
    _check_orders(basis, i)
    W = fact.W.entries
    if resolvent is not None:
        W = resolvent.R.entries @ W
    V = fact.V.entries
    s, _ = _sample_axes(basis, points)
    coeff = V.conj().T @ np.asarray(f, dtype=complex)
    return basis.evaluate(s, i).T @ (W @ coeff)


# ---------------------------------------------------------------------------
# diagonal (eigen) expansion
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenExpansion:
    kernel: KernelApprox
    eigenvalues: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    W: OperatorMatrix
    V: OperatorMatrix
    T: OperatorMatrix
    residuals: dict


def eigen_expansion(H, S, basis, lam=0.0, i=0, j=0, points=None):
    """Kernel of T_lam for T = H (I + S) with Lam = H^(1/2) (I + S) H^(1/2) normal."""
    h, s_ = H.entries, S.entries
    n = h.shape[0]
    if np.linalg.norm(h - h.conj().T) > 1e-12 * (1.0 + np.linalg.norm(h)):
        raise InvalidArgument("H must be Hermitian")
    if np.linalg.eigvalsh(0.5 * (h + h.conj().T))[0] < -1e-10 * max(1.0, np.linalg.norm(h, 2)):
        raise InvalidArgument("H must be positive semidefinite")
    eye = np.eye(n)
    root = psd_sqrt(h)
    Lam = root @ (eye + s_) @ root
    lnorm = np.linalg.norm(Lam, 2)
    comm = np.linalg.norm(Lam @ Lam.conj().T - Lam.conj().T @ Lam, 2)
    if comm > NORMALITY_TOL * lnorm**2:
        raise UnsupportedInput(
            f"H^(1/2)(I+S)H^(1/2) is not normal: commutator {comm:.2e}")
    tri, q = sla.schur(Lam.astype(complex), output="complex")
    evals = np.diag(tri).copy()
    denom = 1.0 - lam * evals
    gap = np.abs(denom).min() if n else 1.0
    if gap <= 1e-12:
        raise NotRegularValue(f"1 - lam*lam_n vanishes (min {gap:.2e})", float(gap))

    W = root
    V = (eye + s_.conj().T) @ root
    T = W @ V.conj().T
    psi = W @ q
    phi = V @ q
    kernel = _assemble(basis, psi / denom, phi, lam, i, j, points)
    gram = phi.conj().T @ psi
    residuals = {
        "eigen": float(np.abs(T @ psi - psi * evals).max()) if n else 0.0,
        "adjoint_eigen": float(np.abs(T.conj().T @ phi - phi * evals.conj()).max()) if n else 0.0,
        "biorthogonality": float(np.abs(gram.T - np.diag(evals)).max()) if n else 0.0,
        "normality": float(comm),
    }
    bid = H.basis_id
    return EigenExpansion(kernel, evals, psi, phi, OperatorMatrix(W, bid),
                          OperatorMatrix(V, bid), OperatorMatrix(T, bid), residuals)


# ---------------------------------------------------------------------------
# Mercer diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MercerReport:
    ell: int
    m_values: tuple
    q1: np.ndarray
    q2: np.ndarray
    q_diff: float
    diagonal_min: np.ndarray
    diagonal_full_residual: float
    nonneg_ok: bool
    tol: float


def _interval_rule(a, b, per_unit, nodes):
    width = b - a
    grid = gauss_legendre_grid(0.5 * width, nodes, per_unit)
    return grid.nodes + 0.5 * (a + b), grid.weights


def mercer_diagnostics(V, basis, ell=0, m=None, rectangles=(), points=None, P=None,
                       nonneg_tol=1e-12):
    """q-identity on rectangles and diagonal non-negativity for P = V V^*.

    q1 integrates (D^ell F)(s,t) - sum_{n<=m} [Vu_n]^(ell)(s) conj([Vu_n]^(ell)(t))
    over the rectangle on a tensor grid, with F built from P's entries.  q2 is
    the tail sum of products of one-dimensional integrals; for ell >= 1 those
    integrals are endpoint differences of the order ell-1 derivative.
    """
    _check_orders(basis, ell)
    v = V.entries
    p = v @ v.conj().T if P is None else P.entries
    n = v.shape[1]
    if m is None:
        m_values = (n,)
    elif np.ndim(m) == 0:
        m_values = (int(m),)
    else:
        m_values = tuple(int(x) for x in m)
    for mm in m_values:
        if not 0 <= mm <= n:
            raise InvalidArgument(f"partial-sum index {mm} outside 0..{n}")

    per_unit = basis.grid.panels_per_unit
    nodes = basis.grid.nodes_per_panel
    q1 = np.zeros((len(rectangles), len(m_values)), dtype=complex)
    q2 = np.zeros_like(q1)
    for r, (a, b, c, d) in enumerate(rectangles):
        xs, ws = _interval_rule(a, b, per_unit, nodes)
        xt, wt = _interval_rule(c, d, per_unit, nodes)
        us = basis.evaluate(xs, ell)
        ut = basis.evaluate(xt, ell)
        dF = us.T @ p @ ut.conj()
        vs = us.T @ v
        vt = ut.T @ v
        if ell == 0:
            int_s = ws @ vs
            int_t = wt @ vt
        else:
            lo = basis.evaluate(np.array([a, b, c, d]), ell - 1).T @ v
            int_s = lo[1] - lo[0]
            int_t = lo[3] - lo[2]
        for k, mm in enumerate(m_values):
            part = vs[:, :mm] @ vt[:, :mm].conj().T
            q1[r, k] = ws @ (dF - part) @ wt
            q2[r, k] = np.sum(int_s[mm:] * np.conj(int_t[mm:]))
    q_diff = float(np.abs(q1 - q2).max()) if q1.size else 0.0

    s, _ = _sample_axes(basis, points)
    us = basis.evaluate(s, ell)
    diag_f = np.real(np.einsum("as,ab,bs->s", us, p, us.conj()))
    cum = np.cumsum(np.abs(us.T @ v) ** 2, axis=1)
    resid = diag_f[:, None] - cum
    diag_min = resid.min(axis=0) if n else np.zeros(0)
    full = float(np.abs(resid[:, -1]).max()) if n else float(np.abs(diag_f).max(initial=0.0))
    tol = nonneg_tol * (1.0 + float(np.abs(diag_f).max(initial=0.0)))
    ok = bool(np.all(diag_min >= -tol))
    return MercerReport(int(ell), m_values, q1, q2, q_diff, diag_min, full, ok, tol)
