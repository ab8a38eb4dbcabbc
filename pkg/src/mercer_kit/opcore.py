"""Operators as dense complex matrices over an orthonormal basis.

Entry (m, n) of an :class:`OperatorMatrix` is <T u_n, u_m>.  This module
provides SVD with a fixed phase convention, the polar M-factorization,
membership residuals for the multiplication family M(T), the positive-part
check, and the factorization built from a pair of invertible operators and a
sparse diagonal.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgument, NumericalFailure

RANK_TOL = 1e-12
MEMBER_TOL = 1e-8
HERMITIAN_TOL = 1e-12
PSD_FLOOR = 1e-10
COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    basis_id: str = ""

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument(f"operator matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgument("operator matrix has non-finite entries")
        object.__setattr__(self, "entries", a)

    @classmethod
    def identity(cls, n, basis_id=""):
        return cls(np.eye(n, dtype=complex), basis_id)

    @classmethod
    def zeros(cls, n, basis_id=""):
        return cls(np.zeros((n, n), dtype=complex), basis_id)

    @classmethod
    def diagonal(cls, values, basis_id=""):
        return cls(np.diag(np.asarray(values, dtype=complex)), basis_id)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def H(self):
        return adjoint(self)

    def norm(self, kind="fro"):
        return float(np.linalg.norm(self.entries, kind))

    def apply(self, f):
        return self.entries @ np.asarray(f, dtype=complex)

    def like(self, entries):
        return OperatorMatrix(entries, self.basis_id)

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))


def _same_shape(a, b):
    if a.n != b.n:
        raise InvalidArgument(f"dimension mismatch: {a.n} vs {b.n}")
    if a.basis_id and b.basis_id and a.basis_id != b.basis_id:
        raise InvalidArgument(f"basis mismatch: {a.basis_id!r} vs {b.basis_id!r}")
    return a.basis_id or b.basis_id


def matmul(a, b):
    bid = _same_shape(a, b)
    return OperatorMatrix(a.entries @ b.entries, bid)


def add(a, b):
    bid = _same_shape(a, b)
    return OperatorMatrix(a.entries + b.entries, bid)


def adjoint(a):
    return OperatorMatrix(a.entries.conj().T, a.basis_id)


def scale(a, z):
    return OperatorMatrix(complex(z) * a.entries, a.basis_id)


# ---------------------------------------------------------------------------
# SVD
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SVDFactors:
    """T = left @ diag(singular) @ right^H with phase-normalised columns."""

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray
    residual: float

    def rank(self, rtol=RANK_TOL):
        if self.singular.size == 0 or self.singular[0] == 0:
            return 0
        return int(np.sum(self.singular > rtol * self.singular[0]))


def _pivot_phase(col):
    j = int(np.argmax(np.abs(col)))
    z = col[j]
    return z / abs(z) if z != 0 else 1.0


def _raw_svd(a):
    attempts = 0
    for driver in ("gesdd", "gesvd"):
        attempts += 1
        try:
            return sla.svd(a, lapack_driver=driver)
        except (np.linalg.LinAlgError, ValueError):
            continue
    raise NumericalFailure("SVD did not converge with either LAPACK driver", attempts)


def svd(T):
    """SVD with descending singular values and a deterministic phase gauge.

    Each left vector is rotated so its largest-magnitude entry is real positive
    and the matching right vector gets the same rotation.  For (numerically)
    zero singular values the right vector is normalised on its own.
    """
    a = T.entries if isinstance(T, OperatorMatrix) else np.asarray(T, dtype=complex)
    u, s, vh = _raw_svd(a)
    v = vh.conj().T
    smax = s[0] if s.size else 0.0
    for k in range(s.size):
        ph = _pivot_phase(u[:, k])
        u[:, k] /= ph
        if s[k] > RANK_TOL * smax:
            v[:, k] /= ph
        else:
            v[:, k] /= _pivot_phase(v[:, k])
    res = float(np.linalg.norm(a - (u * s) @ v.conj().T))
    if res > 1e-10 * max(np.linalg.norm(a), 1e-300) and res > 1e-300:
        raise NumericalFailure(f"SVD reconstruction residual {res:.2e} too large", 1)
    return SVDFactors(u, s, v, res)


def _range_projector(a, rtol=RANK_TOL):
    """Orthogonal projector onto the column space of ``a``."""
    u, s, _ = _raw_svd(a)
    if s.size == 0 or s[0] == 0:
        return np.zeros_like(a)
    r = int(np.sum(s > rtol * s[0]))
    return u[:, :r] @ u[:, :r].conj().T


def psd_sqrt(a):
    """Principal square root of a Hermitian PSD matrix (negative eigenvalues clipped)."""
    a = 0.5 * (a + a.conj().T)
    w, q = np.linalg.eigh(a)
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T


# ---------------------------------------------------------------------------
# membership in M(T) and M+(T)
# ---------------------------------------------------------------------------

PATTERNS = (
    "A = SM = NS",
    "A = S*M = NS*",
    "A = SM = NS*",
    "A = S*N = MS",
)


@dataclass(frozen=True)
class MembershipReport:
    absolute: tuple
    relative: tuple
    best: float
    best_pattern: int
    member: bool
    tol: float


def membership_residual(A, T, tol=MEMBER_TOL):
    """Least-squares residuals of the four factor patterns with S = T.

    ``A = S M`` is solvable exactly when Ran A lies in Ran S, so its residual
    is the norm of A outside that range; ``A = N S`` likewise uses the row
    space.  Each pattern combines its two residuals by max.
    """
    _same_shape(A, T)
    a, s = A.entries, T.entries
    eye = np.eye(a.shape[0])
    pl = _range_projector(s)
    pr = _range_projector(s.conj().T)
    left_l = np.linalg.norm((eye - pl) @ a)
    left_r = np.linalg.norm((eye - pr) @ a)
    right_r = np.linalg.norm(a @ (eye - pr))
    right_l = np.linalg.norm(a @ (eye - pl))
    absolute = (
        max(left_l, right_r),
        max(left_r, right_l),
        max(left_l, right_l),
        max(left_r, right_r),
    )
    na = np.linalg.norm(a)
    relative = tuple(r / na if na > 0 else 0.0 for r in absolute)
    k = int(np.argmin(relative))
    return MembershipReport(tuple(map(float, absolute)), tuple(map(float, relative)),
                            float(relative[k]), k, bool(relative[k] <= tol), tol)


@dataclass(frozen=True)
class MPlusReport:
    ok: bool
    hermitian_residual: float
    min_eigenvalue: float
    left_residual: float
    right_residual: float
    membership: float
    tol: float


def mplus_check(P, T, tol=MEMBER_TOL):
    """Is P Hermitian, PSD and of the form T B or B T (least squares)?"""
    _same_shape(P, T)
    p, s = P.entries, T.entries
    eye = np.eye(p.shape[0])
    pnorm = np.linalg.norm(p, 2) if p.size else 0.0
    herm = float(np.linalg.norm(p - p.conj().T))
    is_herm = herm <= HERMITIAN_TOL * (1.0 + pnorm)
    w = np.linalg.eigvalsh(0.5 * (p + p.conj().T))
    lam_min = float(w[0]) if w.size else 0.0
    is_psd = lam_min >= -PSD_FLOOR * max(1.0, pnorm)
    pf = np.linalg.norm(p)
    left = float(np.linalg.norm((eye - _range_projector(s)) @ p))
    right = float(np.linalg.norm(p @ (eye - _range_projector(s.conj().T))))
    member = min(left, right) / pf if pf > 0 else 0.0
    ok = bool(is_herm and is_psd and member <= tol)
    return MPlusReport(ok, herm, lam_min, left, right, float(member), tol)


# ---------------------------------------------------------------------------
# factorizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Factorization:
    """T = W V^* with certificates for VV^* and WW^* in M+(T)."""

    W: OperatorMatrix
    V: OperatorMatrix
    T: OperatorMatrix
    residual_T: float
    residual_membership: dict
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.residual_T <= self.tol and all(
            r.ok for r in self.residual_membership.values())


def _certify(T, W, V, details, tol_scale=1.0):
    res = float(np.linalg.norm(T.entries - W.entries @ V.entries.conj().T))
    vv = V.like(V.entries @ V.entries.conj().T)
    ww = W.like(W.entries @ W.entries.conj().T)
    members = {"VV*": mplus_check(vv, T), "WW*": mplus_check(ww, T)}
    tol = 1e-10 * tol_scale * (1.0 + T.norm())
    return Factorization(W, V, T, res, members, tol, details)


def polar_m_factorization(T, tol_scale=1.0):
    """W = U P and V = P with P = |T|^(1/2) and T = U|T| the polar decomposition."""
    f = svd(T)
    r = f.rank()
    abs_t = (f.right * f.singular) @ f.right.conj().T
    p = (f.right * np.sqrt(f.singular)) @ f.right.conj().T
    u = f.left[:, :r] @ f.right[:, :r].conj().T
    W = T.like(u @ p)
    V = T.like(p)
    sq = float(np.linalg.norm(p @ p.conj().T - abs_t))
    details = {"U": T.like(u), "abs_T": T.like(abs_t), "VV_minus_absT": sq, "rank": r}
    return _certify(T, W, V, details, tol_scale)


def riesz_factorization(A, B, lambdas, index_maps, tol_scale=1.0):
    """Factor T = A Lam B where Lam = sum lam_n <., e_{k_n}> e_{m_n}.

    Returns W = A U |Lam|^(1/2) and V = B^* |Lam|^(1/2), U carrying the phases
    of the lam_n.
    """
    _same_shape(A, B)
    n = A.n
    lambdas = np.asarray(lambdas, dtype=complex).ravel()
    m_idx, k_idx = (np.asarray(ix, dtype=int).ravel() for ix in index_maps)
    if not (lambdas.size == m_idx.size == k_idx.size):
        raise InvalidArgument("lambdas and index maps must have equal length")
    for name, ix in (("m", m_idx), ("k", k_idx)):
        if ix.size and (ix.min() < 0 or ix.max() >= n):
            raise InvalidArgument(f"index map {name} out of range 0..{n - 1}")
        if np.unique(ix).size != ix.size:
            raise InvalidArgument(f"index map {name} is not injective")
    if np.any(lambdas == 0):
        raise InvalidArgument("lambdas must be non-zero")
    for name, X in (("A", A), ("B", B)):
        c = np.linalg.cond(X.entries)
        if not np.isfinite(c) or c > COND_MAX:
            raise InvalidArgument(f"{name} is singular at truncation (cond {c:.3g})")

    lam = np.zeros((n, n), dtype=complex)
    uni = np.zeros((n, n), dtype=complex)
    root = np.zeros((n, n))
    lam[m_idx, k_idx] = lambdas
    uni[m_idx, k_idx] = lambdas / np.abs(lambdas)
    root[k_idx, k_idx] = np.sqrt(np.abs(lambdas))
    W = A.like(A.entries @ uni @ root)
    V = A.like(B.entries.conj().T @ root)
    T = A.like(A.entries @ lam @ B.entries)
    details = {"Lambda": A.like(lam), "U": A.like(uni), "abs_Lambda_sqrt": A.like(root)}
    return _certify(T, W, V, details, tol_scale)
