"""Regular values, the Fredholm resolvent and second-kind equations.

For a regular value lam the resolvent is R = (I - lam T)^(-1) and the
Fredholm resolvent is T_lam = T R; the equation f - lam T f = g has the
unique solution f = g + lam T_lam g.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import CertificateError, InvalidArgument, NotRegularValue
from .expand import bilinear_kernel
from .opcore import OperatorMatrix

COND_MAX = 1e12
IDENTITY_TOL = 1e-10
SOLVE_TOL = 1e-8
GRAM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ResolventContext:
    lam: complex
    T: OperatorMatrix
    R: OperatorMatrix
    T_lambda: OperatorMatrix
    condition_number: float
    smallest_singular_value: float
    residual_left: float
    residual_right: float
    tol: float


def regular_value(T, lam, cond_max=COND_MAX, tol_scale=1.0):
    """Invert I - lam T if its condition number is at most ``cond_max``.

    The inverse comes from an LU factorization with partial pivoting and one
    step of iterative refinement; both identities (I - lam T) R = I and
    R (I - lam T) = I are then certified.
    """
    lam = complex(lam)
    n = T.n
    eye = np.eye(n, dtype=complex)
    m = eye - lam * T.entries
    sv = sla.svdvals(m) if n else np.zeros(0)
    smin = float(sv[-1]) if n else 1.0
    cond = float(sv[0] / smin) if n and smin > 0 else (1.0 if not n else np.inf)
    if not cond <= cond_max:
        raise NotRegularValue(
            f"I - lam*T is not invertible at lam={lam} (cond {cond:.3g} > {cond_max:.3g})",
            smin)
    lu = sla.lu_factor(m)
    r = sla.lu_solve(lu, eye)
    r = r + sla.lu_solve(lu, eye - m @ r)
    left = float(np.linalg.norm(m @ r - eye))
    right = float(np.linalg.norm(r @ m - eye))
    tol = IDENTITY_TOL * tol_scale * max(n, 1)
    if left > tol or right > tol:
        raise CertificateError("resolvent identity", max(left, right), tol)
    R = T.like(r)
    return ResolventContext(lam, T, R, T.like(T.entries @ r), cond, smin, left, right, tol)


@dataclass(frozen=True, eq=False)
class SecondKindSolution:
    f: np.ndarray
    residual: float
    tol: float


def solve_second_kind(ctx, g, tol_scale=1.0):
    """f = g + lam T_lam g, certified by ||f - lam T f - g||."""
    g = np.asarray(g, dtype=complex).ravel()
    if g.size != ctx.T.n:
        raise InvalidArgument(f"g has length {g.size}, operator size is {ctx.T.n}")
    f = g + ctx.lam * (ctx.T_lambda.entries @ g)
    res = float(np.linalg.norm(f - ctx.lam * (ctx.T.entries @ f) - g))
    tol = SOLVE_TOL * tol_scale * (1.0 + np.linalg.norm(g))
    if res > tol:
        raise CertificateError("second-kind residual", res, tol)
    return SecondKindSolution(f, res, tol)


def first_resolvent_residual(T, lam, mu):
    """|| T_lam - T_mu - (lam - mu) T_lam T_mu ||_F."""
    a = regular_value(T, lam).T_lambda.entries
    b = regular_value(T, mu).T_lambda.entries
    return float(np.linalg.norm(a - b - (complex(lam) - complex(mu)) * a @ b))


def gram_identity_residual(fact, ctx):
    """Residual of R G R^* = G + lam T R G + conj(lam) G R^* T^* + |lam|^2 T R G R^* T^*."""
    w = fact.W.entries
    r = ctx.R.entries
    t = ctx.T.entries
    lam = ctx.lam
    g = w @ w.conj().T
    wl = r @ w
    lhs = wl @ wl.conj().T
    tr = t @ r
    rhs = (g + lam * tr @ g + np.conj(lam) * g @ tr.conj().T
           + abs(lam) ** 2 * tr @ g @ tr.conj().T)
    return float(np.linalg.norm(lhs - rhs)), float(np.linalg.norm(lhs))


def resolvent_kernel(fact, ctx, basis, i=0, j=0, points=None, n_terms=None, tol_scale=1.0):
    """Kernel of T_lam from the factorization T = W V^* with left factor R W."""
    if fact.T.n != ctx.T.n:
        raise InvalidArgument("factorization and resolvent context differ in size")
    gap = np.linalg.norm(fact.T.entries - ctx.T.entries)
    if gap > 1e-10 * (1.0 + ctx.T.norm()):
        raise InvalidArgument(f"factorization does not match the operator (gap {gap:.2e})")
    res, scale = gram_identity_residual(fact, ctx)
    tol = GRAM_TOL * tol_scale * (1.0 + scale)
    if res > tol:
        raise CertificateError("resolvent Gram identity", res, tol)
    kernel = bilinear_kernel(fact, ctx, basis, i, j, points, n_terms)
    kernel.diagnostics.update(gram_identity=res, gram_identity_tol=tol)
    return kernel


def solve_by_kernel(kernel, g_t, quadrature, g_s=None):
    """f(s_k) = g(s_k) + lam sum_l w_l K(s_k, t_l) g(t_l).

    The kernel's t-grid must be the quadrature nodes; ``g_s`` gives g on the
    s-grid and may be omitted when both grids coincide.
    """
    t = np.asarray(kernel.t)
    if t.shape != quadrature.nodes.shape or not np.allclose(t, quadrature.nodes, atol=0, rtol=0):
        raise InvalidArgument("kernel t-grid does not match the quadrature nodes")
    g_t = np.asarray(g_t, dtype=complex)
    if g_t.shape != t.shape:
        raise InvalidArgument("g must be sampled on the kernel t-grid")
    if g_s is None:
        if kernel.s.shape != t.shape or np.any(kernel.s != t):
            raise InvalidArgument("g on the s-grid is required when the grids differ")
        g_s = g_t
    g_s = np.asarray(g_s, dtype=complex)
    return g_s + kernel.lam * (kernel.samples @ (quadrature.weights * g_t))
