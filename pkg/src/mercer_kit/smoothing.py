"""Unitary smoothing of operator families into sampled smooth kernels.

Given operators S_gamma on a coordinate space and an orthonormal sequence
{e_n} on which the family and its adjoints decay, the pipeline

1. selects x_k among the e_n with budget sum_k d(x_k) <= 2,
2. completes them to an orthonormal basis with vectors y_k,
3. maps x_k to wavelets g_k and y_k to coarse-scale wavelets h_k (unitary U),
4. splits S into (I-E)S plus the Hilbert-Schmidt part (S^* E)^*, and
5. assembles the kernel of T = U S U^* from those pieces.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError, InvalidArgument, PlanInfeasible
from .expand import _assemble
from .opcore import OperatorMatrix, svd

BUDGET = 2.0
ORTHO_TOL = 1e-10
UNITARY_TOL = 1e-12


def _as_columns(e, dim):
    e = np.asarray(e, dtype=complex)
    if e.ndim == 1:
        e = e[:, None]
    if e.shape[0] != dim and e.shape[1] == dim:
        e = e.T
    if e.shape[0] != dim:
        raise InvalidArgument(f"e-sequence vectors must have length {dim}")
    return e


@dataclass(frozen=True, eq=False)
class FlatteningReport:
    """Per-n suprema over the family of ||S e_n|| and ||S^* e_n||."""

    sup_S: np.ndarray
    sup_S_adj: np.ndarray
    envelope: np.ndarray
    thresholds: np.ndarray
    decision: bool
    e: np.ndarray
    family: tuple

    @property
    def window(self):
        return self.sup_S.size

    def d_values(self):
        """d(e_n) = 2 (sup ||S e_n||^(1/4) + sup ||S^* e_n||^(1/4))."""
        return 2.0 * (self.sup_S ** 0.25 + self.sup_S_adj ** 0.25)


def check_flattening(family, e=None):
    """Decay test for sup_gamma ||S_gamma e_n|| and sup_gamma ||S_gamma^* e_n||.

    The running-max envelope (from the right) of the larger of the two
    suprema must stay below thresholds max_n a_n / sqrt(n + 1), which
    decrease to zero.
    """
    family = tuple(family)
    if not family:
        raise InvalidArgument("family must contain at least one operator")
    dim = family[0].n
    for S in family:
        if S.n != dim:
            raise InvalidArgument("family members differ in dimension")
    e = np.eye(dim, dtype=complex) if e is None else _as_columns(e, dim)
    gram = e.conj().T @ e
    if np.abs(gram - np.eye(e.shape[1])).max() > ORTHO_TOL:
        raise InvalidArgument("e-sequence is not orthonormal")
    sup_s = np.max([np.linalg.norm(S.entries @ e, axis=0) for S in family], axis=0)
    sup_a = np.max([np.linalg.norm(S.entries.conj().T @ e, axis=0) for S in family], axis=0)
    a = np.maximum(sup_s, sup_a)
    env = np.maximum.accumulate(a[::-1])[::-1]
    top = a.max() if a.size else 0.0
    thresholds = top / np.sqrt(np.arange(a.size) + 1.0)
    decision = bool(top == 0.0 or np.all(env <= thresholds * (1 + 1e-12)))
    return FlatteningReport(sup_s, sup_a, env, thresholds, decision, e, family)


# ---------------------------------------------------------------------------
# plan and unitary
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SmoothingPlan:
    dim: int
    selected: np.ndarray
    d_values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    h_indices: np.ndarray
    g_indices: np.ndarray
    budget: float
    e: np.ndarray
    certificates: dict = field(default_factory=dict)


def _select(d, window):
    """Greedy ascending-d selection while the running total stays within budget."""
    order = np.argsort(d, kind="stable")
    chosen, total = [], 0.0
    for n in order:
        if total + d[n] <= BUDGET:
            chosen.append(int(n))
            total += d[n]
    need = (window + 1) // 2
    if len(chosen) < need:
        minimal = float(np.sort(d)[:need].sum())
        raise PlanInfeasible(
            f"only {len(chosen)} of the required {need} vectors fit the budget "
            f"{BUDGET}; the smallest {need} d-values sum to {minimal:.4g}", minimal)
    return np.sort(np.asarray(chosen, dtype=int))


def _complete(x, dim):
    """Orthonormal complement of span(x) from Gram-Schmidt on coordinate vectors."""
    basis = x.copy()
    extra = []
    for k in range(dim):
        if basis.shape[1] == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for _ in range(2):
            v = v - basis @ (basis.conj().T @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            v = v / nv
            basis = np.column_stack([basis, v])
            extra.append(v)
    if basis.shape[1] != dim:
        raise InternalError("failed to complete the orthonormal basis")
    return np.column_stack(extra) if extra else np.zeros((dim, 0), dtype=complex)


def make_plan(report, wavelet_basis, window=None):
    """Select x_k, complete with y_k and pair them with wavelet indices."""
    if not report.decision:
        raise InvalidArgument("flattening test failed; no plan can be made")
    dim = report.e.shape[0]
    if wavelet_basis.size != dim:
        raise InvalidArgument(f"basis size {wavelet_basis.size} != operator dimension {dim}")
    if wavelet_basis.kind != "wavelet":
        raise InvalidArgument("pairing needs a wavelet basis (scale indices)")
    window = report.window if window is None else int(window)
    if not 1 <= window <= report.window:
        raise InvalidArgument(f"window must lie in 1..{report.window}")
    d = report.d_values()[:window]
    selected = _select(d, window)
    x = report.e[:, selected]
    y = _complete(x, dim)

    alphas = np.array([f.index[0] for f in wavelet_basis.functions])
    order = np.argsort(alphas, kind="stable")
    h = order[: y.shape[1]]
    g = np.setdiff1d(np.arange(dim), h)

    dsel = d[selected]
    budget = float(np.sum(dsel))
    if budget > BUDGET:
        raise InternalError(f"selected budget {budget} exceeds {BUDGET}")
    norms = [f.norm_factor for f in wavelet_basis.functions]
    bounds = np.array([f.derivative_bounds for f in wavelet_basis.functions])
    certs = {
        "budget": budget,
        "budget_limit": BUDGET,
        "sum_N_h": float(sum(norms[k] for k in h)),
        "sum_d_g_bound": [float(np.sum(dsel * bounds[g, i]))
                          for i in range(bounds.shape[1])],
    }
    return SmoothingPlan(dim, selected, dsel, x, y, np.asarray(h, dtype=int),
                         g, budget, report.e, certs)


def build_unitary(plan, dim=None, basis_id=""):
    """U = sum_k e_{g_k} x_k^* + sum_k e_{h_k} y_k^* (so U x_k = g_k, U y_k = h_k)."""
    dim = plan.dim if dim is None else int(dim)
    if dim != plan.dim:
        raise InvalidArgument(f"plan covers dimension {plan.dim}, not {dim}")
    g, h = plan.g_indices, plan.h_indices
    targets = np.concatenate([g, h])
    if targets.size != dim or np.unique(targets).size != dim:
        raise InternalError("plan index sets collide or do not cover the space")
    if g.size != plan.x.shape[1] or h.size != plan.y.shape[1]:
        raise InternalError("plan index sets do not match the x/y counts")
    u = np.zeros((dim, dim), dtype=complex)
    u[g] = plan.x.conj().T
    u[h] = plan.y.conj().T
    err = np.abs(u.conj().T @ u - np.eye(dim)).max()
    if err > UNITARY_TOL:
        raise InternalError(f"U is not unitary (defect {err:.2e})")
    return OperatorMatrix(u, basis_id)


# ---------------------------------------------------------------------------
# splitting and kernel assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SplitComponents:
    E: np.ndarray
    Q: np.ndarray
    Q_tilde: np.ndarray
    J: np.ndarray
    J_tilde: np.ndarray
    residual: float
    residual_adjoint: float


def split_operator(S, plan):
    """J = S E, J~ = S^* E, Q = (I-E) S^*, Q~ = (I-E) S; S = Q~ + J~^*, S^* = Q + J^*."""
    if S.n != plan.dim:
        raise InvalidArgument(f"operator size {S.n} != plan dimension {plan.dim}")
    s = S.entries
    sa = s.conj().T
    E = plan.x @ plan.x.conj().T
    rest = np.eye(S.n) - E
    J, Jt = s @ E, sa @ E
    Q, Qt = rest @ sa, rest @ s
    r1 = float(np.linalg.norm(s - Qt - Jt.conj().T))
    r2 = float(np.linalg.norm(sa - Q - J.conj().T))
    return SplitComponents(E, Q, Qt, J, Jt, r1, r2)


def _fourth_root_parts(J):
    """Schmidt factors of J and the auxiliary B = sum s^(1/4) <., p> q."""
    f = svd(J)
    s = f.singular
    q, p = f.left, f.right
    B = (q * s ** 0.25) @ p.conj().T
    return s, p, q, B


@dataclass(frozen=True, eq=False)
class SmoothedOperator:
    U: OperatorMatrix
    T: OperatorMatrix
    components: dict
    kernel: object
    adjoint_kernel: object
    component_samples: dict
    c_values: np.ndarray
    d_values: np.ndarray
    residuals: dict
    scale: float = 1.0


def smooth_kernel(S, plan, U, basis, i=0, j=0, points=None):
    """Kernel of T = U S U^* assembled as P~ + F~ (and T^* as P + F)."""
    if basis.size != plan.dim:
        raise InvalidArgument(f"basis size {basis.size} != plan dimension {plan.dim}")
    split = split_operator(S, plan)
    u = U.entries
    t = u @ S.entries @ u.conj().T
    eye = np.eye(plan.dim)
    h = plan.h_indices

    # P~(s,t) = sum_k h_k(s) conj([T^* h_k](t)),  P(s,t) = sum_k h_k(s) conj([T h_k](t))
    ph_left, pt_right, p_right = eye[:, h], t.conj().T[:, h], t[:, h]

    st, pt_, qt_, Bt = _fourth_root_parts(split.J_tilde)
    s_, p_, q_, B = _fourth_root_parts(split.J)
    ft_left = (u @ Bt.conj().T @ qt_) * np.sqrt(st)
    ft_right = u @ Bt @ pt_
    f_left = (u @ B.conj().T @ q_) * np.sqrt(s_)
    f_right = u @ B @ p_

    pieces = {
        "P_tilde": (ph_left, pt_right),
        "F_tilde": (ft_left, ft_right),
        "P": (ph_left, p_right),
        "F": (f_left, f_right),
    }
    mats, samples = {}, {}
    for name, (left, right) in pieces.items():
        mats[name] = OperatorMatrix(left @ right.conj().T, U.basis_id)
        samples[name] = _assemble(basis, left, right, 0.0, i, j, points).samples

    kernel = _assemble(basis, np.hstack([ph_left, ft_left]), np.hstack([pt_right, ft_right]),
                       0.0, i, j, points)
    adj = _assemble(basis, np.hstack([ph_left, f_left]), np.hstack([p_right, f_right]),
                    0.0, j, i, points)

    x = plan.x
    c = (np.linalg.norm(B @ x, axis=0) + np.linalg.norm(B.conj().T @ x, axis=0)
         + np.linalg.norm(Bt @ x, axis=0) + np.linalg.norm(Bt.conj().T @ x, axis=0))
    residuals = {
        "unitarity": float(np.abs(u.conj().T @ u - eye).max()),
        "split": split.residual,
        "split_adjoint": split.residual_adjoint,
        "T_matrix": float(np.abs(t - mats["P_tilde"].entries - mats["F_tilde"].entries).max()),
        "T_adj_matrix": float(np.abs(t.conj().T - mats["P"].entries - mats["F"].entries).max()),
        "sample_sum": float(np.abs(kernel.samples - samples["P_tilde"]
                                   - samples["F_tilde"]).max(initial=0.0)),
        "c_minus_d": float(np.max(c - plan.d_values, initial=-np.inf)),
    }
    if np.array_equal(kernel.s, kernel.t):
        residuals["conjugate_transpose"] = float(
            np.abs(kernel.samples - adj.samples.T.conj()).max(initial=0.0))
    return SmoothedOperator(U, OperatorMatrix(t, U.basis_id), mats, kernel, adj, samples,
                            c, plan.d_values, residuals)


def smooth_family(family, plan, coefficients, U, basis, i=0, j=0, points=None):
    """Smooth G = sum z_gamma S_gamma with the shared plan and unitary.

    When sum |z| exceeds 1 the coefficients are rescaled to sum |z| = 1 and the
    factor is recorded in ``scale`` (the kernel then belongs to G / scale).
    """
    family = tuple(family)
    z = np.asarray(coefficients, dtype=complex).ravel()
    if z.size != len(family):
        raise InvalidArgument("one coefficient per family member is required")
    total = float(np.abs(z).sum())
    scale = 1.0
    if total > 1.0:
        scale = total
        z = z / total
    G = OperatorMatrix(sum(zk * S.entries for zk, S in zip(z, family)), U.basis_id)
    out = smooth_kernel(G, plan, U, basis, i, j, points)
    e = plan.e
    sup = np.max([np.linalg.norm(S.entries @ e, axis=0) for S in family], axis=0)
    ge = np.linalg.norm(G.entries @ e, axis=0)
    out.residuals["family_norm_excess"] = float(np.max(ge - sup))
    return SmoothedOperator(out.U, out.T, out.components, out.kernel, out.adjoint_kernel,
                            out.component_samples, out.c_values, out.d_values,
                            out.residuals, scale)
