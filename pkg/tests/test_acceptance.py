"""Acceptance criteria 1-10, each checked at its stated tolerance and time limit.

Every criterion prints one PASS/FAIL line.  The numba kernels are compiled by
the session warm-up fixture before any timing starts.  Run this file directly
(``python tests/test_acceptance.py``) for the summary lines alone.
"""
import time

import numpy as np
import pytest

from mercer_kit import basis as B
from mercer_kit import expand as E
from mercer_kit import opcore as O
from mercer_kit import resolvent as R
from mercer_kit import smoothing as Sm
from mercer_kit.fenyo import fenyo_decompose, fenyo_reconstruct

SEED = 20240611


def _rc(r, *shape):
    return r.standard_normal(shape) + 1j * r.standard_normal(shape)


def _diag_hermite(n=10):
    basis = B.build_hermite_basis(n)
    lam = 2.0 ** -np.arange(n)
    T = O.OperatorMatrix.diagonal(lam, basis.basis_id)
    return basis, lam, T, O.polar_m_factorization(T)


def criterion_1():
    herm = B.build_hermite_basis(16)
    e_h = np.abs(B.gram_matrix(herm) - np.eye(16)).max()
    wav = B.enumerate_wavelet_basis(B.synthesize_mother_wavelet(B.build_meyer_bell()), 16)
    e_w = np.abs(B.gram_matrix(wav) - np.eye(16)).max()
    return e_h <= 1e-10 and e_w <= 1e-6, f"hermite {e_h:.1e} <= 1e-10, wavelet {e_w:.1e} <= 1e-6"


def criterion_2():
    r = np.random.default_rng(SEED)
    worst, members = 0.0, True
    for k in range(50):
        T = O.OperatorMatrix(_rc(r, 1 + k % 12, 1 + k % 12))
        f = O.polar_m_factorization(T)
        worst = max(worst, f.residual_T / (1 + T.norm()))
        members &= all(m.ok for m in f.residual_membership.values())
    return worst <= 1e-10 and members, f"max rel residual {worst:.1e} <= 1e-10, M+ checks {members}"


def criterion_3():
    basis, lam, T, f = _diag_hermite()
    k = E.bilinear_kernel(f, None, basis, 0, 0, 64)
    ref = (basis.evaluate(k.s).T * lam) @ basis.evaluate(k.t).conj()
    err = np.abs(k.samples - ref).max()
    rep = E.mercer_diagnostics(f.V, basis, 0, list(range(11)), [], 64, T)
    worst = float(rep.diagonal_min.min())
    ok = err <= 1e-10 and rep.nonneg_ok
    return ok, f"kernel err {err:.1e} <= 1e-10, min diagonal remainder {worst:.1e} >= -{rep.tol:.0e}"


def criterion_4():
    basis, _, T, f = _diag_hermite()
    r = np.random.default_rng(SEED)
    rects = []
    for _ in range(5):
        a, b = np.sort(r.uniform(-3, 3, 2))
        c, d = np.sort(r.uniform(-3, 3, 2))
        rects.append((a, b, c, d))
    rep = E.mercer_diagnostics(f.V, basis, 0, [1, 5, 10], rects, P=T)
    return rep.q_diff <= 1e-8, f"max |q1-q2| {rep.q_diff:.1e} <= 1e-8"


def criterion_5():
    r = np.random.default_rng(SEED)
    ident = solve = first = 0.0
    ok = True
    for k in range(20):
        n = 2 + k % 11
        t = _rc(r, n, n)
        lam = np.exp(2j * np.pi * r.uniform()) * r.uniform(0.2, 2.0)
        t *= r.uniform(0.1, 0.9) / (abs(lam) * np.linalg.norm(t, 2))
        T = O.OperatorMatrix(t)
        ctx = R.regular_value(T, lam)
        ident_k = max(ctx.residual_left, ctx.residual_right)
        sol = R.solve_second_kind(ctx, _rc(r, n))
        first_k = R.first_resolvent_residual(T, lam, lam * r.uniform(-1, 1))
        ok &= ident_k <= 1e-10 * n and sol.residual <= 1e-9 and first_k <= 1e-8
        ident, solve, first = max(ident, ident_k), max(solve, sol.residual), max(first, first_k)
    return ok, (f"identities {ident:.1e} <= 1e-10*N, solve {solve:.1e} <= 1e-9, "
                f"first identity {first:.1e} <= 1e-8")


def criterion_6():
    basis, lam_n, T, f = _diag_hermite()
    lam = 1 / 3
    ctx = R.regular_value(T, lam)
    k = R.resolvent_kernel(f, ctx, basis)
    w_err = np.abs(np.diag(k.coefficient_matrix) - lam_n / (1 - lam * lam_n)).max()
    off = np.abs(k.coefficient_matrix - np.diag(np.diag(k.coefficient_matrix))).max()
    quad = E.quadrature_matrix(k, 8)
    q_err = np.abs(quad - (T.entries @ ctx.R.entries)[:8, :8]).max()
    gram = k.diagnostics["gram_identity"]
    ok = max(w_err, off) <= 1e-9 and q_err <= 1e-6 and gram <= 1e-9
    return ok, f"weights {max(w_err, off):.1e} <= 1e-9, quadrature {q_err:.1e} <= 1e-6, gram {gram:.1e} <= 1e-9"


def criterion_7():
    r = np.random.default_rng(SEED)
    cases = [O.OperatorMatrix(_rc(r, 1 + k % 8, 1 + k % 8)) for k in range(50)]
    x = np.array([0.6, 0.8, 0.0])
    y = np.array([1.0, 1.0, 1.0j]) / np.sqrt(3)
    cases.append(O.OperatorMatrix(2.5 * np.outer(x, y.conj())))
    recon = ortho = 0.0
    rank_one = fenyo_decompose(cases[-1])
    hand = (rank_one.size == 1 and np.allclose(rank_one.x[:, 0], x)
            and np.allclose(rank_one.y[:, 0], y) and abs(rank_one.kappa[0] - 2.5) < 1e-12)
    for T in cases:
        dec = fenyo_decompose(T)
        ortho = max(ortho, *dec.orthonormality())
        tn = np.linalg.norm(T.entries, 2)
        for _ in range(20):
            f = _rc(r, T.n)
            ref = T.entries @ f
            a, b = fenyo_reconstruct(dec, f)
            scale = tn * np.linalg.norm(f)
            recon = max(recon, np.linalg.norm(a - ref) / scale, np.linalg.norm(b - ref) / scale)
    ok = recon <= 1e-9 and ortho <= 1e-10 and hand
    return ok, f"reconstruction {recon:.1e} <= 1e-9, orthonormality {ortho:.1e} <= 1e-10, rank-1 trace {hand}"


def criterion_8():
    mother = B.synthesize_mother_wavelet(B.build_meyer_bell())
    basis = B.enumerate_wavelet_basis(mother, 24)
    k = np.arange(1, 25)
    S = O.OperatorMatrix.diagonal(16.0 ** -(k + 2.0), basis.basis_id)
    plan = Sm.make_plan(Sm.check_flattening([S]), basis, 24)
    U = Sm.build_unitary(plan, 24, basis.basis_id)
    out = Sm.smooth_kernel(S, plan, U, basis)
    quad = E.quadrature_matrix(out.kernel, 8)
    target = (U.entries @ S.entries @ U.entries.conj().T)[:8, :8]
    q_err = np.abs(quad - target).max()
    conj = out.residuals["conjugate_transpose"]
    S2 = O.OperatorMatrix.diagonal(8.0 ** -(k + 4.0), basis.basis_id)
    z = [0.5, 0.5j]
    mix = Sm.smooth_family([S, S2], plan, z, U, basis)
    second = Sm.smooth_kernel(S2, plan, U, basis)
    lin = np.abs(mix.kernel.samples - z[0] * out.kernel.samples
                 - z[1] * second.kernel.samples).max()
    budget_ok = plan.budget <= 2 and abs(plan.budget - 1) <= 2.0**-24 + 1e-15
    ok = budget_ok and q_err <= 1e-6 and conj <= 1e-8 and lin <= 1e-10
    return ok, (f"sum d {plan.budget:.8f} (= 1 - 2^-24) <= 2, quadrature {q_err:.1e} <= 1e-6, "
                f"conj-transpose {conj:.1e} <= 1e-8, linearity {lin:.1e} <= 1e-10")


def criterion_9():
    basis = B.build_hermite_basis(10)
    r = np.random.default_rng(SEED)
    H = O.OperatorMatrix.diagonal(np.sort(r.uniform(0, 1, 10))[::-1], basis.basis_id)
    Z = O.OperatorMatrix.zeros(10, basis.basis_id)
    ex = E.eigen_expansion(H, Z, basis, 0.0)
    fact = O.polar_m_factorization(ex.T)
    bil = E.bilinear_kernel(O.Factorization(ex.W, ex.V, ex.T, 0, {}, 1), None, basis)
    polar = E.bilinear_kernel(fact, None, basis)
    red = max(np.abs(ex.kernel.samples - bil.samples).max(),
              np.abs(ex.kernel.samples - polar.samples).max())
    eig, bio = ex.residuals["eigen"], ex.residuals["biorthogonality"]
    ok = eig <= 1e-9 and bio <= 1e-9 and red <= 1e-10
    return ok, f"eigen {eig:.1e} <= 1e-9, biorthogonality {bio:.1e} <= 1e-9, lambda=0 reduction {red:.1e} <= 1e-10"


def criterion_10():
    basis, lam, _, f = _diag_hermite()
    k = E.bilinear_kernel(f, None, basis, 1, 1, 64)
    ref = (basis.evaluate(k.s, 1).T * lam) @ basis.evaluate(k.t, 1).conj()
    err = np.abs(k.samples - ref).max()
    return err <= 1e-8, f"derivative kernel err {err:.1e} <= 1e-8"


CRITERIA = [
    (1, "basis fidelity", criterion_1, 10.0),
    (2, "factorization certificates", criterion_2, 5.0),
    (3, "Mercer reduction", criterion_3, 10.0),
    (4, "q-identity diagnostic", criterion_4, 10.0),
    (5, "resolvent identities", criterion_5, 5.0),
    (6, "resolvent kernel", criterion_6, 30.0),
    (7, "two-sequence decomposition", criterion_7, 10.0),
    (8, "smoothing pipeline", criterion_8, 60.0),
    (9, "eigen-expansion", criterion_9, 10.0),
    (10, "derivative expansions", criterion_10, 10.0),
]


def evaluate(number, name, fn, limit):
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    passed = bool(ok) and elapsed < limit
    line = (f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {name}: {detail}; "
            f"{elapsed:.2f}s < {limit:g}s")
    return passed, line


@pytest.mark.parametrize("number,name,fn,limit", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_criterion(number, name, fn, limit, capsys):
    passed, line = evaluate(number, name, fn, limit)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    from mercer_kit import _kernels
    x = np.linspace(-1.0, 1.0, 4)
    _kernels.meyer_table(x, 1.0, 0.1, np.ones(3), 3)
    _kernels.hermite_table(x, 3)
    _kernels.bilinear_kahan(np.ones((2, 2), complex), np.ones((2, 2), complex))
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(p for p, _ in results) else 1)
