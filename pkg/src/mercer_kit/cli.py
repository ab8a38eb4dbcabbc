"""Command-line pipelines: basis, factorize, expand, solve, fenyo, smooth, diagnose.

Every subcommand reads a JSON config, writes its artifacts into ``--out`` and
a ``report.json`` listing each residual next to the tolerance it was checked
against.  Exit status: 0 all checks pass, 1 invalid input, 2 a numerical
certificate failed, 3 lambda is not a regular value.
"""
import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _kernels
from . import io as mio
from .basis import (build_hermite_basis, build_meyer_bell, enumerate_wavelet_basis,
                    gram_matrix, synthesize_mother_wavelet)
from .errors import (CertificateError, InvalidArgument, MercerKitError, NotRegularValue,
                     NumericalFailure, PlanInfeasible, ResolutionError, UnsupportedInput)
from .expand import (apply_expansion, bilinear_kernel, carleman_functions, direct_kernel,
                     mercer_diagnostics, quadrature_matrix)
from .fenyo import fenyo_decompose, fenyo_reconstruct
from .opcore import OperatorMatrix, polar_m_factorization, psd_sqrt, riesz_factorization
from .resolvent import regular_value, resolvent_kernel, solve_by_kernel, solve_second_kind
from .smoothing import build_unitary, check_flattening, make_plan, smooth_family, smooth_kernel

EXIT_OK, EXIT_INVALID, EXIT_CERTIFICATE, EXIT_NOT_REGULAR = 0, 1, 2, 3
COMMANDS = ("basis", "factorize", "expand", "solve", "fenyo", "smooth", "diagnose")


@dataclass
class RunConfig:
    subcommand: str
    settings: dict
    base_dir: str = "."
    out: str = "."
    seed: int = 0
    tol_scale: float = 1.0

    def validate(self):
        if self.subcommand not in COMMANDS:
            raise InvalidArgument(f"unknown subcommand {self.subcommand!r}")
        if not (self.tol_scale > 0 and np.isfinite(self.tol_scale)):
            raise InvalidArgument(f"tol-scale must be positive, got {self.tol_scale}")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgument(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        for key, value in self.settings.items():
            if key.endswith("_tol") and not float(value) > 0:
                raise InvalidArgument(f"tolerance {key} must be positive, got {value}")
        if "truncation" in self.settings and self.settings["truncation"] is not None:
            if int(self.settings["truncation"]) < 1:
                raise InvalidArgument("truncation N must be at least 1")
        for ref in _file_refs(self.settings):
            mio.require_file(os.path.join(self.base_dir, ref))
        return self

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def tol(self, key, default):
        return float(self.settings.get(key, default)) * self.tol_scale

    def matrix(self, key):
        if key not in self.settings:
            raise InvalidArgument(f"config is missing '{key}'")
        return mio.resolve_matrix(self.settings[key], self.base_dir)

    def path(self, key):
        return os.path.join(self.base_dir, self.settings[key])


def _file_refs(settings):
    for key in ("matrix", "A", "B", "g", "f", "factor", "e"):
        if isinstance(settings.get(key), str):
            yield settings[key]
    for ref in settings.get("family", []) or []:
        if isinstance(ref, str):
            yield ref


@dataclass
class Report:
    command: str
    seed: int
    tol_scale: float
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def check(self, name, residual, tol):
        residual = float(residual)
        self.checks[name] = {"residual": residual, "tol": float(tol),
                             "pass": bool(residual <= tol)}

    @property
    def ok(self):
        return all(c["pass"] for c in self.checks.values())

    def record(self):
        return {"schema_version": mio.SCHEMA_VERSION, "command": self.command,
                "version": __version__, "seed": self.seed, "tol_scale": self.tol_scale,
                "ok": self.ok, "checks": self.checks, "info": self.info,
                "outputs": sorted(self.outputs)}


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def build_basis(spec, default_count):
    spec = dict(spec or {})
    kind = spec.get("kind", "hermite")
    count = int(spec.get("count", default_count))
    i_max = int(spec.get("i_max", 3))
    if count < 1:
        raise InvalidArgument("basis count must be at least 1")
    if kind == "hermite":
        return build_hermite_basis(count, i_max)
    if kind == "wavelet":
        edges = tuple(spec.get("band_edges", (2 * np.pi / 3, 8 * np.pi / 3)))
        mother = synthesize_mother_wavelet(build_meyer_bell(edges),
                                           int(spec.get("fft_size", 4096)), i_max)
        return enumerate_wavelet_basis(mother, count)
    raise InvalidArgument(f"basis kind must be 'hermite' or 'wavelet', got {kind!r}")


def _on_basis(op, basis):
    if op.basis_id and op.basis_id != basis.basis_id:
        raise InvalidArgument(f"matrix basis_id {op.basis_id!r} != basis {basis.basis_id!r}")
    if op.n != basis.size:
        raise InvalidArgument(f"matrix size {op.n} != basis size {basis.size}")
    return OperatorMatrix(op.entries, basis.basis_id)


def _orders(cfg):
    i, j = (int(k) for k in cfg.get("orders", (0, 0)))
    return i, j


def _lambda(cfg):
    return mio.parse_complex(cfg.get("lambda", 0.0))


def _emit(cfg, report, name, writer, *args):
    path = os.path.join(cfg.out, name)
    writer(path, *args)
    report.outputs.append(name)
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_basis(cfg, report):
    basis = build_basis(cfg.get("basis", cfg.settings), 16)
    default_tol = 1e-10 if basis.kind == "hermite" else 1e-6
    gram = gram_matrix(basis)
    report.check("gram_minus_identity", np.abs(gram - np.eye(basis.size)).max(),
                 cfg.tol("gram_tol", default_tol))
    report.info.update(basis_id=basis.basis_id, grid_nodes=basis.grid.size,
                       weight_sum_error=basis.grid.weight_sum_error())
    _emit(cfg, report, "basis.json", mio.write_json, mio.basis_record(basis))
    s = basis.sample_points(int(cfg.get("samples", 64)))
    _emit(cfg, report, "basis_samples.csv", mio.write_basis_samples, basis, s)


def _factorize(cfg, T):
    method = cfg.get("method", "polar")
    if method == "polar":
        return polar_m_factorization(T, cfg.tol_scale)
    if method == "riesz":
        A, B = cfg.matrix("A"), cfg.matrix("B")
        lambdas = [mio.parse_complex(v) for v in cfg.get("lambdas", [])]
        return riesz_factorization(A, B, lambdas, cfg.get("index_maps", ([], [])),
                                   cfg.tol_scale)
    raise InvalidArgument(f"factorization method must be 'polar' or 'riesz', got {method!r}")


def _factorization_checks(report, fact):
    report.check("T_minus_WV*", fact.residual_T, fact.tol)
    for name, m in fact.residual_membership.items():
        report.check(f"{name}_membership", m.membership, m.tol)
        report.check(f"{name}_hermitian", m.hermitian_residual, 1e-12 * (1.0 + fact.T.norm()))
        report.check(f"{name}_negative_eigenvalue", max(0.0, -m.min_eigenvalue),
                     1e-10 * max(1.0, fact.T.norm()))


def cmd_factorize(cfg, report):
    T = None if cfg.get("method", "polar") == "riesz" else cfg.matrix("matrix")
    fact = _factorize(cfg, T)
    _factorization_checks(report, fact)
    report.info.update(method=cfg.get("method", "polar"), n=fact.T.n)
    _emit(cfg, report, "W.json", mio.write_matrix, fact.W)
    _emit(cfg, report, "V.json", mio.write_matrix, fact.V)
    _emit(cfg, report, "T.json", mio.write_matrix, fact.T)


def cmd_expand(cfg, report):
    T0 = cfg.matrix("matrix")
    basis = build_basis(cfg.get("basis"), T0.n)
    T = _on_basis(T0, basis)
    lam = _lambda(cfg)
    i, j = _orders(cfg)
    samples = int(cfg.get("samples", 64))
    n_terms = cfg.get("truncation")
    fact = polar_m_factorization(T, cfg.tol_scale)
    _factorization_checks(report, fact)
    ctx = regular_value(T, lam, tol_scale=cfg.tol_scale)
    report.check("resolvent_identity", max(ctx.residual_left, ctx.residual_right), ctx.tol)

    kernel = resolvent_kernel(fact, ctx, basis, i, j, samples, n_terms, cfg.tol_scale)
    report.check("gram_identity", kernel.diagnostics["gram_identity"],
                 kernel.diagnostics["gram_identity_tol"])
    _emit(cfg, report, "kernel.csv", mio.write_kernel, kernel)
    report.outputs.append("kernel_meta.json")

    # Double quadrature of the untruncated order-(0,0) kernel against T R.
    n_check = min(int(cfg.get("n_check", 8)), basis.size)
    k00 = kernel if (i, j) == (0, 0) and kernel.n_terms == basis.size else \
        resolvent_kernel(fact, ctx, basis, 0, 0, 2, None, cfg.tol_scale)
    quad = quadrature_matrix(k00, n_check)
    target = ctx.T_lambda.entries[:n_check, :n_check]
    report.check("quadrature_consistency", np.abs(quad - target).max(),
                 cfg.tol("quadrature_tol", 1e-6))

    if lam == 0 and kernel.n_terms == basis.size:
        direct = direct_kernel(T, basis, kernel.s, kernel.t, i, j)
        report.check("lambda0_direct_sum", np.abs(kernel.samples - direct).max(),
                     cfg.tol("direct_tol", 1e-10) * (1.0 + np.abs(direct).max()))

    first, second = carleman_functions(fact, ctx, basis, i, j, samples)
    rows = [("first", first), ("second", second)]
    _emit(cfg, report, "carleman.csv", _write_carleman, rows)
    report.info.update(carleman_continuity=[first.continuity_ok(), second.continuity_ok()],
                       tail_bound=kernel.tail_bound, truncation=kernel.n_terms,
                       basis_id=basis.basis_id)

    if cfg.get("f") is not None:
        f = mio.read_vector(cfg.path("f"))
        if f.size != T.n:
            raise InvalidArgument(f"f has length {f.size}, operator size is {T.n}")
        s = first.points
        image = apply_expansion(fact, ctx, basis, f, i, s)
        matrix_route = basis.evaluate(s, i).T @ (ctx.T_lambda.entries @ f)
        report.check("apply_matrix_route", np.abs(image - matrix_route).max(),
                     cfg.tol("apply_tol", 1e-10) * (1.0 + np.abs(matrix_route).max()))
        _emit(cfg, report, "apply.csv", mio.write_sampled, s, image)


def _write_carleman(path, rows):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["which", "s", "n", "re", "im"])
        for name, approx in rows:
            for x, vec in zip(approx.points, approx.vectors):
                for n, z in enumerate(vec):
                    w.writerow([name, mio.fmt(x), n, mio.fmt(z.real), mio.fmt(z.imag)])


def cmd_solve(cfg, report):
    T = cfg.matrix("matrix")
    if cfg.get("g") is None:
        raise InvalidArgument("config is missing 'g'")
    g = mio.read_vector(cfg.path("g"))
    lam = _lambda(cfg)
    ctx = regular_value(T, lam, tol_scale=cfg.tol_scale)
    report.check("resolvent_identity", max(ctx.residual_left, ctx.residual_right), ctx.tol)
    sol = solve_second_kind(ctx, g, cfg.tol_scale)
    report.check("second_kind_residual", sol.residual, sol.tol)
    report.info.update(condition_number=ctx.condition_number,
                       smallest_singular_value=ctx.smallest_singular_value)
    _emit(cfg, report, "f.csv", mio.write_vector, sol.f)

    if cfg.get("basis") is not None:
        basis = build_basis(cfg.get("basis"), T.n)
        Tb = _on_basis(T, basis)
        ctx_b = regular_value(Tb, lam, tol_scale=cfg.tol_scale)
        fact = polar_m_factorization(Tb, cfg.tol_scale)
        grid = basis.grid
        s = basis.sample_points(int(cfg.get("samples", 64)))
        kernel = resolvent_kernel(fact, ctx_b, basis, 0, 0, (s, grid.nodes), None,
                                  cfg.tol_scale)
        f_kernel = solve_by_kernel(kernel, basis.synthesize(g, grid.nodes),
                                   grid, basis.synthesize(g, s))
        f_coeff = basis.synthesize(sol.f, s)
        report.check("kernel_route_agreement", np.abs(f_kernel - f_coeff).max(),
                     cfg.tol("kernel_route_tol", 1e-6) * (1.0 + np.abs(f_coeff).max()))
        _emit(cfg, report, "f_sampled.csv", mio.write_sampled, s, f_kernel)


def cmd_fenyo(cfg, report):
    T = cfg.matrix("matrix")
    dec = fenyo_decompose(T)
    ex, ey = dec.orthonormality()
    otol = cfg.tol("orthonormality_tol", 1e-10)
    report.check("x_orthonormality", ex, otol)
    report.check("y_orthonormality", ey, otol)
    rng = np.random.default_rng(cfg.seed)
    worst1 = worst2 = 0.0
    tnorm = np.linalg.norm(T.entries, 2) if T.n else 0.0
    for _ in range(int(cfg.get("n_random", 20))):
        f = rng.standard_normal(T.n) + 1j * rng.standard_normal(T.n)
        ref = T.entries @ f
        first, second = fenyo_reconstruct(dec, f)
        scale = max(tnorm * np.linalg.norm(f), np.finfo(float).tiny)
        worst1 = max(worst1, np.linalg.norm(first - ref) / scale)
        worst2 = max(worst2, np.linalg.norm(second - ref) / scale)
    rtol = cfg.tol("reconstruction_tol", 1e-9)
    report.check("reconstruction_alpha_v_x", worst1, rtol)
    report.check("reconstruction_beta_y_w", worst2, rtol)
    report.info.update(terms=dec.size, free_choices=[list(c) for c in dec.free_choices])
    _emit(cfg, report, "fenyo.json", mio.write_json, mio.fenyo_record(dec))


def cmd_smooth(cfg, report):
    refs = cfg.get("family")
    if not refs:
        raise InvalidArgument("config needs a non-empty 'family' list")
    family = [mio.resolve_matrix(r, cfg.base_dir) for r in refs]
    dim = family[0].n
    basis = build_basis(dict(cfg.get("basis") or {}, kind="wavelet"), dim)
    family = [_on_basis(S, basis) for S in family]
    e = None
    if cfg.get("e") is not None:
        e = cfg.matrix("e").entries
    flat = check_flattening(family, e)
    report.info["flattening_decision"] = flat.decision
    if not flat.decision:
        raise CertificateError("flattening envelope", float(np.max(flat.envelope - flat.thresholds)),
                               0.0)
    plan = make_plan(flat, basis, cfg.get("window"))
    report.check("budget", plan.budget, plan.certificates["budget_limit"])
    U = build_unitary(plan, dim, basis.basis_id)
    i, j = _orders(cfg)
    samples = int(cfg.get("samples", 64))
    coeffs = cfg.get("coefficients")
    if coeffs is None:
        if len(family) != 1:
            raise InvalidArgument("a family of several operators needs 'coefficients'")
        out = smooth_kernel(family[0], plan, U, basis, i, j, samples)
    else:
        z = [mio.parse_complex(c) for c in coeffs]
        out = smooth_family(family, plan, z, U, basis, i, j, samples)
        members = [smooth_kernel(S, plan, U, basis, i, j, samples).kernel.samples
                   for S in family]
        combo = sum(zk * m for zk, m in zip(np.asarray(z) / out.scale, members))
        report.check("family_linearity", np.abs(out.kernel.samples - combo).max(),
                     cfg.tol("linearity_tol", 1e-10))
        report.check("family_norm_excess", max(0.0, out.residuals["family_norm_excess"]),
                     1e-12 * (1.0 + max(S.norm() for S in family)))
        report.info["coefficient_scale"] = out.scale
    tight = cfg.tol("matrix_tol", 1e-12) * (1.0 + out.T.norm())
    report.check("unitarity", out.residuals["unitarity"], cfg.tol("unitary_tol", 1e-12))
    for name in ("split", "split_adjoint", "T_matrix", "T_adj_matrix"):
        report.check(name, out.residuals[name], tight)
    if "conjugate_transpose" in out.residuals:
        report.check("conjugate_transpose", out.residuals["conjugate_transpose"],
                     cfg.tol("conjugate_tol", 1e-8))
    kernel = out.kernel
    if (i, j) != (0, 0):
        G = out.U.H @ out.T @ out.U
        kernel = smooth_kernel(G, plan, U, basis, 0, 0, 2).kernel
    n_check = min(int(cfg.get("n_check", 8)), dim)
    quad = quadrature_matrix(kernel, n_check)
    report.check("quadrature_consistency",
                 np.abs(quad - out.T.entries[:n_check, :n_check]).max(),
                 cfg.tol("quadrature_tol", 1e-6))
    report.info.update(selected=plan.selected.tolist(), sum_d=plan.budget,
                       certificates=plan.certificates, basis_id=basis.basis_id)
    _emit(cfg, report, "plan.json", mio.write_json, mio.plan_record(plan))
    _emit(cfg, report, "U.json", mio.write_matrix, out.U)
    _emit(cfg, report, "kernel.csv", mio.write_kernel, out.kernel)
    report.outputs.append("kernel_meta.json")


def cmd_diagnose(cfg, report):
    if cfg.get("factor") is not None:
        V0 = cfg.matrix("factor")
        P0 = None
    else:
        P0 = cfg.matrix("matrix")
        p = P0.entries
        if np.linalg.norm(p - p.conj().T) > 1e-12 * (1.0 + np.linalg.norm(p)):
            raise InvalidArgument("matrix must be Hermitian (P = V V^*)")
        V0 = OperatorMatrix(psd_sqrt(p), P0.basis_id)
    basis = build_basis(cfg.get("basis"), V0.n)
    V = _on_basis(V0, basis)
    P = None if P0 is None else _on_basis(P0, basis)
    ell = int(cfg.get("ell", 0))
    n = V.n
    m = cfg.get("m", sorted({1, max(1, n // 2), n}))
    rects = cfg.get("rectangles")
    if rects is None:
        rng = np.random.default_rng(cfg.seed)
        half = min(3.0, float(basis.grid.L))
        rects = []
        for _ in range(int(cfg.get("n_rectangles", 5))):
            a, b = np.sort(rng.uniform(-half, half, 2))
            c, d = np.sort(rng.uniform(-half, half, 2))
            rects.append((float(a), float(b), float(c), float(d)))
    rep = mercer_diagnostics(V, basis, ell, m, [tuple(r) for r in rects],
                             int(cfg.get("samples", 64)), P)
    report.check("q_identity", rep.q_diff, cfg.tol("q_tol", 1e-8))
    report.check("diagonal_nonnegativity", max(0.0, -float(rep.diagonal_min.min(initial=0.0))),
                 rep.tol)
    if P is not None:
        scale = 1.0 + float(np.abs(V.entries).max()) ** 2
        report.check("diagonal_full_sum", rep.diagonal_full_residual,
                     cfg.tol("full_sum_tol", 1e-10) * scale * basis.size)
    report.info.update(ell=ell, m_values=list(rep.m_values), rectangles=rects,
                       q1=mio.pairs(rep.q1), q2=mio.pairs(rep.q2),
                       diagonal_min=rep.diagonal_min.tolist())


HANDLERS = {
    "basis": cmd_basis, "factorize": cmd_factorize, "expand": cmd_expand,
    "solve": cmd_solve, "fenyo": cmd_fenyo, "smooth": cmd_smooth, "diagnose": cmd_diagnose,
}


def run(cfg):
    """Validate ``cfg``, execute the pipeline and write report.json; returns the exit code."""
    report = Report(cfg.subcommand, cfg.seed, cfg.tol_scale)
    try:
        os.makedirs(cfg.out, exist_ok=True)
        cfg.validate()
        HANDLERS[cfg.subcommand](cfg, report)
        code = EXIT_OK if report.ok else EXIT_CERTIFICATE
        if not report.ok:
            failed = [k for k, c in report.checks.items() if not c["pass"]]
            _fail(report, "certificate", f"failed checks: {', '.join(failed)}")
    except NotRegularValue as exc:
        code = EXIT_NOT_REGULAR
        report.info["smallest_singular_value"] = exc.smallest_singular_value
        _fail(report, "regular value", str(exc))
    except (CertificateError, NumericalFailure, PlanInfeasible) as exc:
        code = EXIT_CERTIFICATE
        if isinstance(exc, CertificateError):
            report.check(exc.name, exc.residual, exc.tol)
        if isinstance(exc, PlanInfeasible):
            report.info["minimal_budget"] = exc.minimal_budget
        _fail(report, type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        code = EXIT_INVALID
        _fail(report, "input file exists", f"missing input file: {exc.filename or exc}")
    except (InvalidArgument, ResolutionError, UnsupportedInput, MercerKitError,
            ValueError, KeyError, TypeError) as exc:
        code = EXIT_INVALID
        _fail(report, "valid input", f"{type(exc).__name__}: {exc}")
    if os.path.isdir(cfg.out):
        rec = report.record()
        rec["exit_code"] = code
        mio.write_json(os.path.join(cfg.out, "report.json"), rec)
    return code


def _fail(report, invariant, message):
    report.info["error"] = {"invariant": invariant, "message": message}
    print(f"mercer-kit {report.command}: {invariant}: {message}", file=sys.stderr)


def _apply_thread_cap():
    value = os.environ.get("MERCER_KIT_THREADS")
    if not value:
        return
    count = int(value)
    if count < 1:
        raise InvalidArgument("MERCER_KIT_THREADS must be a positive integer")
    _kernels.set_threads(count)
    from threadpoolctl import threadpool_limits
    threadpool_limits(count)


def build_parser():
    parser = argparse.ArgumentParser(prog="mercer-kit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for random test vectors")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every tolerance by this factor")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "basis": "build and export a basis with its Gram check",
        "factorize": "polar or Riesz factorization T = W V^* with certificates",
        "expand": "bilinear kernel, Carleman functions and operator images",
        "solve": "second-kind equation f - lam T f = g by both routes",
        "fenyo": "two-sequence decomposition and reconstruction report",
        "smooth": "unitary smoothing of an operator family into a kernel",
        "diagnose": "q-identity and diagonal non-negativity diagnostics",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def load_config(args):
    path = args.config
    mio.require_file(path)
    with open(path) as fh:
        try:
            settings = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(settings, dict):
        raise InvalidArgument(f"{path}: config must be a JSON object")
    return RunConfig(args.subcommand, settings, os.path.dirname(os.path.abspath(path)),
                     args.out, args.seed, args.tol_scale)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_cap()
        cfg = load_config(args)
    except FileNotFoundError as exc:
        print(f"mercer-kit {args.subcommand}: input file exists: missing input file: "
              f"{exc.filename or exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidArgument, ValueError) as exc:
        print(f"mercer-kit {args.subcommand}: valid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
