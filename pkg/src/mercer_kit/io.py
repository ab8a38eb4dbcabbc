"""File formats: matrices, coefficient vectors, kernels, bases and reports."""
import csv
import json
import os

import numpy as np

from .errors import InvalidArgument
from .opcore import OperatorMatrix

SCHEMA_VERSION = 1


def fmt(x):
    """Shortest round-trip text for a real number."""
    return repr(float(x))


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InvalidArgument(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    return complex(float(v))


def parse_complex(v):
    """Accept a number, a [re, im] pair or a {"re", "im"} mapping."""
    return _complex(v)


def pairs(values):
    return [_pair(z) for z in np.ravel(values)]


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def matrix_to_record(op):
    return {"n": op.n, "basis_id": op.basis_id, "entries": pairs(op.entries)}


def matrix_from_record(rec, basis_id=""):
    """Matrix from {n, basis_id, entries} or the shorthand {"diagonal": [...]}.

    ``entries`` may be row-major [re, im] pairs (the written form), nested
    rows of pairs or of real numbers, or a flat list of real numbers.
    """
    if "diagonal" in rec:
        diag = [_complex(v) for v in rec["diagonal"]]
        return OperatorMatrix.diagonal(diag, rec.get("basis_id", basis_id))
    if "entries" not in rec:
        raise InvalidArgument("matrix record needs 'entries' or 'diagonal'")
    try:
        raw = np.asarray(rec["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgument(f"matrix entries are not a regular numeric array ({exc})") from exc
    n = rec.get("n")
    if raw.ndim == 3 and raw.shape[2] == 2:
        arr = raw[..., 0] + 1j * raw[..., 1]
    elif raw.ndim == 2 and raw.shape[1] == 2 and _is_square_count(raw.shape[0], n) \
            and not (raw.shape == (2, 2) and n in (None, 2)):
        arr = (raw[:, 0] + 1j * raw[:, 1]).reshape(_side(raw.shape[0]), -1)
    elif raw.ndim == 2:
        arr = raw.astype(complex)
    elif raw.ndim == 1 and _is_square_count(raw.size, n):
        arr = raw.astype(complex).reshape(_side(raw.size), -1)
    else:
        raise InvalidArgument(f"cannot read matrix entries of shape {raw.shape}")
    if n is not None and arr.shape[0] != int(n):
        raise InvalidArgument(f"matrix record declares n={n} but has {arr.shape[0]} rows")
    return OperatorMatrix(arr, rec.get("basis_id", basis_id))


def _side(count):
    return int(round(np.sqrt(count)))


def _is_square_count(count, n):
    side = _side(count)
    return side * side == count and (n is None or int(n) == side)


def require_file(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    return path


def read_matrix(path):
    require_file(path)
    if path.lower().endswith(".csv"):
        rows = list(_read_csv(path, ("row", "col", "re", "im")))
        n = 1 + max(max(int(r["row"]), int(r["col"])) for r in rows) if rows else 0
        arr = np.zeros((n, n), dtype=complex)
        for r in rows:
            arr[int(r["row"]), int(r["col"])] = complex(float(r["re"]), float(r["im"]))
        return OperatorMatrix(arr)
    with open(path) as fh:
        return matrix_from_record(json.load(fh))


def write_matrix(path, op):
    if path.lower().endswith(".csv"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "re", "im"])
            for (r, c), z in np.ndenumerate(op.entries):
                w.writerow([r, c, fmt(z.real), fmt(z.imag)])
    else:
        write_json(path, matrix_to_record(op))


def resolve_matrix(ref, base_dir="."):
    """Matrix from a path (relative to ``base_dir``) or an inline record."""
    if isinstance(ref, dict):
        return matrix_from_record(ref)
    if isinstance(ref, str):
        return read_matrix(os.path.join(base_dir, ref))
    raise InvalidArgument(f"cannot interpret matrix reference {ref!r}")


# ---------------------------------------------------------------------------
# vectors, kernels, bases
# ---------------------------------------------------------------------------

def _read_csv(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise InvalidArgument(f"{path}: missing CSV columns {missing}")
        yield from reader


def read_vector(path):
    require_file(path)
    rows = list(_read_csv(path, ("index", "re", "im")))
    out = np.zeros(len(rows), dtype=complex)
    for r in rows:
        k = int(r["index"])
        if not 0 <= k < len(rows):
            raise InvalidArgument(f"{path}: index {k} out of range")
        out[k] = complex(float(r["re"]), float(r["im"]))
    return out


def write_vector(path, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for k, z in enumerate(np.asarray(values, dtype=complex)):
            w.writerow([k, fmt(z.real), fmt(z.imag)])


def write_sampled(path, s, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "re", "im"])
        for x, z in zip(s, np.asarray(values, dtype=complex)):
            w.writerow([fmt(x), fmt(z.real), fmt(z.imag)])


def write_kernel(path, kernel, samples=None):
    """Kernel CSV (i, j, s, t, re, im) plus a metadata JSON next to it."""
    i, j = kernel.orders
    values = kernel.samples if samples is None else samples
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "s", "t", "re", "im"])
        for (a, b), z in np.ndenumerate(values):
            w.writerow([i, j, fmt(kernel.s[a]), fmt(kernel.t[b]),
                        fmt(z.real), fmt(z.imag)])
    meta = {
        "lambda": _pair(kernel.lam),
        "truncation": kernel.n_terms,
        "tail_bound": kernel.tail_bound,
        "orders": [i, j],
        "basis_id": kernel.basis.basis_id,
    }
    write_json(os.path.splitext(path)[0] + "_meta.json", meta)


def basis_record(basis):
    return {
        "kind": basis.kind,
        "count": basis.size,
        "i_max": basis.i_max,
        "basis_id": basis.basis_id,
        "grid": {"L": basis.grid.L, "nodes_per_unit": basis.grid.nodes_per_unit},
        "functions": [{"index": list(f.index), "N_n": f.norm_factor} for f in basis.functions],
    }


def write_basis_samples(path, basis, s):
    table = basis.evaluate_upto(s, basis.i_max)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "i", "s", "re", "im"])
        for i in range(table.shape[0]):
            for n in range(table.shape[1]):
                for x, z in zip(s, table[i, n]):
                    w.writerow([n, i, fmt(x), fmt(z.real), fmt(z.imag)])


def fenyo_record(dec):
    return {
        "kappa": pairs(dec.kappa),
        "mu": pairs(dec.mu),
        "x": [pairs(col) for col in dec.x.T],
        "y": [pairs(col) for col in dec.y.T],
    }


def plan_record(plan):
    return {
        "dim": plan.dim,
        "selected": plan.selected.tolist(),
        "d_values": plan.d_values.tolist(),
        "budget": plan.budget,
        "h_indices": plan.h_indices.tolist(),
        "g_indices": plan.g_indices.tolist(),
        "certificates": plan.certificates,
    }


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return _pair(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def read_json(path):
    require_file(path)
    with open(path) as fh:
        return json.load(fh)
