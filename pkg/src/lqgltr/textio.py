"""Columnar text serialization for responses, traces, systems, and reports.

All files are plain whitespace-separated columns with ``#`` comment headers;
floats are written with repr-exact precision so identical runs produce
byte-identical files.  Field orders are stable and documented here:

frequency response  : frequency_hz  re(i,j) im(i,j) ... row-major entries
state space         : tag row col value   (tags A B C D; header carries dims)
simulation trace    : t  w[axes]  u[inputs]  d[axes]  angle[axes]
robustness report   : frequency_hz  np  rs  rp  (+ ``# key value`` summary)
summary / manifest  : ``key value`` lines
"""

import hashlib

import numpy as np

from .errors import MissingDependency
from .systems import DiscreteStateSpaceModel, FrequencyResponse, StateSpaceModel

TWO_PI = 2.0 * np.pi


def _fmt(x):
    return repr(float(x))


def write_frequency_response(path, fr, header=()):
    p, m = fr.n_outputs, fr.n_inputs
    lines = [f"# frequency_response outputs={p} inputs={m}"]
    lines += [f"# {h}" for h in header]
    header = ["frequency_hz"]
    for i in range(p):
        for j in range(m):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    lines.append("# " + " ".join(header))
    for k, w in enumerate(fr.grid):
        row = [_fmt(w / TWO_PI)]
        for i in range(p):
            for j in range(m):
                row.append(_fmt(fr.values[k, i, j].real))
                row.append(_fmt(fr.values[k, i, j].imag))
        lines.append(" ".join(row))
    _write(path, lines)


def read_frequency_response(path):
    meta, rows = _read(path)
    p = int(meta["outputs"])
    m = int(meta["inputs"])
    grid = np.array([r[0] for r in rows]) * TWO_PI
    values = np.zeros((len(rows), p, m), dtype=complex)
    for k, r in enumerate(rows):
        c = 1
        for i in range(p):
            for j in range(m):
                values[k, i, j] = r[c] + 1j * r[c + 1]
                c += 2
    return FrequencyResponse(grid, values)


def write_state_space(path, sys, sample_period=None, header=()):
    """Continuous or discrete system as ``tag row col value`` lines."""
    ts = getattr(sys, "sample_period", sample_period)
    head = (f"# statespace states={sys.n_states} inputs={sys.n_inputs} "
            f"outputs={sys.n_outputs}")
    if ts is not None:
        head += f" ts={_fmt(ts)}"
    lines = [head]
    lines += [f"# {h}" for h in header]
    for tag, mat in (("A", sys.A), ("B", sys.B), ("C", sys.C), ("D", sys.D)):
        rows, cols = mat.shape
        for i in range(rows):
            for j in range(cols):
                lines.append(f"{tag} {i} {j} {_fmt(mat[i, j])}")
    _write(path, lines)


def read_state_space(path):
    meta = None
    mats = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "statespace" in line and meta is None:
                    meta = dict(kv.split("=") for kv in line.split()
                                if "=" in kv)
                continue
            tag, i, j, val = line.split()
            mats.setdefault(tag, []).append((int(i), int(j), float(val)))
    if meta is None:
        raise MissingDependency(f"{path} is not a statespace file")
    n = int(meta["states"])
    m = int(meta["inputs"])
    p = int(meta["outputs"])
    shapes = {"A": (n, n), "B": (n, m), "C": (p, n), "D": (p, m)}
    out = {}
    for tag, shape in shapes.items():
        mat = np.zeros(shape)
        for i, j, val in mats.get(tag, []):
            mat[i, j] = val
        out[tag] = mat
    if "ts" in meta:
        return DiscreteStateSpaceModel(out["A"], out["B"], out["C"],
                                       out["D"], float(meta["ts"]))
    return StateSpaceModel(out["A"], out["B"], out["C"], out["D"])


def write_trace(path, trace, header=()):
    p = trace.w.shape[1]
    m = trace.u.shape[1]
    cols = (["t"] + [f"w_{i}" for i in range(p)] + [f"u_{i}" for i in range(m)]
            + [f"d_{i}" for i in range(p)] + [f"angle_{i}" for i in range(p)])
    lines = [f"# simulation_trace axes={p} inputs={m} "
             f"ts={_fmt(trace.sample_period)}"]
    lines += [f"# {h}" for h in header]
    lines.append("# " + " ".join(cols))
    for k in range(trace.time.size):
        row = [_fmt(trace.time[k])]
        row += [_fmt(v) for v in trace.w[k]]
        row += [_fmt(v) for v in trace.u[k]]
        row += [_fmt(v) for v in trace.d[k]]
        row += [_fmt(v) for v in trace.angle[k]]
        lines.append(" ".join(row))
    _write(path, lines)


def write_robustness_report(path, report, header=()):
    lines = ["# robustness_report"]
    lines += [f"# {h}" for h in header]
    lines += [
             f"# np_peak {_fmt(report.np_peak)}",
             f"# np_peak_hz {_fmt(report.np_peak_hz)}",
             f"# rs_peak {_fmt(report.rs_peak)}",
             f"# rs_peak_hz {_fmt(report.rs_peak_hz)}",
             f"# rp_peak {_fmt(report.rp_peak)}",
             f"# rp_peak_hz {_fmt(report.rp_peak_hz)}",
             "# frequency_hz np rs rp"]
    for k, w in enumerate(report.grid):
        lines.append(" ".join([_fmt(w / TWO_PI), _fmt(report.np_trace[k]),
                               _fmt(report.rs_trace[k]),
                               _fmt(report.rp_trace[k])]))
    _write(path, lines)


def write_summary(path, pairs):
    """``key value`` lines; values formatted repr-exactly when floats."""
    lines = []
    for key, val in pairs:
        if isinstance(val, float):
            lines.append(f"{key} {_fmt(val)}")
        else:
            lines.append(f"{key} {val}")
    _write(path, lines)


def read_summary(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition(" ")
            out[key] = val
    return out


def config_hash(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _write(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _read(path):
    meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for kv in line[1:].split():
                    if "=" in kv:
                        k, _, v = kv.partition("=")
                        meta[k] = v
                continue
            rows.append([float(tok) for tok in line.split()])
    return meta, rows
