"""Run artifacts: CSV trace/bound exports, binary dumps, atomic writes.

Every artifact is written to a temporary file in the target directory and
renamed into place, so a failed run never leaves a partial file.  CSV floats
use %.17g (lossless round-trip, byte-stable across runs).
"""

from __future__ import annotations

import io
import json
import os
import tempfile

import numpy as np

from .bounds import SERIES_NAMES

SCHEMA_VERSION = 1

BOUNDS_HEADER = (
    ["iter", "f_gap"]
    + list(SERIES_NAMES)
    + ["prob_thm_basic_rand", "prob_thm_basic_stat", "prob_thm_acc_rand"]
)

PROB_COLUMNS = {
    "thm_basic_rand": "prob_thm_basic_rand",
    "thm_basic_stat": "prob_thm_basic_stat",
    "thm_acc_rand": "prob_thm_acc_rand",
}


def _fmt(x):
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return "%.17g" % x


def atomic_write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path, trace, f_star=None):
    """Rows k = 0..T; row k carries the state x^k plus the step-k quantities
    (stepsize, errors, and the residual r^{k+1} produced by that step)."""
    t = trace.num_steps
    eps1n = trace.eps1_norms()
    resn = trace.res_norms()
    changes = trace.x_change()
    lines = ["iter,f,f_gap,step,eps1_norm,eps2,res_norm,x_change"]
    for k in range(t + 1):
        f_gap = "" if f_star is None else _fmt(trace.fvals[k] - f_star)
        if k < t:
            step_cols = [
                _fmt(trace.steps[k]),
                _fmt(eps1n[k]),
                _fmt(trace.eps2[k]),
                _fmt(resn[k]),
            ]
        else:
            step_cols = ["", "", "", ""]
        change = _fmt(changes[k - 1]) if k >= 1 else ""
        lines.append(
            ",".join([str(k), _fmt(trace.fvals[k]), f_gap] + step_cols + [change])
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_bounds_csv(path, series_list, f_gap):
    """Fixed-schema bound sweep; absent series emit empty cells."""
    by_name = {s.name: s for s in series_list}
    t = len(f_gap)
    lines = [",".join(BOUNDS_HEADER)]
    for k in range(t):
        row = [str(k), _fmt(f_gap[k])]
        for name in SERIES_NAMES:
            s = by_name.get(name)
            row.append(_fmt(s.values[k]) if s is not None else "")
        for name, _col in PROB_COLUMNS.items():
            s = by_name.get(name)
            row.append(_fmt(s.probability[k]) if s is not None else "")
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_comparison_csv(path, series_list, f_gap, baseline_name):
    """Figure-style comparison: each bound, the baseline, and the improvement
    columns (baseline minus ours) per proposed bound."""
    by_name = {s.name: s for s in series_list}
    baseline = by_name.get(baseline_name)
    ours = [s for s in series_list if s.name != baseline_name]
    header = (
        ["iter", "f_gap"]
        + [s.name for s in series_list]
        + [f"imprv_{s.name}" for s in ours]
    )
    t = len(f_gap)
    lines = [",".join(header)]
    for k in range(t):
        row = [str(k), _fmt(f_gap[k])]
        for s in series_list:
            row.append(_fmt(s.values[k]))
        for s in ours:
            if baseline is None:
                row.append("")
            else:
                row.append(_fmt(baseline.values[k] - s.values[k]))
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_iterates_bin(path, trace):
    """Row-major float64 dump of x^0..x^T."""
    atomic_write_bytes(path, np.ascontiguousarray(trace.xs, dtype="<f8").tobytes())


def save_trace_npz(path, trace):
    buf = io.BytesIO()
    np.savez(
        buf,
        xs=trace.xs,
        ys=trace.ys if trace.ys is not None else np.zeros((0, trace.n)),
        steps=trace.steps,
        betas=trace.betas,
        alphas=trace.alphas,
        fvals=trace.fvals,
        eps1=trace.eps1,
        eps2=trace.eps2,
        res=trace.res,
        accelerated=np.array(trace.ys is not None),
    )
    atomic_write_bytes(path, buf.getvalue())


def load_trace_npz(path):
    from .solvers import RunTrace

    with np.load(path) as data:
        accelerated = bool(data["accelerated"])
        return RunTrace(
            xs=data["xs"],
            ys=data["ys"] if accelerated else None,
            steps=data["steps"],
            betas=data["betas"],
            alphas=data["alphas"],
            fvals=data["fvals"],
            eps1=data["eps1"],
            eps2=data["eps2"],
            res=data["res"],
            status="loaded",
        )


def write_summary(path, payload):
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(payload)
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
