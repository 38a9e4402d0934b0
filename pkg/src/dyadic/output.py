"""CSV and JSON writers with bit-faithful number formatting."""

from __future__ import annotations

import json
import math

import numpy as np

from .diagnostics import TAIL_SHELLS
from .model import _weights

__all__ = ["fmt", "trajectory_columns", "trajectory_rows", "write_csv", "write_json"]


def fmt(x) -> str:
    """17 significant digits; empty string for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def _s_label(s: float) -> str:
    return repr(float(s))


def trajectory_columns(s_list) -> list:
    return ["t", "E"] + [f"Hs_{_s_label(s)}" for s in s_list] + ["L_w", "A_w", "min_a", "tail_energy"]


def trajectory_rows(traj, s_list, w: float):
    """Diagnostic rows for every sample; ``L_w``, ``A_w`` use weight ``w``."""
    J = traj.params.J
    lam_j = _weights(traj.params)[0]
    wj = w ** -np.arange(J, dtype=float)
    hs = [2.0 ** (2 * s * np.arange(J)) for s in s_list]
    for t, a in zip(traj.t, traj.a):
        sq = a * a
        b = lam_j * a
        row = [t, math.fsum(sq)]
        row += [math.sqrt(math.fsum(h * sq)) for h in hs]
        row += [math.fsum(b * wj), math.fsum(b * b * wj), float(a.min()), math.fsum(sq[-TAIL_SHELLS:])]
        yield row


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")
        fh.flush()


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
