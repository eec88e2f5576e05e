"""Execution results on disk: result JSON, time-series CSV and the success-rate table."""
from __future__ import annotations

import csv
import math

from .errors import FormatError
from .execution_sim import ExecutionResult
from .formats import check_header, read_json, write_json

RESULT_FORMAT, RESULT_VERSION = "contactlfd-result", 1
STEP_COLUMNS = ("F-On", "F-Off", "Pick", "Place", "Rinse")
CONDITION_KEYS = ("obj", "loc", "env")


def result_to_dict(result: ExecutionResult, condition: dict | None = None, seed: int | None = None,
                   scenario: str = "") -> dict:
    prims = []
    for p in result.primitives:
        prims.append({
            "index": p.index, "kind": p.kind, "target": p.target, "outcome": p.outcome.value,
            "message": p.message, "duration_s": p.duration, "candidate_index": p.candidate_index,
            "location_index": p.location_index, "non_first_candidates": p.non_first_candidates,
            "failed_frame": p.failed_frame,
            "key_moments": [{"frame": k.frame, "pos_error_m": k.pos_error, "rot_error_rad": k.rot_error,
                             "contacts_ok": k.contacts_ok} for k in p.key_moments],
        })
    kms = result.key_moments
    return {
        "format": RESULT_FORMAT, "version": RESULT_VERSION,
        "scenario": scenario, "seed": seed,
        "condition": {k: (condition or {}).get(k, "S") for k in CONDITION_KEYS},
        "success": result.success,
        "total_duration_s": result.total_duration,
        "max_key_pos_error_m": max((k.pos_error for k in kms), default=0.0),
        "max_key_rot_error_rad": max((k.rot_error for k in kms), default=0.0),
        "steps": [dict(s) for s in result.steps],
        "primitives": prims,
    }


def save_result(d: dict, path) -> None:
    write_json(path, d)


def load_result(path) -> dict:
    d = read_json(path)
    check_header(d, RESULT_FORMAT, RESULT_VERSION, path)
    if not isinstance(d.get("steps"), list) or "success" not in d:
        raise FormatError(f"{path}: result needs 'steps' and 'success'")
    return d


def write_execution_csv(path, result: ExecutionResult) -> None:
    """One row per logged instant: time, joints, then x y z qw qx qy qz per object (blank when absent)."""
    names = sorted({n for _, _, poses in result.pose_log for n in poses})
    n_q = len(result.pose_log[0][1]) if result.pose_log else 0
    header = ["time_s"] + [f"q{j}" for j in range(n_q)]
    for n in names:
        header += [f"{n}.{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, q, poses in result.pose_log:
            row = [repr(float(t))] + [repr(float(v)) for v in q]
            for n in names:
                p = poses.get(n)
                if p is None:
                    row += [""] * 7
                else:
                    row += [repr(float(v)) for v in p.translation] + [repr(float(v)) for v in p.rotation]
            w.writerow(row)


def read_execution_csv(path) -> dict:
    """Column name -> list of floats (NaN for blanks)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["time_s"]:
        raise FormatError(f"{path}: not an execution time series (first column must be 'time_s')")
    cols = {h: [] for h in rows[0]}
    for i, row in enumerate(rows[1:], 2):
        if len(row) != len(rows[0]):
            raise FormatError(f"{path}: line {i} has {len(row)} fields, header has {len(rows[0])}")
        for h, v in zip(rows[0], row):
            cols[h].append(float(v) if v else math.nan)
    return cols


def success_table(results: list) -> list:
    """Rows grouped by (obj, loc, env) condition: trial count and per-step / full-task success rates."""
    groups = {}
    for r in results:
        cond = tuple(r.get("condition", {}).get(k, "S") for k in CONDITION_KEYS)
        groups.setdefault(cond, []).append(r)
    rows = []
    for cond in sorted(groups, key=lambda c: (c.count("U"), c)):
        rs = groups[cond]
        row = dict(zip(CONDITION_KEYS, cond))
        row["trials"] = len(rs)
        for step in STEP_COLUMNS:
            vals = [s["success"] for r in rs for s in r["steps"] if s["name"] == step]
            row[step] = sum(vals) / len(vals) if vals else None
        row["All"] = sum(bool(r["success"]) for r in rs) / len(rs)
        rows.append(row)
    return rows


def format_table(rows: list) -> str:
    head = ["Obj", "Loc", "Env", "n"] + list(STEP_COLUMNS) + ["All"]
    lines = ["Simulated success rates (kinematic simulation, not physical-robot results)",
             "| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in rows:
        cells = [r["obj"], r["loc"], r["env"], str(r["trials"])]
        for k in list(STEP_COLUMNS) + ["All"]:
            cells.append("n/a" if r[k] is None else f"{100 * r[k]:.0f}%")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)
