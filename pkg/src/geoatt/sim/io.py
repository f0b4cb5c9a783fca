"""CSV logs of IMU samples and estimator reports.

IMU logs have the header ``t,wx,wy,wz,bx,by,bz`` optionally followed by
``ax,ay,az`` for a second vector sensor. Numbers are written with 17
significant digits so that a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from ..errors import NonMonotoneTime, ParseError
from .trajectory import ImuSample

IMU_COLUMNS = ("t", "wx", "wy", "wz", "bx", "by", "bz")
SECOND_VECTOR = ("ax", "ay", "az")


def fmt(x):
    return format(float(x), ".17g")


def write_imu_csv(path, samples):
    """Write ``ImuSample`` objects; the second vector is written if the first sample has one."""
    samples = list(samples)
    two = bool(samples) and samples[0].a is not None
    header = IMU_COLUMNS + (SECOND_VECTOR if two else ())
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for s in samples:
            row = [s.t, *s.omega, *s.b]
            if two:
                row += list(s.a)
            w.writerow([fmt(x) for x in row])


def read_imu_csv(path):
    """Read an IMU log into a list of ``ImuSample``.

    Raises
    ------
    ParseError
        On a bad header, a wrong number of fields, a non-numeric field or a
        zero-length direction; ``.line`` is the 1-based line number.
    NonMonotoneTime
        If timestamps are not strictly increasing.
    """
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = tuple(c.strip() for c in row)
                if header not in (IMU_COLUMNS, IMU_COLUMNS + SECOND_VECTOR):
                    raise ParseError(f"unexpected header {','.join(header)}", line)
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", line)
            t = vals[0]
            if out and not t > out[-1].t:
                raise NonMonotoneTime(f"time {t!r} does not increase past {out[-1].t!r}", line)
            b = np.array(vals[4:7])
            a = np.array(vals[7:10]) if len(vals) == 10 else None
            if np.linalg.norm(b) == 0.0 or (a is not None and np.linalg.norm(a) == 0.0):
                raise ParseError("zero-length direction", line)
            out.append(ImuSample(t, np.array(vals[1:4]), b, a))
    return out


def report_columns(report):
    cols = ["t"]
    if report.q_true is not None:
        cols += ["true_q0", "true_q1", "true_q2", "true_q3", "true_roll", "true_pitch", "true_yaw"]
    for name in report.estimates:
        cols += [f"{name}_q{j}" for j in range(4)] + [f"{name}_{a}" for a in ("roll", "pitch", "yaw")]
    return cols


def emit(report, path):
    """Write per-step truth (if known) and estimates as quaternions and Euler angles (rad)."""
    cols = report_columns(report)
    blocks = [report.t[:, None]]
    if report.q_true is not None:
        blocks += [report.q_true, report.euler_true]
    for name, q in report.estimates.items():
        blocks += [q, report.euler_est[name]]
    table = np.hstack(blocks)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for row in table:
            w.writerow([fmt(x) for x in row])
