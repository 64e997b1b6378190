"""Readers and writers for the event-camera dataset text layout and toolkit CSVs.

Dataset files (whitespace separated, one record per line):

    events.txt        t x y p
    groundtruth.txt   t px py pz qx qy qz qw
    calib.txt         fx fy cx cy k1 k2 p1 p2 k3

Toolkit CSVs may start with ``#`` comment lines (effective parameters).
"""
from __future__ import annotations

import csv
import io
import math
import os
from itertools import islice

import numpy as np

from .errors import OutOfBounds, ParseError, UnsortedTimestamps
from .types import DAVIS_HEIGHT, DAVIS_WIDTH, CameraIntrinsics, EventStream, Pose, Track, validate_stream

BATCH_LINES = 1 << 20
QUAT_RENORM_TOL = 1e-3
TRACK_FMT = "%.9g"


def _parse_line(text, n_fields, lineno):
    parts = text.split()
    if len(parts) != n_fields:
        raise ParseError(lineno, f"expected {n_fields} fields, got {len(parts)}")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise ParseError(lineno, f"non-numeric field in {text.strip()!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError(lineno, "NaN or infinite value")
    return vals


def _parse_batch(lines, n_fields, first_lineno):
    """Fast path for a batch of lines; falls back line by line to locate errors."""
    try:
        flat = np.array(" ".join(lines).split(), dtype=np.float64)
        ok = flat.size == n_fields * sum(1 for ln in lines if ln.strip())
        if ok and not all(len(ln.split()) in (0, n_fields) for ln in lines):
            ok = False
        if ok and np.all(np.isfinite(flat)):
            return flat.reshape(-1, n_fields)
    except ValueError:
        pass
    rows = []
    for i, ln in enumerate(lines):
        if ln.strip():
            rows.append(_parse_line(ln, n_fields, first_lineno + i))
    return np.asarray(rows, dtype=np.float64).reshape(-1, n_fields)


def _read_table(path, n_fields):
    """Parse a numeric whitespace table in batches. Returns ``(rows, line_numbers)``."""
    blocks, linenos = [], []
    lineno = 1
    with open(path, "r") as fh:
        while True:
            lines = list(islice(fh, BATCH_LINES))
            if not lines:
                break
            block = _parse_batch(lines, n_fields, lineno)
            nonblank = np.array([lineno + i for i, ln in enumerate(lines) if ln.strip()], dtype=np.int64)
            blocks.append(block)
            linenos.append(nonblank)
            lineno += len(lines)
    if not blocks:
        return np.zeros((0, n_fields)), np.zeros(0, np.int64)
    return np.concatenate(blocks), np.concatenate(linenos)


def read_events(path, width=DAVIS_WIDTH, height=DAVIS_HEIGHT) -> EventStream:
    """Read ``t x y p`` lines into a validated stream."""
    rows, lines = _read_table(path, 4)
    t, x, y, p = rows.T if len(rows) else (np.zeros(0),) * 4
    for name, col in (("x", x), ("y", y), ("polarity", p)):
        frac = np.flatnonzero(col != np.round(col))
        if len(frac):
            raise ParseError(int(lines[frac[0]]), f"{name} is not an integer")
    badp = np.flatnonzero((p != 0) & (p != 1))
    if len(badp):
        raise ParseError(int(lines[badp[0]]), "polarity must be 0 or 1")
    stream = EventStream(x.astype(np.int64), y.astype(np.int64), t, p.astype(np.int8), width, height)
    try:
        return validate_stream(stream)
    except OutOfBounds as exc:
        raise OutOfBounds(exc.index, f"line {lines[exc.index]}: event outside {width}x{height} sensor") from None
    except UnsortedTimestamps:
        raise


def write_events(stream: EventStream, path):
    with open(path, "w") as fh:
        for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist()):
            fh.write(f"{t!r} {x} {y} {p}\n")


def read_poses(path):
    """Read ``t px py pz qx qy qz qw`` lines; quaternions within 1e-3 of unit norm are renormalised."""
    rows, lines = _read_table(path, 8)
    poses = []
    for row, ln in zip(rows, lines):
        q = row[4:8]
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) >= QUAT_RENORM_TOL:
            raise ParseError(int(ln), f"quaternion norm {norm:.6g} too far from 1")
        if abs(norm - 1.0) > 1e-12:
            q = q / norm
        poses.append(Pose(float(row[0]), tuple(row[1:4]), tuple(q)))
    times = [p.t for p in poses]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ParseError(int(lines[next(i for i in range(1, len(times)) if times[i] < times[i - 1])]),
                         "pose timestamps are not sorted")
    return poses


def write_poses(poses, path):
    with open(path, "w") as fh:
        for p in poses:
            fh.write(" ".join(repr(float(v)) for v in (p.t, *p.translation, *p.rotation)) + "\n")


def read_calib(path) -> CameraIntrinsics:
    rows, lines = _read_table(path, 9)
    if len(rows) != 1:
        raise ParseError(int(lines[1]) if len(rows) > 1 else 1, "calibration must be a single line")
    fx, fy, cx, cy, *dist = rows[0]
    try:
        return CameraIntrinsics(fx, fy, cx, cy, tuple(dist))
    except ValueError as exc:
        raise ParseError(int(lines[0]), str(exc)) from None


def write_calib(intr: CameraIntrinsics, path):
    with open(path, "w") as fh:
        vals = (intr.fx, intr.fy, intr.cx, intr.cy, *intr.distortion)
        fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


def _header_lines(header):
    if not header:
        return ""
    return "".join(f"# {k}={v}\n" for k, v in header.items())


def format_tracks(tracks, header=None) -> str:
    buf = io.StringIO()
    buf.write(_header_lines(header))
    buf.write("chain_id,t,x,y\n")
    for tr in tracks:
        for t, x, y in zip(tr.t, tr.x, tr.y):
            buf.write(f"{tr.chain_id},{TRACK_FMT % t},{TRACK_FMT % x},{TRACK_FMT % y}\n")
    return buf.getvalue()


def write_tracks(tracks, path, header=None):
    with open(path, "w", newline="") as fh:
        fh.write(format_tracks(tracks, header))


def _data_lines(fh):
    for ln in fh:
        if ln.strip() and not ln.startswith("#"):
            yield ln


def read_header(path) -> dict:
    out = {}
    with open(path) as fh:
        for ln in fh:
            if not ln.startswith("#"):
                break
            key, _, val = ln[1:].strip().partition("=")
            out[key.strip()] = val.strip()
    return out


def read_tracks(path):
    """Tracks from a ``chain_id,t,x,y`` CSV, in file order of first appearance."""
    cols = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(_data_lines(fh))
        if reader.fieldnames is None:
            return []
        missing = {"chain_id", "t", "x", "y"} - set(reader.fieldnames)
        if missing:
            raise ParseError(1, f"missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                cid = int(row["chain_id"])
                vals = (float(row["t"]), float(row["x"]), float(row["y"]))
            except (TypeError, ValueError):
                raise ParseError(lineno, "malformed track row") from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(lineno, "NaN or infinite value")
            cols.setdefault(cid, []).append(vals)
    tracks = []
    for cid, rows in cols.items():
        arr = np.asarray(rows)
        tracks.append(Track(cid, arr[:, 0], arr[:, 1], arr[:, 2]))
    return tracks


PER_TRACK_FIELDS = ["chain_id", "age_s", "rmse_px", "n_obs", "degenerate"]
SUMMARY_FIELDS = ["threshold_px", "kept", "total", "mean_age_s", "median_age_s", "std_age_s",
                  "mean_rmse_px", "median_rmse_px", "std_rmse_px"]


def write_per_track(evaluations, path, literal=False, header=None):
    fields = PER_TRACK_FIELDS + (["rmse_literal_px"] if literal else [])
    with open(path, "w", newline="") as fh:
        fh.write(_header_lines(header))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for e in evaluations:
            row = [e.chain_id, TRACK_FMT % e.feature_age, TRACK_FMT % e.rmse, e.n_observations,
                   int(e.degenerate)]
            if literal:
                row.append(TRACK_FMT % e.rmse_literal)
            w.writerow(row)


def read_per_track(path):
    from .evaluation import TrackEvaluation

    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(_data_lines(fh)), start=2):
            try:
                out.append(TrackEvaluation(int(row["chain_id"]), float(row["age_s"]), float(row["rmse_px"]),
                                           (math.nan,) * 3, int(row["n_obs"]), bool(int(row["degenerate"])),
                                           float(row.get("rmse_literal_px") or "nan")))
            except (KeyError, TypeError, ValueError):
                raise ParseError(lineno, "malformed per-track row") from None
    return out


def write_summary(summaries, path, header=None):
    with open(path, "w", newline="") as fh:
        fh.write(_header_lines(header))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for s in summaries:
            w.writerow([TRACK_FMT % s.threshold, s.kept, s.total] +
                       [TRACK_FMT % v for v in (s.mean_age, s.median_age, s.std_age,
                                                 s.mean_rmse, s.median_rmse, s.std_rmse)])


def write_labels_csv(path, columns: dict):
    """Sidecar ground truth: one column per key, one row per entry."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[n] for n in names)):
            w.writerow([TRACK_FMT % v if isinstance(v, float) else v for v in row])


def remove_quietly(*paths):
    for p in paths:
        try:
            os.remove(p)
        except (FileNotFoundError, IsADirectoryError, TypeError):
            pass
