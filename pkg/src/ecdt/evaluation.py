"""Track evaluation against ground-truth camera poses.

Each track is triangulated to the 3D point that minimises its reprojection
error through the (interpolated) poses; the per-track RMSE and feature age
are then aggregated per outlier threshold.

Conventions: a Pose maps camera coordinates to world coordinates
(``X_w = R X_c + t``); pixel coordinates put pixel centres on integers.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import BehindCamera, InsufficientObservations, NoConvergence, PoseOutOfRange
from .types import CameraIntrinsics, Pose, Track

log = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = (3.0, 5.0, 7.0)
MIN_PARALLAX_DEG = 0.5
UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL = 1e-8


# --- poses -----------------------------------------------------------------

def slerp(q0, q1, s):
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1, dot = -q1, -dot
    if dot > 0.9995:
        q = q0 + s * (q1 - q0)
        return q / np.linalg.norm(q)
    theta = math.acos(min(dot, 1.0))
    sin_theta = math.sin(theta)
    q = (math.sin((1 - s) * theta) * q0 + math.sin(s * theta) * q1) / sin_theta
    return q / np.linalg.norm(q)


def _interpolate(poses, times, t):
    if not poses or not times[0] <= t <= times[-1]:
        raise PoseOutOfRange(t)
    i = bisect.bisect_left(times, t)
    if times[i] == t:
        return poses[i]
    a, b = poses[i - 1], poses[i]
    s = (t - a.t) / (b.t - a.t)
    trans = tuple((1 - s) * np.asarray(a.translation) + s * np.asarray(b.translation))
    return Pose(t, trans, tuple(slerp(a.rotation, b.rotation, s)))


def interpolate_pose(poses, t: float) -> Pose:
    """Linear translation and slerp rotation between the bracketing samples."""
    return _interpolate(poses, [p.t for p in poses], t)


class PoseTrack:
    """Pose lookup for many timestamps against one time-sorted trajectory."""

    def __init__(self, poses):
        self.poses = list(poses)
        self.times = [p.t for p in self.poses]

    def at(self, t):
        return [_interpolate(self.poses, self.times, float(v)) for v in np.atleast_1d(t)]

    def covers(self, t):
        t = np.asarray(t)
        return bool(self.times) and t.min() >= self.times[0] and t.max() <= self.times[-1]


# --- camera model ----------------------------------------------------------

def distort_normalized(xn, yn, distortion):
    k1, k2, p1, p2, k3 = distortion
    r2 = xn * xn + yn * yn
    radial = 1 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = xn * radial + 2 * p1 * xn * yn + p2 * (r2 + 2 * xn * xn)
    yd = yn * radial + p1 * (r2 + 2 * yn * yn) + 2 * p2 * xn * yn
    return xd, yd


def distort_point(xn, yn, intr: CameraIntrinsics):
    """Normalised image coordinates to raw pixels."""
    xd, yd = distort_normalized(np.asarray(xn, float), np.asarray(yn, float), intr.distortion)
    return intr.fx * xd + intr.cx, intr.fy * yd + intr.cy


def undistort_point(p, intr: CameraIntrinsics):
    """Raw pixel(s) to normalised image coordinates by Newton iteration.

    ``p`` is ``(x, y)`` or an ``(n, 2)`` array; returns the same shape.
    """
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    xd = (arr[:, 0] - intr.cx) / intr.fx
    yd = (arr[:, 1] - intr.cy) / intr.fy
    if not any(intr.distortion):
        out = np.stack([xd, yd], axis=1)
        return out[0] if single else out
    k1, k2, p1, p2, k3 = intr.distortion
    x, y = xd.copy(), yd.copy()
    for _ in range(UNDISTORT_MAX_ITER):
        fx_, fy_ = distort_normalized(x, y, intr.distortion)
        ex, ey = fx_ - xd, fy_ - yd
        if np.all(np.hypot(ex, ey) < UNDISTORT_TOL):
            break
        r2 = x * x + y * y
        radial = 1 + r2 * (k1 + r2 * (k2 + r2 * k3))
        dradial = 2 * (k1 + r2 * (2 * k2 + 3 * k3 * r2))
        j11 = radial + x * dradial * x + 2 * p1 * y + 6 * p2 * x
        j12 = x * dradial * y + 2 * p1 * x + 2 * p2 * y
        j21 = y * dradial * x + 2 * p1 * x + 2 * p2 * y
        j22 = radial + y * dradial * y + 6 * p1 * y + 2 * p2 * x
        det = j11 * j22 - j12 * j21
        x = x - (j22 * ex - j12 * ey) / det
        y = y - (-j21 * ex + j11 * ey) / det
    else:
        fx_, fy_ = distort_normalized(x, y, intr.distortion)
        if not np.all(np.hypot(fx_ - xd, fy_ - yd) < UNDISTORT_TOL):
            raise NoConvergence(f"undistortion did not converge in {UNDISTORT_MAX_ITER} iterations")
    out = np.stack([x, y], axis=1)
    return out[0] if single else out


def project(point, rotations, centers, intr: CameraIntrinsics):
    """Pixels of world ``point`` seen from cameras (R: cam->world, C: centre).

    Returns ``(uv, depth)`` with ``uv`` of shape ``(n, 2)``.
    """
    pc = np.einsum("nji,nj->ni", rotations, np.asarray(point)[None, :] - centers)
    depth = pc[:, 2]
    u, v = distort_point(pc[:, 0] / depth, pc[:, 1] / depth, intr)
    return np.stack([u, v], axis=1), depth


def project_direction(direction, rotations, intr):
    """Pixels of a point at infinity along world ``direction``."""
    dc = np.einsum("nji,j->ni", rotations, np.asarray(direction))
    u, v = distort_point(dc[:, 0] / dc[:, 2], dc[:, 1] / dc[:, 2], intr)
    return np.stack([u, v], axis=1), dc[:, 2]


# --- triangulation -----------------------------------------------------------

def rmse_from_residuals(res, n_obs, literal=False):
    """Root mean squared reprojection distance in pixels.

    ``literal=True`` returns sqrt(sum d^2) / N instead, for side-by-side
    comparison with figures computed that way.
    """
    ss = float(np.sum(np.square(res)))
    if literal:
        return math.sqrt(ss) / n_obs
    return math.sqrt(ss / n_obs)


def _dlt(obs_n, rotations, centers):
    rows = []
    for (xn, yn), R, C in zip(obs_n, rotations, centers):
        P = np.hstack([R.T, (-R.T @ C)[:, None]])
        rows.append(xn * P[2] - P[0])
        rows.append(yn * P[2] - P[1])
    A = np.asarray(rows)
    scale = np.linalg.norm(A, axis=1, keepdims=True)
    A = A / np.where(scale > 0, scale, 1)
    _, s, vt = np.linalg.svd(A)
    return vt[-1], s


def max_parallax_deg(point, centers):
    rays = np.asarray(point)[None, :] - centers
    norms = np.linalg.norm(rays, axis=1)
    if np.any(norms == 0):
        return 0.0
    rays = rays / norms[:, None]
    lowest = 1.0
    for i in range(0, len(rays), 1024):
        lowest = min(lowest, float((rays[i:i + 1024] @ rays.T).min()))
    return float(np.degrees(np.arccos(np.clip(lowest, -1.0, 1.0))))


@dataclass(frozen=True)
class Triangulation:
    point3d: tuple
    rmse: float
    degenerate: bool
    rmse_literal: float = float("nan")
    initial_cost: float = float("nan")
    final_cost: float = float("nan")


def triangulate(track: Track, poses, intr: CameraIntrinsics) -> Triangulation:
    """3D point minimising the reprojection error of ``track`` through ``poses``.

    Linear (DLT) initialisation, then Levenberg-Marquardt refinement in raw
    pixel space. ``degenerate`` is set when the observation rays subtend less
    than 0.5 degrees at the point or the linear system is rank-deficient; a
    camera that never moves yields a point at infinity (NaN coordinates) and
    the RMSE of the best-fitting viewing direction.
    """
    n = len(track)
    if n < 2:
        raise InsufficientObservations(f"track {track.chain_id} has {n} observation(s)")
    pt = poses if isinstance(poses, PoseTrack) else PoseTrack(poses)
    if not pt.covers(track.t):
        bad = [float(v) for v in track.t if not pt.covers([v])]
        raise PoseOutOfRange(bad[0], track.chain_id)
    samples = pt.at(track.t)
    rotations = np.stack([p.rotation_matrix() for p in samples])
    centers = np.array([p.translation for p in samples])
    obs = np.stack([track.x, track.y], axis=1)
    obs_n = undistort_point(obs, intr)

    span = np.ptp(centers, axis=0).max() if n else 0.0
    if span <= 1e-12 * max(1.0, float(np.abs(centers).max())):
        return _fit_direction(track, obs, obs_n, rotations, intr)

    X, s = _dlt(obs_n, rotations, centers)
    rank_deficient = s[-2] <= 1e-12 * s[0]
    if abs(X[3]) < 1e-12 * np.linalg.norm(X[:3]):
        # linear solution at infinity: start LM from a point in front of the first camera
        p0 = centers[0] + rotations[0] @ np.array([obs_n[0, 0], obs_n[0, 1], 1.0])
    else:
        p0 = X[:3] / X[3]

    def residuals(P):
        uv, _ = project(P, rotations, centers, intr)
        return (uv - obs).ravel()

    r0 = residuals(p0)
    cost0 = float(r0 @ r0) if np.all(np.isfinite(r0)) else math.inf
    try:
        sol = least_squares(residuals, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=2000)
        p1, r1 = sol.x, sol.fun
        cost1 = float(r1 @ r1)
    except (ValueError, np.linalg.LinAlgError):
        p1, r1, cost1 = p0, r0, cost0
    if not (cost1 <= cost0):
        p1, r1, cost1 = p0, r0, cost0

    parallax = max_parallax_deg(p1, centers)
    degenerate = bool(rank_deficient or parallax < MIN_PARALLAX_DEG or not np.isfinite(cost1))
    _, depth = project(p1, rotations, centers, intr)
    if not degenerate and np.count_nonzero(depth <= 0) > n / 2:
        raise BehindCamera(f"track {track.chain_id}: point behind the camera in most views")
    return Triangulation(tuple(float(v) for v in p1), rmse_from_residuals(r1, n),
                         degenerate, rmse_from_residuals(r1, n, literal=True), cost0, cost1)


def _fit_direction(track, obs, obs_n, rotations, intr):
    rays = np.einsum("nij,nj->ni", rotations, np.column_stack([obs_n, np.ones(len(obs_n))]))
    d0 = (rays / np.linalg.norm(rays, axis=1, keepdims=True)).mean(axis=0)
    d0 /= np.linalg.norm(d0)

    def residuals(d):
        uv, _ = project_direction(d / np.linalg.norm(d), rotations, intr)
        return (uv - obs).ravel()

    sol = least_squares(residuals, d0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    n = len(obs)
    return Triangulation((math.nan, math.nan, math.nan), rmse_from_residuals(sol.fun, n), True,
                         rmse_from_residuals(sol.fun, n, literal=True))


# --- evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class TrackEvaluation:
    chain_id: int
    feature_age: float
    rmse: float
    point3d: tuple
    n_observations: int
    degenerate: bool
    rmse_literal: float = float("nan")


@dataclass(frozen=True)
class ThresholdSummary:
    threshold: float
    kept: int
    total: int
    mean_age: float
    median_age: float
    std_age: float
    mean_rmse: float
    median_rmse: float
    std_rmse: float


def evaluate_track(track: Track, poses, intr) -> TrackEvaluation:
    try:
        tri = triangulate(track, poses, intr)
    except (BehindCamera, InsufficientObservations) as exc:
        log.warning("track %d not evaluated: %s", track.chain_id, exc)
        return TrackEvaluation(track.chain_id, track.age, math.nan, (math.nan,) * 3, len(track), True)
    return TrackEvaluation(track.chain_id, track.age, tri.rmse, tri.point3d, len(track),
                           tri.degenerate, tri.rmse_literal)


def evaluate_all(tracks, poses, intr):
    pt = poses if isinstance(poses, PoseTrack) else PoseTrack(poses)
    return [evaluate_track(tr, pt, intr) for tr in tracks]


def _stats(values):
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0:
        return math.nan, math.nan, math.nan
    std = float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
    return float(np.mean(v)), float(np.median(v)), std


def summarize(evaluations, thresholds=DEFAULT_THRESHOLDS):
    """Per-threshold aggregates over tracks with ``rmse <= threshold`` that are not degenerate.

    Standard deviations are sample deviations (ddof=1).
    """
    if len(thresholds) == 0:
        raise ValueError("at least one threshold required")
    total = len(evaluations)
    out = []
    for th in thresholds:
        kept = [e for e in evaluations if not e.degenerate and np.isfinite(e.rmse) and e.rmse <= th]
        ages = _stats([e.feature_age for e in kept])
        errs = _stats([e.rmse for e in kept])
        out.append(ThresholdSummary(float(th), len(kept), total, *ages, *errs))
    return out


def evaluate_tracks(tracks, poses, intr, thresholds=DEFAULT_THRESHOLDS):
    """Triangulate every track and aggregate. Returns ``(per_track, summaries)``."""
    if len(thresholds) == 0:
        raise ValueError("at least one threshold required")
    per_track = evaluate_all(tracks, poses, intr)
    return per_track, summarize(per_track, thresholds)
