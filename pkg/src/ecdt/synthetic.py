"""Deterministic synthetic scenes with ground truth.

* crossing bands: two opposite-polarity diagonal bands meeting in a mixed
  junction, for checking that clusters never leak across a polarity barrier;
* translating bar: a bright bar whose leading edge fires ON and trailing
  edge OFF events, with the closed-form edge centroid;
* reversal scene: bars that move right, pause and come back, so each edge
  flips polarity half-way;
* projected scene: static 3D points seen through a camera trajectory.

The bar scenes also emit camera poses consistent with the image motion (a
fronto-parallel bar at fixed depth, camera translating along x), so their
tracks can be fed to the triangulation harness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import PoseTrack, distort_point
from .types import DAVIS_HEIGHT, DAVIS_WIDTH, CameraIntrinsics, EventStream, Pose, Track

JITTER = 2e-4
POSE_RATE = 200.0
DEFAULT_INTRINSICS = CameraIntrinsics(200.0, 200.0, 120.0, 90.0)

JUNCTION = 0
SEGMENT_NAMES = {0: "junction", 1: "on_lower", 2: "on_upper", 3: "off_lower", 4: "off_upper"}


def _sorted_stream(x, y, t, p, width, height, *labels):
    order = np.argsort(t, kind="stable")
    stream = EventStream(np.asarray(x)[order], np.asarray(y)[order], np.asarray(t)[order],
                         np.asarray(p)[order], width, height)
    return (stream, *(np.asarray(lab)[order] for lab in labels))


# --- crossing bands ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CrossingBands:
    stream: EventStream
    segment: np.ndarray  # per-event key into SEGMENT_NAMES


def gen_crossing_bands(width=100, height=100, density=2.0, seed=0, half_width=3.0,
                       junction_radius=14.0, duration=0.004) -> CrossingBands:
    """Two diagonal bands (ON along one diagonal, OFF along the other).

    Inside ``junction_radius`` of the centre both bands' pixels alternate
    polarity in a checkerboard, so neither band passes through. Each band
    pixel fires Poisson(``density``) events uniformly over ``duration``.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    cx, cy = (width - 1) / 2, (height - 1) / 2
    gx, gy = np.meshgrid(np.arange(width), np.arange(height), indexing="xy")
    gx, gy = gx.ravel(), gy.ravel()
    u, v = gx - cx, gy - cy
    on_band = np.abs(u - v) / math.sqrt(2) <= half_width
    off_band = np.abs(u + v) / math.sqrt(2) <= half_width
    in_junction = np.hypot(u, v) < junction_radius
    pix = np.flatnonzero(on_band | off_band)

    pol = np.where(on_band, 1, 0)
    checker = (gx + gy) % 2
    pol = np.where(in_junction, checker, pol)
    seg = np.where(in_junction, JUNCTION,
                   np.where(on_band, np.where(u + v < 0, 1, 2), np.where(u - v > 0, 3, 4)))

    counts = rng.poisson(density, size=len(pix))
    idx = np.repeat(pix, counts)
    t = rng.uniform(0.0, duration, size=len(idx))
    stream, segment = _sorted_stream(gx[idx], gy[idx], t, pol[idx], width, height, seg[idx])
    return CrossingBands(stream, segment)


# --- moving bars ---------------------------------------------------------------

@dataclass(frozen=True)
class Motion:
    """Piecewise-constant horizontal image velocity of a bar.

    ``segments`` is a sequence of ``(duration_s, velocity_px_per_s)``.
    """

    segments: tuple

    def displacement(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        start = 0.0
        offset = 0.0
        for dur, vel in self.segments:
            inside = (t >= start) & (t <= start + dur)
            out = np.where(inside, offset + vel * (t - start), out)
            offset += vel * dur
            start += dur
        return np.where(t > start, offset, out)

    def velocity(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        start = 0.0
        for dur, vel in self.segments:
            out = np.where((t >= start) & (t < start + dur), vel, out)
            start += dur
        return out

    @property
    def duration(self):
        return sum(d for d, _ in self.segments)

    def moving_intervals(self):
        start = 0.0
        for dur, vel in self.segments:
            if vel != 0:
                yield start, start + dur, vel
            start += dur


@dataclass(frozen=True, eq=False)
class BarScene:
    stream: EventStream
    edge_id: np.ndarray
    motion: Motion
    edge_x0: tuple           # image x of each edge at t = 0
    row_center: tuple        # centre row of each edge
    poses: tuple
    intrinsics: CameraIntrinsics
    depth: float
    extra: dict = field(default_factory=dict)

    def centroid(self, t, edge=0):
        """Closed-form mean pixel position of an edge's events at time ``t``."""
        x = self.edge_x0[edge] + self.motion.displacement(t)
        return x, np.full_like(np.asarray(x, dtype=float), self.row_center[edge])

    def edge_points3d(self):
        """World point whose projection is each edge's centroid."""
        intr = self.intrinsics
        return [((x0 - intr.cx) * self.depth / intr.fx, (yc - intr.cy) * self.depth / intr.fy, self.depth)
                for x0, yc in zip(self.edge_x0, self.row_center)]


def _edge_events(rng, motion, x0, rows, rate, leading_is_right):
    """Events of one edge: Poisson times while moving, rows cycled evenly."""
    ts = []
    pols = []
    for a, b, vel in motion.moving_intervals():
        n = rng.poisson(rate * (b - a))
        ts.append(np.sort(rng.uniform(a, b, size=n)))
        # right edge leads when moving right; the leading edge brightens pixels (ON)
        on = (vel > 0) == leading_is_right
        pols.append(np.full(n, 1 if on else 0))
    t_true = np.concatenate(ts) if ts else np.zeros(0)
    p = np.concatenate(pols).astype(np.int8) if pols else np.zeros(0, np.int8)
    perm = rng.permutation(rows)
    y = perm[np.arange(len(t_true)) % len(rows)]
    x = np.rint(x0 + motion.displacement(t_true)).astype(np.int64)
    t = np.clip(t_true + rng.uniform(-JITTER, JITTER, size=len(t_true)), 0.0, None)
    return x, y, t, p


def _bar_poses(motion, depth, intr, duration):
    n = int(round(duration * POSE_RATE)) + 1
    times = np.arange(n) / POSE_RATE
    # the image moves by +d px when the camera moves by -d * depth / fx metres
    cam_x = -motion.displacement(times) * depth / intr.fx
    return tuple(Pose(float(t), (float(cxm), 0.0, 0.0), (0.0, 0.0, 0.0, 1.0))
                 for t, cxm in zip(times, cam_x))


def _bars(motion, n_bars, length, bar_width, x0, y0, row_gap, event_rate, seed, sensor, depth, intr):
    rng = np.random.default_rng(seed)
    width, height = sensor
    xs, ys, ts, ps, ids = [], [], [], [], []
    edge_x0, row_center = [], []
    for b in range(n_bars):
        top = y0 + b * (length + row_gap)
        rows = np.arange(top, top + length)
        for side, ex0 in ((0, x0), (1, x0 + bar_width)):
            x, y, t, p = _edge_events(rng, motion, ex0, rows, event_rate, leading_is_right=(side == 1))
            xs.append(x), ys.append(y), ts.append(t), ps.append(p)
            ids.append(np.full(len(t), 2 * b + side))
            edge_x0.append(float(ex0))
            row_center.append(top + (length - 1) / 2)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if len(x) and (x.min() < 0 or x.max() >= width or y.min() < 0 or y.max() >= height):
        raise ValueError("bar leaves the sensor; adjust x0/y0/velocity/duration")
    stream, edge_id = _sorted_stream(x, y, np.concatenate(ts), np.concatenate(ps), width, height,
                                     np.concatenate(ids))
    poses = _bar_poses(motion, depth, intr, motion.duration)
    return BarScene(stream, edge_id, motion, tuple(edge_x0), tuple(row_center), poses, intr, depth)


def gen_translating_bar(velocity=100.0, length=20, duration=1.0, event_rate=20000.0, seed=0,
                        bar_width=20, x0=60, y0=80, sensor=(DAVIS_WIDTH, DAVIS_HEIGHT),
                        depth=1.0, intrinsics=DEFAULT_INTRINSICS) -> BarScene:
    """A bright bar of ``length`` rows translating at ``velocity`` px/s.

    ``event_rate`` is per edge (events/s). Edge 0 is the left edge, edge 1 the
    right edge. Timestamps carry uniform +-0.2 ms jitter.
    """
    motion = Motion(((float(duration), float(velocity)),))
    return _bars(motion, 1, length, bar_width, x0, y0, 0, event_rate, seed, sensor, depth, intrinsics)


def gen_reversal_scene(velocity=100.0, length=20, t_forward=0.5, gap=0.05, t_back=0.5,
                       event_rate=20000.0, seed=0, n_bars=1, bar_width=20, x0=60, y0=20,
                       row_gap=15, sensor=(DAVIS_WIDTH, DAVIS_HEIGHT), depth=1.0,
                       intrinsics=DEFAULT_INTRINSICS) -> BarScene:
    """Bars that move right, stop for ``gap`` seconds, then move left.

    Edge ``2b`` / ``2b+1`` are the left / right edges of bar ``b``. Each edge
    fires one polarity before the reversal and the other after it.
    """
    motion = Motion(((float(t_forward), float(velocity)), (float(gap), 0.0),
                     (float(t_back), -float(velocity))))
    scene = _bars(motion, n_bars, length, bar_width, x0, y0, row_gap, event_rate, seed, sensor,
                  depth, intrinsics)
    scene.extra["reversal_time"] = float(t_forward)
    scene.extra["resume_time"] = float(t_forward + gap)
    return scene


# --- projected 3D points -------------------------------------------------------

def _quat_about(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(angle / 2)
    return (axis[0] * s, axis[1] * s, axis[2] * s, math.cos(angle / 2))


def trajectory(duration=1.0, rate=POSE_RATE, velocity=(0.5, 0.1, 0.0), angular_rate=0.2,
               axis=(0.0, 1.0, 0.0)):
    """Constant linear and angular velocity camera trajectory."""
    n = int(round(duration * rate)) + 1
    out = []
    for i in range(n):
        t = i / rate
        pos = tuple(v * t for v in velocity)
        out.append(Pose(t, pos, _quat_about(axis, angular_rate * t)))
    return tuple(out)


def rotation_trajectory(duration=1.0, rate=POSE_RATE, angular_rate=0.5, axis=(0.2, 1.0, 0.1)):
    """Camera spinning in place: no baseline, so no depth is observable."""
    return trajectory(duration, rate, (0.0, 0.0, 0.0), angular_rate, axis)


def random_points(n, seed=0, depth=(2.0, 5.0), lateral=0.8):
    rng = np.random.default_rng(seed)
    z = rng.uniform(*depth, size=n)
    x = rng.uniform(-lateral, lateral, size=n) * z / 2
    y = rng.uniform(-lateral, lateral, size=n) * z / 2
    return np.stack([x, y, z], axis=1)


@dataclass(frozen=True, eq=False)
class ProjectedScene:
    tracks: list
    poses: tuple
    points3d: np.ndarray
    intrinsics: CameraIntrinsics


def gen_projected_scene(points3d, poses, intr: CameraIntrinsics = DEFAULT_INTRINSICS, noise=0.0,
                        seed=0, sample_rate=100.0, offset=0.0025) -> ProjectedScene:
    """Tracks of static 3D points seen through ``poses``.

    Observation times are ``offset + k / sample_rate`` inside the pose span,
    so most of them fall between pose samples. ``noise`` is the RMS length
    of the 2D pixel perturbation (isotropic Gaussian, ``noise / sqrt(2)``
    per axis).
    """
    rng = np.random.default_rng(seed)
    points3d = np.atleast_2d(np.asarray(points3d, dtype=np.float64))
    pt = PoseTrack(poses)
    t0, t1 = pt.times[0], pt.times[-1]
    times = t0 + offset + np.arange(int(math.floor((t1 - t0 - offset) * sample_rate)) + 1) / sample_rate
    times = times[times <= t1]
    samples = pt.at(times)
    rotations = np.stack([p.rotation_matrix() for p in samples])
    centers = np.array([p.translation for p in samples])
    tracks = []
    for i, P in enumerate(points3d):
        pc = np.einsum("nji,nj->ni", rotations, P[None, :] - centers)
        u, v = distort_point(pc[:, 0] / pc[:, 2], pc[:, 1] / pc[:, 2], intr)
        if noise > 0:
            u = u + rng.normal(0.0, noise / math.sqrt(2), size=len(u))
            v = v + rng.normal(0.0, noise / math.sqrt(2), size=len(v))
        tracks.append(Track(i, times, u, v))
    return ProjectedScene(tracks, tuple(poses), points3d, intr)
