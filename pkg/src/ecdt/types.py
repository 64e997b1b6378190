"""Domain types shared across the pipeline.

Event data is stored column-wise (``x``, ``y``, ``t``, ``p`` arrays) because every
stage works on whole batches; :class:`Event` is only the per-row view.
All array-holding types freeze their arrays on construction.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import OutOfBounds, UnsortedTimestamps

DAVIS_WIDTH = 240
DAVIS_HEIGHT = 180


class Polarity(enum.IntEnum):
    OFF = 0
    ON = 1


class Event(NamedTuple):
    x: int
    y: int
    t: float
    p: Polarity


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


class _Columns:
    """Shared behaviour for column-stored event collections."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), float(self.t[i]), Polarity(int(self.p[i])))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]


class EventStream(_Columns):
    """Time-sorted events from one sensor of size ``width`` x ``height``.

    Construction does not validate; call :func:`validate_stream` on untrusted input.
    """

    __slots__ = ("x", "y", "t", "p", "width", "height")

    def __init__(self, x, y, t, p, width=DAVIS_WIDTH, height=DAVIS_HEIGHT):
        self.x = _frozen(x, np.int64)
        self.y = _frozen(y, np.int64)
        self.t = _frozen(t, np.float64)
        self.p = _frozen(p, np.int8)
        if not (len(self.x) == len(self.y) == len(self.t) == len(self.p)):
            raise ValueError("event columns have different lengths")
        self.width = int(width)
        self.height = int(height)

    @classmethod
    def from_events(cls, events: Sequence[Event], width=DAVIS_WIDTH, height=DAVIS_HEIGHT):
        if len(events) == 0:
            return cls.empty(width, height)
        x, y, t, p = zip(*events)
        return cls(x, y, t, [int(v) for v in p], width, height)

    @classmethod
    def empty(cls, width=DAVIS_WIDTH, height=DAVIS_HEIGHT):
        return cls([], [], [], [], width, height)

    def take(self, indices) -> "EventStream":
        indices = np.asarray(indices)
        return EventStream(self.x[indices], self.y[indices], self.t[indices], self.p[indices],
                           self.width, self.height)

    def time_slice(self, t_begin=None, t_end=None) -> "EventStream":
        lo = 0 if t_begin is None else int(np.searchsorted(self.t, t_begin, side="left"))
        hi = len(self) if t_end is None else int(np.searchsorted(self.t, t_end, side="right"))
        return self.take(np.arange(lo, hi))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)
                and np.array_equal(self.t, other.t) and np.array_equal(self.p, other.p))

    def __repr__(self):
        return f"EventStream(n={len(self)}, width={self.width}, height={self.height})"


def validate_stream(stream: EventStream) -> EventStream:
    """Return ``stream`` unchanged if it is time-sorted and inside the sensor.

    Raises OutOfBounds or UnsortedTimestamps with the index of the first offending event.
    """
    n = len(stream)
    if n == 0:
        return stream
    bad = ((stream.x < 0) | (stream.x >= stream.width) | (stream.y < 0) | (stream.y >= stream.height)
           | ~np.isfinite(stream.t) | (stream.t < 0) | ((stream.p != 0) & (stream.p != 1)))
    first_bad = int(np.argmax(bad)) if bad.any() else n
    desc = np.flatnonzero(np.diff(stream.t) < 0)
    first_unsorted = int(desc[0]) + 1 if len(desc) else n
    if first_bad == n and first_unsorted == n:
        return stream
    if first_bad <= first_unsorted:
        raise OutOfBounds(first_bad)
    raise UnsortedTimestamps(first_unsorted)


class Cluster(_Columns):
    """Equal-polarity events grouped by KCSCAN."""

    __slots__ = ("id", "polarity", "x", "y", "t", "p")

    def __init__(self, id, polarity, x, y, t):
        self.id = int(id)
        self.polarity = Polarity(int(polarity))
        order = np.argsort(np.asarray(t, dtype=np.float64), kind="stable")
        self.x = _frozen(np.asarray(x)[order], np.int64)
        self.y = _frozen(np.asarray(y)[order], np.int64)
        self.t = _frozen(np.asarray(t, dtype=np.float64)[order], np.float64)
        if len(self.t) == 0:
            raise ValueError(f"cluster {id} is empty")
        if not (len(self.x) == len(self.y) == len(self.t)):
            raise ValueError("cluster columns have different lengths")
        self.p = np.full(len(self.t), int(self.polarity), dtype=np.int8)
        self.p.setflags(write=False)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def __repr__(self):
        return (f"Cluster(id={self.id}, polarity={self.polarity.name}, n={len(self)}, "
                f"t=[{self.t_start:.6f}, {self.t_end:.6f}])")


@dataclass(frozen=True)
class ClusterChain:
    """HT-matched clusters of one feature. ``link_ious[i]`` joins clusters i and i+1."""

    chain_id: int
    clusters: tuple
    link_ious: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "link_ious", tuple(float(v) for v in self.link_ious))
        if not self.clusters:
            raise ValueError("a chain needs at least one cluster")
        if len(self.link_ious) != len(self.clusters) - 1:
            raise ValueError("one IoU per link expected")

    @property
    def t_start(self) -> float:
        return min(c.t_start for c in self.clusters)

    @property
    def t_end(self) -> float:
        return max(c.t_end for c in self.clusters)

    @property
    def age(self) -> float:
        return self.t_end - self.t_start

    def events(self):
        """Union of member events as time-sorted ``(t, x, y)`` arrays."""
        t = np.concatenate([c.t for c in self.clusters])
        x = np.concatenate([c.x for c in self.clusters])
        y = np.concatenate([c.y for c in self.clusters])
        order = np.argsort(t, kind="stable")
        return t[order], x[order], y[order]


@dataclass(frozen=True, eq=False)
class Track:
    chain_id: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        for name in ("t", "x", "y"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float64))
        if not (len(self.t) == len(self.x) == len(self.y)):
            raise ValueError("track columns have different lengths")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError(f"track {self.chain_id} timestamps are not strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def age(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0

    def __eq__(self, other):
        if not isinstance(other, Track):
            return NotImplemented
        return (self.chain_id == other.chain_id and np.array_equal(self.t, other.t)
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))


@dataclass(frozen=True)
class Pose:
    """Camera pose in the world frame; ``rotation`` is (qx, qy, qz, qw)."""

    t: float
    translation: tuple
    rotation: tuple

    def __post_init__(self):
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))
        object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))
        if len(self.translation) != 3 or len(self.rotation) != 4:
            raise ValueError("pose needs 3 translation and 4 quaternion components")
        norm = math.sqrt(sum(v * v for v in self.rotation))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"pose quaternion norm {norm!r} is not 1")

    def rotation_matrix(self) -> np.ndarray:
        qx, qy, qz, qw = self.rotation
        return np.array([
            [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
            [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
            [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
        ])


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "distortion", tuple(float(v) for v in self.distortion))
        if len(self.distortion) != 5:
            raise ValueError("expected 5 distortion coefficients (k1, k2, p1, p2, k3)")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.cx, self.cy, *self.distortion)):
            raise ValueError("intrinsics must be finite")


@dataclass(frozen=True)
class EcdtParams:
    """Tuning parameters.

    Units: seconds for times, pixels for proximity_radius, scaled
    spatio-temporal units (px, px, t * time_scale) for r. The defaults of r,
    time_scale, delta_t and proximity_radius are calibrated for 240x180
    sensors and typical desk-scene event rates.
    """

    k: int = 30
    r: float = 10.0
    phi_min: float = 0.90
    time_scale: float = 5000.0
    min_feature_age: float = 0.01
    t_w: float = 0.01
    search_time: float = 0.2
    iou_threshold: float = 0.7
    delta_t: float = 0.01
    proximity_radius: float = 10.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be positive and finite, got {v!r}")
        if self.phi_min > 1 or self.iou_threshold > 1:
            raise ValueError("phi_min and iou_threshold must lie in (0, 1]")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
