"""Radius-bounded k-nearest-neighbour search in (x, y, t * time_scale) space.

The tree (scipy's cKDTree) only proposes candidates. Every distance that
decides membership or order is recomputed here with one fixed formula, so
results do not depend on the tree's internal arithmetic and ties resolve
by event index.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyStream
from .types import EventStream

# slack on tree-side radius tests; exact filtering happens afterwards
_REL_SLACK = 1e-9
_ABS_SLACK = 1e-9
# extra candidates fetched beyond k to detect ties at the k-th distance
_EXTRA = 8
_CHUNK = 100_000


def scaled_points(x, y, t, time_scale):
    pts = np.empty((len(t), 3), dtype=np.float64)
    pts[:, 0] = x
    pts[:, 1] = y
    pts[:, 2] = np.asarray(t, dtype=np.float64) * time_scale
    return pts


def pair_distance(a, b):
    """Euclidean distance between rows of ``a`` and ``b`` (broadcasting)."""
    d = a - b
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


class StIndex:
    """Static spatio-temporal index over one event batch.

    ``workers`` is passed to the tree queries; it changes speed only.
    """

    def __init__(self, points, time_scale, workers=1):
        self.points = points
        self.points.setflags(write=False)
        self.time_scale = float(time_scale)
        self.workers = workers
        self.tree = cKDTree(points, balanced_tree=True, compact_nodes=True)

    def __len__(self):
        return len(self.points)

    def knn(self, queries, k, r):
        """k nearest neighbours within ``r`` for each event index in ``queries``.

        Returns ``(idx, dist, count)``: ``(m, k)`` arrays padded with -1 / inf,
        rows sorted by (distance, index), self excluded.
        """
        queries = np.asarray(queries, dtype=np.int64).reshape(-1)
        m = len(queries)
        out_idx = np.full((m, k), -1, dtype=np.int64)
        out_dist = np.full((m, k), np.inf)
        counts = np.zeros(m, dtype=np.int64)
        for lo in range(0, m, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            out_idx[sl], out_dist[sl], counts[sl] = self._knn_chunk(queries[sl], k, r)
        return out_idx, out_dist, counts

    def _knn_chunk(self, queries, k, r):
        n = len(self.points)
        m = len(queries)
        n_cand = min(k + 1 + _EXTRA, n)
        bound = r * (1 + _REL_SLACK) + _ABS_SLACK
        qpts = self.points[queries]
        _, raw = self.tree.query(qpts, k=n_cand, distance_upper_bound=bound, workers=self.workers)
        raw = np.asarray(raw, dtype=np.int64).reshape(m, n_cand)
        present = raw < n
        safe = np.where(present, raw, 0)
        raw_dist = np.where(present, pair_distance(self.points[safe], qpts[:, None, :]), np.inf)

        usable = present & (raw != queries[:, None]) & (raw_dist <= r)
        dist = np.where(usable, raw_dist, np.inf)
        cand = np.where(usable, raw, n)
        order = np.lexsort((cand, dist), axis=-1)
        cand = np.take_along_axis(cand, order, axis=1)[:, :k]
        dist = np.take_along_axis(dist, order, axis=1)[:, :k]
        if cand.shape[1] < k:
            pad = k - cand.shape[1]
            cand = np.pad(cand, ((0, 0), (0, pad)), constant_values=n)
            dist = np.pad(dist, ((0, 0), (0, pad)), constant_values=np.inf)
        found = np.isfinite(dist)
        idx = np.where(found, cand, -1)
        count = found.sum(axis=1)

        # When the tree filled every candidate slot, points it did not return
        # can only matter if they tie (within round-off) with the k-th distance.
        kth = dist[:, k - 1]
        suspect = (present[:, -1] & np.isfinite(kth)
                   & (raw_dist[:, -1] <= kth * (1 + _REL_SLACK) + _ABS_SLACK))
        if n_cand < k + 1 + _EXTRA:
            suspect[:] = False
        for row in np.flatnonzero(suspect):
            idx[row], dist[row] = self._knn_exhaustive_ball(int(queries[row]), k, r, float(kth[row]))
        return idx, dist, count

    def _knn_exhaustive_ball(self, q, k, r, kth):
        radius = min(r, kth) * (1 + _REL_SLACK) + _ABS_SLACK
        cand = np.asarray(self.tree.query_ball_point(self.points[q], radius), dtype=np.int64)
        cand = cand[cand != q]
        dist = pair_distance(self.points[cand], self.points[q])
        keep = dist <= r
        cand, dist = cand[keep], dist[keep]
        order = np.lexsort((cand, dist))[:k]
        idx = np.full(k, -1, dtype=np.int64)
        d = np.full(k, np.inf)
        idx[:len(order)] = cand[order]
        d[:len(order)] = dist[order]
        return idx, d

    def radius_neighbors(self, queries, r):
        """All events within ``r`` of each query (self excluded).

        Returns CSR-style ``(indptr, indices, dist)``; each row sorted by index.
        """
        queries = np.asarray(queries, dtype=np.int64).reshape(-1)
        bound = r * (1 + _REL_SLACK) + _ABS_SLACK
        lists = self.tree.query_ball_point(self.points[queries], bound, workers=self.workers,
                                           return_sorted=True)
        lengths = np.fromiter((len(a) for a in lists), dtype=np.int64, count=len(lists))
        flat = (np.concatenate([np.asarray(a, dtype=np.int64) for a in lists])
                if len(lists) and lengths.sum() else np.zeros(0, np.int64))
        owner = np.repeat(queries, lengths)
        dist = pair_distance(self.points[flat], self.points[owner])
        keep = (dist <= r) & (flat != owner)
        row = np.repeat(np.arange(len(queries)), lengths)[keep]
        indptr = np.zeros(len(queries) + 1, dtype=np.int64)
        np.cumsum(np.bincount(row, minlength=len(queries)), out=indptr[1:])
        return indptr, flat[keep], dist[keep]


def build_index(events: EventStream, time_scale: float, workers=1) -> StIndex:
    if not time_scale > 0:
        raise ValueError("time_scale must be positive")
    if len(events) == 0:
        raise EmptyStream()
    return StIndex(scaled_points(events.x, events.y, events.t, time_scale), time_scale, workers)


def knn_within_radius(index: StIndex, query_event_index: int, k: int, r: float):
    """Ordered ``[(event_index, distance), ...]``: at most k events within r, nearest first."""
    if k < 1 or not r > 0:
        raise ValueError("need k >= 1 and r > 0")
    if not 0 <= query_event_index < len(index):
        raise IndexError(query_event_index)
    idx, dist, count = index.knn([query_event_index], k, r)
    return [(int(i), float(d)) for i, d in zip(idx[0, :count[0]], dist[0, :count[0]])]
