"""KCSCAN: density clustering where core status is a k-NN polarity vote.

An event is a core point when it has k neighbours within ``r`` and at least a
fraction ``phi_min`` of them share its polarity. Clusters grow DBSCAN-style:
equal-polarity core points within ``r`` of each other are connected, and a
non-core event joins the cluster of its nearest equal-polarity core point
within ``r``. Opposite-polarity events never join, so they act as barriers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EmptyStream
from .index import StIndex, build_index
from .types import Cluster, EcdtParams, Event, EventStream

log = logging.getLogger(__name__)

NOISE = -1
_EXPAND_CHUNK = 20_000


def purity_score(query: Event, neighbors, k: int) -> float:
    """Fraction of the k voting slots held by neighbours of the query's polarity.

    ``neighbors`` is a sequence of Events (or polarities). Missing neighbours
    count as mismatches because the denominator is always ``k``.
    """
    if len(neighbors) > k:
        raise ValueError("more neighbours than k")
    qp = int(query.p) if isinstance(query, Event) else int(query)
    same = sum(1 for n in neighbors if int(n.p if isinstance(n, Event) else n) == qp)
    return same / k


def core_point_eval(query_event_index: int, params: EcdtParams, index: StIndex, polarity):
    """``(is_core, neighbors)`` for one event; neighbours are ``(index, distance)`` pairs.

    Returns an empty neighbour list when the event is not a core point.
    """
    idx, dist, count = index.knn([query_event_index], params.k, params.r)
    if count[0] < params.k:
        return False, []
    p = np.asarray(polarity)
    phi = np.count_nonzero(p[idx[0]] == p[query_event_index]) / params.k
    if phi < params.phi_min:
        return False, []
    return True, [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


def core_mask(index: StIndex, polarity, k, r, phi_min):
    """Vectorised core-point evaluation over every event in the index."""
    p = np.asarray(polarity)
    idx, _, count = index.knn(np.arange(len(index)), k, r)
    same = (p[np.where(idx >= 0, idx, 0)] == p[:, None]) & (idx >= 0)
    phi = same.sum(axis=1) / k
    return (count == k) & (phi >= phi_min)


@dataclass(frozen=True, eq=False)
class Labeling:
    """Per-event cluster ids (``NOISE`` = -1), core flags and the cluster registry."""

    labels: np.ndarray
    core: np.ndarray
    clusters: dict

    @property
    def n_clusters(self):
        return len(self.clusters)

    @property
    def n_noise(self):
        return int(np.count_nonzero(self.labels == NOISE))


def _core_components(index, core, p, r):
    """Connected components of the equal-polarity core graph (edges: distance <= r)."""
    n = len(index)
    comp = np.arange(n)
    core_idx = np.flatnonzero(core)
    for lo in range(0, len(core_idx), _EXPAND_CHUNK):
        q = core_idx[lo:lo + _EXPAND_CHUNK]
        indptr, nbr, _ = index.radius_neighbors(q, r)
        owner = np.repeat(q, np.diff(indptr))
        keep = core[nbr] & (p[nbr] == p[owner])
        a, b = comp[owner[keep]], comp[nbr[keep]]
        if len(a) == 0:
            continue
        graph = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n))
        _, sub = connected_components(graph, directed=False)
        comp = sub[comp]
    return comp


def cluster(events: EventStream, params: EcdtParams, workers=1) -> Labeling:
    """Label every event of a validated stream with a cluster id or NOISE.

    Cluster ids follow the time order of each cluster's earliest core event.
    The result does not depend on ``workers``.
    """
    n = len(events)
    if n == 0:
        raise EmptyStream()
    index = build_index(events, params.time_scale, workers=workers)
    p = np.asarray(events.p)
    core = core_mask(index, p, params.k, params.r, params.phi_min)

    labels = np.full(n, NOISE, dtype=np.int64)
    comp = _core_components(index, core, p, params.r)
    core_idx = np.flatnonzero(core)
    if len(core_idx):
        # components ordered by their first (earliest) core event
        roots, first = np.unique(comp[core_idx], return_index=True)
        order = np.argsort(core_idx[first], kind="stable")
        cid_of_root = np.empty(len(roots), dtype=np.int64)
        cid_of_root[order] = np.arange(len(roots))
        labels[core_idx] = cid_of_root[np.searchsorted(roots, comp[core_idx])]
        _assign_borders(index, core, p, labels, params.r)

    clusters = {}
    members = np.flatnonzero(labels >= 0)
    if len(members):
        by_label = members[np.argsort(labels[members], kind="stable")]
        splits = np.flatnonzero(np.diff(labels[by_label])) + 1
        for group in np.split(by_label, splits):
            cid = int(labels[group[0]])
            clusters[cid] = Cluster(cid, p[group[0]], events.x[group], events.y[group], events.t[group])
    log.debug("kcscan: %d events, %d core, %d clusters, %d noise",
              n, int(core.sum()), len(clusters), int(np.count_nonzero(labels == NOISE)))
    core.setflags(write=False)
    labels.setflags(write=False)
    return Labeling(labels, core, clusters)


def _assign_borders(index, core, p, labels, r):
    """Non-core events adopt the label of their nearest equal-polarity core within r.

    Ties on distance go to the lower cluster id.
    """
    cand = np.flatnonzero(~core)
    for lo in range(0, len(cand), _EXPAND_CHUNK):
        q = cand[lo:lo + _EXPAND_CHUNK]
        indptr, nbr, dist = index.radius_neighbors(q, r)
        owner = np.repeat(np.arange(len(q)), np.diff(indptr))
        keep = core[nbr] & (p[nbr] == p[q[owner]])
        owner, nbr, dist = owner[keep], nbr[keep], dist[keep]
        if len(owner) == 0:
            continue
        order = np.lexsort((labels[nbr], dist, owner))
        owner, nbr = owner[order], nbr[order]
        first = np.ones(len(owner), dtype=bool)
        first[1:] = owner[1:] != owner[:-1]
        labels[q[owner[first]]] = labels[nbr[first]]
