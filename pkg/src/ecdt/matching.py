"""Head/tail descriptor matching.

A cluster that ends (e.g. because a reversal of motion flips the polarity of
its edge) is linked to a cluster that starts close by, shortly afterwards,
with a similar pixel footprint. Footprints are the distinct pixels touched in
the last / first ``delta_t`` seconds of each cluster, compared by IoU.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass


from .errors import BothEmpty
from .types import Cluster, ClusterChain, EcdtParams


def _pixels(c: Cluster, mask) -> frozenset:
    return frozenset(zip(c.x[mask].tolist(), c.y[mask].tolist()))


def head_descriptor(c: Cluster, delta_t: float) -> frozenset:
    """Pixels of events in ``[t_start, t_start + delta_t)``."""
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    return _pixels(c, c.t < c.t_start + delta_t)


def tail_descriptor(c: Cluster, delta_t: float) -> frozenset:
    """Pixels of events in ``(t_end - delta_t, t_end]``."""
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    return _pixels(c, c.t > c.t_end - delta_t)


def iou(a, b) -> float:
    a, b = frozenset(a), frozenset(b)
    union = len(a | b)
    if union == 0:
        raise BothEmpty()
    return len(a & b) / union


def centroid(pixels) -> tuple:
    xs, ys = zip(*pixels)
    return sum(xs) / len(xs), sum(ys) / len(ys)


@dataclass(frozen=True)
class Link:
    pred: int
    succ: int
    iou: float


def candidate_links(clusters, params: EcdtParams, opposite_only=False):
    """Every (pred, succ) pair passing the temporal, spatial and IoU gates."""
    by_start = sorted(clusters, key=lambda c: (c.t_start, c.id))
    starts = [c.t_start for c in by_start]
    heads = {c.id: head_descriptor(c, params.delta_t) for c in clusters}
    tails = {c.id: tail_descriptor(c, params.delta_t) for c in clusters}
    head_c = {cid: centroid(px) for cid, px in heads.items()}
    tail_c = {cid: centroid(px) for cid, px in tails.items()}

    links = []
    for ci in clusters:
        lo = bisect.bisect_left(starts, ci.t_end)
        hi = bisect.bisect_right(starts, ci.t_end + params.search_time)
        for cj in by_start[lo:hi]:
            if cj.id == ci.id:
                continue
            # zero-length clusters could otherwise link both ways
            if (cj.t_start, cj.id) <= (ci.t_start, ci.id):
                continue
            if opposite_only and cj.polarity == ci.polarity:
                continue
            (tx, ty), (hx, hy) = tail_c[ci.id], head_c[cj.id]
            if math.hypot(tx - hx, ty - hy) > params.proximity_radius:
                continue
            score = iou(tails[ci.id], heads[cj.id])
            if score >= params.iou_threshold:
                links.append(Link(ci.id, cj.id, score))
    return links


def resolve_links(links, clusters):
    """One-to-one assignment: claims are granted in descending IoU.

    Ties go to the earlier-starting successor, then the lower successor id,
    then the lower predecessor id. A predecessor whose best successor is
    taken falls through to its next-best candidate.
    """
    t_start = {c.id: c.t_start for c in clusters}
    ordered = sorted(links, key=lambda l: (-l.iou, t_start[l.succ], l.succ, l.pred))
    has_succ, has_pred = set(), set()
    accepted = []
    for link in ordered:
        if link.pred in has_succ or link.succ in has_pred:
            continue
        has_succ.add(link.pred)
        has_pred.add(link.succ)
        accepted.append(link)
    return accepted


def build_chains(clusters, links):
    """Assemble accepted links into chains; chain ids follow head-cluster order."""
    by_id = {c.id: c for c in clusters}
    nxt = {l.pred: l for l in links}
    preds = {l.succ for l in links}
    heads = sorted((c for c in clusters if c.id not in preds), key=lambda c: (c.t_start, c.id))
    chains = []
    for chain_id, head in enumerate(heads):
        members, ious = [head], []
        cur = head.id
        while cur in nxt:
            link = nxt[cur]
            members.append(by_id[link.succ])
            ious.append(link.iou)
            cur = link.succ
        chains.append(ClusterChain(chain_id, tuple(members), tuple(ious)))
    return chains


def match_clusters(clusters, params: EcdtParams, opposite_only=False):
    clusters = list(clusters)
    links = resolve_links(candidate_links(clusters, params, opposite_only), clusters)
    return build_chains(clusters, links)


def singleton_chains(clusters):
    """One chain per cluster, no linking."""
    return build_chains(list(clusters), [])
