"""Raw events -> KCSCAN clusters -> (HT matching) -> chains -> tracks."""
from __future__ import annotations

from dataclasses import dataclass

from .kcscan import Labeling, cluster
from .matching import match_clusters, singleton_chains
from .tracks import DEFAULT_SAMPLE_PERIOD, extract_tracks
from .types import EcdtParams, EventStream


@dataclass(frozen=True, eq=False)
class PipelineResult:
    labeling: Labeling
    chains: list
    tracks: list


def run(stream: EventStream, params: EcdtParams = EcdtParams(), use_ht=True,
        sample_period=DEFAULT_SAMPLE_PERIOD, per_event=False, opposite_only=False, workers=1):
    labeling = cluster(stream, params, workers=workers)
    clusters = [labeling.clusters[cid] for cid in sorted(labeling.clusters)]
    if use_ht:
        chains = match_clusters(clusters, params, opposite_only=opposite_only)
    else:
        chains = singleton_chains(clusters)
    tracks = extract_tracks(chains, params, sample_period, per_event)
    return PipelineResult(labeling, chains, tracks)
