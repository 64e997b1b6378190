"""Feature tracks from cluster chains by a temporal moving average."""
from __future__ import annotations

import numpy as np

from .errors import EmptyWindow
from .types import ClusterChain, EcdtParams, Track

DEFAULT_SAMPLE_PERIOD = 0.005


class _ChainWindows:
    """Open-window means over one chain's events in O(log n) per query.

    Window bounds are compared in time relative to the chain start, which
    keeps membership identical when the whole recording is shifted in time.
    Pixel coordinates are integers, so the prefix sums are exact.
    """

    def __init__(self, chain: ClusterChain):
        t, x, y = chain.events()
        self.t0 = float(t[0])
        self.t = t
        self.rel = t - self.t0
        self.cx = np.concatenate([[0], np.cumsum(x, dtype=np.int64)])
        self.cy = np.concatenate([[0], np.cumsum(y, dtype=np.int64)])

    def means_rel(self, s_k, t_w):
        s_k = np.asarray(s_k, dtype=np.float64)
        lo = np.searchsorted(self.rel, s_k - 0.5 * t_w, side="right")
        hi = np.searchsorted(self.rel, s_k + 0.5 * t_w, side="left")
        m = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            mx = (self.cx[hi] - self.cx[lo]) / m
            my = (self.cy[hi] - self.cy[lo]) / m
        return mx, my, m


def moving_average(chain: ClusterChain, t_k: float, t_w: float):
    """Mean pixel position of chain events with ``|t - t_k| < t_w / 2``."""
    windows = _ChainWindows(chain)
    mx, my, m = windows.means_rel([t_k - windows.t0], t_w)
    if m[0] == 0:
        raise EmptyWindow(t_k)
    return float(mx[0]), float(my[0])


def sample_offsets(duration, t_w, sample_period):
    """Sample times relative to the chain start: t_w/2, t_w/2 + period, ... up to duration - t_w/2."""
    first, last = 0.5 * t_w, duration - 0.5 * t_w
    if last < first:
        return np.zeros(0)
    n = int(np.floor((last - first) / sample_period + 1e-9)) + 1
    offs = first + sample_period * np.arange(n)
    return offs[offs <= last + 1e-12]


def sample_times(t_start, t_end, t_w, sample_period):
    return t_start + sample_offsets(t_end - t_start, t_w, sample_period)


def chain_track(chain: ClusterChain, t_w, sample_period=DEFAULT_SAMPLE_PERIOD, per_event=False):
    windows = _ChainWindows(chain)
    if per_event:
        times, first = np.unique(windows.t, return_index=True)
        offs = windows.rel[first]
        inside = (offs >= 0.5 * t_w) & (offs <= windows.rel[-1] - 0.5 * t_w)
        times, offs = times[inside], offs[inside]
    else:
        offs = sample_offsets(windows.rel[-1], t_w, sample_period)
        times = windows.t0 + offs
    mx, my, m = windows.means_rel(offs, t_w)
    keep = m > 0
    times, mx, my = times[keep], mx[keep], my[keep]
    # adding t0 can merge neighbouring per-event times
    uniq = np.concatenate([[True], np.diff(times) > 0]) if len(times) else np.zeros(0, bool)
    return Track(chain.chain_id, times[uniq], mx[uniq], my[uniq])


def extract_tracks(chains, params: EcdtParams, sample_period=DEFAULT_SAMPLE_PERIOD, per_event=False):
    """Tracks for chains that live at least ``min_feature_age``.

    Samples run from ``t_start + t_w/2`` to ``t_end - t_w/2`` every
    ``sample_period`` seconds (or at every distinct event time when
    ``per_event``). Empty windows are skipped. Tracks whose own span falls
    short of ``min_feature_age`` are dropped as well.
    """
    if not per_event and not sample_period > 0:
        raise ValueError("sample_period must be positive")
    tracks = []
    for chain in sorted(chains, key=lambda c: c.chain_id):
        if chain.age < params.min_feature_age:
            continue
        track = chain_track(chain, params.t_w, sample_period, per_event)
        if len(track) and track.age >= params.min_feature_age:
            tracks.append(track)
    return tracks
