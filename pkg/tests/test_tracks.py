import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from ecdt.errors import EmptyWindow
from ecdt.tracks import chain_track, extract_tracks, moving_average, sample_times
from ecdt.types import Cluster, ClusterChain, EcdtParams


def chain_of(t, x, y, cid=0, pol=1):
    return ClusterChain(cid, (Cluster(0, pol, x, y, t),))


def random_chain(seed, n=400, duration=0.2):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, duration, n))
    return chain_of(t, rng.integers(0, 100, n), rng.integers(0, 100, n))


def test_ma_examples():
    assert moving_average(chain_of([0.0, 0.001], [50, 50], [60, 60]), 0.0005, 0.01) == (50.0, 60.0)
    assert moving_average(chain_of([0.0, 0.001], [0, 2], [0, 2]), 0.0005, 0.01) == (1.0, 1.0)


def test_ma_window_is_open():
    ch = chain_of([0.0, 0.01, 0.02], [0, 10, 20], [0, 0, 0])
    assert moving_average(ch, 0.01, 0.02) == (10.0, 0.0)
    with pytest.raises(EmptyWindow):
        moving_average(ch, 0.005, 0.002)


@pytest.mark.parametrize("seed", range(5))
def test_ma_matches_brute(seed):
    ch = random_chain(seed)
    t, x, y = ch.events()
    for t_k in np.linspace(0.01, 0.19, 37):
        ref = oracles.moving_average_brute(t, x, y, t_k, 0.01)
        got = moving_average(ch, t_k, 0.01)
        assert got == pytest.approx(ref, abs=1e-12)


def test_young_chain_dropped():
    ch = chain_of(np.linspace(0, 0.005, 10), [1] * 10, [1] * 10)
    assert extract_tracks([ch], EcdtParams(min_feature_age=0.01)) == []


def test_point_count_for_one_second_chain():
    ch = chain_of(np.linspace(0, 1.0, 5001), [1] * 5001, [1] * 5001)
    tr = chain_track(ch, 0.01, sample_period=0.01)
    assert abs(len(tr) - 99) <= 1
    assert np.all(np.diff(tr.t) > 0)
    assert tr.t[0] == pytest.approx(0.005) and tr.t[-1] <= 0.995 + 1e-12


def test_sample_times_edges():
    assert len(sample_times(0.0, 0.005, 0.01, 0.005)) == 0
    np.testing.assert_allclose(sample_times(0.0, 0.03, 0.01, 0.005), [0.005, 0.01, 0.015, 0.02, 0.025])


@given(st.integers(0, 10_000), st.integers(-50, 50), st.integers(-50, 50))
def test_ma_linearity(seed, dx, dy):
    ch = random_chain(seed, n=200)
    t, x, y = ch.events()
    moved = chain_of(t, x + dx, y + dy)
    a = chain_track(ch, 0.01)
    b = chain_track(moved, 0.01)
    np.testing.assert_array_equal(a.t, b.t)
    np.testing.assert_allclose(b.x - a.x, dx, atol=1e-9)
    np.testing.assert_allclose(b.y - a.y, dy, atol=1e-9)


@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 3.0, 10.0]))
def test_time_shift_equivariance(seed, tau):
    ch = random_chain(seed, n=200)
    t, x, y = ch.events()
    a = chain_track(ch, 0.01)
    b = chain_track(chain_of(t + tau, x, y), 0.01)
    np.testing.assert_allclose(b.t - a.t, tau, atol=1e-9)
    np.testing.assert_allclose(b.x, a.x, atol=1e-9)
    np.testing.assert_allclose(b.y, a.y, atol=1e-9)


def test_per_event_and_sampled_agree_at_shared_times():
    rng = np.random.default_rng(0)
    t = np.sort(np.concatenate([[0.0], rng.uniform(0, 0.2, 300), [0.2]]))
    # put events exactly on the sampled times so the two modes share timestamps
    t = np.unique(np.concatenate([t, sample_times(0.0, 0.2, 0.01, 0.005)]))
    ch = chain_of(t, rng.integers(0, 50, len(t)), rng.integers(0, 50, len(t)))
    per = chain_track(ch, 0.01, per_event=True)
    samp = chain_track(ch, 0.01, sample_period=0.005)
    shared = 0
    for tk, xk, yk in zip(samp.t, samp.x, samp.y):
        j = np.flatnonzero(per.t == tk)
        if len(j):
            shared += 1
            assert abs(per.x[j[0]] - xk) <= 1e-9 and abs(per.y[j[0]] - yk) <= 1e-9
    assert shared == len(samp)


def test_tracks_respect_min_age_and_chain_order():
    chains = [random_chain(s) for s in range(3)]
    chains = [ClusterChain(i, c.clusters) for i, c in enumerate(chains)]
    tracks = extract_tracks(chains, EcdtParams(min_feature_age=0.05))
    assert [t.chain_id for t in tracks] == [0, 1, 2]
    assert all(t.age >= 0.05 for t in tracks)


def test_merged_chain_spans_both_clusters():
    a = Cluster(0, 1, [5] * 50, [5] * 50, np.linspace(0, 0.5, 50))
    b = Cluster(1, 0, [5] * 50, [5] * 50, np.linspace(0.55, 1.0, 50))
    merged = extract_tracks([ClusterChain(0, (a, b), (1.0,))], EcdtParams())
    split = extract_tracks([ClusterChain(0, (a,)), ClusterChain(1, (b,))], EcdtParams())
    assert len(merged) == 1 and len(split) == 2
    assert merged[0].age > max(t.age for t in split)
