import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecdt import io as eio
from ecdt.errors import OutOfBounds, ParseError, UnsortedTimestamps
from ecdt.evaluation import TrackEvaluation, ThresholdSummary
from ecdt.types import CameraIntrinsics, EventStream, Polarity, Pose, Track


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_event_line(tmp_path):
    s = eio.read_events(write(tmp_path, "e.txt", "0.003811 96 133 0\n"))
    assert s[0].t == 0.003811 and s[0].x == 96 and s[0].y == 133 and s[0].p is Polarity.OFF


def test_out_of_bounds_names_line(tmp_path):
    with pytest.raises(OutOfBounds) as exc:
        eio.read_events(write(tmp_path, "e.txt", "0.0 1 1 1\n\n0.1 300 10 1\n"))
    assert "line 3" in str(exc.value)
    assert len(eio.read_events(write(tmp_path, "f.txt", "0.1 300 10 1\n"), width=346, height=260)) == 1


def test_empty_file_and_blank_lines(tmp_path):
    assert len(eio.read_events(write(tmp_path, "e.txt", ""))) == 0
    s = eio.read_events(write(tmp_path, "g.txt", "0.1 1 2 1   \n\n0.2 3 4 0\n\n"))
    assert len(s) == 2


@pytest.mark.parametrize("text,line", [
    ("0.1 1 2 1\n0.2 x 4 0\n", 2),
    ("0.1 1 2\n", 1),
    ("0.1 1 2 1\nnan 1 1 1\n", 2),
    ("0.1 1 2 1\n0.2 1 1 inf\n", 2),
    ("0.1 1.5 2 1\n", 1),
    ("0.1 1 2 3\n", 1),
])
def test_parse_errors_have_line_numbers(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        eio.read_events(write(tmp_path, "e.txt", text))
    assert exc.value.line == line


def test_unsorted_events(tmp_path):
    with pytest.raises(UnsortedTimestamps):
        eio.read_events(write(tmp_path, "e.txt", "0.2 1 1 1\n0.1 1 1 1\n"))


def test_events_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = EventStream(rng.integers(0, 240, 50), rng.integers(0, 180, 50), np.sort(rng.uniform(0, 1, 50)),
                    rng.integers(0, 2, 50))
    eio.write_events(s, tmp_path / "e.txt")
    assert eio.read_events(tmp_path / "e.txt") == s


def test_poses_renormalised_or_rejected(tmp_path):
    poses = eio.read_poses(write(tmp_path, "p.txt", "0 1 2 3 0 0 0 1.0005\n0.1 1 2 3 0 0 0 1\n"))
    assert abs(np.linalg.norm(poses[0].rotation) - 1) < 1e-12
    with pytest.raises(ParseError):
        eio.read_poses(write(tmp_path, "q.txt", "0 1 2 3 0 0 0 1.01\n"))
    with pytest.raises(ParseError) as exc:
        eio.read_poses(write(tmp_path, "r.txt", "0.2 0 0 0 0 0 0 1\n0.1 0 0 0 0 0 0 1\n"))
    assert exc.value.line == 2


def test_poses_round_trip(tmp_path):
    poses = [Pose(0.005 * i, (i, -i, 0.5), (0, math.sin(i / 10), 0, math.cos(i / 10))) for i in range(5)]
    eio.write_poses(poses, tmp_path / "p.txt")
    assert eio.read_poses(tmp_path / "p.txt") == poses


def test_calib(tmp_path):
    c = eio.read_calib(write(tmp_path, "c.txt", "199.1 198.8 132.2 110.5 -0.36 0.15 0.0 0.0 0.0\n"))
    assert c == CameraIntrinsics(199.1, 198.8, 132.2, 110.5, (-0.36, 0.15, 0, 0, 0))
    eio.write_calib(c, tmp_path / "d.txt")
    assert eio.read_calib(tmp_path / "d.txt") == c
    with pytest.raises(ParseError):
        eio.read_calib(write(tmp_path, "e.txt", "1 2 3 4 5 6 7 8\n"))
    with pytest.raises(ParseError):
        eio.read_calib(write(tmp_path, "f.txt", "1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n"))


finite = st.floats(-1e4, 1e4, allow_nan=False)


@given(st.lists(st.tuples(st.integers(0, 5), st.lists(st.tuples(finite, finite), min_size=1, max_size=5)),
                max_size=4, unique_by=lambda v: v[0]))
def test_tracks_round_trip_at_nine_digits(tmp_path_factory, layout):
    tracks = []
    for cid, pts in layout:
        t = np.round(np.arange(len(pts)) * 0.005 + 0.1, 9)
        tracks.append(Track(cid, t, [float("%.9g" % p[0]) for p in pts], [float("%.9g" % p[1]) for p in pts]))
    path = tmp_path_factory.mktemp("t") / "tracks.csv"
    eio.write_tracks(tracks, path, header={"k": 30})
    back = eio.read_tracks(path)
    assert back == tracks
    eio.write_tracks(back, path, header={"k": 30})
    assert eio.read_tracks(path) == tracks


def test_track_header_and_errors(tmp_path):
    p = tmp_path / "t.csv"
    eio.write_tracks([Track(0, [0.1, 0.2], [1, 2], [3, 4])], p, header={"k": 30, "r": 10.0})
    assert eio.read_header(p) == {"k": "30", "r": "10.0"}
    with pytest.raises(ParseError):
        eio.read_tracks(write(tmp_path, "bad.csv", "chain_id,t,x\n0,1,2\n"))
    with pytest.raises(ParseError):
        eio.read_tracks(write(tmp_path, "bad2.csv", "chain_id,t,x,y\n0,1,nan,2\n"))


def test_per_track_and_summary(tmp_path):
    evs = [TrackEvaluation(0, 1.5, 0.25, (0, 0, 0), 10, False, 0.01),
           TrackEvaluation(1, 0.5, float("nan"), (0, 0, 0), 3, True)]
    eio.write_per_track(evs, tmp_path / "p.csv", literal=True)
    back = eio.read_per_track(tmp_path / "p.csv")
    assert [(e.chain_id, e.feature_age, e.n_observations, e.degenerate) for e in back] == \
        [(0, 1.5, 10, False), (1, 0.5, 3, True)]
    assert back[0].rmse == 0.25 and math.isnan(back[1].rmse)
    eio.write_summary([ThresholdSummary(3.0, 1, 2, 1.5, 1.5, float("nan"), 0.25, 0.25, float("nan"))],
                      tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].split(",") == eio.SUMMARY_FIELDS and lines[1].startswith("3,1,2,1.5")
