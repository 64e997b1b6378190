import subprocess
import sys

import pytest

from ecdt import io as eio
from ecdt.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(scope="module")
def reversal(tmp_path_factory):
    d = tmp_path_factory.mktemp("rev")
    assert main(["synth", "reversal", "--out", str(d)]) == EXIT_OK
    return d


def test_synth_writes_dataset_layout(reversal):
    for name in ("events.txt", "groundtruth.txt", "calib.txt", "edges.csv", "edge_points.csv"):
        assert (reversal / name).stat().st_size > 0


def test_track_evaluate_stats_end_to_end(reversal, tmp_path, capsys):
    tracks = tmp_path / "tracks.csv"
    assert main(["track", str(reversal / "events.txt"), "--calib", str(reversal / "calib.txt"),
                 "--out", str(tracks), "--threads", "1"]) == EXIT_OK
    assert "2 chains" in capsys.readouterr().out
    assert len(eio.read_tracks(tracks)) == 2
    summary, per = tmp_path / "summary.csv", tmp_path / "per-track.csv"
    assert main(["evaluate", str(tracks), "--poses", str(reversal / "groundtruth.txt"),
                 "--calib", str(reversal / "calib.txt"), "--summary", str(summary),
                 "--per-track", str(per)]) == EXIT_OK
    assert (tmp_path / "feature_age.png").exists() and (tmp_path / "reprojection_rmse.png").exists()
    assert len(eio.read_per_track(per)) == 2
    capsys.readouterr()
    assert main(["stats", str(per)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "age mean" in out and "<=3px" in out


def test_each_edge_gives_one_chain(reversal, tmp_path, capsys):
    # one chain per edge with matching; both edges split without it
    out = tmp_path / "t.csv"
    main(["track", str(reversal / "events.txt"), "--out", str(out), "--threads", "1"])
    assert "2 chains" in capsys.readouterr().out
    main(["track", str(reversal / "events.txt"), "--out", str(out), "--threads", "1", "--no-ht"])
    assert "4 chains" in capsys.readouterr().out


def test_print_params_header(reversal, tmp_path):
    out = tmp_path / "t.csv"
    main(["track", str(reversal / "events.txt"), "--out", str(out), "--k", "20", "--print-params",
          "--t-begin", "0.0", "--t-end", "0.4"])
    head = eio.read_header(out)
    assert head["k"] == "20" and head["t_end"] == "0.4" and "threads" not in head


def test_slice_inverted_is_usage_error(reversal, tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["track", str(reversal / "events.txt"), "--out", str(out), "--t-begin", "2", "--t-end", "1"])
    assert code == EXIT_USAGE and not out.exists()
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


def test_bad_flag_value_is_usage_error(reversal, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["track", str(reversal / "events.txt"), "--out", str(tmp_path / "t.csv"), "--k", "many"])
    assert exc.value.code == EXIT_USAGE
    assert main(["track", str(reversal / "events.txt"), "--out", str(tmp_path / "t.csv"),
                 "--phi-min", "2"]) == EXIT_USAGE


def test_missing_and_malformed_input(tmp_path, capsys):
    assert main(["track", str(tmp_path / "none.txt"), "--out", str(tmp_path / "t.csv")]) == EXIT_IO
    bad = tmp_path / "e.txt"
    bad.write_text("0.1 1 1 1\n0.2 999 1 1\n")
    assert main(["track", str(bad), "--out", str(tmp_path / "t.csv")]) == EXIT_IO
    assert "line 2" in capsys.readouterr().err
    assert not (tmp_path / "t.csv").exists()


def test_uncovered_poses_name_track_and_time(reversal, tmp_path, capsys):
    tracks = tmp_path / "tracks.csv"
    main(["track", str(reversal / "events.txt"), "--out", str(tracks), "--threads", "1"])
    short = tmp_path / "gt.txt"
    short.write_text("".join(ln for ln in (reversal / "groundtruth.txt").read_text().splitlines(True)[:50]))
    summary, per = tmp_path / "s.csv", tmp_path / "p.csv"
    capsys.readouterr()
    code = main(["evaluate", str(tracks), "--poses", str(short), "--calib", str(reversal / "calib.txt"),
                 "--summary", str(summary), "--per-track", str(per)])
    err = capsys.readouterr().err.strip()
    assert code == EXIT_NUMERIC
    assert "track 0" in err and "timestamp" in err and len(err.splitlines()) == 1
    assert not summary.exists() and not per.exists()


def test_synth_projected_and_evaluate(tmp_path):
    d = tmp_path / "proj"
    assert main(["synth", "projected", "--out", str(d), "--n-points", "5", "--noise", "0.5"]) == EXIT_OK
    assert main(["evaluate", str(d / "tracks.csv"), "--poses", str(d / "groundtruth.txt"),
                 "--calib", str(d / "calib.txt"), "--summary", str(d / "s.csv"),
                 "--per-track", str(d / "p.csv"), "--literal-rmse", "--no-figures",
                 "--thresholds", "1,2"]) == EXIT_OK
    rows = (d / "p.csv").read_text().splitlines()
    assert rows[0].endswith("rmse_literal_px") and len(rows) == 6
    assert not (d / "feature_age.png").exists()


def test_synth_crossing_bands(tmp_path):
    assert main(["synth", "crossing-bands", "--out", str(tmp_path), "--seed", "2"]) == EXIT_OK
    assert (tmp_path / "segments.csv").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ecdt", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "ecdt" in res.stdout
    res = subprocess.run([sys.executable, "-m", "ecdt"], capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE
