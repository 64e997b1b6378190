"""Command line front-end: ``ecdt {track,evaluate,synth,stats}``.

Exit codes: 0 ok, 1 usage, 2 I/O or malformed input, 3 numeric failure.
Outputs of a failed command are removed.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from . import io as eio
from .errors import EcdtError, NumericError
from .evaluation import DEFAULT_THRESHOLDS, evaluate_all, summarize
from .pipeline import run
from .tracks import DEFAULT_SAMPLE_PERIOD
from .types import DAVIS_HEIGHT, DAVIS_WIDTH, EcdtParams

log = logging.getLogger("ecdt")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

PARAM_FLAGS = {
    "k": ("--k", int, "k-NN points"),
    "r": ("--r", float, "k-NN search radius (scaled units)"),
    "phi_min": ("--phi-min", float, "minimum purity score"),
    "time_scale": ("--time-scale", float, "pixels per second used to scale time"),
    "min_feature_age": ("--min-feature-age", float, "minimum feature age (s)"),
    "t_w": ("--t-w", float, "moving-average time window (s)"),
    "search_time": ("--search-time", float, "HT matching search time (s)"),
    "iou_threshold": ("--iou-threshold", float, "minimum IoU for a head/tail match"),
    "delta_t": ("--delta-t", float, "head/tail descriptor window (s)"),
    "proximity_radius": ("--proximity-radius", float, "head/tail centroid gate (px)"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _thresholds(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("thresholds must be positive")
    return vals


def _default_threads():
    return os.cpu_count() or 1


def build_parser():
    parser = _Parser(prog="ecdt", description="Event clustering-based feature detection and tracking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="cluster events and extract feature tracks")
    p.add_argument("events", help="events.txt (t x y p per line)")
    p.add_argument("--calib", help="calib.txt; checked and recorded, not needed for tracking")
    p.add_argument("--out", "-o", required=True, help="output tracks CSV")
    p.add_argument("--width", type=int, default=DAVIS_WIDTH)
    p.add_argument("--height", type=int, default=DAVIS_HEIGHT)
    defaults = EcdtParams()
    for name, (flag, typ, helptext) in PARAM_FLAGS.items():
        p.add_argument(flag, dest=name, type=typ, default=getattr(defaults, name),
                       help=f"{helptext} (default: %(default)s)")
    p.add_argument("--sample-period", type=float, default=DEFAULT_SAMPLE_PERIOD)
    p.add_argument("--per-event", action="store_true", help="one track point per event timestamp")
    p.add_argument("--no-ht", action="store_true", help="disable head/tail matching")
    p.add_argument("--opposite-only", action="store_true",
                   help="only link clusters of opposite polarity")
    p.add_argument("--t-begin", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--print-params", action="store_true",
                   help="write the effective configuration into the output header")
    p.add_argument("--plot", help="also render a track overview figure to this path")

    p = sub.add_parser("evaluate", help="triangulate tracks against ground-truth poses")
    p.add_argument("tracks")
    p.add_argument("--poses", required=True, help="groundtruth.txt")
    p.add_argument("--calib", required=True, help="calib.txt")
    p.add_argument("--thresholds", type=_thresholds, default=list(DEFAULT_THRESHOLDS))
    p.add_argument("--summary", required=True, help="per-threshold summary CSV")
    p.add_argument("--per-track", required=True, help="per-track CSV")
    p.add_argument("--literal-rmse", action="store_true",
                   help="add the sqrt(sum d^2)/N column to the per-track CSV")
    p.add_argument("--figures-dir", help="directory for box plots (default: next to --summary)")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("synth", help="write a synthetic scene")
    p.add_argument("scene", choices=["crossing-bands", "translating-bar", "reversal", "projected"])
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--velocity", type=float, default=100.0, help="bar image speed (px/s)")
    p.add_argument("--duration", type=float, default=1.0, help="translating bar duration (s)")
    p.add_argument("--event-rate", type=float, default=20000.0, help="events/s per bar edge")
    p.add_argument("--n-bars", type=int, default=1)
    p.add_argument("--density", type=float, default=2.0, help="crossing bands: events per pixel")
    p.add_argument("--n-points", type=int, default=50, help="projected scene: number of 3D points")
    p.add_argument("--noise", type=float, default=0.0, help="projected scene: RMS pixel noise")

    p = sub.add_parser("stats", help="print feature age / RMSE statistics of a per-track CSV")
    p.add_argument("per_track")
    p.add_argument("--thresholds", type=_thresholds, default=list(DEFAULT_THRESHOLDS))
    return parser


def _params(args):
    return EcdtParams(**{name: getattr(args, name) for name in PARAM_FLAGS})


def cmd_track(args, outputs):
    if args.t_begin is not None and args.t_end is not None and args.t_begin > args.t_end:
        raise UsageError("--t-begin must not exceed --t-end")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    try:
        params = _params(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.calib:
        eio.read_calib(args.calib)
    stream = eio.read_events(args.events, args.width, args.height)
    stream = stream.time_slice(args.t_begin, args.t_end)
    log.info("tracking %d events", len(stream))
    result = run(stream, params, use_ht=not args.no_ht, sample_period=args.sample_period,
                 per_event=args.per_event, opposite_only=args.opposite_only, workers=args.threads)
    header = None
    if args.print_params:
        header = {"ecdt": __version__, **params.as_dict(), "ht_matching": not args.no_ht,
                  "opposite_only": args.opposite_only,
                  "sample_period": "per-event" if args.per_event else args.sample_period,
                  "t_begin": args.t_begin, "t_end": args.t_end,
                  "width": args.width, "height": args.height}
    outputs.append(args.out)
    eio.write_tracks(result.tracks, args.out, header)
    if args.plot:
        from .plotting import track_overview

        outputs.append(args.plot)
        track_overview(result.tracks, args.plot, args.width, args.height)
    print(f"{len(result.labeling.clusters)} clusters, {len(result.chains)} chains, "
          f"{len(result.tracks)} tracks -> {args.out}")


def cmd_evaluate(args, outputs):
    tracks = eio.read_tracks(args.tracks)
    poses = eio.read_poses(args.poses)
    intr = eio.read_calib(args.calib)
    evaluations = evaluate_all(tracks, poses, intr)
    summaries = summarize(evaluations, args.thresholds)
    outputs.extend([args.per_track, args.summary])
    eio.write_per_track(evaluations, args.per_track, literal=args.literal_rmse)
    eio.write_summary(summaries, args.summary)
    if not args.no_figures:
        from .plotting import threshold_boxplots

        fig_dir = Path(args.figures_dir) if args.figures_dir else Path(args.summary).resolve().parent
        fig_dir.mkdir(parents=True, exist_ok=True)
        age_png, rmse_png = fig_dir / "feature_age.png", fig_dir / "reprojection_rmse.png"
        outputs.extend([age_png, rmse_png])
        threshold_boxplots(evaluations, args.thresholds, age_png, rmse_png)
    for s in summaries:
        print(f"<={s.threshold:g}px: kept {s.kept}/{s.total}, mean age {s.mean_age:.3f} s, "
              f"mean rmse {s.mean_rmse:.3f} px")


def cmd_synth(args, outputs):
    from . import synthetic as syn

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def path(name):
        p = out / name
        outputs.append(p)
        return p

    if args.scene == "crossing-bands":
        scene = syn.gen_crossing_bands(density=args.density, seed=args.seed)
        eio.write_events(scene.stream, path("events.txt"))
        eio.write_labels_csv(path("segments.csv"), {
            "event": list(range(len(scene.stream))),
            "segment": [syn.SEGMENT_NAMES[int(s)] for s in scene.segment]})
        summary = f"{len(scene.stream)} events"
    elif args.scene in ("translating-bar", "reversal"):
        if args.scene == "translating-bar":
            scene = syn.gen_translating_bar(velocity=args.velocity, duration=args.duration,
                                            event_rate=args.event_rate, seed=args.seed)
        else:
            scene = syn.gen_reversal_scene(velocity=args.velocity, event_rate=args.event_rate,
                                           seed=args.seed, n_bars=args.n_bars)
        eio.write_events(scene.stream, path("events.txt"))
        eio.write_poses(scene.poses, path("groundtruth.txt"))
        eio.write_calib(scene.intrinsics, path("calib.txt"))
        eio.write_labels_csv(path("edges.csv"), {"event": list(range(len(scene.stream))),
                                                 "edge_id": scene.edge_id.tolist()})
        pts = scene.edge_points3d()
        eio.write_labels_csv(path("edge_points.csv"), {
            "edge_id": list(range(len(pts))), "x": [float(p[0]) for p in pts],
            "y": [float(p[1]) for p in pts], "z": [float(p[2]) for p in pts]})
        summary = f"{len(scene.stream)} events, {len(pts)} edges"
    else:
        poses = syn.trajectory()
        points = syn.random_points(args.n_points, seed=args.seed)
        scene = syn.gen_projected_scene(points, poses, noise=args.noise, seed=args.seed)
        eio.write_tracks(scene.tracks, path("tracks.csv"))
        eio.write_poses(scene.poses, path("groundtruth.txt"))
        eio.write_calib(scene.intrinsics, path("calib.txt"))
        eio.write_labels_csv(path("points3d.csv"), {
            "chain_id": list(range(len(points))), "x": points[:, 0].tolist(),
            "y": points[:, 1].tolist(), "z": points[:, 2].tolist()})
        summary = f"{len(scene.tracks)} tracks"
    print(f"{args.scene}: {summary} -> {out}")


def format_stats(evaluations, thresholds):
    summaries = summarize(evaluations, thresholds)
    heads = [f"<={s.threshold:g}px" for s in summaries]
    lines = [f"{'':18s}" + "".join(f"{h:>12s}" for h in heads)]
    lines.append(f"{'kept / total':18s}" + "".join(f"{f'{s.kept}/{s.total}':>12s}" for s in summaries))
    rows = [("age mean (s)", "mean_age"), ("age median (s)", "median_age"), ("age stdev (s)", "std_age"),
            ("rmse mean (px)", "mean_rmse"), ("rmse median (px)", "median_rmse"),
            ("rmse stdev (px)", "std_rmse")]
    for label, attr in rows:
        lines.append(f"{label:18s}" + "".join(f"{getattr(s, attr):12.3f}" for s in summaries))
    return "\n".join(lines)


def cmd_stats(args, outputs):
    print(format_stats(eio.read_per_track(args.per_track), args.thresholds))


COMMANDS = {"track": cmd_track, "evaluate": cmd_evaluate, "synth": cmd_synth, "stats": cmd_stats}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    outputs = []
    code = EXIT_OK
    try:
        COMMANDS[args.command](args, outputs)
    except UsageError as exc:
        print(f"ecdt {args.command}: usage error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except NumericError as exc:
        print(f"ecdt {args.command}: numeric failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    except (OSError, EcdtError) as exc:
        print(f"ecdt {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_IO
    if code != EXIT_OK:
        eio.remove_quietly(*outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
