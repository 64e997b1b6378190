"""Event clustering-based feature detection and tracking for event cameras."""
__version__ = "0.1.0"

from .errors import (BehindCamera, BothEmpty, EcdtError, EmptyStream, EmptyWindow, InsufficientObservations,
                     NoConvergence, NumericError, OutOfBounds, ParseError, PoseOutOfRange, StreamError,
                     TriangulationError, UnsortedTimestamps)
from .evaluation import (TrackEvaluation, ThresholdSummary, evaluate_all, evaluate_tracks, interpolate_pose,
                         slerp, summarize, triangulate)
from .index import StIndex, build_index, knn_within_radius
from .kcscan import NOISE, Labeling, cluster, core_point_eval, purity_score
from .matching import head_descriptor, iou, match_clusters, tail_descriptor
from .pipeline import PipelineResult, run
from .tracks import extract_tracks, moving_average
from .types import (CameraIntrinsics, Cluster, ClusterChain, EcdtParams, Event, EventStream, Polarity, Pose,
                    Track, validate_stream)

__all__ = [
    "BehindCamera", "BothEmpty", "CameraIntrinsics", "Cluster", "ClusterChain", "EcdtError", "EcdtParams",
    "EmptyStream", "EmptyWindow", "Event", "EventStream", "InsufficientObservations", "Labeling", "NOISE",
    "NoConvergence", "NumericError", "OutOfBounds", "ParseError", "PipelineResult", "Polarity", "Pose",
    "PoseOutOfRange", "StIndex", "StreamError", "ThresholdSummary", "Track", "TrackEvaluation",
    "TriangulationError", "UnsortedTimestamps", "build_index", "cluster", "core_point_eval", "evaluate_all",
    "evaluate_tracks", "extract_tracks", "head_descriptor", "interpolate_pose", "iou", "knn_within_radius",
    "match_clusters", "moving_average", "purity_score", "run", "slerp", "summarize", "tail_descriptor",
    "triangulate", "validate_stream",
]
