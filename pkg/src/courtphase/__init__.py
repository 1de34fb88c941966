"""Game-phase segmentation of team tracking data by clustering dyad distances."""
from ._backend import BACKEND
from .cluster import ClusterModel, KSelectionCurve, bd_td_curve, kmeans, select_k
from .errors import ConfigError, ConsistencyError, CourtphaseError, DataError, InfeasibleError
from .ingest import FrameSeries, filter_active, parse_events, parse_tracking, resample_frames
from .mds import MdsEmbedding, MeanDistanceMatrix, classical_mds, mean_distance_matrix
from .phase import AttackDirection, PhaseLabel, cluster_phase_table, label_frames, switch_rate, transition_matrix
from .segment import Stint, dyad_features, extract_stints
from .shots import ShotEvent, attach_shots, shot_report

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AttackDirection",
    "ClusterModel",
    "ConfigError",
    "ConsistencyError",
    "CourtphaseError",
    "DataError",
    "FrameSeries",
    "InfeasibleError",
    "KSelectionCurve",
    "MdsEmbedding",
    "MeanDistanceMatrix",
    "PhaseLabel",
    "ShotEvent",
    "Stint",
    "attach_shots",
    "bd_td_curve",
    "classical_mds",
    "cluster_phase_table",
    "dyad_features",
    "extract_stints",
    "filter_active",
    "kmeans",
    "label_frames",
    "mean_distance_matrix",
    "parse_events",
    "parse_tracking",
    "resample_frames",
    "select_k",
    "shot_report",
    "switch_rate",
    "transition_matrix",
]
