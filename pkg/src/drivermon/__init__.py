"""Driver-monitoring decision engine, micro inference engine and pipeline simulator."""
from .config import Config, load_config
from .decision import (DecisionUnit, Module, RiskScores, Thresholds, global_state, perclos,
                       root_cause, safeness_score, tiered_score)
from .detector import Detection, decode_anchors, iou, nms
from .errors import DmsError
from .fsm import AlertFsm, DmsState, FsmConfig, Phase, fsm_step
from .formats import ScenarioRecord, parse_scenario, read_scenario
from .indicators import (FaceIndicators, LandmarkSchema, RoiBox, compute_ear, compute_mar,
                         decode_output_vector, denormalize_landmarks)
from .pipeline import DmsPipeline, LatencyModel, run_scenario, simulate_latency
from .tracker import FaceTracker, TrackerConfig

__version__ = "0.1.0"

__all__ = [
    "AlertFsm", "Config", "DecisionUnit", "Detection", "DmsError", "DmsPipeline", "DmsState",
    "FaceIndicators", "FaceTracker", "FsmConfig", "LandmarkSchema", "LatencyModel", "Module",
    "Phase", "RiskScores", "RoiBox", "ScenarioRecord", "Thresholds", "TrackerConfig",
    "compute_ear", "compute_mar", "decode_anchors", "decode_output_vector",
    "denormalize_landmarks", "fsm_step", "global_state", "iou", "load_config", "nms",
    "parse_scenario", "perclos", "read_scenario", "root_cause", "run_scenario",
    "safeness_score", "simulate_latency", "tiered_score",
]
