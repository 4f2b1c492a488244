"""Radar Flow Labels - training-free LiDAR scene-flow labels from 4D-radar Doppler."""

__version__ = "0.1.0"

from .config import PipelineConfig
from .exceptions import (
    ConfigError,
    FrameFormatError,
    FrameValidationError,
    RadarFlowError,
    ReferenceFrameError,
    SceneSpecError,
)
from .models import (
    EgoState,
    FlowField,
    Frame,
    GroundTruth,
    LidarCluster,
    LidarFrame,
    LidarPoint,
    RadarCluster,
    RadarFrame,
    RadarPoint,
    SensorExtrinsic,
)
from .pipeline import FlowResult, estimate_flow, run_batch
