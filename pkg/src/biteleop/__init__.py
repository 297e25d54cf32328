"""Bimanual teleoperation stack: hand tracking fusion, retargeting,
clutched pose mapping, coupled impedance control, and a deterministic
simulator with scenario harnesses."""

from .errors import (
    ConfigurationError,
    DegenerateGeometryError,
    InsufficientDataError,
    NoDetectionError,
    NoReliableViewError,
    NotInitializedError,
    ProtocolError,
    SessionParseError,
    StructuralError,
    TeleopError,
    UnsupportedFormatError,
)
from .geometry import Pose, Rotation, pose_error
from .chain import Joint, JointVector, SerialChain, build_arm, load_chains

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateGeometryError",
    "InsufficientDataError",
    "Joint",
    "JointVector",
    "NoDetectionError",
    "NoReliableViewError",
    "NotInitializedError",
    "Pose",
    "ProtocolError",
    "Rotation",
    "SerialChain",
    "SessionParseError",
    "StructuralError",
    "TeleopError",
    "UnsupportedFormatError",
    "build_arm",
    "load_chains",
    "pose_error",
    "__version__",
]
