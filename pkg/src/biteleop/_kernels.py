"""Kernel backend selection.

Imports the compiled extension when it is present, else falls back to
the pure-Python twin. Set BITELEOP_BACKEND=reference to force the
fallback (used by the backend-agreement tests and the benchmark).
"""

import os

if os.environ.get("BITELEOP_BACKEND", "") == "reference":
    from . import _reference as impl

    BACKEND = "reference"
else:
    try:
        from . import _native as impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import _reference as impl

        BACKEND = "reference"

fk_pose = impl.fk_pose
fk_frames = impl.fk_frames
jacobian = impl.jacobian
gravity_torques = impl.gravity_torques


def backend_name() -> str:
    return BACKEND
