"""Grasp template library and joint-space snapping.

Tool grips ship as named joint configurations. A noisy user hand pose is
replaced by the nearest stored template in plain joint-space Euclidean
distance; a tracker adds switching hysteresis so the grip does not
chatter midway between two templates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .chain import JointVector, _check_format
from .errors import ConfigurationError, StructuralError


@dataclass(frozen=True)
class GraspTemplate:
    name: str
    task: str
    angles: dict = field(default_factory=dict)  # side -> ndarray

    def for_side(self, side: str) -> np.ndarray | None:
        return self.angles.get(side)


class GraspTemplateLibrary:
    """Ordered template list; order defines the tie-break rule."""

    def __init__(self, templates: list[GraspTemplate]):
        names = [t.name for t in templates]
        if len(set(names)) != len(names):
            raise ConfigurationError("template names must be unique")
        self.templates = list(templates)

    def __len__(self):
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def names(self) -> list[str]:
        return [t.name for t in self.templates]

    def get(self, name: str) -> GraspTemplate:
        for t in self.templates:
            if t.name == name:
                return t
        raise ConfigurationError("no template named %r" % name)

    def validate_limits(self, models: dict) -> None:
        """Check every stored configuration against its hand model."""
        for t in self.templates:
            for side, angles in t.angles.items():
                model = models.get(side)
                if model is None:
                    continue
                if angles.shape != (model.dof,):
                    raise ConfigurationError(
                        "template %r has %d angles for %s hand (%d dof)"
                        % (t.name, len(angles), side, model.dof))
                if np.any(angles < model.lower - 1e-9) or np.any(angles > model.upper + 1e-9):
                    raise ConfigurationError(
                        "template %r exceeds %s hand joint limits" % (t.name, side))


def _side_of(q: JointVector) -> str:
    # joint vectors are tagged hand_left / hand_right
    if q.chain.startswith("hand_"):
        side = q.chain[len("hand_"):]
        if side in ("left", "right"):
            return side
    raise StructuralError("cannot infer hand side from tag %r" % q.chain)


def snap_to_template(q_user: JointVector, lib: GraspTemplateLibrary,
                     active: set | None = None) -> tuple[str, JointVector]:
    """Nearest template in joint space.

    ``active`` filters by task label; ties go to the earliest library
    entry, so the result is deterministic.
    """
    side = _side_of(q_user)
    best_name = None
    best_angles = None
    best_dist = np.inf
    for t in lib:
        if active is not None and t.task not in active:
            continue
        angles = t.for_side(side)
        if angles is None:
            continue
        d = float(np.linalg.norm(q_user.angles - angles))
        if d < best_dist:
            best_name, best_angles, best_dist = t.name, angles, d
    if best_name is None:
        raise ConfigurationError("no template matches the active task set")
    return best_name, JointVector(q_user.chain, best_angles.copy())


class TemplateTracker:
    """Snapping with switching hysteresis.

    The incumbent template keeps the grip until a competitor is clearly
    closer (distance below ``ratio`` times the incumbent's), which keeps
    the grip stable when the hand sits near a boundary.
    """

    def __init__(self, lib: GraspTemplateLibrary, active: set | None = None,
                 ratio: float = 0.9):
        if not 0.0 < ratio <= 1.0:
            raise ConfigurationError("hysteresis ratio must be in (0, 1]")
        self.lib = lib
        self.active = active
        self.ratio = ratio
        self.current = None

    def update(self, q_user: JointVector) -> tuple[str, JointVector]:
        name, snapped = snap_to_template(q_user, self.lib, self.active)
        if self.current is None or name == self.current:
            self.current = name
            return name, snapped
        side = _side_of(q_user)
        held = self.lib.get(self.current).for_side(side)
        if held is None:
            self.current = name
            return name, snapped
        d_held = float(np.linalg.norm(q_user.angles - held))
        d_new = float(np.linalg.norm(q_user.angles - snapped.angles))
        if d_new < self.ratio * d_held:
            self.current = name
            return name, snapped
        return self.current, JointVector(q_user.chain, held.copy())


def load_templates(path) -> GraspTemplateLibrary:
    """Read a template library file (versioned YAML)."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    _check_format(doc, path)
    if "templates" not in doc:
        raise ConfigurationError("%s: no 'templates' section" % path)
    templates = []
    for td in doc["templates"]:
        angles = {}
        for side in ("left", "right"):
            if td.get(side) is not None:
                arr = np.asarray(td[side], dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise ConfigurationError(
                        "template %r has non-finite angles" % td["name"])
                angles[side] = arr
        templates.append(GraspTemplate(td["name"], td.get("task", td["name"]), angles))
    return GraspTemplateLibrary(templates)
