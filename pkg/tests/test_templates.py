"""Template snapping against a brute-force distance scan."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from biteleop.chain import JointVector
from biteleop.errors import ConfigurationError, StructuralError
from biteleop.templates import (GraspTemplate, GraspTemplateLibrary,
                                TemplateTracker, snap_to_template)


def make_library(rng, count, dof=10):
    templates = []
    for i in range(count):
        angles = rng.uniform(0.0, 1.5, size=dof)
        templates.append(GraspTemplate(
            "t%02d" % i, "task%d" % (i % 3),
            {"left": angles, "right": angles + 0.01}))
    return GraspTemplateLibrary(templates)


def brute_force(q, lib, side, active=None):
    best = None
    best_d = np.inf
    for t in lib:
        if active is not None and t.task not in active:
            continue
        a = t.for_side(side)
        if a is None:
            continue
        d = np.linalg.norm(q - a)
        if d < best_d:
            best, best_d = t.name, d
    return best


def test_exact_match_returns_itself():
    rng = np.random.default_rng(50)
    lib = make_library(rng, 5)
    target = lib.templates[3]
    q = JointVector("hand_left", target.for_side("left").copy())
    name, snapped = snap_to_template(q, lib)
    assert name == target.name
    assert_allclose(snapped.angles, target.for_side("left"))


def test_tie_break_earliest_entry():
    a = np.zeros(4)
    b = np.ones(4)
    lib = GraspTemplateLibrary([
        GraspTemplate("first", "x", {"left": a}),
        GraspTemplate("second", "x", {"left": b}),
    ])
    midway = JointVector("hand_left", np.full(4, 0.5))
    name, _ = snap_to_template(midway, lib)
    assert name == "first"


def test_matches_brute_force():
    rng = np.random.default_rng(51)
    for count in (1, 2, 3, 5, 8, 16):
        lib = make_library(rng, count)
        for _ in range(50):
            q = rng.uniform(-0.3, 1.8, size=10)
            for side in ("left", "right"):
                jv = JointVector("hand_" + side, q)
                name, _ = snap_to_template(jv, lib)
                assert name == brute_force(q, lib, side)


def test_active_set_filter():
    rng = np.random.default_rng(52)
    lib = make_library(rng, 9)
    q = rng.uniform(0.0, 1.5, size=10)
    jv = JointVector("hand_left", q)
    name, _ = snap_to_template(jv, lib, active={"task1"})
    assert name == brute_force(q, lib, "left", active={"task1"})
    assert lib.get(name).task == "task1"


def test_empty_active_set_rejected():
    rng = np.random.default_rng(53)
    lib = make_library(rng, 4)
    jv = JointVector("hand_left", np.zeros(10))
    with pytest.raises(ConfigurationError):
        snap_to_template(jv, lib, active={"no-such-task"})


def test_side_without_angles_skipped():
    lib = GraspTemplateLibrary([
        GraspTemplate("left-only", "x", {"left": np.zeros(3)}),
        GraspTemplate("both", "x", {"left": np.ones(3), "right": np.ones(3)}),
    ])
    jv = JointVector("hand_right", np.zeros(3))
    name, _ = snap_to_template(jv, lib)
    assert name == "both"


def test_unknown_side_tag():
    lib = GraspTemplateLibrary([GraspTemplate("t", "x", {"left": np.zeros(3)})])
    with pytest.raises(StructuralError):
        snap_to_template(JointVector("arm_left", np.zeros(3)), lib)


def test_duplicate_names_rejected():
    with pytest.raises(ConfigurationError):
        GraspTemplateLibrary([
            GraspTemplate("same", "x", {"left": np.zeros(3)}),
            GraspTemplate("same", "y", {"left": np.ones(3)}),
        ])


def test_tracker_hysteresis():
    lib = GraspTemplateLibrary([
        GraspTemplate("a", "x", {"left": np.array([0.0])}),
        GraspTemplate("b", "x", {"left": np.array([1.0])}),
    ])
    tracker = TemplateTracker(lib, ratio=0.9)
    name, _ = tracker.update(JointVector("hand_left", np.array([0.1])))
    assert name == "a"
    # just past the midpoint: nearer to b, but not 10 percent nearer
    name, snapped = tracker.update(JointVector("hand_left", np.array([0.52])))
    assert name == "a"
    assert_allclose(snapped.angles, [0.0])
    # decisively closer to b: switch
    name, snapped = tracker.update(JointVector("hand_left", np.array([0.9])))
    assert name == "b"
    assert_allclose(snapped.angles, [1.0])
    # and b now holds through the ambiguous zone
    name, _ = tracker.update(JointVector("hand_left", np.array([0.48])))
    assert name == "b"


def test_tracker_first_call_adopts_nearest():
    rng = np.random.default_rng(54)
    lib = make_library(rng, 6)
    tracker = TemplateTracker(lib)
    q = rng.uniform(0.0, 1.5, size=10)
    name, _ = tracker.update(JointVector("hand_left", q))
    assert name == brute_force(q, lib, "left")
