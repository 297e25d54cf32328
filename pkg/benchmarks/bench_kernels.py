"""Timing comparison: compiled kernels versus the pure-Python twin.

Run with no arguments. The script re-executes itself once per backend
(selection happens at import time through BITELEOP_BACKEND), then prints
a per-kernel table with the speedup. Numbers are mean microseconds per
call over a fixed workload on the shipped 7-joint arm.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

WORKLOADS = {
    "fk_pose": 5000,
    "jacobian": 5000,
    "gravity_torques": 5000,
    "track_pose_step": 2000,
}


def time_call(fn, reps):
    for _ in range(min(reps // 10, 100)):
        fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps * 1e6


def run_suite():
    from biteleop._kernels import backend_name
    from biteleop.chain import build_arm
    from biteleop.geometry import Pose, Rotation
    from biteleop.kinematics import (forward_kinematics, geometric_jacobian,
                                     gravity_torques, track_pose)

    arm = build_arm("right")
    rng = np.random.default_rng(0)
    qs = [arm.joint_vector(rng.uniform(arm.lower * 0.8, arm.upper * 0.8))
          for _ in range(64)]
    gravity = np.array([0.0, 0.0, -9.81])
    target = Pose(Rotation.from_rotvec([0.1, 0.2, 0.0]),
                  np.array([0.25, -0.3, -0.35]))
    it = {"i": 0}

    def pick():
        it["i"] = (it["i"] + 1) % len(qs)
        return qs[it["i"]]

    results = {"backend": backend_name()}
    results["fk_pose"] = time_call(
        lambda: forward_kinematics(arm, pick()), WORKLOADS["fk_pose"])
    results["jacobian"] = time_call(
        lambda: geometric_jacobian(arm, pick()), WORKLOADS["jacobian"])
    results["gravity_torques"] = time_call(
        lambda: gravity_torques(arm, pick(), gravity),
        WORKLOADS["gravity_torques"])
    results["track_pose_step"] = time_call(
        lambda: track_pose(arm, pick(), target), WORKLOADS["track_pose_step"])
    return results


def main():
    if os.environ.get("BENCH_CHILD"):
        json.dump(run_suite(), sys.stdout)
        return

    rows = {}
    for backend in ("native", "reference"):
        env = dict(os.environ, BENCH_CHILD="1", BITELEOP_BACKEND=(
            "" if backend == "native" else "reference"))
        proc = subprocess.run([sys.executable, __file__], env=env,
                              capture_output=True, text=True, check=True)
        rows[backend] = json.loads(proc.stdout)

    if rows["native"]["backend"] != "native":
        print("note: compiled extension unavailable, both columns ran the "
              "pure-Python twin")

    print("%-18s %12s %12s %9s" % ("kernel", "native µs", "reference µs",
                                   "speedup"))
    for name in WORKLOADS:
        n = rows["native"][name]
        r = rows["reference"][name]
        print("%-18s %12.2f %12.2f %8.1fx" % (name, n, r, r / n))


if __name__ == "__main__":
    main()
