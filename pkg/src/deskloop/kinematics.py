"""Planar n-joint arm: forward kinematics, Jacobian, damped-least-squares IK."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .registry import Registry, default_registry


class KinematicsError(Exception):
    """Invalid arm configuration."""


@dataclass
class ArmModel:
    """Serial planar chain anchored at ``base``; angles are absolute-relative."""

    link_lengths: list[float]
    joint_angles: list[float]
    joint_limits: list[tuple[float, float]]
    base: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        n = len(self.link_lengths)
        if n < 1:
            raise KinematicsError("need at least one link")
        if len(self.joint_angles) != n or len(self.joint_limits) != n:
            raise KinematicsError("angles and limits must match link count")
        if any(length <= 0 for length in self.link_lengths):
            raise KinematicsError("link lengths must be positive")
        for angle, (lo, hi) in zip(self.joint_angles, self.joint_limits):
            if not lo <= angle <= hi:
                raise KinematicsError(f"angle {angle} outside limits ({lo}, {hi})")

    @property
    def n_joints(self) -> int:
        return len(self.link_lengths)

    def with_angles(self, angles: np.ndarray | list[float]) -> "ArmModel":
        return ArmModel(
            link_lengths=list(self.link_lengths),
            joint_angles=[float(a) for a in angles],
            joint_limits=list(self.joint_limits),
            base=self.base,
        )

    def reach_bounds(self) -> tuple[float, float]:
        """(inner, outer) radius of the reachable annulus around the base."""
        total = sum(self.link_lengths)
        inner = max(0.0, 2.0 * max(self.link_lengths) - total)
        return inner, total


def forward_kinematics(arm: ArmModel) -> tuple[float, float]:
    cumulative = np.cumsum(arm.joint_angles)
    x = arm.base[0] + float(np.sum(np.array(arm.link_lengths) * np.cos(cumulative)))
    y = arm.base[1] + float(np.sum(np.array(arm.link_lengths) * np.sin(cumulative)))
    return (x, y)


def jacobian(arm: ArmModel) -> np.ndarray:
    """Analytic 2xn Jacobian of the end-effector position."""
    cumulative = np.cumsum(arm.joint_angles)
    lengths = np.array(arm.link_lengths)
    sines = lengths * np.sin(cumulative)
    cosines = lengths * np.cos(cumulative)
    n = arm.n_joints
    J = np.zeros((2, n))
    for k in range(n):
        J[0, k] = -float(np.sum(sines[k:]))
        J[1, k] = float(np.sum(cosines[k:]))
    return J


@dataclass
class IkSolution:
    joint_angles: list[float]
    residual: float
    iterations: int
    converged: bool
    diagnostic: str = ""


def solve_ik(
    arm: ArmModel,
    target: tuple[float, float],
    damping: float = 0.1,
    tolerance: float = 1e-4,
    max_iters: int = 200,
) -> IkSolution:
    """Damped-least-squares IK; returns the best-residual iterate.

    Joints whose limit range spans a full circle are continuous: updates
    wrap module 2*pi (pose-preserving) instead of clamping, which avoids
    deadlocks against a limit wall. Narrower limits clamp. Unreachable
    targets (outside the arm's annulus) fail fast with a diagnostic
    instead of iterating.
    """
    if damping <= 0:
        raise KinematicsError("damping must be positive")
    if tolerance <= 0:
        raise KinematicsError("tolerance must be positive")

    inner, outer = arm.reach_bounds()
    offset = np.hypot(target[0] - arm.base[0], target[1] - arm.base[1])
    if offset > outer + 1e-9 or offset < inner - 1e-9:
        return IkSolution(
            joint_angles=list(arm.joint_angles),
            residual=float("inf"),
            iterations=0,
            converged=False,
            diagnostic=f"target at {offset:.3f} m outside reachable annulus [{inner:.3f}, {outer:.3f}]",
        )

    lows = np.array([lo for lo, _ in arm.joint_limits])
    highs = np.array([hi for _, hi in arm.joint_limits])
    full_circle = (highs - lows) >= 2.0 * np.pi - 1e-12
    theta = np.array(arm.joint_angles, dtype=float)
    goal = np.array(target, dtype=float)
    identity = np.eye(2)

    best_theta = theta.copy()
    best_residual = float("inf")
    iterations = 0
    for iterations in range(max_iters + 1):
        current = arm.with_angles(theta)
        error = goal - np.array(forward_kinematics(current))
        residual = float(np.linalg.norm(error))
        if residual < best_residual:
            best_residual = residual
            best_theta = theta.copy()
        if residual <= tolerance:
            return IkSolution(
                joint_angles=[float(a) for a in theta],
                residual=residual,
                iterations=iterations,
                converged=True,
            )
        if iterations == max_iters:
            break
        J = jacobian(current)
        gain = J.T @ np.linalg.solve(J @ J.T + damping**2 * identity, error)
        theta = theta + gain
        wrapped = lows + np.mod(theta - lows, 2.0 * np.pi)
        theta = np.where(full_circle, wrapped, np.clip(theta, lows, highs))

    return IkSolution(
        joint_angles=[float(a) for a in best_theta],
        residual=best_residual,
        iterations=iterations,
        converged=False,
        diagnostic=f"no convergence within {max_iters} iterations",
    )


def default_arm(registry: Registry | None = None) -> ArmModel:
    """Arm from the registry config, based at the workspace centre."""
    registry = registry or default_registry()
    spec = registry.arm
    x_min, x_max, y_min, y_max = registry.bounds
    lengths = [float(v) for v in spec["link_lengths"]]
    return ArmModel(
        link_lengths=lengths,
        joint_angles=[0.0] * len(lengths),
        joint_limits=[(float(lo), float(hi)) for lo, hi in spec["joint_limits"]],
        base=((x_min + x_max) / 2.0, (y_min + y_max) / 2.0),
    )
