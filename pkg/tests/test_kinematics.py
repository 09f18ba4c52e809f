import math
import random

import numpy as np
import pytest

from deskloop.kinematics import (
    ArmModel,
    KinematicsError,
    default_arm,
    forward_kinematics,
    jacobian,
    solve_ik,
)

PI = math.pi


def planar_arm(lengths, angles, limits=None):
    limits = limits or [(-PI, PI)] * len(lengths)
    return ArmModel(list(lengths), list(angles), limits)


def fd_jacobian(arm, step=1e-6):
    """Central finite differences; the independent oracle for the Jacobian."""
    n = arm.n_joints
    J = np.zeros((2, n))
    for k in range(n):
        plus = list(arm.joint_angles)
        minus = list(arm.joint_angles)
        plus[k] += step
        minus[k] -= step
        fp = forward_kinematics(arm.with_angles(plus))
        fm = forward_kinematics(arm.with_angles(minus))
        J[0, k] = (fp[0] - fm[0]) / (2 * step)
        J[1, k] = (fp[1] - fm[1]) / (2 * step)
    return J


def test_fk_fully_extended():
    arm = planar_arm([0.3, 0.3], [0.0, 0.0])
    x, y = forward_kinematics(arm)
    assert (x, y) == pytest.approx((0.6, 0.0), abs=1e-12)


def test_fk_right_angle_elbow():
    # Hand-derived: (0.3 cos0 + 0.3 cos(pi/2), 0.3 sin0 + 0.3 sin(pi/2)).
    arm = planar_arm([0.3, 0.3], [0.0, PI / 2])
    x, y = forward_kinematics(arm)
    assert (x, y) == pytest.approx((0.3, 0.3), abs=1e-12)


def test_fk_periodic_in_full_turns():
    wide = [(-4 * PI, 4 * PI)] * 2
    base = planar_arm([0.3, 0.2], [0.4, -0.7], wide)
    shifted = planar_arm([0.3, 0.2], [0.4 + 2 * PI, -0.7], wide)
    assert forward_kinematics(base) == pytest.approx(forward_kinematics(shifted), abs=1e-12)


def test_jacobian_at_zero_matches_fd_oracle():
    arm = planar_arm([0.3, 0.3], [0.0, 0.0])
    J = jacobian(arm)
    assert np.allclose(J, [[0.0, 0.0], [0.6, 0.3]], atol=1e-12)
    assert np.abs(J - fd_jacobian(arm)).max() <= 1e-5


def test_single_link_jacobian_by_hand():
    arm = ArmModel([0.3], [PI / 2], [(-PI, PI)])
    J = jacobian(arm)
    assert J[0, 0] == pytest.approx(-0.3, abs=1e-12)
    assert J[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_jacobian_matches_fd_on_random_configs():
    rng = random.Random(11)
    arm = default_arm()
    for _ in range(200):
        angles = [rng.uniform(-PI, PI) for _ in range(arm.n_joints)]
        probe = arm.with_angles(angles)
        assert np.abs(jacobian(probe) - fd_jacobian(probe)).max() <= 1e-5


def test_ik_boundary_pose():
    arm = planar_arm([0.3, 0.3], [0.1, 0.1])
    solution = solve_ik(arm, (0.6, 0.0))
    assert solution.converged and solution.residual <= 1e-4
    assert max(abs(a) for a in solution.joint_angles) <= 0.05  # near [0, 0]


def test_ik_interior_target_rechecked_with_fk():
    arm = planar_arm([0.3, 0.3], [0.3, 0.3])
    solution = solve_ik(arm, (0.3, 0.3))
    assert solution.converged
    x, y = forward_kinematics(arm.with_angles(solution.joint_angles))
    assert math.hypot(x - 0.3, y - 0.3) <= 1e-4


def test_ik_unreachable_targets_fail_fast():
    arm = planar_arm([0.3, 0.3], [0.0, 0.0])
    outside = solve_ik(arm, (1.0, 0.0))
    assert not outside.converged and outside.iterations == 0
    assert "annulus" in outside.diagnostic

    lopsided = planar_arm([0.5, 0.1], [0.0, 0.0])
    inside_hole = solve_ik(lopsided, (0.05, 0.0))  # inner bound is 0.4
    assert not inside_hole.converged and "annulus" in inside_hole.diagnostic


def test_ik_respects_narrow_limits():
    limits = [(-1.0, 1.0), (-1.0, 1.0)]
    arm = planar_arm([0.3, 0.3], [0.0, 0.0], limits)
    solution = solve_ik(arm, (0.35, 0.25))
    for angle, (lo, hi) in zip(solution.joint_angles, limits):
        assert lo <= angle <= hi


def test_ik_converged_implies_residual_within_tolerance():
    rng = random.Random(3)
    arm = default_arm()
    for _ in range(50):
        start = [rng.uniform(-PI, PI) for _ in range(arm.n_joints)]
        radius = rng.uniform(0.05, 0.55)
        angle = rng.uniform(0, 2 * PI)
        target = (
            arm.base[0] + radius * math.cos(angle),
            arm.base[1] + radius * math.sin(angle),
        )
        solution = solve_ik(arm.with_angles(start), target)
        if solution.converged:
            assert solution.residual <= 1e-4


def test_parameter_validation():
    arm = planar_arm([0.3, 0.3], [0.0, 0.0])
    with pytest.raises(KinematicsError):
        solve_ik(arm, (0.3, 0.0), damping=0.0)
    with pytest.raises(KinematicsError):
        solve_ik(arm, (0.3, 0.0), tolerance=-1.0)
    with pytest.raises(KinematicsError):
        ArmModel([0.3, -0.1], [0.0, 0.0], [(-PI, PI)] * 2)
    with pytest.raises(KinematicsError):
        ArmModel([0.3, 0.3], [2.0, 0.0], [(-1.0, 1.0)] * 2)
