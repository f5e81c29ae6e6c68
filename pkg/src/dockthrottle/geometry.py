"""Quaternion and axis rotation primitives for pose kinematics.

Quaternions are (w, x, y, z) arrays; rotations follow the right-hand rule.
"""

from __future__ import annotations

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    norm = np.sqrt(np.dot(q, q))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero quaternion")
    return q / norm


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_rotate(q: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Rotate row vector(s) by a unit quaternion."""
    points = np.asarray(points, dtype=float)
    vec = np.asarray(q, dtype=float)[1:]
    w = float(q[0])
    t = 2.0 * np.cross(vec, points)
    return points + w * t + np.cross(vec, t)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = np.sqrt(np.dot(axis, axis))
    if norm == 0.0:
        raise ValueError("rotation axis must be non-zero")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) / norm * axis))


def quat_from_rotvec(v: np.ndarray) -> np.ndarray:
    """Rotation-vector quaternion (angle = |v|); v = 0 maps to identity."""
    v = np.asarray(v, dtype=float)
    angle = np.sqrt(np.dot(v, v))
    if angle < 1e-300:
        return IDENTITY_QUAT.copy()
    return quat_from_axis_angle(v, angle)


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation: four standard normals projected onto the 3-sphere."""
    while True:
        q = rng.standard_normal(4)
        norm = np.sqrt(np.dot(q, q))
        if norm > 1e-12:
            return q / norm


def rotate_about_line(
    points: np.ndarray, origin: np.ndarray, axis: np.ndarray, angle: float
) -> np.ndarray:
    """Rotate points about the line through `origin` with direction `axis`."""
    q = quat_from_axis_angle(axis, angle)
    return quat_rotate(q, points - origin) + origin


def wrap_angle(theta):
    """Map angle(s) onto (-pi, pi]."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped <= -np.pi, np.pi, wrapped)
