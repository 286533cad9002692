"""Pinhole projection, lifting, positional encoding, and ego alignment.

Conventions.  The ego frame is x forward, y left, z up.  A camera's
``extrinsic`` is the rigid ego-to-camera transform; the camera frame is
z forward (optical axis), x right, y down.  The ``intrinsic`` matrix is
upper triangular with a positive diagonal and maps camera-frame rays to
image coordinates in whatever unit the matrix encodes (this library's
synthetic cameras use normalized image units, so in-view points land in
[0, 1] x [0, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BehindCameraError, ValidationError
from .numerics import as_float_array, gelu, readonly, require_rigid, rigid_inverse

MIN_PROJECT_DEPTH = 1e-6


@dataclass(frozen=True)
class CameraModel:
    intrinsic: np.ndarray
    extrinsic: np.ndarray
    camera_id: int

    def __post_init__(self):
        k = as_float_array(self.intrinsic, "intrinsic", shape=(3, 3))
        lower = np.tril(k, k=-1)
        if np.any(lower != 0.0):
            raise ValidationError("intrinsic must be upper triangular")
        if np.any(np.diag(k) <= 0.0):
            raise ValidationError("intrinsic diagonal must be positive")
        t = require_rigid(self.extrinsic, "extrinsic")
        object.__setattr__(self, "intrinsic", readonly(k))
        object.__setattr__(self, "extrinsic", readonly(t))
        object.__setattr__(self, "camera_id", int(self.camera_id))

    @cached_property
    def _intrinsic_inv(self) -> np.ndarray:
        return np.linalg.inv(self.intrinsic)

    @cached_property
    def _extrinsic_inv(self) -> np.ndarray:
        return rigid_inverse(self.extrinsic)


@dataclass(frozen=True)
class EgoPose:
    world_from_ego: np.ndarray
    timestamp: float

    def __post_init__(self):
        t = require_rigid(self.world_from_ego, "world_from_ego")
        ts = float(self.timestamp)
        if not np.isfinite(ts):
            raise ValidationError("timestamp must be finite")
        object.__setattr__(self, "world_from_ego", readonly(t))
        object.__setattr__(self, "timestamp", ts)


@dataclass(frozen=True)
class PosEmbedParams:
    """Sinusoidal features followed by a two-layer GELU MLP, output width D."""

    embed_dim: int
    temperature: float
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        d = int(self.embed_dim)
        if d < 2 or d % 2 != 0:
            raise ValidationError("embed_dim must be a positive even integer")
        temp = float(self.temperature)
        if not np.isfinite(temp) or temp <= 0.0:
            raise ValidationError("temperature must be positive")
        w1 = as_float_array(self.w1, "w1", shape=(d, d))
        b1 = as_float_array(self.b1, "b1", shape=(d,))
        w2 = as_float_array(self.w2, "w2", shape=(d, d))
        b2 = as_float_array(self.b2, "b2", shape=(d,))
        object.__setattr__(self, "embed_dim", d)
        object.__setattr__(self, "temperature", temp)
        object.__setattr__(self, "w1", readonly(w1))
        object.__setattr__(self, "b1", readonly(b1))
        object.__setattr__(self, "w2", readonly(w2))
        object.__setattr__(self, "b2", readonly(b2))

    @classmethod
    def seeded(cls, embed_dim: int, seed, temperature: float = 10000.0) -> "PosEmbedParams":
        rng = np.random.default_rng(seed)
        d = int(embed_dim)
        return cls(
            embed_dim=d,
            temperature=temperature,
            w1=rng.uniform(-0.1, 0.1, size=(d, d)),
            b1=rng.uniform(-0.1, 0.1, size=d),
            w2=rng.uniform(-0.1, 0.1, size=(d, d)),
            b2=rng.uniform(-0.1, 0.1, size=d),
        )


def project_point(cam: CameraModel, p_ego) -> tuple:
    """Project an ego-frame point: returns (u, v, camera-frame depth).

    Accepts a single 3-vector or an (..., 3) batch.  Raises
    :class:`BehindCameraError` when any point has camera depth <= 1e-6.
    """
    p = as_float_array(p_ego, "p_ego")
    if p.shape[-1] != 3:
        raise ValidationError("p_ego must have 3 components on the last axis")
    r = cam.extrinsic[:3, :3]
    t = cam.extrinsic[:3, 3]
    q = p @ r.T + t
    depth = q[..., 2]
    if np.any(depth <= MIN_PROJECT_DEPTH):
        raise BehindCameraError(
            f"camera {cam.camera_id}: point at or behind the camera plane"
        )
    ph = q @ cam.intrinsic.T
    u = ph[..., 0] / ph[..., 2]
    v = ph[..., 1] / ph[..., 2]
    if p.ndim == 1:
        return float(u), float(v), float(depth)
    return u, v, depth


def lift_center(cam: CameraModel, c2d, depth) -> np.ndarray:
    """Lift an image point at a known camera depth back to the ego frame.

    Exact inverse of :func:`project_point`: the homogeneous pixel is scaled
    so the recovered camera-frame point sits at exactly ``depth``, then
    mapped through the intrinsic and extrinsic inverses.
    """
    c = as_float_array(c2d, "c2d")
    if c.shape[-1] != 2:
        raise ValidationError("c2d must have 2 components on the last axis")
    d = np.asarray(depth, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValidationError("depth must be finite")
    if np.any(d <= 0.0):
        raise ValidationError("depth must be positive")
    # With K upper triangular, the homogeneous scale that puts the camera
    # point at depth d is d * K[2, 2].
    w = d * cam.intrinsic[2, 2]
    pix = np.stack([c[..., 0] * w, c[..., 1] * w, np.broadcast_to(w, c[..., 0].shape)], axis=-1)
    q = pix @ cam._intrinsic_inv.T
    inv = cam._extrinsic_inv
    return q @ inv[:3, :3].T + inv[:3, 3]


def sinusoid_features(c3d, embed_dim: int, temperature: float) -> np.ndarray:
    """Per-axis interleaved sin/cos features, zero padded to ``embed_dim``.

    Each axis gets floor(D / 6) frequencies temperature**(-2i / F) with
    F = 2 * floor(D / 6); the remaining channels stay zero.
    """
    c = as_float_array(c3d, "c3d")
    if c.shape[-1] != 3:
        raise ValidationError("c3d must have 3 components on the last axis")
    d = int(embed_dim)
    n_freq = d // 6
    out = np.zeros(c.shape[:-1] + (d,))
    if n_freq == 0:
        return out
    i = np.arange(n_freq)
    freqs = float(temperature) ** (-2.0 * i / (2.0 * n_freq))
    angles = c[..., :, None] * freqs  # (..., 3, n_freq)
    interleaved = np.stack([np.sin(angles), np.cos(angles)], axis=-1)
    flat = interleaved.reshape(c.shape[:-1] + (6 * n_freq,))
    out[..., : 6 * n_freq] = flat
    return out


def pos_embed(c3d, params: PosEmbedParams) -> np.ndarray:
    """Positional embedding of a 3D center (or an (..., 3) batch)."""
    feats = sinusoid_features(c3d, params.embed_dim, params.temperature)
    hidden = gelu(feats @ params.w1 + params.b1)
    return hidden @ params.w2 + params.b2


def align_centers(centers, velocities, dt: float, pose_now: EgoPose, pose_past: EgoPose) -> np.ndarray:
    """Map past-ego centers into the current ego frame.

    Each center is first advanced by velocity * dt inside the past ego
    frame, then carried through the full rigid transform
    now_from_past = inv(world_from_ego_now) @ world_from_ego_past
    (rotation and translation both apply).
    """
    c = as_float_array(centers, "centers")
    v = as_float_array(velocities, "velocities")
    if c.ndim != 2 or c.shape[1] != 3:
        raise ValidationError("centers must be an (N, 3) array")
    if v.shape != c.shape:
        raise ValidationError("velocities must match the shape of centers")
    dt = float(dt)
    if not np.isfinite(dt):
        raise ValidationError("dt must be finite")
    now_from_past = rigid_inverse(pose_now.world_from_ego) @ pose_past.world_from_ego
    predicted = c + v * dt
    return predicted @ now_from_past[:3, :3].T + now_from_past[:3, 3]
