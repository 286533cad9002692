"""Per-frame 3D query construction from 2D proposals and image features.

A proposal contributes two vectors of width D: a semantic embedding,
gathered from its camera's feature map by a small deformable-attention
read-out and projected C -> D, and a positional embedding of its lifted 3D
center.  Their sum is the query embedding q_3d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import CameraModel, PosEmbedParams, lift_center, pos_embed
from .numerics import as_float_array, readonly, softmax

DEPTH_BIN_COUNT = 60
DEPTH_RANGE = (1.0, 61.0)


def default_depth_bins() -> np.ndarray:
    """Centers of 60 uniform 1 m depth bins spanning [1, 61] meters."""
    lo, hi = DEPTH_RANGE
    width = (hi - lo) / DEPTH_BIN_COUNT
    return lo + width * (np.arange(DEPTH_BIN_COUNT) + 0.5)


@dataclass(frozen=True)
class FeatureMap:
    """Dense (H, W, C) feature grid for one camera at one frame."""

    data: np.ndarray
    camera_id: int
    frame_index: int

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValidationError("feature map data must be (H, W, C)")
        if data.shape[0] < 2 or data.shape[1] < 2 or data.shape[2] < 1:
            raise ValidationError("feature map needs H >= 2, W >= 2, C >= 1")
        if not np.all(np.isfinite(data)):
            raise ValidationError("feature map contains NaN or Inf")
        object.__setattr__(self, "data", readonly(data))
        object.__setattr__(self, "camera_id", int(self.camera_id))
        object.__setattr__(self, "frame_index", int(self.frame_index))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Proposal2D:
    """A detected 2D box with a depth distribution, in one camera image.

    ``center`` and ``box`` are normalized to [0, 1] image coordinates.
    """

    center: np.ndarray
    box: np.ndarray
    category: int
    score: float
    depth_dist: np.ndarray
    camera_id: int
    frame_index: int

    def __post_init__(self):
        center = as_float_array(self.center, "center", shape=(2,))
        if np.any(center < 0.0) or np.any(center > 1.0):
            raise ValidationError("proposal center must lie inside [0, 1]^2")
        box = as_float_array(self.box, "box", shape=(2,))
        if np.any(box < 0.0):
            raise ValidationError("box extents must be non-negative")
        score = float(self.score)
        if not (0.0 <= score <= 1.0):
            raise ValidationError("score must lie in [0, 1]")
        dist = as_float_array(self.depth_dist, "depth_dist")
        if dist.ndim != 1 or dist.size == 0:
            raise ValidationError("depth_dist must be a non-empty 1-d vector")
        if np.any(dist < 0.0) or abs(dist.sum() - 1.0) > 1e-9:
            raise ValidationError("depth_dist must be non-negative and sum to 1")
        object.__setattr__(self, "center", readonly(center))
        object.__setattr__(self, "box", readonly(box))
        object.__setattr__(self, "category", int(self.category))
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "depth_dist", readonly(dist))
        object.__setattr__(self, "camera_id", int(self.camera_id))
        object.__setattr__(self, "frame_index", int(self.frame_index))


@dataclass(frozen=True)
class DeformAttnParams:
    """Fixed sampling pattern for the deformable feature read-out.

    Per head: a value projection (C, C_h), an output projection (C_h, C),
    ``n_keys`` pixel offsets, and convex attention weights over the keys.
    """

    value_proj: np.ndarray
    out_proj: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        vp = as_float_array(self.value_proj, "value_proj")
        if vp.ndim != 3:
            raise ValidationError("value_proj must be (n_heads, C, C_h)")
        n_heads, c, c_h = vp.shape
        op = as_float_array(self.out_proj, "out_proj", shape=(n_heads, c_h, c))
        offsets = as_float_array(self.offsets, "offsets")
        if offsets.ndim != 3 or offsets.shape[0] != n_heads or offsets.shape[2] != 2:
            raise ValidationError("offsets must be (n_heads, n_keys, 2)")
        weights = as_float_array(
            self.weights, "weights", shape=(n_heads, offsets.shape[1])
        )
        if np.any(weights < 0.0):
            raise ValidationError("attention weights must be non-negative")
        if np.any(np.abs(weights.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("attention weights must sum to 1 per head")
        object.__setattr__(self, "value_proj", readonly(vp))
        object.__setattr__(self, "out_proj", readonly(op))
        object.__setattr__(self, "offsets", readonly(offsets))
        object.__setattr__(self, "weights", readonly(weights))

    @property
    def n_heads(self) -> int:
        return self.value_proj.shape[0]

    @property
    def n_keys(self) -> int:
        return self.offsets.shape[1]

    @property
    def channels(self) -> int:
        return self.value_proj.shape[1]

    @classmethod
    def seeded(
        cls, channels: int, seed, *, n_heads: int = 2, n_keys: int = 4
    ) -> "DeformAttnParams":
        """Deterministic params; raw weight logits pass through a softmax."""
        c = int(channels)
        heads = int(n_heads)
        keys = int(n_keys)
        if c < 1 or heads < 1 or keys < 1:
            raise ValidationError("channels, n_heads, n_keys must all be >= 1")
        c_h = max(1, c // heads)
        rng = np.random.default_rng(seed)
        return cls(
            value_proj=rng.uniform(-0.1, 0.1, size=(heads, c, c_h)),
            out_proj=rng.uniform(-0.1, 0.1, size=(heads, c_h, c)),
            offsets=rng.uniform(-2.0, 2.0, size=(heads, keys, 2)),
            weights=softmax(rng.uniform(-1.0, 1.0, size=(heads, keys)), axis=1),
        )


@dataclass(frozen=True)
class Query3D:
    """One object query: semantic + positional embeddings and a 3D center."""

    q_sem: np.ndarray
    q_pos: np.ndarray
    q_3d: np.ndarray
    center3d: np.ndarray
    category: int
    source_frame: int
    valid: bool

    def __post_init__(self):
        q_sem = as_float_array(self.q_sem, "q_sem")
        if q_sem.ndim != 1 or q_sem.size == 0:
            raise ValidationError("q_sem must be a non-empty 1-d vector")
        d = q_sem.size
        q_pos = as_float_array(self.q_pos, "q_pos", shape=(d,))
        q_3d = as_float_array(self.q_3d, "q_3d", shape=(d,))
        center = as_float_array(self.center3d, "center3d", shape=(3,))
        valid = bool(self.valid)
        if valid and np.max(np.abs(q_3d - (q_pos + q_sem))) > 1e-12:
            raise ValidationError("q_3d must equal q_pos + q_sem for a valid query")
        object.__setattr__(self, "q_sem", readonly(q_sem))
        object.__setattr__(self, "q_pos", readonly(q_pos))
        object.__setattr__(self, "q_3d", readonly(q_3d))
        object.__setattr__(self, "center3d", readonly(center))
        object.__setattr__(self, "category", int(self.category))
        object.__setattr__(self, "source_frame", int(self.source_frame))
        object.__setattr__(self, "valid", valid)

    @property
    def embed_dim(self) -> int:
        return self.q_3d.size


def bilinear_sample(f: FeatureMap, p) -> np.ndarray:
    """Bilinearly interpolate the feature map at continuous pixel coords.

    ``p`` is (x, y) with x along width and y along height, or an (..., 2)
    batch.  Coordinates clamp to the valid rectangle, so integer coords
    reproduce grid values exactly.
    """
    pts = as_float_array(p, "p")
    if pts.shape[-1] != 2:
        raise ValidationError("p must have 2 components on the last axis")
    h, w = f.height, f.width
    x = np.clip(pts[..., 0], 0.0, w - 1.0)
    y = np.clip(pts[..., 1], 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2)
    fx = x - x0
    fy = y - y0
    data = f.data
    v00 = data[y0, x0].astype(np.float64)
    v01 = data[y0, x0 + 1].astype(np.float64)
    v10 = data[y0 + 1, x0].astype(np.float64)
    v11 = data[y0 + 1, x0 + 1].astype(np.float64)
    fx = fx[..., None]
    fy = fy[..., None]
    return (
        (1.0 - fx) * (1.0 - fy) * v00
        + fx * (1.0 - fy) * v01
        + (1.0 - fx) * fy * v10
        + fx * fy * v11
    )


def deformable_attention(
    q: np.ndarray, c2d, f: FeatureMap, params: DeformAttnParams
) -> np.ndarray:
    """Sparse attention read-out around a normalized reference point.

    out = sum_m W_m sum_n A[m, n] * W'_m F(pixel(c2d) + offset[m, n]).
    The reference point scales to pixels by (W - 1, H - 1); offsets are in
    pixels; sample points clamp to the image rectangle.  ``q`` is the
    query vector the pattern was predicted for; with the fixed patterns
    used here it does not enter the arithmetic.
    """
    if params.channels != f.channels:
        raise ValidationError(
            f"params expect {params.channels} channels, feature map has {f.channels}"
        )
    c = as_float_array(c2d, "c2d", shape=(2,))
    base = np.array([c[0] * (f.width - 1.0), c[1] * (f.height - 1.0)])
    out = np.zeros(f.channels)
    for m in range(params.n_heads):
        samples = bilinear_sample(f, base + params.offsets[m])  # (n_keys, C)
        head = params.weights[m] @ (samples @ params.value_proj[m])  # (C_h,)
        out += head @ params.out_proj[m]
    return out


def expected_depth(dist, bin_centers) -> float:
    """Expectation of a categorical depth distribution over bin centers."""
    d = as_float_array(dist, "dist")
    centers = as_float_array(bin_centers, "bin_centers")
    if d.ndim != 1 or d.shape != centers.shape:
        raise ValidationError("dist and bin_centers must be 1-d vectors of equal length")
    if np.any(d < 0.0) or abs(d.sum() - 1.0) > 1e-9:
        raise ValidationError("dist must be non-negative and sum to 1")
    return float(d @ centers)


def build_query(
    prop: Proposal2D,
    f: FeatureMap,
    cam: CameraModel,
    attn: DeformAttnParams,
    pe: PosEmbedParams,
    sem_proj: np.ndarray,
    *,
    bins: np.ndarray | None = None,
    depth_mode: str = "expected",
) -> Query3D:
    """Assemble one 3D query from a proposal.

    The semantic embedding is the deformable read-out at the proposal
    center projected C -> D; the depth estimate reduces the proposal's
    depth distribution (expectation by default, argmax bin center with
    ``depth_mode="argmax"``); the positional embedding encodes the lifted
    center.  q_3d = q_pos + q_sem exactly.
    """
    if prop.camera_id != f.camera_id or prop.camera_id != cam.camera_id:
        raise ValidationError("proposal, feature map, and camera ids must agree")
    if prop.frame_index != f.frame_index:
        raise ValidationError("proposal and feature map frame indices must agree")
    sem_proj = as_float_array(sem_proj, "sem_proj")
    if sem_proj.shape != (f.channels, pe.embed_dim):
        raise ValidationError(
            f"sem_proj must be ({f.channels}, {pe.embed_dim}), got {sem_proj.shape}"
        )
    centers = default_depth_bins() if bins is None else as_float_array(bins, "bins")
    if depth_mode == "expected":
        depth = expected_depth(prop.depth_dist, centers)
    elif depth_mode == "argmax":
        if prop.depth_dist.size != centers.size:
            raise ValidationError("depth_dist length must match the bin layout")
        depth = float(centers[int(np.argmax(prop.depth_dist))])
    else:
        raise ValidationError(f"depth_mode must be 'expected' or 'argmax', got {depth_mode!r}")
    reference = np.zeros(f.channels)
    q_sem = deformable_attention(reference, prop.center, f, attn) @ sem_proj
    center3d = lift_center(cam, prop.center, depth)
    q_pos = pos_embed(center3d, pe)
    return Query3D(
        q_sem=q_sem,
        q_pos=q_pos,
        q_3d=q_pos + q_sem,
        center3d=center3d,
        category=prop.category,
        source_frame=prop.frame_index,
        valid=True,
    )
