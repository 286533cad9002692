"""Motion elimination: drop past queries that match a current object.

Past frames are padded to a common slot count K, their centers are aligned
into the current ego frame, and a per-frame binary mask retains only slots
whose aligned center is NOT within ``alpha`` meters of any same-category
current object.  The current frame itself is always kept in full.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import as_float_array, readonly
from .queries import Query3D

INVALID_COST = np.inf


@dataclass(frozen=True)
class MotionElimConfig:
    alpha: float = 0.5
    require_same_category: bool = True

    def __post_init__(self):
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or alpha < 0.0:
            raise ValidationError("alpha must be a finite non-negative distance")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "require_same_category", bool(self.require_same_category))


@dataclass(frozen=True)
class PaddedQuerySequence:
    """N frames of exactly K query slots each, oldest frame first.

    Padding slots are zero-embedding queries with ``valid=False`` and
    category -1.
    """

    frames: tuple
    k_queries: int
    current_index: int

    def __post_init__(self):
        frames = tuple(tuple(frame) for frame in self.frames)
        if not frames:
            raise ValidationError("sequence needs at least one frame")
        k = int(self.k_queries)
        if any(len(frame) != k for frame in frames):
            raise ValidationError("every frame must hold exactly k_queries slots")
        cur = int(self.current_index)
        if not (0 <= cur < len(frames)):
            raise ValidationError("current_index out of range")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "k_queries", k)
        object.__setattr__(self, "current_index", cur)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def embed_dim(self) -> int:
        return self.frames[0][0].embed_dim

    def centers(self, i: int) -> np.ndarray:
        return np.stack([q.center3d for q in self.frames[i]])

    def validity(self, i: int) -> np.ndarray:
        return np.array([q.valid for q in self.frames[i]], dtype=bool)

    def categories(self, i: int) -> np.ndarray:
        return np.array([q.category for q in self.frames[i]], dtype=int)

    def q3d(self, i: int) -> np.ndarray:
        return np.stack([q.q_3d for q in self.frames[i]])


@dataclass(frozen=True)
class MotionCostMatrix:
    """Pairwise current-to-past center distances for one past frame.

    ``cost[m, n]`` is the Euclidean distance from current slot m to the
    aligned past slot n; pairs touching an invalid slot carry +inf.
    """

    cost: np.ndarray
    frame_offset: int
    valid_current: np.ndarray
    valid_past: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise ValidationError("cost must be a square (K, K) matrix")
        if np.any(np.isnan(cost)) or np.any(cost < 0.0):
            raise ValidationError("costs must be non-negative (inf marks invalid pairs)")
        k = cost.shape[0]
        vc = np.asarray(self.valid_current, dtype=bool)
        vp = np.asarray(self.valid_past, dtype=bool)
        if vc.shape != (k,) or vp.shape != (k,):
            raise ValidationError("validity vectors must have shape (K,)")
        object.__setattr__(self, "cost", readonly(cost))
        object.__setattr__(self, "frame_offset", int(self.frame_offset))
        object.__setattr__(self, "valid_current", readonly(vc))
        object.__setattr__(self, "valid_past", readonly(vp))


@dataclass(frozen=True)
class MotionMask:
    """Per-frame binary retention vectors; 1 keeps a slot, 0 eliminates it."""

    per_frame: tuple

    def __post_init__(self):
        vectors = tuple(
            readonly(np.asarray(v, dtype=np.int8)) for v in self.per_frame
        )
        if not vectors:
            raise ValidationError("mask needs at least one frame")
        k = vectors[0].size
        for v in vectors:
            if v.ndim != 1 or v.size != k:
                raise ValidationError("all mask vectors must share one length")
            if np.any((v != 0) & (v != 1)):
                raise ValidationError("mask entries must be 0 or 1")
        object.__setattr__(self, "per_frame", vectors)

    @property
    def n_frames(self) -> int:
        return len(self.per_frame)

    @property
    def k_queries(self) -> int:
        return self.per_frame[0].size

    def survivor_counts(self) -> np.ndarray:
        return np.array([int(v.sum()) for v in self.per_frame])


def padding_query(embed_dim: int, frame_index: int) -> Query3D:
    """Zero-filled invalid slot used to equalize per-frame query counts."""
    zeros = np.zeros(int(embed_dim))
    return Query3D(
        q_sem=zeros,
        q_pos=zeros,
        q_3d=zeros,
        center3d=np.zeros(3),
        category=-1,
        source_frame=frame_index,
        valid=False,
    )


def pad_frames(raw) -> PaddedQuerySequence:
    """Pad per-frame query lists to the maximum count K.

    Frames are given oldest to newest; the newest frame is current.  When
    several frames tie for the maximum count, the most recent of them is
    taken as the reference (the value of K is unaffected).
    """
    frames = [list(frame) for frame in raw]
    if not frames:
        raise ValidationError("need at least one frame")
    counts = [len(frame) for frame in frames]
    k = max(counts)
    if k == 0:
        raise ValidationError("all frames are empty")
    embed_dim = None
    for frame in frames:
        for q in frame:
            embed_dim = q.embed_dim
            break
        if embed_dim is not None:
            break
    padded = []
    for i, frame in enumerate(frames):
        if any(q.embed_dim != embed_dim for q in frame):
            raise ValidationError("all queries must share one embedding width")
        pad = [padding_query(embed_dim, i) for _ in range(k - len(frame))]
        padded.append(tuple(frame) + tuple(pad))
    return PaddedQuerySequence(tuple(padded), k, len(frames) - 1)


def motion_cost(
    current_centers, past_aligned, validity, frame_offset: int = 1
) -> MotionCostMatrix:
    """Distance matrix between current slots and aligned past slots.

    ``validity`` is (K, 2) boolean: column 0 flags valid current slots,
    column 1 valid past slots.  Any pair touching an invalid slot costs
    +inf.
    """
    cur = as_float_array(current_centers, "current_centers")
    past = as_float_array(past_aligned, "past_aligned")
    if cur.ndim != 2 or cur.shape[1] != 3:
        raise ValidationError("current_centers must be (K, 3)")
    if past.shape != cur.shape:
        raise ValidationError("past_aligned must match current_centers in shape")
    val = np.asarray(validity, dtype=bool)
    if val.shape != (cur.shape[0], 2):
        raise ValidationError("validity must be a (K, 2) boolean array")
    diff = cur[:, None, :] - past[None, :, :]
    cost = np.linalg.norm(diff, axis=-1)
    cost[~val[:, 0], :] = INVALID_COST
    cost[:, ~val[:, 1]] = INVALID_COST
    return MotionCostMatrix(cost, frame_offset, val[:, 0], val[:, 1])


def motion_mask(
    cost: MotionCostMatrix, cats_current, cats_past, cfg: MotionElimConfig
) -> np.ndarray:
    """Retention vector for one past frame.

    Slot n is eliminated (0) exactly when some current slot m sits within
    alpha of it (and shares its category, when required); padded or
    invalid past slots are always 0.
    """
    k = cost.cost.shape[0]
    cur = np.asarray(cats_current, dtype=int)
    past = np.asarray(cats_past, dtype=int)
    if cur.shape != (k,) or past.shape != (k,):
        raise ValidationError("category vectors must have shape (K,)")
    close = cost.cost <= cfg.alpha
    if cfg.require_same_category:
        close &= cur[:, None] == past[None, :]
    eliminated = close.any(axis=0)
    mask = (~eliminated).astype(np.int8)
    mask[~cost.valid_past] = 0
    return mask


def apply_motion_mask(seq: PaddedQuerySequence, mask: MotionMask) -> PaddedQuerySequence:
    """Zero out eliminated past slots; retained slots pass through untouched.

    The current frame is never altered, whatever its mask row says.
    """
    if mask.n_frames != seq.n_frames or mask.k_queries != seq.k_queries:
        raise ValidationError("mask shape must match the padded sequence")
    embed_dim = seq.embed_dim
    frames = []
    for i, frame in enumerate(seq.frames):
        if i == seq.current_index:
            frames.append(frame)
            continue
        row = mask.per_frame[i]
        frames.append(
            tuple(
                q if row[s] == 1 else padding_query(embed_dim, i)
                for s, q in enumerate(frame)
            )
        )
    return PaddedQuerySequence(tuple(frames), seq.k_queries, seq.current_index)
