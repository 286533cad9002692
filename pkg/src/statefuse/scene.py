"""Deterministic synthetic driving scenes for end-to-end checks.

A scene holds constant-velocity object tracks in a world frame, an ego
vehicle following a piecewise-constant yaw-rate-and-speed trajectory, and a
ring of evenly spaced cameras.  Every frame carries ego-frame object states,
oracle 2D proposals (true projections plus optional pixel noise), and
procedurally generated feature maps.  Everything derives from the config
seed, so regeneration is bit-for-bit reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, ValidationError
from .geometry import CameraModel, EgoPose, project_point
from .numerics import as_float_array, readonly
from .queries import FeatureMap, Proposal2D, default_depth_bins

SCENE_FORMAT = "statefuse-scene/1"
FEATURE_DTYPE = "<f4"

_EGO_SALT = 0xE9
_TRACK_SALT = 0x72
_PROPOSAL_SALT = 0x9F
_FEATURE_SALT = 0xFE

EGO_SPEED_RANGE = (1.0, 3.0)
EGO_YAW_RATE_RANGE = (-0.15, 0.15)
EGO_SEGMENT_FRAMES = 4


@dataclass(frozen=True)
class SceneConfig:
    n_frames: int = 8
    frame_dt: float = 0.5
    n_objects: int = 6
    n_cameras: int = 6
    image_size: tuple = (48, 64)
    feature_channels: int = 8
    speed_range: tuple = (2.0, 6.0)
    static_fraction: float = 0.5
    center_noise_sigma: float = 0.0
    seed: int = 0
    depth_mode: str = "peaked"
    focal: float = 0.8
    camera_height: float = 1.5
    radius_range: tuple = (8.0, 30.0)
    n_categories: int = 4

    def __post_init__(self):
        if int(self.n_frames) < 1 or int(self.n_objects) < 1 or int(self.n_cameras) < 1:
            raise ValidationError("n_frames, n_objects, n_cameras must all be >= 1")
        if not np.isfinite(self.frame_dt) or self.frame_dt <= 0.0:
            raise ValidationError("frame_dt must be positive")
        h, w = (int(self.image_size[0]), int(self.image_size[1]))
        if h < 2 or w < 2:
            raise ValidationError("image_size entries must be >= 2")
        if int(self.feature_channels) < 1:
            raise ValidationError("feature_channels must be >= 1")
        lo, hi = (float(self.speed_range[0]), float(self.speed_range[1]))
        if not (0.0 <= lo <= hi):
            raise ValidationError("speed_range must satisfy 0 <= lo <= hi")
        if not (0.0 <= float(self.static_fraction) <= 1.0):
            raise ValidationError("static_fraction must lie in [0, 1]")
        if not np.isfinite(self.center_noise_sigma) or self.center_noise_sigma < 0.0:
            raise ValidationError("center_noise_sigma must be >= 0")
        if self.depth_mode not in ("peaked", "exact"):
            raise ValidationError("depth_mode must be 'peaked' or 'exact'")
        if not np.isfinite(self.focal) or self.focal <= 0.0:
            raise ValidationError("focal must be positive")
        rlo, rhi = (float(self.radius_range[0]), float(self.radius_range[1]))
        if not (0.0 < rlo <= rhi):
            raise ValidationError("radius_range must satisfy 0 < lo <= hi")
        if int(self.n_categories) < 1:
            raise ValidationError("n_categories must be >= 1")
        object.__setattr__(self, "n_frames", int(self.n_frames))
        object.__setattr__(self, "n_objects", int(self.n_objects))
        object.__setattr__(self, "n_cameras", int(self.n_cameras))
        object.__setattr__(self, "image_size", (h, w))
        object.__setattr__(self, "feature_channels", int(self.feature_channels))
        object.__setattr__(self, "speed_range", (lo, hi))
        object.__setattr__(self, "frame_dt", float(self.frame_dt))
        object.__setattr__(self, "static_fraction", float(self.static_fraction))
        object.__setattr__(self, "center_noise_sigma", float(self.center_noise_sigma))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "focal", float(self.focal))
        object.__setattr__(self, "camera_height", float(self.camera_height))
        object.__setattr__(self, "radius_range", (rlo, rhi))
        object.__setattr__(self, "n_categories", int(self.n_categories))

    def to_dict(self) -> dict:
        return {
            "n_frames": self.n_frames,
            "frame_dt": self.frame_dt,
            "n_objects": self.n_objects,
            "n_cameras": self.n_cameras,
            "image_size": list(self.image_size),
            "feature_channels": self.feature_channels,
            "speed_range": list(self.speed_range),
            "static_fraction": self.static_fraction,
            "center_noise_sigma": self.center_noise_sigma,
            "seed": self.seed,
            "depth_mode": self.depth_mode,
            "focal": self.focal,
            "camera_height": self.camera_height,
            "radius_range": list(self.radius_range),
            "n_categories": self.n_categories,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SceneConfig":
        if not isinstance(raw, dict):
            raise ValidationError("scene config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown scene config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "image_size" in kwargs:
            kwargs["image_size"] = tuple(kwargs["image_size"])
        for key in ("speed_range", "radius_range"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class ObjectTrack:
    """Constant-velocity world-frame track; static means exactly zero velocity."""

    object_id: int
    category: int
    size: np.ndarray
    p0: np.ndarray
    velocity: np.ndarray
    is_static: bool

    def __post_init__(self):
        size = as_float_array(self.size, "size", shape=(3,))
        if np.any(size <= 0.0):
            raise ValidationError("size extents must be positive")
        p0 = as_float_array(self.p0, "p0", shape=(3,))
        v = as_float_array(self.velocity, "velocity", shape=(3,))
        static = bool(self.is_static)
        if static != (float(np.linalg.norm(v)) == 0.0):
            raise ValidationError("is_static must match a zero velocity exactly")
        object.__setattr__(self, "object_id", int(self.object_id))
        object.__setattr__(self, "category", int(self.category))
        object.__setattr__(self, "size", readonly(size))
        object.__setattr__(self, "p0", readonly(p0))
        object.__setattr__(self, "velocity", readonly(v))
        object.__setattr__(self, "is_static", static)

    def position_at(self, t: float) -> np.ndarray:
        return self.p0 + self.velocity * float(t)


@dataclass(frozen=True)
class SceneFrame:
    """One time step: ego pose, ego-frame object states, proposals, features.

    ``proposals`` and ``proposal_object_ids`` are per-camera tuples; the ids
    record which track produced each proposal (ground-truth provenance).
    """

    frame_index: int
    ego_pose: EgoPose
    object_centers: np.ndarray
    object_velocities: np.ndarray
    object_categories: np.ndarray
    object_sizes: np.ndarray
    static_labels: np.ndarray
    feature_maps: tuple
    proposals: tuple
    proposal_object_ids: tuple

    def __post_init__(self):
        centers = as_float_array(self.object_centers, "object_centers")
        if centers.ndim != 2 or centers.shape[1] != 3:
            raise ValidationError("object_centers must be (n_objects, 3)")
        n = centers.shape[0]
        vels = as_float_array(self.object_velocities, "object_velocities", shape=(n, 3))
        cats = np.asarray(self.object_categories, dtype=int)
        sizes = as_float_array(self.object_sizes, "object_sizes", shape=(n, 3))
        labels = np.asarray(self.static_labels, dtype=bool)
        if cats.shape != (n,) or labels.shape != (n,):
            raise ValidationError("per-object arrays must share one length")
        if len(self.proposals) != len(self.feature_maps) or len(
            self.proposal_object_ids
        ) != len(self.proposals):
            raise ValidationError("per-camera tuples must share one length")
        object.__setattr__(self, "frame_index", int(self.frame_index))
        object.__setattr__(self, "object_centers", readonly(centers))
        object.__setattr__(self, "object_velocities", readonly(vels))
        object.__setattr__(self, "object_categories", readonly(cats))
        object.__setattr__(self, "object_sizes", readonly(sizes))
        object.__setattr__(self, "static_labels", readonly(labels))
        object.__setattr__(self, "feature_maps", tuple(self.feature_maps))
        object.__setattr__(
            self, "proposals", tuple(tuple(p) for p in self.proposals)
        )
        object.__setattr__(
            self,
            "proposal_object_ids",
            tuple(tuple(int(i) for i in ids) for ids in self.proposal_object_ids),
        )

    @property
    def n_objects(self) -> int:
        return self.object_centers.shape[0]


@dataclass(frozen=True)
class Scene:
    config: SceneConfig
    cameras: tuple
    tracks: tuple
    frames: tuple

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) != self.config.n_frames:
            raise ValidationError("frame count does not match the config")
        if len(self.cameras) != self.config.n_cameras:
            raise ValidationError("camera count does not match the config")


def _yaw_rotation(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def camera_ring(
    n_cameras: int,
    focal: float = 0.8,
    principal: tuple = (0.5, 0.5),
    height: float = 1.5,
) -> tuple:
    """Evenly spaced horizontal camera ring centered on the ego origin.

    Camera i yaws by i * 360 / n degrees from ego forward.  Intrinsics are
    in normalized image units: in-view points project into [0, 1] x [0, 1].
    """
    if int(n_cameras) < 1:
        raise ValidationError("n_cameras must be >= 1")
    cams = []
    intrinsic = np.array(
        [[focal, 0.0, principal[0]], [0.0, focal, principal[1]], [0.0, 0.0, 1.0]]
    )
    for i in range(int(n_cameras)):
        theta = 2.0 * np.pi * i / n_cameras
        forward = np.array([np.cos(theta), np.sin(theta), 0.0])
        right = np.array([np.sin(theta), -np.cos(theta), 0.0])
        down = np.array([0.0, 0.0, -1.0])
        r = np.stack([right, down, forward])  # rows are camera axes in ego coords
        extrinsic = np.eye(4)
        extrinsic[:3, :3] = r
        extrinsic[:3, 3] = -r @ np.array([0.0, 0.0, float(height)])
        cams.append(CameraModel(intrinsic, extrinsic, camera_id=i))
    return tuple(cams)


def _ego_poses(cfg: SceneConfig) -> list:
    rng = np.random.default_rng([cfg.seed, _EGO_SALT])
    n_segments = -(-cfg.n_frames // EGO_SEGMENT_FRAMES)
    yaw_rates = rng.uniform(*EGO_YAW_RATE_RANGE, size=n_segments)
    speeds = rng.uniform(*EGO_SPEED_RANGE, size=n_segments)
    yaw = 0.0
    pos = np.zeros(3)
    poses = []
    for k in range(cfg.n_frames):
        r = _yaw_rotation(yaw)
        t = np.eye(4)
        t[:3, :3] = r
        t[:3, 3] = pos
        poses.append(EgoPose(t, k * cfg.frame_dt))
        seg = k // EGO_SEGMENT_FRAMES
        pos = pos + r @ np.array([speeds[seg] * cfg.frame_dt, 0.0, 0.0])
        yaw += yaw_rates[seg] * cfg.frame_dt
    return poses


def _make_tracks(cfg: SceneConfig) -> tuple:
    rng = np.random.default_rng([cfg.seed, _TRACK_SALT])
    n_static = round(cfg.static_fraction * cfg.n_objects)
    tracks = []
    for i in range(cfg.n_objects):
        angle = 2.0 * np.pi * i / cfg.n_objects + rng.uniform(-0.1, 0.1)
        radius = rng.uniform(*cfg.radius_range)
        p0 = np.array(
            [radius * np.cos(angle), radius * np.sin(angle), rng.uniform(0.6, 1.2)]
        )
        size = rng.uniform((3.5, 1.6, 1.4), (5.0, 2.0, 1.8))
        heading = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(*cfg.speed_range)
        if i < n_static:
            velocity = np.zeros(3)
        else:
            velocity = speed * np.array([np.cos(heading), np.sin(heading), 0.0])
        tracks.append(
            ObjectTrack(
                object_id=i,
                category=i % cfg.n_categories,
                size=size,
                p0=p0,
                velocity=velocity,
                is_static=i < n_static,
            )
        )
    return tuple(tracks)


def synth_features(frame_index: int, camera_id: int, cfg: SceneConfig) -> FeatureMap:
    """Procedural feature map: per channel, a mean of low-frequency sinusoids.

    Values lie in [-1, 1] and are stored as float32.  The map is a pure
    function of (config seed, frame index, camera id).
    """
    rng = np.random.default_rng([cfg.seed, _FEATURE_SALT, int(frame_index), int(camera_id)])
    h, w = cfg.image_size
    c = cfg.feature_channels
    n_wave = 4
    ax = rng.uniform(0.5, 2.5, size=(c, n_wave))
    ay = rng.uniform(0.5, 2.5, size=(c, n_wave))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(c, n_wave))
    ys = np.linspace(0.0, 1.0, h)[:, None, None, None]
    xs = np.linspace(0.0, 1.0, w)[None, :, None, None]
    waves = np.sin(2.0 * np.pi * (ax * xs + ay * ys) + phase)
    data = waves.mean(axis=-1).astype(np.float32)
    return FeatureMap(data, camera_id=camera_id, frame_index=frame_index)


def _depth_distribution(depth: float, bins: np.ndarray, mode: str) -> np.ndarray:
    n = bins.size
    width = bins[1] - bins[0] if n > 1 else 1.0
    w = np.zeros(n)
    if mode == "peaked":
        # 0.8 on the bin containing the true depth, 0.1 on each neighbor.
        i = int(np.clip(np.round((depth - bins[0]) / width), 0, n - 1))
        w[i] = 0.8
        if i - 1 >= 0:
            w[i - 1] = 0.1
        if i + 1 < n:
            w[i + 1] = 0.1
        w /= w.sum()
    elif mode == "exact":
        # Split mass across the two bracketing bins so the expectation
        # reproduces the true depth exactly (saturates at the range ends).
        if depth <= bins[0]:
            w[0] = 1.0
        elif depth >= bins[-1]:
            w[-1] = 1.0
        else:
            j = int(np.clip((depth - bins[0]) // width, 0, n - 2))
            frac = (depth - bins[j]) / (bins[j + 1] - bins[j])
            w[j] = 1.0 - frac
            w[j + 1] = frac
    else:
        raise ValidationError(f"depth_mode must be 'peaked' or 'exact', got {mode!r}")
    return w


def _frame_proposals(
    centers: np.ndarray,
    categories: np.ndarray,
    sizes: np.ndarray,
    cams: tuple,
    frame_index: int,
    noise_sigma: float,
    image_size: tuple | None,
    seed: int,
    depth_mode: str,
    bins: np.ndarray,
):
    if noise_sigma > 0.0 and image_size is None:
        raise ValidationError("pixel noise needs image_size to set its scale")
    rng = np.random.default_rng([int(seed), _PROPOSAL_SALT, int(frame_index)])
    per_cam_props = []
    per_cam_ids = []
    for cam in cams:
        props = []
        ids = []
        for obj in range(centers.shape[0]):
            try:
                u, v, depth = project_point(cam, centers[obj])
            except BehindCameraError:
                continue
            if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
                continue
            if noise_sigma > 0.0:
                h, w = image_size
                u = float(np.clip(u + rng.normal(0.0, noise_sigma / (w - 1)), 0.0, 1.0))
                v = float(np.clip(v + rng.normal(0.0, noise_sigma / (h - 1)), 0.0, 1.0))
            fx = cam.intrinsic[0, 0]
            fy = cam.intrinsic[1, 1]
            box = (
                min(1.0, sizes[obj, 0] * fx / depth),
                min(1.0, sizes[obj, 2] * fy / depth),
            )
            props.append(
                Proposal2D(
                    center=(u, v),
                    box=box,
                    category=int(categories[obj]),
                    score=1.0,
                    depth_dist=_depth_distribution(depth, bins, depth_mode),
                    camera_id=cam.camera_id,
                    frame_index=frame_index,
                )
            )
            ids.append(obj)
        per_cam_props.append(tuple(props))
        per_cam_ids.append(tuple(ids))
    return tuple(per_cam_props), tuple(per_cam_ids)


def oracle_proposals(
    frame: SceneFrame,
    cams: tuple,
    noise_sigma: float,
    *,
    image_size: tuple | None = None,
    seed: int = 0,
    depth_mode: str = "peaked",
    bins: np.ndarray | None = None,
) -> list:
    """Recompute proposals for a frame: one per object visible in a camera.

    Visibility means positive camera depth and a true projected center
    inside the image.  Centers get seeded Gaussian pixel noise of scale
    ``noise_sigma`` (zero keeps the exact projection); the depth
    distribution encodes the true camera depth.
    """
    bins = default_depth_bins() if bins is None else as_float_array(bins, "bins")
    per_cam, _ = _frame_proposals(
        frame.object_centers,
        frame.object_categories,
        frame.object_sizes,
        cams,
        frame.frame_index,
        float(noise_sigma),
        image_size,
        seed,
        depth_mode,
        bins,
    )
    return [p for cam_props in per_cam for p in cam_props]


def build_scene(cfg: SceneConfig) -> Scene:
    """Generate the full deterministic scene for a config."""
    cams = camera_ring(cfg.n_cameras, cfg.focal, height=cfg.camera_height)
    tracks = _make_tracks(cfg)
    poses = _ego_poses(cfg)
    bins = default_depth_bins()
    world_p0 = np.stack([tr.p0 for tr in tracks])
    world_v = np.stack([tr.velocity for tr in tracks])
    categories = np.array([tr.category for tr in tracks])
    sizes = np.stack([tr.size for tr in tracks])
    labels = np.array([tr.is_static for tr in tracks])
    frames = []
    for k in range(cfg.n_frames):
        t = k * cfg.frame_dt
        pose = poses[k]
        r = pose.world_from_ego[:3, :3]
        origin = pose.world_from_ego[:3, 3]
        world_centers = world_p0 + world_v * t
        centers_ego = (world_centers - origin) @ r
        velocities_ego = world_v @ r
        feature_maps = tuple(
            synth_features(k, cam_id, cfg) for cam_id in range(cfg.n_cameras)
        )
        proposals, proposal_ids = _frame_proposals(
            centers_ego,
            categories,
            sizes,
            cams,
            k,
            cfg.center_noise_sigma,
            cfg.image_size,
            cfg.seed,
            cfg.depth_mode,
            bins,
        )
        frames.append(
            SceneFrame(
                frame_index=k,
                ego_pose=pose,
                object_centers=centers_ego,
                object_velocities=velocities_ego,
                object_categories=categories,
                object_sizes=sizes,
                static_labels=labels,
                feature_maps=feature_maps,
                proposals=proposals,
                proposal_object_ids=proposal_ids,
            )
        )
    return Scene(cfg, cams, tracks, tuple(frames))


def generate_scene(cfg: SceneConfig) -> list:
    """Frames of the deterministic scene for ``cfg`` (oldest first)."""
    return list(build_scene(cfg).frames)


# === serialization ===

def scene_to_dict(scene: Scene, features_path: str | None = None) -> dict:
    cfg = scene.config
    doc = {
        "format": SCENE_FORMAT,
        "config": cfg.to_dict(),
        "cameras": [
            {
                "camera_id": cam.camera_id,
                "intrinsic": cam.intrinsic.tolist(),
                "extrinsic": cam.extrinsic.tolist(),
            }
            for cam in scene.cameras
        ],
        "tracks": [
            {
                "object_id": tr.object_id,
                "category": tr.category,
                "size": tr.size.tolist(),
                "p0": tr.p0.tolist(),
                "velocity": tr.velocity.tolist(),
                "is_static": tr.is_static,
            }
            for tr in scene.tracks
        ],
        "frames": [
            {
                "frame_index": fr.frame_index,
                "timestamp": fr.ego_pose.timestamp,
                "world_from_ego": fr.ego_pose.world_from_ego.tolist(),
                "object_centers": fr.object_centers.tolist(),
                "object_velocities": fr.object_velocities.tolist(),
                "object_categories": fr.object_categories.tolist(),
                "object_sizes": fr.object_sizes.tolist(),
                "static_labels": fr.static_labels.tolist(),
                "proposals": [
                    [
                        {
                            "center": p.center.tolist(),
                            "box": p.box.tolist(),
                            "category": p.category,
                            "score": p.score,
                            "depth_dist": p.depth_dist.tolist(),
                        }
                        for p in cam_props
                    ]
                    for cam_props in fr.proposals
                ],
                "proposal_object_ids": [list(ids) for ids in fr.proposal_object_ids],
            }
            for fr in scene.frames
        ],
        "features": {
            "dtype": FEATURE_DTYPE,
            "shape": [
                cfg.n_frames,
                cfg.n_cameras,
                cfg.image_size[0],
                cfg.image_size[1],
                cfg.feature_channels,
            ],
            "path": features_path,
        },
    }
    return doc


def scene_dumps(scene: Scene, features_path: str | None = None) -> str:
    """Serialize to JSON text; float repr keeps every value lossless."""
    return json.dumps(scene_to_dict(scene, features_path), indent=1) + "\n"


def feature_blob_bytes(scene: Scene) -> bytes:
    """Raw little-endian float32 block shaped (n_frames, n_cams, H, W, C)."""
    stacked = np.stack(
        [np.stack([fm.data for fm in fr.feature_maps]) for fr in scene.frames]
    )
    return np.ascontiguousarray(stacked.astype(FEATURE_DTYPE)).tobytes()


def save_scene(scene: Scene, path: str, features_path: str | None = None) -> None:
    """Write the scene JSON, plus the optional raw feature blob."""
    rel = None
    if features_path is not None:
        with open(features_path, "wb") as fh:
            fh.write(feature_blob_bytes(scene))
        rel = os.path.relpath(features_path, os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene_dumps(scene, rel))


def scene_from_dict(doc: dict, features: np.ndarray | None = None) -> Scene:
    if not isinstance(doc, dict) or doc.get("format") != SCENE_FORMAT:
        raise ValidationError(f"not a scene document (expected format {SCENE_FORMAT!r})")
    cfg = SceneConfig.from_dict(doc["config"])
    cams = tuple(
        CameraModel(c["intrinsic"], c["extrinsic"], c["camera_id"])
        for c in doc["cameras"]
    )
    tracks = tuple(
        ObjectTrack(
            object_id=t["object_id"],
            category=t["category"],
            size=t["size"],
            p0=t["p0"],
            velocity=t["velocity"],
            is_static=t["is_static"],
        )
        for t in doc["tracks"]
    )
    frames = []
    for fr in doc["frames"]:
        idx = int(fr["frame_index"])
        if features is not None:
            feature_maps = tuple(
                FeatureMap(features[idx, cam_id], camera_id=cam_id, frame_index=idx)
                for cam_id in range(cfg.n_cameras)
            )
        else:
            feature_maps = tuple(
                synth_features(idx, cam_id, cfg) for cam_id in range(cfg.n_cameras)
            )
        proposals = tuple(
            tuple(
                Proposal2D(
                    center=p["center"],
                    box=p["box"],
                    category=p["category"],
                    score=p["score"],
                    depth_dist=p["depth_dist"],
                    camera_id=cam_id,
                    frame_index=idx,
                )
                for p in cam_props
            )
            for cam_id, cam_props in enumerate(fr["proposals"])
        )
        frames.append(
            SceneFrame(
                frame_index=idx,
                ego_pose=EgoPose(fr["world_from_ego"], fr["timestamp"]),
                object_centers=fr["object_centers"],
                object_velocities=fr["object_velocities"],
                object_categories=fr["object_categories"],
                object_sizes=fr["object_sizes"],
                static_labels=fr["static_labels"],
                feature_maps=feature_maps,
                proposals=proposals,
                proposal_object_ids=fr["proposal_object_ids"],
            )
        )
    return Scene(cfg, cams, tracks, tuple(frames))


def load_scene(path: str) -> Scene:
    """Read a scene JSON; features come from the blob when one is referenced.

    Without a blob the maps are regenerated from the config seed, which
    produces identical values.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    features = None
    info = doc.get("features") or {}
    blob_path = info.get("path")
    if blob_path is not None:
        resolved = os.path.join(os.path.dirname(os.path.abspath(path)), blob_path)
        shape = tuple(int(s) for s in info["shape"])
        raw = np.fromfile(resolved, dtype=info.get("dtype", FEATURE_DTYPE))
        expected = int(np.prod(shape))
        if raw.size != expected:
            raise ValidationError(
                f"feature blob holds {raw.size} values, shape needs {expected}"
            )
        features = raw.reshape(shape)
    return scene_from_dict(doc, features)
