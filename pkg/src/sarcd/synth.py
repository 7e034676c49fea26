"""Synthetic scene generation for end-to-end pipeline checks.

A scene is a tiny raycast world: a flat ground plane seen from a
camera ``camera_height`` metres above it, plus a handful of yawed
boxes resting on the ground.  From the analytic depth render the
generator derives every sensor the pipeline consumes: a distorted
monocular depth map, a sparse noisy radar map with counted outliers,
an RGB image, and a short sequence of LiDAR scanline sweeps with
camera poses and per-frame box annotations.

All randomness is drawn from independent, purpose-named streams so
that changing one knob (say, radar noise) cannot silently reshuffle
another field (say, box geometry).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .projection import (
    Box3D,
    CameraModel,
    PointCloud,
    Pose,
    backproject,
    read_boxes_csv,
    read_point_cloud_csv,
    read_pose,
    write_boxes_csv,
    write_point_cloud_csv,
    write_pose,
)
from .types import DepthMap, Image, read_rdm, write_rdm

STREAM_GEOMETRY = 0
STREAM_DISTORTION = 1
STREAM_RADAR = 2
STREAM_MOTION = 3
STREAM_ALBEDO = 4

# Boxes handed out for dynamic-point removal are inflated by this
# relative margin so surface samples cannot escape on roundoff.
BOX_MARGIN = 0.01

NEAR_CLIP = 0.5
SKY_COLOR = (0.55, 0.65, 0.85)


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene; every field is seed-stable."""

    width: int = 64
    height: int = 64
    n_boxes: int = 4
    n_dynamic: int = 1
    camera_height: float = 1.5
    z_far: float = 80.0
    radar_points: int = 24
    radar_noise_sigma: float = 0.0
    radar_outlier_frac: float = 0.0
    lidar_row_step: int = 4
    n_lidar_frames: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError(f"scene too small: {self.width}x{self.height}")
        if self.n_boxes < 0 or self.n_dynamic < 0:
            raise ValueError("box counts must be non-negative")
        if self.n_dynamic > self.n_boxes:
            raise ValueError(
                f"n_dynamic {self.n_dynamic} exceeds n_boxes {self.n_boxes}"
            )
        if self.camera_height <= 0:
            raise ValueError("camera must sit above the ground")
        if self.z_far <= NEAR_CLIP:
            raise ValueError(f"z_far must exceed the near clip {NEAR_CLIP}")
        if self.radar_points < 0:
            raise ValueError("radar_points must be non-negative")
        if self.radar_noise_sigma < 0:
            raise ValueError("radar_noise_sigma must be non-negative")
        if not 0.0 <= self.radar_outlier_frac <= 1.0:
            raise ValueError("radar_outlier_frac must lie in [0, 1]")
        if self.lidar_row_step < 1:
            raise ValueError("lidar_row_step must be at least 1")
        if self.n_lidar_frames < 1:
            raise ValueError("need at least one lidar frame")

    def stream(self, stream_id: int, sub: int = 0) -> np.random.Generator:
        """Independent generator for one named randomness stream.

        ``sub`` splits a stream into fixed-purpose branches (for
        example per-box velocities) so the number of draws one
        consumer makes can never shift what another consumer sees.
        """
        return np.random.default_rng(
            np.random.SeedSequence([self.seed, stream_id, sub])
        )


@dataclass(frozen=True, eq=False)
class SceneBundle:
    """Everything generate_scene knows about one scene."""

    spec: SceneSpec
    camera: CameraModel
    truth: DepthMap
    box_id: np.ndarray
    mono: DepthMap
    radar: DepthMap
    radar_truth: DepthMap
    outlier_mask: np.ndarray
    image: Image
    frames: list = field(default_factory=list)
    boxes_per_frame: list = field(default_factory=list)
    current_index: int = 0
    distortion: tuple = (0.0, 1.0, 0.0)

    @property
    def n_outliers(self) -> int:
        return int(np.count_nonzero(self.outlier_mask))


def _default_camera(spec: SceneSpec) -> CameraModel:
    # focal length == width gives a ~53 degree horizontal field of view
    return CameraModel(
        fx=float(spec.width),
        fy=float(spec.width),
        cx=spec.width / 2.0,
        cy=spec.height / 2.0,
        width=spec.width,
        height=spec.height,
    )


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _sample_boxes(spec: SceneSpec) -> tuple[list[Box3D], np.ndarray]:
    """Boxes resting on the ground plane, plus per-box drift velocity.

    The first ``n_dynamic`` boxes move; their velocity is a horizontal
    world-frame displacement per frame step.  Velocities are drawn for
    every box regardless, so toggling n_dynamic does not reshuffle the
    geometry of later boxes.
    """
    boxes = []
    velocities = np.zeros((spec.n_boxes, 3))
    for idx in range(spec.n_boxes):
        rng = spec.stream(STREAM_GEOMETRY, sub=idx)
        he = rng.uniform(0.5, 1.5, size=3)
        z = rng.uniform(8.0, 0.75 * spec.z_far)
        x = rng.uniform(-0.25, 0.25) * z
        yaw = rng.uniform(-np.pi, np.pi)
        center = np.array([x, spec.camera_height - he[1], z])
        boxes.append(Box3D(center=center, half_extents=he, yaw=float(yaw)))
        vel = spec.stream(STREAM_MOTION, sub=1 + idx).uniform(-1.5, 1.5, size=2)
        velocities[idx, 0] = vel[0]
        velocities[idx, 2] = vel[1]
    return boxes, velocities


def _render(
    camera: CameraModel, spec: SceneSpec, boxes: list[Box3D]
) -> tuple[np.ndarray, np.ndarray]:
    """Raycast depth (float64, 0 = sky) and winning box id (-1 = none).

    Rays leave the camera origin with direction (dx, dy, 1), so the ray
    parameter t is directly the z depth of the hit.  Rays pass through
    integer pixel coordinates, matching the back-projection convention,
    so a rendered depth lifts to a 3-D point exactly on the surface.
    """
    h, w = camera.height, camera.width
    dx = (np.arange(w) - camera.cx) / camera.fx
    dy = (np.arange(h) - camera.cy) / camera.fy
    dirx = np.broadcast_to(dx[None, :], (h, w))
    diry = np.broadcast_to(dy[:, None], (h, w))

    with np.errstate(divide="ignore"):
        t_ground = np.where(diry > 1e-12, spec.camera_height / diry, np.inf)
    best = np.where(t_ground >= NEAR_CLIP, t_ground, np.inf)
    winner = np.full((h, w), -1, dtype=np.int32)

    dirs = np.stack([dirx, diry, np.ones_like(dirx)], axis=-1)
    for idx, box in enumerate(boxes):
        rot = _yaw_matrix(box.yaw)
        o_local = -(rot.T @ box.center)
        d_local = dirs @ rot  # row-vector form of rot.T @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d_local
            lo = (-box.half_extents - o_local) * inv
            hi = (box.half_extents - o_local) * inv
        near = np.nanmin(np.stack([lo, hi]), axis=0)
        far = np.nanmax(np.stack([lo, hi]), axis=0)
        t_enter = near.max(axis=-1)
        t_exit = far.min(axis=-1)
        hit = (t_exit >= t_enter) & (t_enter >= NEAR_CLIP)
        t_box = np.where(hit, t_enter, np.inf)
        closer = t_box < best
        best = np.where(closer, t_box, best)
        winner = np.where(closer, np.int32(idx), winner)

    depth = np.where(np.isfinite(best) & (best <= spec.z_far), best, 0.0)
    winner = np.where(depth > 0, winner, np.int32(-1))
    return depth, winner


def _distortion_coeffs(spec: SceneSpec) -> tuple[float, float, float]:
    rng = spec.stream(STREAM_DISTORTION)
    a0 = float(rng.uniform(0.2, 1.0))
    a1 = float(rng.uniform(0.6, 1.4))
    a2 = float(rng.uniform(-0.3, 0.3))
    return a0, a1, a2


def _distort(depth: np.ndarray, coeffs, z_far: float) -> np.ndarray:
    """Monotone polynomial warp of valid depths; sky stays invalid.

    The coefficient ranges keep the derivative a1 + 2 a2 z / z_far
    non-negative over (0, z_far], so ordering is preserved and the
    region-growing predicate still sees coherent surfaces.
    """
    a0, a1, a2 = coeffs
    warped = a0 + a1 * depth + a2 * depth * depth / z_far
    return np.where(depth > 0, warped, 0.0)


def _sample_radar(
    spec: SceneSpec, truth: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse radar hits: truth depths plus noise plus counted outliers.

    Returns (noisy map, noiseless map, outlier mask).  The outlier
    count is exact: round(frac * n) chosen points are replaced with a
    uniform depth, the rest get Gaussian noise (or none if sigma = 0).
    """
    rng = spec.stream(STREAM_RADAR)
    h, w = truth.shape
    candidates = np.argwhere(truth > 0)
    n = min(spec.radar_points, len(candidates))
    clean = np.zeros((h, w), dtype=np.float64)
    noisy = np.zeros((h, w), dtype=np.float64)
    outlier_mask = np.zeros((h, w), dtype=bool)
    if n == 0:
        return noisy, clean, outlier_mask
    picks = candidates[rng.choice(len(candidates), size=n, replace=False)]
    values = truth[picks[:, 0], picks[:, 1]]
    if spec.radar_noise_sigma > 0:
        values = values + rng.normal(0.0, spec.radar_noise_sigma, size=n)
    n_out = int(round(spec.radar_outlier_frac * n))
    is_out = np.zeros(n, dtype=bool)
    if n_out:
        out_idx = rng.choice(n, size=n_out, replace=False)
        values = values.copy()
        values[out_idx] = rng.uniform(1.0, spec.z_far, size=n_out)
        is_out[out_idx] = True
    values = np.clip(values, 0.1, spec.z_far)
    clean[picks[:, 0], picks[:, 1]] = truth[picks[:, 0], picks[:, 1]]
    noisy[picks[:, 0], picks[:, 1]] = values
    outlier_mask[picks[:, 0], picks[:, 1]] = is_out
    return noisy, clean, outlier_mask


def _shade_image(
    spec: SceneSpec,
    camera: CameraModel,
    depth: np.ndarray,
    box_id: np.ndarray,
    boxes: list[Box3D],
) -> np.ndarray:
    """Albedo times distance shading; checkerboard ground, flat boxes."""
    rng = spec.stream(STREAM_ALBEDO)
    box_albedo = rng.uniform(0.2, 0.9, size=(max(spec.n_boxes, 1), 3))
    h, w = depth.shape
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = SKY_COLOR

    valid = depth > 0
    dx = (np.arange(w) - camera.cx) / camera.fx
    world_x = depth * dx[None, :]
    checker = (np.floor(world_x) + np.floor(depth)) % 2.0
    ground_albedo = np.where(checker[..., None] < 1.0, 0.35, 0.55)
    shade = 1.0 / (1.0 + depth / 40.0)
    on_ground = valid & (box_id < 0)
    img = np.where(on_ground[..., None], ground_albedo * shade[..., None], img)
    for idx in range(spec.n_boxes):
        sel = box_id == idx
        if np.any(sel):
            img = np.where(
                sel[..., None], box_albedo[idx][None, None, :] * shade[..., None], img
            )
    return np.clip(img, 0.0, 1.0)


def _camera_track(spec: SceneSpec) -> tuple[list[Pose], float, float]:
    """Pose of each frame's camera expressed in the current frame.

    The camera drives forward with a constant per-frame speed and yaw
    rate, drawn from the ego branch of the motion stream; box drift
    velocities live on per-box branches, so neither can perturb the
    other.
    """
    rng = spec.stream(STREAM_MOTION, sub=0)
    speed = float(rng.uniform(0.5, 2.0))
    yaw_rate = float(rng.uniform(-0.02, 0.02))

    current = spec.n_lidar_frames // 2
    poses = []
    for k in range(spec.n_lidar_frames):
        dt = k - current
        yaw_k = yaw_rate * dt
        pos = np.zeros(3)
        if dt > 0:
            for j in range(dt):
                pos += _yaw_matrix(yaw_rate * j) @ np.array([0.0, 0.0, speed])
        elif dt < 0:
            for j in range(dt, 0):
                pos -= _yaw_matrix(yaw_rate * j) @ np.array([0.0, 0.0, speed])
        poses.append(Pose.yaw_translation(yaw_k, pos))
    return poses, speed, yaw_rate


def _boxes_in_frame(
    boxes: list[Box3D], velocities: np.ndarray, pose: Pose, dt: int
) -> list[Box3D]:
    """World boxes at time offset dt, expressed in that frame's camera."""
    rot_t = pose.rotation.T
    out = []
    for idx, box in enumerate(boxes):
        center = box.center + dt * velocities[idx]
        local = rot_t @ (center - pose.translation)
        yaw = box.yaw - float(np.arctan2(pose.rotation[0, 2], pose.rotation[2, 2]))
        out.append(Box3D(center=local, half_extents=box.half_extents, yaw=yaw))
    return out


def _inflate(box: Box3D) -> Box3D:
    return Box3D(
        center=box.center,
        half_extents=box.half_extents * (1.0 + BOX_MARGIN),
        yaw=box.yaw,
    )


def generate_scene(spec: SceneSpec) -> SceneBundle:
    """Build one fully deterministic synthetic scene."""
    camera = _default_camera(spec)
    boxes, velocities = _sample_boxes(spec)

    depth64, box_id = _render(camera, spec, boxes)
    truth = DepthMap(depth64.astype(np.float32), "dense")

    coeffs = _distortion_coeffs(spec)
    mono = DepthMap(_distort(depth64, coeffs, spec.z_far).astype(np.float32), "dense")

    noisy, clean, outlier_mask = _sample_radar(spec, depth64)
    radar = DepthMap(noisy.astype(np.float32), "sparse")
    radar_truth = DepthMap(clean.astype(np.float32), "sparse")

    image = Image(
        _shade_image(spec, camera, depth64, box_id, boxes).astype(np.float32)
    )

    poses, _, _ = _camera_track(spec)
    current = spec.n_lidar_frames // 2
    dynamic_ids = set(range(spec.n_dynamic))
    rows = np.arange(spec.lidar_row_step // 2, spec.height, spec.lidar_row_step)

    frames = []
    boxes_per_frame = []
    for k in range(spec.n_lidar_frames):
        dt = k - current
        frame_boxes = _boxes_in_frame(boxes, velocities, poses[k], dt)
        frame_depth, frame_ids = _render(camera, spec, frame_boxes)
        scan = np.zeros_like(frame_depth)
        scan[rows] = frame_depth[rows]
        sweep = DepthMap(scan.astype(np.float32), "sparse")
        cloud = backproject(sweep, camera)
        pix = np.argwhere(scan > 0)
        dynamic = np.isin(frame_ids[pix[:, 0], pix[:, 1]], list(dynamic_ids))
        frames.append(
            (PointCloud(cloud.points, dynamic=dynamic.astype(bool)), poses[k])
        )
        boxes_per_frame.append(
            [_inflate(frame_boxes[i]) for i in sorted(dynamic_ids)]
        )

    return SceneBundle(
        spec=spec,
        camera=camera,
        truth=truth,
        box_id=box_id,
        mono=mono,
        radar=radar,
        radar_truth=radar_truth,
        outlier_mask=outlier_mask,
        image=image,
        frames=frames,
        boxes_per_frame=boxes_per_frame,
        current_index=current,
        distortion=coeffs,
    )


# --- persistence ----------------------------------------------------------


def save_scene(directory, bundle: SceneBundle) -> None:
    """Write a scene to a directory; everything but the PNG is exact."""
    from pathlib import Path

    from PIL import Image as PilImage

    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    write_rdm(root / "truth.rdm", bundle.truth)
    write_rdm(root / "mono.rdm", bundle.mono)
    write_rdm(root / "radar.rdm", bundle.radar)
    write_rdm(root / "radar_truth.rdm", bundle.radar_truth)
    np.save(root / "box_id.npy", bundle.box_id)

    quantized = np.round(bundle.image.values * 255.0).astype(np.uint8)
    PilImage.fromarray(quantized).save(root / "image.png")

    with open(root / "camera.json", "w") as fh:
        json.dump(bundle.camera.to_dict(), fh, indent=2, sort_keys=True)

    for k, (cloud, pose) in enumerate(bundle.frames):
        write_point_cloud_csv(root / f"lidar_{k:02d}.csv", cloud)
        write_pose(root / f"pose_{k:02d}.txt", pose)
        write_boxes_csv(root / f"boxes_{k:02d}.csv", bundle.boxes_per_frame[k])

    meta = {
        "spec": asdict(bundle.spec),
        "distortion": list(bundle.distortion),
        "current_index": bundle.current_index,
        "outliers": [[int(r), int(c)] for r, c in np.argwhere(bundle.outlier_mask)],
    }
    with open(root / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_scene(directory) -> SceneBundle:
    """Rebuild a bundle from disk; the image comes back 8-bit quantized."""
    from pathlib import Path

    from PIL import Image as PilImage

    root = Path(directory)
    with open(root / "meta.json") as fh:
        meta = json.load(fh)
    spec = SceneSpec(**meta["spec"])
    with open(root / "camera.json") as fh:
        camera = CameraModel.from_dict(json.load(fh))

    truth = read_rdm(root / "truth.rdm")
    mono = read_rdm(root / "mono.rdm")
    radar = read_rdm(root / "radar.rdm")
    radar_truth = read_rdm(root / "radar_truth.rdm")
    box_id = np.load(root / "box_id.npy")

    raw = np.asarray(PilImage.open(root / "image.png"), dtype=np.float32)
    image = Image(raw / np.float32(255.0))

    outlier_mask = np.zeros(truth.shape, dtype=bool)
    for r, c in meta["outliers"]:
        outlier_mask[r, c] = True

    frames = []
    boxes_per_frame = []
    for k in range(spec.n_lidar_frames):
        cloud = read_point_cloud_csv(root / f"lidar_{k:02d}.csv")
        pose = read_pose(root / f"pose_{k:02d}.txt")
        frames.append((cloud, pose))
        boxes_per_frame.append(read_boxes_csv(root / f"boxes_{k:02d}.csv"))

    return SceneBundle(
        spec=spec,
        camera=camera,
        truth=truth,
        box_id=box_id,
        mono=mono,
        radar=radar,
        radar_truth=radar_truth,
        outlier_mask=outlier_mask,
        image=image,
        frames=frames,
        boxes_per_frame=boxes_per_frame,
        current_index=meta["current_index"],
        distortion=tuple(meta["distortion"]),
    )
