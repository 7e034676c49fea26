"""Pinhole projection, rigid poses, 3-D boxes, LiDAR accumulation.

Camera coordinates: x right, y down, z forward (depth). Pixel (row,
col) = (v, u). Projection uses nearest-pixel rasterization with a
min-depth z-buffer, so occluding returns win pixel collisions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .types import DepthMap, ShapeMismatchError


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus target grid size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be > 0, got fx={self.fx} fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @staticmethod
    def from_dict(d: dict) -> "CameraModel":
        return CameraModel(
            fx=float(d["fx"]), fy=float(d["fy"]),
            cx=float(d["cx"]), cy=float(d["cy"]),
            width=int(d["width"]), height=int(d["height"]),
        )


@dataclass(frozen=True)
class PointCloud:
    """N 3-D points with an optional per-point dynamic flag."""

    points: np.ndarray
    dynamic: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.dynamic is not None:
            flags = np.array(self.dynamic, dtype=bool, copy=True)
            if flags.shape != (pts.shape[0],):
                raise ShapeMismatchError(
                    f"dynamic flags {flags.shape} vs points ({pts.shape[0]},)"
                )
            flags.setflags(write=False)
            object.__setattr__(self, "dynamic", flags)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Pose:
    """Rigid transform taking source-frame points into the target frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64, copy=True)
        tr = np.array(self.translation, dtype=np.float64, copy=True)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if tr.shape != (3,):
            raise ValueError(f"translation must have shape (3,), got {tr.shape}")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(tr))):
            raise ValueError("pose entries must be finite")
        if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(rot) < 0.0:
            raise ValueError("rotation must be proper (det +1)")
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def yaw_translation(yaw: float, translation) -> "Pose":
        """Rotation about the y (down) axis plus a translation."""
        c, s = np.cos(yaw), np.sin(yaw)
        rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        return Pose(rot, np.asarray(translation, dtype=np.float64))

    def transform(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        rot_inv = self.rotation.T
        return Pose(rot_inv, -rot_inv @ self.translation)


@dataclass(frozen=True)
class Box3D:
    """Axis-extents box with a yaw about the y (down) axis.

    ``contains`` is boundary-inclusive: points exactly on a face count
    as inside.
    """

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64, copy=True)
        h = np.array(self.half_extents, dtype=np.float64, copy=True)
        if c.shape != (3,) or h.shape != (3,):
            raise ValueError("center and half_extents must have shape (3,)")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(h))):
            raise ValueError("box entries must be finite")
        if np.any(h <= 0.0):
            raise ValueError(f"half extents must be > 0, got {h}")
        c.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)

    def rotation(self) -> np.ndarray:
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        local = (pts - self.center) @ self.rotation()  # == R^T per column action
        return np.all(np.abs(local) <= self.half_extents, axis=-1)


def project_points(
    cloud: PointCloud, camera: CameraModel, pose: Pose | None = None
) -> DepthMap:
    """Rasterize a point cloud into a sparse depth map.

    Points behind the camera (z <= 0) are dropped. Pixel coordinates
    are rounded to nearest and bounds-checked before any integer cast,
    so far-out-of-frame points can never alias into the grid. Pixel
    collisions keep the smallest depth.
    """
    pts = cloud.points if pose is None else pose.transform(cloud.points)
    z = pts[:, 2]
    front = z > 0.0
    pts = pts[front]
    z = z[front]
    u = np.floor(camera.fx * pts[:, 0] / z + camera.cx + 0.5)
    v = np.floor(camera.fy * pts[:, 1] / z + camera.cy + 0.5)
    inside = (u >= 0) & (u <= camera.width - 1) & (v >= 0) & (v <= camera.height - 1)
    cols = u[inside].astype(np.intp)
    rows = v[inside].astype(np.intp)
    depth = z[inside]
    grid = np.full((camera.height, camera.width), np.inf, dtype=np.float64)
    np.minimum.at(grid, (rows, cols), depth)
    grid[~np.isfinite(grid)] = 0.0
    return DepthMap(grid.astype(np.float32), "sparse")


def backproject(depth: DepthMap, camera: CameraModel) -> PointCloud:
    """Lift valid depth pixels to 3-D points on their pixel rays."""
    if depth.shape != (camera.height, camera.width):
        raise ShapeMismatchError(
            f"depth {depth.shape} vs camera {(camera.height, camera.width)}"
        )
    rows, cols = np.nonzero(depth.values > 0.0)
    z = depth.values[rows, cols].astype(np.float64)
    x = (cols - camera.cx) * z / camera.fx
    y = (rows - camera.cy) * z / camera.fy
    return PointCloud(np.stack([x, y, z], axis=1))


def remove_dynamic_points(cloud: PointCloud, boxes: list[Box3D]) -> PointCloud:
    """Drop every point lying inside any of the boxes."""
    if len(boxes) == 0 or len(cloud) == 0:
        return cloud
    inside = np.zeros(len(cloud), dtype=bool)
    for box in boxes:
        inside |= box.contains(cloud.points)
    keep = ~inside
    flags = None if cloud.dynamic is None else cloud.dynamic[keep]
    return PointCloud(cloud.points[keep], flags)


def accumulate_lidar(
    frames: list[tuple[PointCloud, Pose]],
    camera: CameraModel,
    boxes_per_frame: list[list[Box3D]] | None = None,
    current_index: int = 0,
) -> DepthMap:
    """Merge several LiDAR sweeps into one denser depth map.

    Each pose maps its frame into the current frame. Points inside the
    dynamic-object boxes of *other* frames are removed before warping
    (they would smear), while the current frame keeps all its points.
    """
    if not frames:
        raise ValueError("need at least one frame to accumulate")
    if not (0 <= current_index < len(frames)):
        raise ValueError(f"current_index {current_index} out of range")
    if boxes_per_frame is not None and len(boxes_per_frame) != len(frames):
        raise ShapeMismatchError(
            f"{len(boxes_per_frame)} box lists for {len(frames)} frames"
        )
    merged = []
    for k, (cloud, pose) in enumerate(frames):
        if k != current_index and boxes_per_frame is not None:
            cloud = remove_dynamic_points(cloud, boxes_per_frame[k])
        merged.append(pose.transform(cloud.points))
    all_points = PointCloud(np.concatenate(merged, axis=0))
    return project_points(all_points, camera)


def write_point_cloud_csv(path, cloud: PointCloud) -> None:
    """CSV with header x,y,z[,dynamic]; full float64 precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if cloud.dynamic is None:
            writer.writerow(["x", "y", "z"])
            for p in cloud.points:
                writer.writerow([repr(float(v)) for v in p])
        else:
            writer.writerow(["x", "y", "z", "dynamic"])
            for p, flag in zip(cloud.points, cloud.dynamic):
                writer.writerow([repr(float(v)) for v in p] + [int(flag)])


def read_point_cloud_csv(path) -> PointCloud:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["x", "y", "z"]:
            raise ValueError(f"bad point-cloud header in {path}: {header}")
        has_flags = len(header) > 3
        pts, flags = [], []
        for row in reader:
            if not row:
                continue
            pts.append([float(row[0]), float(row[1]), float(row[2])])
            if has_flags:
                flags.append(bool(int(row[3])))
    points = np.array(pts, dtype=np.float64).reshape(-1, 3)
    return PointCloud(points, np.array(flags, dtype=bool) if has_flags else None)


def write_pose(path, pose: Pose) -> None:
    """12 whitespace-separated numbers: row-major 3x4 [R | t]."""
    mat = np.hstack([pose.rotation, pose.translation[:, None]])
    with open(path, "w") as fh:
        fh.write(" ".join(repr(float(v)) for v in mat.ravel()) + "\n")


def read_pose(path) -> Pose:
    with open(path) as fh:
        nums = [float(tok) for tok in fh.read().split()]
    if len(nums) != 12:
        raise ValueError(f"pose file {path} must hold 12 numbers, got {len(nums)}")
    mat = np.array(nums, dtype=np.float64).reshape(3, 4)
    return Pose(mat[:, :3], mat[:, 3])


def write_boxes_csv(path, boxes: list[Box3D]) -> None:
    """CSV with header cx,cy,cz,hx,hy,hz,yaw."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cx", "cy", "cz", "hx", "hy", "hz", "yaw"])
        for b in boxes:
            row = list(b.center) + list(b.half_extents) + [b.yaw]
            writer.writerow([repr(float(v)) for v in row])


def read_boxes_csv(path) -> list[Box3D]:
    boxes = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 7:
            raise ValueError(f"bad box header in {path}: {header}")
        for row in reader:
            if not row:
                continue
            vals = [float(v) for v in row]
            boxes.append(Box3D(vals[0:3], vals[3:6], vals[6]))
    return boxes
