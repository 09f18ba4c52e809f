"""Pinhole camera math, the oracle detector, and label grounding."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

import numpy as np

from .registry import Registry, default_registry
from .sim.scene import Scene

DETECTION_SCHEMA = "detections@1"

# Filler words ignored when matching free-form queries against labels.
_STOPWORDS = frozenset({"the", "a", "an", "of", "all", "into", "onto", "on", "in"})


class PerceptionError(Exception):
    """Camera or detector misuse."""


class GroundingError(PerceptionError):
    """A query could not be matched against the detections."""


@dataclass(eq=False)
class CameraModel:
    """Intrinsics plus camera-to-world extrinsics for a fixed RGB-D camera."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # 3x3, camera -> world
    translation: np.ndarray  # camera origin in world coordinates
    width: int = 640
    height: int = 480

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise PerceptionError("focal lengths must be positive")
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise PerceptionError("extrinsics must be 3x3 rotation and 3-vector")
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), atol=1e-9):
            raise PerceptionError("rotation is not orthonormal")

    def contains_pixel(self, u: float, v: float) -> bool:
        return 0.0 <= u <= self.width and 0.0 <= v <= self.height


def pixel_to_world(camera: CameraModel, u: float, v: float, depth: float) -> tuple[float, float, float]:
    """Back-project an image point with known depth into world coordinates."""
    if depth <= 0:
        raise PerceptionError(f"depth must be positive, got {depth}")
    if not camera.contains_pixel(u, v):
        raise PerceptionError(f"pixel ({u}, {v}) outside image")
    point_cam = np.array(
        [(u - camera.cx) * depth / camera.fx, (v - camera.cy) * depth / camera.fy, depth]
    )
    world = camera.rotation @ point_cam + camera.translation
    return (float(world[0]), float(world[1]), float(world[2]))


def world_to_pixel(camera: CameraModel, x: float, y: float, z: float) -> tuple[float, float, float]:
    """Project a world point; returns (u, v, depth in the camera frame)."""
    point_cam = camera.rotation.T @ (np.array([x, y, z], dtype=float) - camera.translation)
    depth = float(point_cam[2])
    if depth <= 0:
        raise PerceptionError("point is behind the camera")
    u = camera.fx * float(point_cam[0]) / depth + camera.cx
    v = camera.fy * float(point_cam[1]) / depth + camera.cy
    return (u, v, depth)


def overhead_camera(registry: Registry | None = None) -> CameraModel:
    """Default camera: mounted over the workspace centre, looking straight down."""
    registry = registry or default_registry()
    spec = registry.camera
    x_min, x_max, y_min, y_max = registry.bounds
    centre = ((x_min + x_max) / 2.0, (y_min + y_max) / 2.0)
    rotation = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    translation = np.array([centre[0], centre[1], spec["height_above_table_m"]])
    return CameraModel(
        fx=spec["fx"],
        fy=spec["fy"],
        cx=spec["cx"],
        cy=spec["cy"],
        rotation=rotation,
        translation=translation,
        width=int(spec["width"]),
        height=int(spec["height"]),
    )


@dataclass(frozen=True)
class Detection:
    """One labelled box with centre depth; source ids are executor-side only."""

    label: str
    box: tuple[float, float, float, float]  # u_min, v_min, u_max, v_max
    depth: float
    confidence: float
    source_id: str
    source_kind: str = "object"  # object | container

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "box": [round(v, 2) for v in self.box],
            "depth": round(self.depth, 6),
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class DetectorDegradation:
    """Failure model applied only to occluded objects."""

    miss_prob: float = 0.0
    occlusion_mislabel_prob: float = 0.0
    box_jitter_px: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("miss_prob", "occlusion_mislabel_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise PerceptionError(f"{name} must be in [0, 1], got {value}")


ZERO_DEGRADATION = DetectorDegradation()


def _camera_covers_workspace(camera: CameraModel, bounds: tuple[float, float, float, float]) -> bool:
    x_min, x_max, y_min, y_max = bounds
    for x, y in ((x_min, y_min), (x_min, y_max), (x_max, y_min), (x_max, y_max)):
        try:
            u, v, _ = world_to_pixel(camera, x, y, 0.0)
        except PerceptionError:
            return False
        if not camera.contains_pixel(u, v):
            return False
    return True


def _project_box(
    camera: CameraModel, x: float, y: float, z_lo: float, z_hi: float, radius: float
) -> tuple[float, float, float, float]:
    us: list[float] = []
    vs: list[float] = []
    for dx in (-radius, radius):
        for dy in (-radius, radius):
            for z in (z_lo, z_hi):
                u, v, _ = world_to_pixel(camera, x + dx, y + dy, z)
                us.append(u)
                vs.append(v)
    return (
        max(0.0, min(us)),
        max(0.0, min(vs)),
        min(float(camera.width), max(us)),
        min(float(camera.height), max(vs)),
    )


def _jitter_box(
    box: tuple[float, float, float, float], rng: random.Random, jitter: float, camera: CameraModel
) -> tuple[float, float, float, float]:
    if jitter <= 0:
        return box
    du = rng.uniform(-jitter, jitter)
    dv = rng.uniform(-jitter, jitter)
    u_min, v_min, u_max, v_max = box
    return (
        max(0.0, u_min + du),
        max(0.0, v_min + dv),
        min(float(camera.width), u_max + du),
        min(float(camera.height), v_max + dv),
    )


def _mislabel(scene: Scene, obj_id: str, rng: random.Random) -> str:
    """A wrong label from the same category, if the scene offers one."""
    obj = scene.objects[obj_id]
    peers = sorted(
        {o.label for o in scene.objects.values() if o.category == obj.category and o.label != obj.label}
    )
    if not peers:
        return obj.label
    return peers[rng.randrange(len(peers))]


def oracle_detect(
    scene: Scene,
    camera: CameraModel,
    degradation: DetectorDegradation = ZERO_DEGRADATION,
) -> list[Detection]:
    """Ground-truth detections with configurable occlusion degradation.

    Occluded objects (anything with something stacked on top) may be
    dropped or mislabelled; everything else is always reported faithfully.
    Containers are reported alongside objects so place targets can ground.
    """
    if not _camera_covers_workspace(camera, scene.bounds):
        raise PerceptionError("camera does not cover the workspace")

    detections: list[Detection] = []
    for obj in sorted(scene.objects.values(), key=lambda o: o.id):
        if obj.id == scene.held:
            continue
        rng = random.Random(f"detect:{degradation.seed}:{obj.id}")
        occluded = bool(scene.supporters_of(obj.id))
        label = obj.label
        if occluded:
            if rng.random() < degradation.miss_prob:
                continue
            if rng.random() < degradation.occlusion_mislabel_prob:
                label = _mislabel(scene, obj.id, rng)
        centre_z = scene.world_height(obj.id)
        u, v, depth = world_to_pixel(camera, obj.x, obj.y, centre_z)
        if not camera.contains_pixel(u, v):
            continue
        z_lo = centre_z - obj.height / 2.0
        z_hi = centre_z + obj.height / 2.0
        box = _project_box(camera, obj.x, obj.y, z_lo, z_hi, obj.footprint_radius)
        box = _jitter_box(box, rng, degradation.box_jitter_px, camera)
        detections.append(
            Detection(
                label=label,
                box=box,
                depth=depth,
                confidence=1.0,
                source_id=obj.id,
                source_kind="object",
            )
        )
    for container in sorted(scene.containers.values(), key=lambda c: c.id):
        u, v, depth = world_to_pixel(camera, container.x, container.y, 0.0)
        if not camera.contains_pixel(u, v):
            continue
        rng = random.Random(f"detect:{degradation.seed}:{container.id}")
        box = _project_box(camera, container.x, container.y, 0.0, 0.02, container.radius)
        box = _jitter_box(box, rng, degradation.box_jitter_px, camera)
        detections.append(
            Detection(
                label=container.label,
                box=box,
                depth=depth,
                confidence=1.0,
                source_id=container.id,
                source_kind="container",
            )
        )
    return detections


class OracleDetector:
    """Detector interface implementation backed by simulator ground truth."""

    def __init__(self, camera: CameraModel, degradation: DetectorDegradation = ZERO_DEGRADATION):
        self.camera = camera
        self.degradation = degradation

    def detect(self, scene: Scene) -> list[Detection]:
        return oracle_detect(scene, self.camera, self.degradation)


def detection_from_dict(data: dict, source_id: str = "", source_kind: str = "object") -> Detection:
    return Detection(
        label=data["label"],
        box=tuple(data["box"]),
        depth=data["depth"],
        confidence=data.get("confidence", 1.0),
        source_id=source_id or data.get("source_id", ""),
        source_kind=data.get("source_kind", source_kind),
    )


class HttpDetector:
    """Client for an external detector service speaking the detections@1 schema.

    The request carries the scene handle (here: a snapshot; a physical
    deployment would post an image); the reply mirrors Detection.
    """

    def __init__(self, url: str, camera: CameraModel, timeout: float = 30.0, client=None):
        import httpx

        self.url = url
        self.camera = camera
        self._client = client or httpx.Client(timeout=timeout)

    def detect(self, scene: Scene) -> list[Detection]:
        import httpx

        body = {"schema": DETECTION_SCHEMA, "scene": scene.to_snapshot()}
        try:
            response = self._client.post(self.url, json=body)
        except httpx.HTTPError as exc:
            raise PerceptionError(f"detector transport failure: {exc}") from exc
        if response.status_code != 200:
            raise PerceptionError(f"detector returned HTTP {response.status_code}")
        payload = response.json()
        if payload.get("schema") != DETECTION_SCHEMA:
            raise PerceptionError(f"unsupported detections schema {payload.get('schema')!r}")
        return [detection_from_dict(entry) for entry in payload.get("detections", [])]


def _tokens(text: str, synonyms: dict[str, str] | None) -> frozenset[str]:
    words = re.findall(r"[a-z0-9]+", text.lower())
    mapped = []
    for word in words:
        if word in _STOPWORDS:
            continue
        mapped.append((synonyms or {}).get(word, word))
    return frozenset(mapped)


def token_overlap(query: str, label: str, synonyms: dict[str, str] | None = None) -> float:
    """Jaccard overlap of synonym-expanded content tokens."""
    q = _tokens(query, synonyms)
    l = _tokens(label, synonyms)
    if not q or not l:
        return 0.0
    return len(q & l) / len(q | l)


def resolve_label(
    detections: list[Detection],
    query: str,
    synonyms: dict[str, str] | None = None,
    threshold: float = 0.5,
) -> Detection:
    """Best detection for a free-form query.

    Ties break on higher confidence, then the lexicographically smallest
    label, then source id, so resolution is fully deterministic.
    """
    if not query or not query.strip():
        raise GroundingError("empty query")
    if not detections:
        raise GroundingError("no detections to match against")
    scored = [
        (token_overlap(query, det.label, synonyms), det) for det in detections
    ]
    best_score, best = min(
        scored,
        key=lambda pair: (-pair[0], -pair[1].confidence, pair[1].label, pair[1].source_id),
    )
    if best_score < threshold:
        raise GroundingError(f"nothing matches {query!r} (best overlap {best_score:.2f})")
    return best
