"""The vlamove skill library: grounding, reach computation, pick-place-home."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dsl import SkillCall
from .kinematics import ArmModel, IkSolution, default_arm, solve_ik
from .perception import (
    CameraModel,
    Detection,
    GroundingError,
    OracleDetector,
    pixel_to_world,
    resolve_label,
)
from .registry import Registry, default_registry
from .sim.actions import step_pick, step_place
from .sim.objects import SimEvent
from .sim.scene import Scene

# Place queries that mean "any free spot on the table".
_FREE_POSE_TOKENS = frozenset({"table", "desk", "free spot", "free space", "anywhere"})


class SkillConfigError(Exception):
    """Executor wired up without a usable camera/arm binding."""


@dataclass
class SkillOutcome:
    call: SkillCall
    status: str  # ok | grounding_failed | action_rejected | grasp_failed
    pick_id: str | None = None
    place_target: str | None = None
    reason: str = ""
    events: list[SimEvent] = field(default_factory=list)
    trajectories: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _reach_record(target: tuple[float, float], solution: IkSolution) -> dict:
    return {
        "target": [round(target[0], 6), round(target[1], 6)],
        "joint_angles": [round(a, 6) for a in solution.joint_angles],
        "iterations": solution.iterations,
        "residual": round(solution.residual, 9),
        "converged": solution.converged,
    }


class SkillExecutor:
    """Executes parsed skill calls against one scene.

    Grounding happens for both the pick and the place query before any
    motion, so a failed grounding leaves the scene untouched.
    """

    def __init__(
        self,
        scene: Scene,
        detector: OracleDetector | None = None,
        camera: CameraModel | None = None,
        arm: ArmModel | None = None,
        fail_prob: float = 0.0,
        registry: Registry | None = None,
    ):
        self.registry = registry or default_registry()
        if detector is None:
            if camera is None:
                from .perception import overhead_camera

                camera = overhead_camera(self.registry)
            detector = OracleDetector(camera)
        self.detector = detector
        self.camera = camera if camera is not None else detector.camera
        if self.camera is None:
            raise SkillConfigError("no camera bound to the executor")
        self.arm = arm or default_arm(self.registry)
        if self.arm is None:
            raise SkillConfigError("no arm bound to the executor")
        self.scene = scene
        self.fail_prob = fail_prob
        self.synonyms = self.registry.synonyms
        constants = self.registry.constants
        self.support_ratio = float(constants.get("support_ratio", 0.8))
        self.grasp_jitter = float(constants.get("grasp_jitter_m", 0.02))
        self.overlap_threshold = float(constants.get("overlap_threshold", 0.5))
        self._home_angles = list(self.arm.joint_angles)

    # -- grounding --------------------------------------------------------

    def _resolve(self, detections: list[Detection], query: str, kinds: tuple[str, ...]) -> Detection:
        candidates = [d for d in detections if d.source_kind in kinds]
        return resolve_label(candidates, query, self.synonyms, self.overlap_threshold)

    def _is_free_pose_query(self, query: str) -> bool:
        words = query.lower().strip()
        if words.startswith("the "):
            words = words[4:]
        words = self.synonyms.get(words, words)
        return words in _FREE_POSE_TOKENS

    def _detection_point(self, detection: Detection) -> tuple[float, float]:
        u = (detection.box[0] + detection.box[2]) / 2.0
        v = (detection.box[1] + detection.box[3]) / 2.0
        x, y, _ = pixel_to_world(self.camera, u, v, detection.depth)
        return self.scene.clamp(x, y)

    def _reach(self, target: tuple[float, float]) -> IkSolution:
        arm_spec = self.registry.arm
        return solve_ik(
            self.arm,
            target,
            damping=float(arm_spec.get("damping", 0.1)),
            tolerance=float(arm_spec.get("tolerance", 1e-4)),
            max_iters=int(arm_spec.get("max_iters", 200)),
        )

    # -- skills -----------------------------------------------------------

    def execute(self, call: SkillCall) -> SkillOutcome:
        if call.is_done:
            return self.execute_done(call)
        return self.execute_vlamove(call)

    def execute_vlamove(self, call: SkillCall) -> SkillOutcome:
        detections = self.detector.detect(self.scene)

        try:
            pick_det = self._resolve(detections, call.pick, kinds=("object",))
        except GroundingError as exc:
            return SkillOutcome(call, "grounding_failed", reason=f"pick: {exc}")

        place_kind = "pose"
        place_det: Detection | None = None
        if not self._is_free_pose_query(call.place):
            try:
                place_det = self._resolve(detections, call.place, kinds=("container",))
                place_kind = "container"
            except GroundingError:
                try:
                    candidates = [d for d in detections if d.source_id != pick_det.source_id]
                    place_det = self._resolve(candidates, call.place, kinds=("object",))
                    place_kind = "object"
                except GroundingError as exc:
                    return SkillOutcome(call, "grounding_failed", reason=f"place: {exc}")

        pick_point = self._detection_point(pick_det)
        if place_det is not None:
            place_point = self._detection_point(place_det)
            place_target: str | tuple[float, float] = place_det.source_id
            place_name = place_det.source_id
        else:
            pick_obj = self.scene.object(pick_det.source_id)
            place_point = self.scene.find_free_pose(pick_obj.footprint_radius)
            place_target = place_point
            place_name = "table"

        trajectories = []
        for point in (pick_point, place_point):
            solution = self._reach(point)
            trajectories.append(_reach_record(point, solution))
            if not solution.converged:
                return SkillOutcome(
                    call,
                    "action_rejected",
                    pick_id=pick_det.source_id,
                    place_target=place_name,
                    reason=f"reach target {point} unreachable: {solution.diagnostic}",
                    trajectories=trajectories,
                )
            self.arm = self.arm.with_angles(solution.joint_angles)

        pick_result = step_pick(
            self.scene, pick_det.source_id, fail_prob=self.fail_prob, jitter_m=self.grasp_jitter
        )
        if pick_result.status != "picked":
            status = "action_rejected" if pick_result.status == "rejected" else "grasp_failed"
            self._go_home()
            return SkillOutcome(
                call,
                status,
                pick_id=pick_det.source_id,
                place_target=place_name,
                reason=f"pick {pick_result.status}",
                events=pick_result.events,
                trajectories=trajectories,
            )

        place_result = step_place(self.scene, place_target, support_ratio=self.support_ratio)
        self._go_home()
        return SkillOutcome(
            call,
            "ok",
            pick_id=pick_det.source_id,
            place_target=place_name,
            events=pick_result.events + place_result.events,
            trajectories=trajectories,
        )

    def execute_done(self, call: SkillCall) -> SkillOutcome:
        events: list[SimEvent] = []
        if self.scene.held is not None:
            events.append(
                self.scene.emit("warning", self.scene.held, "done called while holding")
            )
        return SkillOutcome(call, "ok", events=events)

    def _go_home(self) -> None:
        self.arm = self.arm.with_angles(self._home_angles)
