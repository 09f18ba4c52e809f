from deskloop.dsl import SkillCall
from deskloop.sim import make_scene


def vlamove(pick, place):
    return SkillCall(skill="vlamove", pick=pick, place=place)


def test_vlamove_places_apple_in_red_plate(make_executor, registry):
    scene = make_scene("5", 6, registry)
    executor = make_executor(scene)
    outcome = executor.execute(vlamove("apple", "red plate"))
    assert outcome.ok
    assert scene.objects["apple"].contained_in == "red plate"
    kinds = [e.kind for e in outcome.events]
    assert kinds == ["picked", "placed"]
    assert outcome.pick_id == "apple"
    assert len(outcome.trajectories) == 2
    assert all(t["converged"] for t in outcome.trajectories)


def test_grounding_failure_leaves_scene_untouched(make_executor, registry):
    scene = make_scene("7", 6, registry)  # tools only, no fruit
    executor = make_executor(scene)
    before = scene.to_canonical_json(include_events=True)
    outcome = executor.execute(vlamove("banana", "box"))
    assert outcome.status == "grounding_failed"
    assert outcome.events == []
    assert scene.to_canonical_json(include_events=True) == before


def test_place_grounding_failure_also_precedes_motion(make_executor, registry):
    scene = make_scene("7", 6, registry)
    executor = make_executor(scene)
    before = scene.to_canonical_json(include_events=True)
    outcome = executor.execute(vlamove("wrench", "aquarium"))
    assert outcome.status == "grounding_failed"
    assert "place" in outcome.reason
    assert scene.to_canonical_json(include_events=True) == before


def test_forced_grasp_failure_surfaces_event(make_executor, registry):
    scene = make_scene("7", 6, registry)
    executor = make_executor(scene, fail_prob=1.0)
    outcome = executor.execute(vlamove("wrench", "box"))
    assert outcome.status == "grasp_failed"
    assert [e.kind for e in outcome.events] == ["grasp_failed"]
    assert scene.held is None


def test_no_silent_mutation(make_executor, registry):
    scene = make_scene("5", 6, registry)
    executor = make_executor(scene)
    log_before = len(scene.event_log)
    outcome = executor.execute(vlamove("banana", "red plate"))
    new_events = scene.event_log[log_before:]
    assert new_events == outcome.events


def test_place_on_table_keyword_finds_free_pose(make_executor, registry):
    scene = make_scene("5", 6, registry)
    executor = make_executor(scene)
    outcome = executor.execute(vlamove("apple", "table"))
    assert outcome.ok
    apple = scene.objects["apple"]
    assert apple.contained_in is None and apple.supported_by is None
    assert outcome.place_target == "table"


def test_stacking_through_the_full_pipeline(make_executor, registry):
    scene = make_scene("1", 6, registry)
    executor = make_executor(scene)
    outcome = executor.execute(vlamove("letter L", "letter A"))
    assert outcome.ok
    assert scene.objects["letter L"].supported_by == "letter A"


def test_done_is_a_quiet_no_op(make_executor, registry):
    scene = make_scene("5", 6, registry)
    executor = make_executor(scene)
    first = executor.execute(SkillCall(skill="done"))
    second = executor.execute(SkillCall(skill="done"))
    assert first.ok and second.ok
    assert first.events == [] and second.events == []


def test_done_with_held_object_appends_warning(make_executor, registry):
    from deskloop.sim import step_pick

    scene = make_scene("5", 6, registry)
    executor = make_executor(scene)
    step_pick(scene, "apple")
    assert scene.held == "apple"  # held-state oracle
    outcome = executor.execute(SkillCall(skill="done"))
    assert outcome.ok
    assert [e.kind for e in outcome.events] == ["warning"]
    assert outcome.events[0].subject == "apple"


def test_mislabeled_detection_moves_the_wrong_object(make_executor, registry):
    """Degradation propagates into actuation exactly as perceived."""
    from deskloop.perception import DetectorDegradation
    from deskloop.sim import step_pick, step_place

    scene = make_scene("2", 6, registry)
    bottom, top = sorted(scene.objects)[:2]
    step_pick(scene, top)
    step_place(scene, bottom)
    executor = make_executor(
        scene, degradation=DetectorDegradation(occlusion_mislabel_prob=1.0, seed=4)
    )
    detections = executor.detector.detect(scene)
    wrong_label = next(d.label for d in detections if d.source_id == bottom)
    assert wrong_label != scene.objects[bottom].label


def test_reach_targets_stay_inside_workspace(make_executor, registry):
    scene = make_scene("10", 31, registry)
    executor = make_executor(scene)
    bounds = registry.bounds
    for pick, place in (("apple", "box"), ("square block", "plate"), ("banana", "table")):
        outcome = executor.execute(vlamove(pick, place))
        assert outcome.ok
        for record in outcome.trajectories:
            x, y = record["target"]
            assert bounds[0] <= x <= bounds[1] and bounds[2] <= y <= bounds[3]
