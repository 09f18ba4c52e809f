import json

import pytest

from deskloop.sim import SceneError, make_scenario, scene_from_snapshot
from deskloop.sim.objects import ObjectInstance, SimEvent


def _block(object_id, **overrides):
    fields = dict(
        id=object_id,
        label=object_id,
        category="block",
        color="red",
        shape="cube",
        corner_count=8,
        side_count=6,
        footprint_radius=0.025,
        height=0.05,
        x=0.2,
        y=0.2,
    )
    fields.update(overrides)
    return ObjectInstance(**fields)


def test_polygon_shape_counts_enforced():
    with pytest.raises(SceneError):
        _block("b", shape="triangle", corner_count=4, side_count=4)
    ok = _block("b", shape="triangle", corner_count=3, side_count=3)
    assert ok.corner_count == 3


def test_relations_mutually_exclusive():
    with pytest.raises(SceneError):
        _block("b", supported_by="a", contained_in="bowl")


def test_graspable_follows_support_graph():
    scene = make_scenario(1, 0)
    ids = sorted(scene.objects)
    a, b = ids[0], ids[1]
    scene.objects[b].supported_by = a
    scene.objects[b].z = 1
    assert not scene.is_graspable(a)
    assert scene.is_graspable(b)


def test_event_log_ticks_strictly_ordered():
    scene = make_scenario(2, 5)
    scene.emit("picked", "x", "x")
    scene.emit("placed", "x", "y")
    ticks = [e.tick for e in scene.event_log]
    assert ticks == sorted(ticks) and len(set(ticks)) == len(ticks)


def test_unknown_event_kind_rejected():
    with pytest.raises(SceneError):
        SimEvent(kind="teleported", subject="x", target="y", tick=1)


def test_snapshot_roundtrip_is_canonical():
    scene = make_scenario(3, 99)
    scene.emit("picked", "red block", "red block")
    blob = scene.to_canonical_json(include_events=True)
    rebuilt = scene_from_snapshot(json.loads(blob))
    assert rebuilt.to_canonical_json(include_events=True) == blob


def test_snapshot_reports_derived_graspable():
    scene = make_scenario(1, 0)
    ids = sorted(scene.objects)
    scene.objects[ids[1]].supported_by = ids[0]
    scene.objects[ids[1]].z = 1
    snap = scene.to_snapshot()
    assert snap["objects"][ids[0]]["graspable"] is False
    assert snap["objects"][ids[1]]["graspable"] is True


def test_audit_detects_cycles_and_bad_z():
    scene = make_scenario(1, 0)
    ids = sorted(scene.objects)
    scene.objects[ids[0]].supported_by = ids[1]
    scene.objects[ids[1]].supported_by = ids[0]
    assert any("cycle" in p for p in scene.audit())

    clean = make_scenario(1, 0)
    clean.objects[ids[0]].z = 3
    assert any("stack level" in p for p in clean.audit())


def test_free_pose_clears_everything():
    scene = make_scenario(10, 4)
    x, y = scene.find_free_pose(0.03)
    for obj in scene.objects.values():
        assert (obj.x - x) ** 2 + (obj.y - y) ** 2 >= (0.03 + obj.footprint_radius) ** 2
    for box in scene.containers.values():
        assert (box.x - x) ** 2 + (box.y - y) ** 2 >= (0.03 + box.radius) ** 2


def test_unknown_ids_raise():
    scene = make_scenario(1, 0)
    with pytest.raises(SceneError):
        scene.object("nope")
    with pytest.raises(SceneError):
        scene.container("nope")
