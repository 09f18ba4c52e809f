import pytest

from deskloop.sim import SceneError, make_scenario, make_scene


def test_scene3_blocks_pair_with_matching_bowls():
    scene = make_scenario(3, 17)
    block_colors = {o.color for o in scene.objects.values() if o.category == "block"}
    bowl_colors = {c.color for c in scene.containers.values() if "bowl" in c.label}
    assert block_colors == bowl_colors == {"red", "green", "blue"}


def test_same_inputs_give_bit_identical_scenes():
    first = make_scenario(5, 42)
    second = make_scenario(5, 42)
    assert first.to_canonical_json(include_events=True) == second.to_canonical_json(
        include_events=True
    )


def test_different_seed_moves_objects():
    a = make_scenario(5, 1)
    b = make_scenario(5, 2)
    assert a.to_canonical_json() != b.to_canonical_json()


@pytest.mark.parametrize("bad", [0, 11, -3, "5", 3.0])
def test_out_of_range_scenario_rejected(bad):
    with pytest.raises(SceneError):
        make_scenario(bad, 0)


def test_unknown_scene_key_rejected():
    with pytest.raises(SceneError):
        make_scene("volcano", 0)


@pytest.mark.parametrize("scenario_id", range(1, 11))
def test_every_scenario_starts_clean(scenario_id):
    scene = make_scenario(scenario_id, 1234)
    assert scene.audit() == []
    assert scene.held is None
    assert all(o.supported_by is None and o.contained_in is None for o in scene.objects.values())


def test_rosters_match_expected_makeup(registry):
    letters = make_scenario(1, 0)
    assert sorted(letters.objects) == ["letter A", "letter L", "letter T", "letter V"]
    assert "box" in letters.containers
    symmetric = {o.id for o in letters.objects.values() if o.symmetric}
    assert symmetric == {"letter A", "letter T", "letter V"}

    polygons = make_scenario(2, 0)
    sides = sorted(o.side_count for o in polygons.objects.values())
    assert sides == [3, 4, 5, 6]

    mixed = make_scenario(10, 0)
    blocks = [o for o in mixed.objects.values() if o.category == "block"]
    fruit = [o for o in mixed.objects.values() if o.category == "fruit"]
    assert len(blocks) == 3 and len(fruit) == 3
    most_sides = max(b.side_count for b in blocks)
    assert sum(1 for b in blocks if b.side_count == most_sides) == 1

    analog = make_scene("real", 0)
    assert sorted(analog.objects) == ["eraser", "metal clip", "stapler"]


def test_letter_geometry_table_applied(registry):
    scene = make_scenario(1, 0)
    assert scene.objects["letter L"].corner_count == registry.letters["L"]["corners"]
    assert scene.objects["letter T"].corner_count == registry.letters["T"]["corners"]
    assert scene.objects["letter L"].symmetric is False
