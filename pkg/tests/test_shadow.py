import json

import numpy as np
import pytest

from latentcave.shadow import (
    AXIS_QUARTER,
    IDENTITY,
    ROTATIONS,
    GameActionError,
    Level,
    LevelFormatError,
    ModeError,
    NoCubeError,
    ShadowMask,
    VoxelObject,
    apply_action,
    apply_rotation,
    cast_shadow,
    check_match,
    load_level,
    matmul,
    move_cube,
    new_session,
    project,
    replay,
    rotate,
    set_mode,
    shipped_levels,
    solve,
    tick,
)

from oracles import all_rotation_matrices_numpy, brute_force_shadow

TRIPOD = frozenset([(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                    (0, 0, 1), (0, 0, -1)])
LSHAPE = frozenset([(0, 0, 0), (1, 0, 0), (2, 0, 0), (2, 1, 0), (0, 0, 1)])


def simple_level(variant="AE", cells=((0, 0, 0),), targets=None):
    cells = [tuple(c) for c in cells]
    targets = targets or [project(VoxelObject(cells=frozenset(cells)))]
    return Level(name="t", variant=variant, cube_budget=len(cells),
                 targets=targets, initial_cells=cells)


# --- rotation group -----------------------------------------------------------

def test_exactly_24_snapped_rotations():
    assert len(ROTATIONS) == 24
    theirs = {tuple(map(tuple, m)) for m in all_rotation_matrices_numpy()}
    assert set(ROTATIONS) == theirs


def test_quarter_turn_reachability_covers_group():
    seen = {IDENTITY}
    frontier = [IDENTITY]
    while frontier:
        m = frontier.pop()
        for axis in "xyz":
            nxt = matmul(AXIS_QUARTER[axis], m)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    assert seen == set(ROTATIONS)


def test_four_quarter_turns_are_identity():
    level = simple_level(cells=LSHAPE)
    session = new_session(level, seed=0)
    start = session.objects[0].orientation
    for axis in "xyz":
        for _ in range(4):
            rotate(session, 0, axis, 1)
        assert session.objects[0].orientation == start


def test_rotation_order_matters_on_lshape_shadow():
    a = VoxelObject(cells=LSHAPE, orientation=matmul(AXIS_QUARTER["y"], AXIS_QUARTER["x"]))
    b = VoxelObject(cells=LSHAPE, orientation=matmul(AXIS_QUARTER["x"], AXIS_QUARTER["y"]))
    assert project(a) != project(b)


def test_negative_turns_wrap():
    level = simple_level(cells=LSHAPE)
    s1 = new_session(level, seed=0)
    s2 = new_session(level, seed=0)
    rotate(s1, 0, "z", -1)
    rotate(s2, 0, "z", 3)
    assert s1.objects[0].orientation == s2.objects[0].orientation


# --- projection -----------------------------------------------------------------

def test_single_cube_projects_to_unit_mask():
    for rot in ROTATIONS:
        mask = project(VoxelObject(cells=frozenset([(0, 0, 0)]), orientation=rot))
        assert mask.rows == ("1",)


def test_full_block_projects_full_3x3_under_all_orientations():
    block = frozenset(
        (x, y, z) for x in (-1, 0, 1) for y in (-1, 0, 1) for z in (-1, 0, 1)
    )
    assert len(block) == 27
    for rot in ROTATIONS:
        mask = project(VoxelObject(cells=block, orientation=rot))
        assert mask.rows == ("111", "111", "111")


def test_tripod_matches_brute_force_under_all_orientations():
    for rot in ROTATIONS:
        ours = project(VoxelObject(cells=TRIPOD, orientation=rot)).rows
        assert ours == brute_force_shadow(TRIPOD, rot)


def test_random_objects_match_brute_force():
    rng = np.random.default_rng(0)
    coords = [(x, y, z) for x in range(-2, 3) for y in range(-2, 3) for z in range(-2, 3)]
    for _ in range(100):
        picks = rng.choice(len(coords), size=7, replace=False)
        cells = frozenset(coords[i] for i in picks)
        for rot in ROTATIONS:
            ours = project(VoxelObject(cells=cells, orientation=rot)).rows
            assert ours == brute_force_shadow(cells, rot)


def test_projection_translation_invariant_and_rotation_equivariant():
    rng = np.random.default_rng(1)
    coords = [(x, y, z) for x in range(-2, 3) for y in range(-2, 3) for z in range(-2, 3)]
    for _ in range(20):
        picks = rng.choice(len(coords), size=7, replace=False)
        cells = frozenset(coords[i] for i in picks)
        shift = tuple(rng.integers(-2, 3, size=3))
        shifted = frozenset(tuple(np.add(c, shift)) for c in cells)
        assert project(VoxelObject(cells=cells)) == project(VoxelObject(cells=shifted))
        for rot in ROTATIONS:
            via_orientation = project(VoxelObject(cells=cells, orientation=rot))
            via_cells = project(VoxelObject(
                cells=frozenset(apply_rotation(rot, c) for c in cells)))
            assert via_orientation == via_cells


# --- moves ----------------------------------------------------------------------

def three_cube_session(variant="AE"):
    cells = [(0, 0, 0), (1, 0, 0), (2, 0, 0)]
    return new_session(simple_level(variant=variant, cells=cells), seed=5)


def test_move_to_occupied_cell_rejected():
    s = three_cube_session()
    result = move_cube(s, 0, (0, 0, 0), (1, 0, 0))
    assert not result.ok and result.reason == "occupied"
    assert (0, 0, 0) in s.objects[0].cells


def test_move_to_own_cell_rejected_as_occupied():
    s = three_cube_session()
    result = move_cube(s, 0, (0, 0, 0), (0, 0, 0))
    assert not result.ok and result.reason == "occupied"


def test_move_out_of_bounds_rejected():
    s = three_cube_session()
    result = move_cube(s, 0, (0, 0, 0), (5, 0, 0))
    assert not result.ok and result.reason == "out_of_bounds"


def test_move_then_reverse_restores_cells():
    s = three_cube_session()
    before = s.objects[0].cells
    assert move_cube(s, 0, (0, 0, 0), (0, 1, 0)).ok
    assert move_cube(s, 0, (0, 1, 0), (0, 0, 0)).ok
    assert s.objects[0].cells == before


def test_move_requires_encoder_mode():
    s = three_cube_session()
    set_mode(s, "decoder")
    with pytest.raises(ModeError):
        move_cube(s, 0, (0, 0, 0), (0, 1, 0))


def test_move_from_empty_cell_errors():
    s = three_cube_session()
    with pytest.raises(NoCubeError):
        move_cube(s, 0, (3, 3, 3), (0, 1, 0))


def test_move_conserves_cube_count():
    s = three_cube_session()
    move_cube(s, 0, (2, 0, 0), (0, 2, 0))
    assert len(s.objects[0].cells) == 3


def test_move_never_changes_orientation_and_cast_never_moves_cells():
    s = three_cube_session()
    rotate(s, 0, "x", 1)
    orientation = s.objects[0].orientation
    move_cube(s, 0, (0, 0, 0), (0, 1, 0))
    assert s.objects[0].orientation == orientation
    cells = s.objects[0].cells
    set_mode(s, "decoder")
    cast_shadow(s)
    assert s.objects[0].cells == cells


# --- modes, casting, timer --------------------------------------------------------

def test_cast_requires_decoder_mode():
    s = three_cube_session()
    with pytest.raises(ModeError):
        cast_shadow(s)


def test_three_casts_stop_the_timer():
    s = three_cube_session()
    set_mode(s, "decoder")
    for i in range(3):
        assert s.timer_running
        cast_shadow(s)
    assert not s.timer_running
    assert len(s.emitted_shadows) == 3


def test_returning_to_encoder_erases_shadows_and_resumes():
    s = three_cube_session()
    set_mode(s, "decoder")
    cast_shadow(s)
    cast_shadow(s)
    cast_shadow(s)
    set_mode(s, "encoder")
    assert s.emitted_shadows == []
    assert s.timer_running
    assert s.mode == "encoder"


def test_mode_noop_transitions():
    s = three_cube_session()
    set_mode(s, "decoder")
    cast_shadow(s)
    set_mode(s, "decoder")
    assert len(s.emitted_shadows) == 1
    set_mode(s, "encoder")
    set_mode(s, "encoder")
    assert s.mode == "encoder"


def test_timer_ticks_only_while_running_and_never_decreases():
    s = three_cube_session()
    tick(s, 120)
    assert s.timer_cs == 120
    set_mode(s, "decoder")
    tick(s, 30)
    assert s.timer_cs == 150  # still running with fewer than 3 shadows out
    for _ in range(3):
        cast_shadow(s)
    tick(s, 500)
    assert s.timer_cs == 150
    with pytest.raises(GameActionError):
        tick(s, -1)


def test_encoder_mode_implies_no_emitted_shadows():
    s = three_cube_session()
    set_mode(s, "decoder")
    cast_shadow(s)
    set_mode(s, "encoder")
    assert s.mode == "encoder" and s.emitted_shadows == []


# --- matching ---------------------------------------------------------------------

def test_matching_object_matches_its_own_target():
    level = simple_level(cells=LSHAPE)
    s = new_session(level, seed=0)
    assert check_match(s, 0) is True
    assert s.matched[0] is True


def test_translated_object_still_matches():
    cells = [(0, 0, 0), (1, 0, 0), (1, 1, 0)]
    level = simple_level(cells=cells)
    s = new_session(level, seed=0)
    for c in [(0, 0, 0), (1, 0, 0), (1, 1, 0)]:
        move_cube(s, 0, c, (c[0] + 2, c[1] + 1, c[2]))
    assert check_match(s, 0) is True


def test_vae_variant_requires_all_three_objects():
    cells = [(0, 0, 0), (1, 0, 0)]
    level = simple_level(variant="VAE", cells=cells)
    s = new_session(level, seed=0)
    assert len(s.objects) == 3
    assert check_match(s, 0) is True
    move_cube(s, 2, (1, 0, 0), (0, 1, 0))  # break the third object only
    assert check_match(s, 0) is False
    assert s.matched[0] is False


def test_target_index_out_of_range():
    s = three_cube_session()
    with pytest.raises(GameActionError):
        check_match(s, 5)


def test_vae_cast_picks_each_object_roughly_uniformly():
    cells = [(0, 0, 0), (1, 0, 0)]
    level = simple_level(variant="VAE", cells=cells)
    s = new_session(level, seed=99)
    # give each object a distinguishable shadow
    move_cube(s, 1, (1, 0, 0), (0, 1, 0))
    move_cube(s, 2, (1, 0, 0), (2, 0, 0))
    shapes = [project(o) for o in s.objects]
    assert len(set(shapes)) == 3
    set_mode(s, "decoder")
    counts = dict.fromkeys(range(3), 0)
    n = 100_000
    for _ in range(n):
        mask = cast_shadow(s)
        counts[shapes.index(mask)] += 1
    for c in counts.values():
        assert abs(c / n - 1 / 3) < 0.02


# --- sessions, logs, replay ---------------------------------------------------------

def test_session_objects_count_by_variant():
    assert len(three_cube_session("AE").objects) == 1
    assert len(three_cube_session("VAE").objects) == 3


def test_replay_reproduces_final_state_bit_exactly():
    rng = np.random.default_rng(7)
    level = shipped_levels()["easy2-vae"]
    s = new_session(level, seed=1234)
    for step in range(300):
        kind = rng.choice(["move", "rotate", "mode", "cast", "check", "tick"])
        try:
            if kind == "move" and s.mode == "encoder":
                obj = int(rng.integers(len(s.objects)))
                src = sorted(s.objects[obj].cells)[int(rng.integers(len(s.objects[obj].cells)))]
                dst = tuple(int(v) for v in rng.integers(-5, 6, size=3))
                move_cube(s, obj, src, dst)
            elif kind == "rotate":
                rotate(s, int(rng.integers(len(s.objects))),
                       "xyz"[int(rng.integers(3))], int(rng.integers(-3, 4)))
            elif kind == "mode":
                set_mode(s, "decoder" if rng.random() < 0.5 else "encoder")
            elif kind == "cast" and s.mode == "decoder":
                cast_shadow(s)
            elif kind == "check":
                check_match(s, int(rng.integers(len(level.targets))))
            elif kind == "tick":
                tick(s, int(rng.integers(0, 50)))
        except ModeError:
            pass
    twin = replay(level, 1234, s.log)
    assert json.dumps(twin.to_dict(), sort_keys=True) == \
        json.dumps(s.to_dict(), sort_keys=True)


def test_action_log_is_json_serializable():
    s = three_cube_session()
    move_cube(s, 0, (0, 0, 0), (0, 1, 0))
    set_mode(s, "decoder")
    cast_shadow(s)
    for line in s.log:
        json.loads(json.dumps(line))


def test_apply_action_rejects_unknown_type():
    s = three_cube_session()
    with pytest.raises(GameActionError):
        apply_action(s, {"type": "teleport"})


# --- levels and solver ---------------------------------------------------------------

def test_shipped_levels_exist_with_correct_budgets():
    levels = shipped_levels()
    assert {"easy1", "easy2-vae", "hard1", "hard2-vae"} <= set(levels)
    assert levels["easy1"].cube_budget == 7
    assert levels["easy2-vae"].cube_budget == 7
    assert levels["hard1"].cube_budget == 27
    assert levels["hard2-vae"].cube_budget == 27
    assert levels["easy2-vae"].variant == "VAE"
    assert levels["hard1"].variant == "AE"


def test_level_json_roundtrip(tmp_path):
    level = shipped_levels()["easy1"]
    path = tmp_path / "copy.json"
    path.write_text(json.dumps(level.to_dict()))
    again = load_level(path)
    assert again.to_dict() == level.to_dict()


def test_level_validation():
    with pytest.raises(LevelFormatError):
        Level(name="bad", variant="AE", cube_budget=2,
              targets=[ShadowMask.from_rows(["1"])], initial_cells=[(0, 0, 0)])
    with pytest.raises(LevelFormatError):
        Level(name="bad", variant="GAN", cube_budget=1,
              targets=[ShadowMask.from_rows(["1"])], initial_cells=[(0, 0, 0)])
    with pytest.raises(LevelFormatError):
        ShadowMask.from_rows(["00", "0"])


def test_solve_single_cube():
    level = simple_level(cells=[(0, 0, 0)], targets=[ShadowMask.from_rows(["1"])])
    obj = solve(level)
    assert obj is not None and len(obj.cells) == 1


def test_solve_full_block_from_two_views():
    full = ShadowMask.from_rows(["111", "111", "111"])
    cells = [(x, y, z) for x in (-1, 0, 1) for y in (-1, 0, 1) for z in (-1, 0, 1)]
    level = Level(name="block", variant="AE", cube_budget=27,
                  targets=[full, full], initial_cells=cells)
    obj = solve(level)
    assert obj is not None and len(obj.cells) == 27


def test_solve_reports_unsolvable():
    # a 1x6 bar cannot fit the 5-wide solver window
    level = Level(name="no", variant="AE", cube_budget=6,
                  targets=[ShadowMask.from_rows(["111111"])],
                  initial_cells=[(x - 2, 0, 0) for x in range(5)] + [(0, 1, 0)])
    assert solve(level) is None


def test_all_shipped_levels_solvable():
    for name, level in shipped_levels().items():
        assert solve(level) is not None, name
