"""The shadow matching game: a deterministic voxel/projection state machine.

An object is a set of lattice cells plus one of the 24 snapped orientations
(integer rotation matrices, det +1). Shadows are orthographic projections
along -z, cropped to their bounding box so matching is translation-blind.
The encoder role reshapes cells; the decoder role rotates and casts. All
randomness (which of the three objects casts, in the VAE variant) flows from
the session seed, so an action log replays to a bit-identical session.

Grid conventions: a shadow mask row i, column j corresponds to projected
coordinates y = ymin + i, x = xmin + j.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

BOUND = 4          # playfield is [-BOUND, BOUND]^3
SOLVE_BOUND = 2    # solver searches the tighter [-2, 2]^3
EASY_BUDGET = 7
HARD_BUDGET = 27


class ModeError(RuntimeError):
    """Action not allowed in the session's current mode."""


class NoCubeError(ValueError):
    """Move references an empty source cell."""


class GameActionError(ValueError):
    """Malformed or out-of-range action."""


class LevelFormatError(ValueError):
    """Level JSON violates its schema."""


# --- the rotation group -------------------------------------------------------

def _det3(m) -> int:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _all_rotations() -> tuple:
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = tuple(
                tuple(signs[r] if c == perm[r] else 0 for c in range(3))
                for r in range(3)
            )
            if _det3(m) == 1:
                mats.append(m)
    return tuple(sorted(mats))


ROTATIONS = _all_rotations()
ROTATION_INDEX = {m: i for i, m in enumerate(ROTATIONS)}
IDENTITY = ((1, 0, 0), (0, 1, 0), (0, 0, 1))

# quarter turns about each axis, right-handed
AXIS_QUARTER = {
    "x": ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    "y": ((0, 0, 1), (0, 1, 0), (-1, 0, 0)),
    "z": ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
}


def matmul(a, b):
    return tuple(
        tuple(sum(a[r][k] * b[k][c] for k in range(3)) for c in range(3))
        for r in range(3)
    )


def apply_rotation(m, cell):
    x, y, z = cell
    return (
        m[0][0] * x + m[0][1] * y + m[0][2] * z,
        m[1][0] * x + m[1][1] * y + m[1][2] * z,
        m[2][0] * x + m[2][1] * y + m[2][2] * z,
    )


# --- masks and objects ----------------------------------------------------------

@dataclass(frozen=True)
class ShadowMask:
    """Cropped boolean grid as '01' strings, row i <-> y = ymin + i."""

    rows: tuple

    @classmethod
    def from_points(cls, points) -> "ShadowMask":
        points = set(points)
        if not points:
            raise GameActionError("cannot build a shadow from no points")
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        x0, y0 = min(xs), min(ys)
        width = max(xs) - x0 + 1
        height = max(ys) - y0 + 1
        grid = [["0"] * width for _ in range(height)]
        for x, y in points:
            grid[y - y0][x - x0] = "1"
        return cls(rows=tuple("".join(r) for r in grid))

    @classmethod
    def from_rows(cls, rows) -> "ShadowMask":
        rows = tuple(str(r) for r in rows)
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise LevelFormatError("mask rows must be non-empty and rectangular")
        if any(ch not in "01" for r in rows for ch in r):
            raise LevelFormatError("mask rows must contain only 0 and 1")
        if not any("1" in r for r in rows):
            raise LevelFormatError("mask must contain at least one filled cell")
        # normalize to the cropped form
        pts = [(j, i) for i, r in enumerate(rows) for j, ch in enumerate(r) if ch == "1"]
        return cls.from_points(pts)

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def cells(self):
        return {(j, i) for i, r in enumerate(self.rows)
                for j, ch in enumerate(r) if ch == "1"}


@dataclass
class VoxelObject:
    cells: frozenset
    orientation: tuple = IDENTITY

    def __post_init__(self):
        cells = frozenset(tuple(int(v) for v in c) for c in self.cells)
        for c in cells:
            if max(abs(v) for v in c) > BOUND:
                raise GameActionError(f"cell {c} outside the [-{BOUND}, {BOUND}] bounds")
        object.__setattr__(self, "cells", cells)
        if self.orientation not in ROTATION_INDEX:
            raise GameActionError("orientation is not one of the 24 snapped rotations")

    def rotated_cells(self):
        return {apply_rotation(self.orientation, c) for c in self.cells}


def project(obj: VoxelObject) -> ShadowMask:
    """Orthographic shadow along -z of the oriented object, cropped."""
    return ShadowMask.from_points((x, y) for x, y, _ in obj.rotated_cells())


# --- levels --------------------------------------------------------------------

@dataclass
class Level:
    name: str
    variant: str                   # "AE" | "VAE"
    cube_budget: int
    targets: list                  # ordered ShadowMasks
    initial_cells: list            # starting object cells

    def __post_init__(self):
        if self.variant not in ("AE", "VAE"):
            raise LevelFormatError(f"variant must be AE or VAE, got {self.variant!r}")
        if not self.targets:
            raise LevelFormatError("a level needs at least one target shadow")
        cells = [tuple(int(v) for v in c) for c in self.initial_cells]
        if len(set(cells)) != len(cells):
            raise LevelFormatError("initial cells contain duplicates")
        if len(cells) != self.cube_budget:
            raise LevelFormatError(
                f"initial cell count {len(cells)} does not match budget {self.cube_budget}"
            )
        self.initial_cells = cells

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "variant": self.variant,
            "cube_budget": self.cube_budget,
            "targets": [list(t.rows) for t in self.targets],
            "initial_cells": [list(c) for c in self.initial_cells],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Level":
        try:
            return cls(
                name=str(raw["name"]),
                variant=str(raw["variant"]),
                cube_budget=int(raw["cube_budget"]),
                targets=[ShadowMask.from_rows(rows) for rows in raw["targets"]],
                initial_cells=raw["initial_cells"],
            )
        except KeyError as missing:
            raise LevelFormatError(f"level file missing key {missing}") from None


def load_level(path) -> Level:
    return Level.from_dict(json.loads(Path(path).read_text()))


def shipped_levels_dir() -> Path:
    return Path(__file__).parent / "levels"


def shipped_levels() -> dict:
    levels = {}
    for path in sorted(shipped_levels_dir().glob("*.json")):
        level = load_level(path)
        levels[level.name] = level
    return levels


# --- the session ----------------------------------------------------------------

@dataclass
class MoveResult:
    ok: bool
    reason: Optional[str] = None   # occupied | out_of_bounds when rejected


@dataclass
class GameSession:
    level: Level
    seed: int
    mode: str = "encoder"
    objects: list = field(default_factory=list)
    matched: list = field(default_factory=list)
    emitted_shadows: list = field(default_factory=list)
    timer_cs: int = 0
    timer_running: bool = True
    log: list = field(default_factory=list)

    def __post_init__(self):
        if not self.objects:
            count = 3 if self.level.variant == "VAE" else 1
            self.objects = [VoxelObject(cells=frozenset(self.level.initial_cells))
                            for _ in range(count)]
        if not self.matched:
            self.matched = [False] * len(self.level.targets)
        self._rng = np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        return {
            "level": self.level.name,
            "variant": self.level.variant,
            "seed": self.seed,
            "mode": self.mode,
            "objects": [
                {"cells": sorted(o.cells), "orientation": [list(r) for r in o.orientation]}
                for o in self.objects
            ],
            "matched": list(self.matched),
            "emitted_shadows": [list(m.rows) for m in self.emitted_shadows],
            "targets": [list(t.rows) for t in self.level.targets],
            "timer_cs": self.timer_cs,
            "timer_running": self.timer_running,
        }

    def _object(self, idx: int) -> VoxelObject:
        if not (0 <= idx < len(self.objects)):
            raise GameActionError(f"object index {idx} out of range")
        return self.objects[idx]


def new_session(level: Level, seed: int) -> GameSession:
    return GameSession(level=level, seed=int(seed))


def move_cube(session: GameSession, object_idx: int, from_cell, to_cell) -> MoveResult:
    """Relocate one cube within its object; occupancy is per object."""
    if session.mode != "encoder":
        raise ModeError("cubes can only be moved in encoder mode")
    obj = session._object(object_idx)
    from_cell = tuple(int(v) for v in from_cell)
    to_cell = tuple(int(v) for v in to_cell)
    if from_cell not in obj.cells:
        raise NoCubeError(f"no cube at {from_cell}")
    result = None
    if max(abs(v) for v in to_cell) > BOUND:
        result = MoveResult(ok=False, reason="out_of_bounds")
    elif to_cell in obj.cells:
        result = MoveResult(ok=False, reason="occupied")
    else:
        session.objects[object_idx] = VoxelObject(
            cells=(obj.cells - {from_cell}) | {to_cell},
            orientation=obj.orientation,
        )
        result = MoveResult(ok=True)
    session.log.append({"type": "move", "object": object_idx,
                        "from": list(from_cell), "to": list(to_cell)})
    return result


def rotate(session: GameSession, object_idx: int, axis: str, quarter_turns: int) -> None:
    """Compose quarter turns about a world axis onto the object's orientation."""
    if axis not in AXIS_QUARTER:
        raise GameActionError(f"axis must be x, y or z, got {axis!r}")
    obj = session._object(object_idx)
    r = IDENTITY
    for _ in range(int(quarter_turns) % 4):
        r = matmul(AXIS_QUARTER[axis], r)
    session.objects[object_idx] = VoxelObject(
        cells=obj.cells, orientation=matmul(r, obj.orientation)
    )
    session.log.append({"type": "rotate", "object": object_idx, "axis": axis,
                        "turns": int(quarter_turns)})


def cast_shadow(session: GameSession) -> ShadowMask:
    """Project one object onto the wall; the VAE variant picks it at random."""
    if session.mode != "decoder":
        raise ModeError("shadows can only be cast in decoder mode")
    if session.level.variant == "VAE":
        idx = int(session._rng.integers(len(session.objects)))
    else:
        idx = 0
    mask = project(session.objects[idx])
    session.emitted_shadows.append(mask)
    if len(session.emitted_shadows) >= 3:
        session.timer_running = False
    session.log.append({"type": "cast"})
    return mask


def set_mode(session: GameSession, mode: str) -> None:
    if mode not in ("encoder", "decoder"):
        raise GameActionError(f"mode must be encoder or decoder, got {mode!r}")
    if mode == session.mode:
        session.log.append({"type": "set_mode", "mode": mode})
        return
    if mode == "encoder":
        # returning to the encoder erases the outputs and resumes the clock
        session.emitted_shadows.clear()
        session.timer_running = True
    session.mode = mode
    session.log.append({"type": "set_mode", "mode": mode})


def check_match(session: GameSession, target_idx: int) -> bool:
    if not (0 <= target_idx < len(session.level.targets)):
        raise GameActionError(f"target index {target_idx} out of range")
    target = session.level.targets[target_idx]
    if session.level.variant == "VAE":
        ok = all(project(o) == target for o in session.objects)
    else:
        ok = project(session.objects[0]) == target
    session.matched[target_idx] = ok
    session.log.append({"type": "check", "target": target_idx})
    return ok


def tick(session: GameSession, dcs: int) -> None:
    """Advance the clock; explicit so sessions stay replay-deterministic."""
    dcs = int(dcs)
    if dcs < 0:
        raise GameActionError("time only moves forward")
    if session.timer_running:
        session.timer_cs += dcs
    session.log.append({"type": "tick", "dcs": dcs})


def apply_action(session: GameSession, action: dict):
    """Dispatch one wire-format action; returns the op's own result."""
    kind = action.get("type")
    if kind == "move":
        return move_cube(session, int(action.get("object", 0)),
                         action["from"], action["to"])
    if kind == "rotate":
        return rotate(session, int(action.get("object", 0)),
                      action.get("axis", ""), int(action.get("turns", 1)))
    if kind == "set_mode":
        return set_mode(session, action.get("mode", ""))
    if kind == "cast":
        return cast_shadow(session)
    if kind == "check":
        return check_match(session, int(action.get("target", 0)))
    if kind == "tick":
        return tick(session, action.get("dcs", 0))
    raise GameActionError(f"unknown action type {kind!r}")


def replay(level: Level, seed: int, log: list) -> GameSession:
    """Rebuild a session by re-applying a recorded action log."""
    session = new_session(level, seed)
    for action in log:
        apply_action(session, action)
    return session


# --- the level-authoring oracle ---------------------------------------------------

def _target_placements(target: ShadowMask):
    """All translations of the target inside the solver window."""
    cells = target.cells()
    for ox in range(-SOLVE_BOUND, SOLVE_BOUND + 2 - target.width):
        for oy in range(-SOLVE_BOUND, SOLVE_BOUND + 2 - target.height):
            yield {(x + ox, y + oy) for x, y in cells}


def solve(level: Level) -> Optional[VoxelObject]:
    """Find cells (within [-2,2]^3) whose shadows can realize every target,
    each under some snapped orientation, or None if impossible.

    The first target's orientation is fixed to the identity: if any object
    solves the level, a pre-rotated copy of it solves it this way too.
    """
    budget = level.cube_budget
    all_cells = [
        (x, y, z)
        for x in range(-SOLVE_BOUND, SOLVE_BOUND + 1)
        for y in range(-SOLVE_BOUND, SOLVE_BOUND + 1)
        for z in range(-SOLVE_BOUND, SOLVE_BOUND + 1)
    ]
    cell_bit = {c: 1 << i for i, c in enumerate(all_cells)}

    # cell index -> projected (x, y) under each rotation
    proj = {
        rot: [apply_rotation(rot, c)[:2] for c in all_cells]
        for rot in ROTATIONS
    }

    def constraint(rot, placed_cells):
        """(allowed_mask, column_masks) for one oriented, placed target."""
        columns = {p: 0 for p in placed_cells}
        allowed = 0
        for i, c in enumerate(all_cells):
            p = proj[rot][i]
            if p in columns:
                bit = cell_bit[c]
                allowed |= bit
                columns[p] |= bit
        if any(v == 0 for v in columns.values()):
            return None
        return allowed, list(columns.values())

    def options_for(target, rotations):
        opts = []
        seen_projection_sets = set()
        for rot in rotations:
            for placed in _target_placements(target):
                got = constraint(rot, placed)
                if got is None:
                    continue
                key = (got[0], tuple(sorted(got[1])))
                if key in seen_projection_sets:
                    continue
                seen_projection_sets.add(key)
                opts.append(got)
        return opts

    per_target = [options_for(level.targets[0], [IDENTITY])]
    for target in level.targets[1:]:
        per_target.append(options_for(target, ROTATIONS))
    if any(not opts for opts in per_target):
        return None

    def cover(allowed, column_groups):
        """Pick <= budget cells from allowed hitting every column, pad to budget."""
        chosen_mask = 0
        count = 0

        def rec():
            nonlocal chosen_mask, count
            pending = [col for cols in column_groups for col in cols
                       if not (col & chosen_mask)]
            if not pending:
                return True
            # bound: one cell covers at most one column per target
            worst = max(
                sum(1 for col in cols if not (col & chosen_mask))
                for cols in column_groups
            )
            if count + worst > budget:
                return False
            col = min(pending, key=lambda c: bin(c & allowed & ~chosen_mask).count("1"))
            candidates = col & allowed & ~chosen_mask
            while candidates:
                bit = candidates & -candidates
                candidates ^= bit
                chosen_mask |= bit
                count += 1
                if rec():
                    return True
                chosen_mask ^= bit
                count -= 1
            return False

        if not rec():
            return None
        # pad with any other allowed cells; they stay inside every target's columns
        spare = allowed & ~chosen_mask
        while count < budget and spare:
            bit = spare & -spare
            spare ^= bit
            chosen_mask |= bit
            count += 1
        if count != budget:
            return None
        return chosen_mask

    def assign(k, allowed, groups):
        if bin(allowed).count("1") < budget:
            return None
        if k == len(per_target):
            return cover(allowed, groups)
        for opt_allowed, columns in per_target[k]:
            narrowed = allowed & opt_allowed
            if any((col & narrowed) == 0 for cols in groups for col in cols):
                continue
            if any((col & narrowed) == 0 for col in columns):
                continue
            got = assign(k + 1, narrowed,
                         groups + [[col & narrowed for col in columns]])
            if got is not None:
                return got
        return None

    mask = assign(0, (1 << len(all_cells)) - 1, [])
    if mask is None:
        return None
    cells = frozenset(c for c in all_cells if cell_bit[c] & mask)
    obj = VoxelObject(cells=cells)
    for target in level.targets:
        assert any(
            project(VoxelObject(cells=cells, orientation=rot)) == target
            for rot in ROTATIONS
        ), "solver produced an object that misses a target"
    return obj
