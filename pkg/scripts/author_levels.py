"""Regenerate the shipped game levels.

Each level's targets are authored by projecting a hand-designed object under
a few chosen orientations, then the solver is run as the shipping gate: a
level only lands on disk if `solve` proves every target reachable within
budget. Run from the repository root:

    python scripts/author_levels.py
"""

import json
from pathlib import Path

from latentcave.shadow import (
    AXIS_QUARTER,
    IDENTITY,
    Level,
    VoxelObject,
    matmul,
    project,
    solve,
)

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "latentcave" / "levels"

RX = AXIS_QUARTER["x"]
RY = AXIS_QUARTER["y"]

EASY_SHAPE = [
    (0, 0, 0), (1, 0, 0), (2, 0, 0),
    (0, 1, 0), (0, 2, 0),
    (0, 0, 1), (1, 0, 1),
]
EASY_START = [(x, 0, 0) for x in range(-2, 3)] + [(-2, 1, 0), (2, 1, 0)]

# a 3x3x3 block with two corners carved out and two studs added
HARD_SHAPE = [
    (x, y, z)
    for x in range(-1, 2) for y in range(-1, 2) for z in range(-1, 2)
    if (x, y, z) not in [(1, 1, 1), (-1, -1, 1)]
] + [(2, 0, 0), (0, 2, 0)]
HARD_START = [(x, y, 0) for x in range(-2, 3) for y in range(-2, 3)] + \
    [(0, 0, 1), (0, 0, -1)]


def targets_for(cells, orientations):
    masks = []
    for rot in orientations:
        mask = project(VoxelObject(cells=frozenset(cells), orientation=rot))
        if mask not in masks:
            masks.append(mask)
    return masks


def build(name, variant, shape, start, orientations):
    level = Level(
        name=name,
        variant=variant,
        cube_budget=len(shape),
        targets=targets_for(shape, orientations),
        initial_cells=start,
    )
    solution = solve(level)
    assert solution is not None, f"{name}: authored targets are not solvable"
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    path = OUT_DIR / f"{name}.json"
    path.write_text(json.dumps(level.to_dict(), indent=2) + "\n")
    print(f"wrote {path} ({len(level.targets)} targets, budget {level.cube_budget})")


def main():
    build("easy1", "AE", EASY_SHAPE, EASY_START,
          [IDENTITY, RX, matmul(RY, RX)])
    build("easy2-vae", "VAE", EASY_SHAPE, EASY_START,
          [RY, matmul(RX, RX)])
    build("hard1", "AE", HARD_SHAPE, HARD_START,
          [IDENTITY, RY])
    build("hard2-vae", "VAE", HARD_SHAPE, HARD_START,
          [RX, matmul(RY, RY)])


if __name__ == "__main__":
    main()
