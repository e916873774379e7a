"""Scripted walkthrough of a shadow matching session, printed as ASCII.

    python scripts/shadow_game_demo.py [--level easy1] [--seed 7]
"""

import argparse

from latentcave.shadow import (
    cast_shadow,
    check_match,
    new_session,
    project,
    replay,
    rotate,
    set_mode,
    shipped_levels,
    tick,
)


def show(mask, indent="  "):
    for row in mask.rows:
        print(indent + row.replace("0", ".").replace("1", "#"))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--level", default="easy1")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    level = shipped_levels()[args.level]
    session = new_session(level, seed=args.seed)
    print(f"level {level.name} ({level.variant}, {level.cube_budget} cubes), "
          f"{len(level.targets)} targets:")
    for i, target in enumerate(level.targets):
        print(f" target {i}:")
        show(target)

    print("\nencoder mode: current object shadow")
    show(project(session.objects[0]))
    print(f" match target 0? {check_match(session, 0)}")

    tick(session, 250)
    set_mode(session, "decoder")
    print("\ndecoder mode: rotating and casting three shadows")
    for axis in ("x", "y", "z"):
        rotate(session, 0, axis, 1)
        show(cast_shadow(session))
        print()
    print(f"timer stopped: {not session.timer_running} at {session.timer_cs} cs")

    twin = replay(level, args.seed, session.log)
    print(f"replayed {len(session.log)} actions; states identical: "
          f"{twin.to_dict() == session.to_dict()}")


if __name__ == "__main__":
    main()
