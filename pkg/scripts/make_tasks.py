"""Author the 15 bundled tasks and verify each against the engine.

Every task ships with a reference solution expressed as approximate poses.
The script resolves each pose against enumerate_actions, steps the episode,
and asserts success; it refuses to write task files that the engine cannot
solve. Run from the repository root:

    python3 scripts/make_tasks.py [--out src/blockforge/tasks]
"""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from blockforge.env import Assembly, Obstacle, Task, enumerate_actions, save_task, step
from blockforge.geometry import make_shape

SQ = make_shape("square", side=1.0)
TR = make_shape("trapezoid", bottom=1.25, top=0.75, height=1.0)
ZC = 0.4583333333333333  # trapezoid centroid height above its bottom face
PI = math.pi

# (task, [(shape, x, z, theta), ...]) reference solutions; poses approximate,
# matched against the enumeration lattice by nearest-pose search.
DESIGNS = []


def design(task, solution):
    DESIGNS.append((task, solution))


design(
    Task(id="task01", targets=((0.0, 0.5),), shapes=(SQ,)),
    [(SQ, 0.0, 0.5, 0.0)],
)
design(
    Task(id="task02", targets=((0.0, 1.5),), shapes=(SQ,)),
    [(SQ, 0.0, 0.5, 0.0), (SQ, 0.0, 1.5, 0.0)],
)
design(
    Task(id="task03", targets=((-1.5, 0.5), (1.5, 0.5)), shapes=(SQ,)),
    [(SQ, -1.5, 0.5, 0.0), (SQ, 1.5, 0.5, 0.0)],
)
design(
    Task(id="task04", targets=((0.55, 1.75),),
         obstacles=(Obstacle(0.0, 0.3, 0.25),), shapes=(SQ,)),
    [(SQ, 1.0, 0.5, 0.0), (SQ, 0.75, 1.5, 0.0)],
)
design(
    Task(id="task05", targets=((-2.0, 1.5), (2.0, 0.5)), shapes=(SQ,)),
    [(SQ, -2.0, 0.5, 0.0), (SQ, -2.0, 1.5, 0.0), (SQ, 2.0, 0.5, 0.0)],
)
design(
    Task(id="task06", targets=((0.7, 3.3),),
         obstacles=(Obstacle(1.0, 0.85, 0.75),), shapes=(SQ,)),
    [(SQ, -0.5, 0.5, 0.0), (SQ, -0.5, 1.5, 0.0), (SQ, -1.0, 2.5, 0.0),
     (SQ, 0.0, 2.5, 0.0), (SQ, 0.5, 3.5, 0.0)],
)
design(
    Task(id="task07", targets=((-0.25, 5.5),), shapes=(SQ,)),
    [(SQ, -0.25, 0.5 + k, 0.0) for k in range(6)],
)
design(
    Task(id="task08", targets=((-1.0, 0.3), (1.0, 0.3), (0.0, 0.5)), shapes=(TR,)),
    [(TR, -1.0, ZC, 0.0), (TR, 1.0, ZC, 0.0), (TR, 0.0, 1.0 - ZC, PI)],
)
design(
    Task(id="task09", targets=((-1.0, 0.3), (1.0, 0.3), (0.0, 1.5)), shapes=(SQ, TR)),
    [(TR, -1.0, ZC, 0.0), (TR, 1.0, ZC, 0.0), (TR, 0.0, 1.0 - ZC, PI),
     (SQ, 0.0, 1.5, 0.0)],
)
design(
    Task(id="task10", targets=((-1.7, 1.5),),
         obstacles=(Obstacle(-0.5, 0.75, 0.5),), shapes=(SQ,)),
    [(SQ, -1.75, 0.5, 0.0), (SQ, -1.75, 1.5, 0.0)],
)
design(
    Task(id="task11", targets=((-0.6, 2.5), (0.6, 2.5)),
         obstacles=(Obstacle(0.0, 1.0, 0.2),), shapes=(SQ,)),
    [(SQ, -0.75, 0.5, 0.0), (SQ, 0.75, 0.5, 0.0),
     (SQ, -0.75, 1.5, 0.0), (SQ, 0.75, 1.5, 0.0),
     (SQ, -0.5, 2.5, 0.0), (SQ, 0.5, 2.5, 0.0)],
)
design(
    Task(id="task12", targets=((0.0, 0.5), (-2.5, 0.5), (2.5, 0.5)), shapes=(SQ, TR)),
    [(TR, -1.0, ZC, 0.0), (TR, 1.0, ZC, 0.0), (TR, 0.0, 1.0 - ZC, PI),
     (SQ, -2.5, 0.5, 0.0), (SQ, 2.5, 0.5, 0.0)],
)
design(
    Task(id="task13", targets=((-1.0, 1.2), (1.0, 1.2), (0.0, 1.6)), shapes=(SQ, TR)),
    [(SQ, -1.0, 0.5, 0.0), (SQ, 1.0, 0.5, 0.0),
     (TR, -1.0, 1.0 + ZC, 0.0), (TR, 1.0, 1.0 + ZC, 0.0),
     (TR, 0.0, 2.0 - ZC, PI)],
)
design(
    Task(id="task14", targets=((-0.6, 3.5), (0.6, 3.5)),
         obstacles=(Obstacle(0.0, 1.25, 0.3),), shapes=(SQ,)),
    [(SQ, -0.75, 0.5, 0.0), (SQ, 0.75, 0.5, 0.0),
     (SQ, -0.75, 1.5, 0.0), (SQ, 0.75, 1.5, 0.0),
     (SQ, -0.75, 2.5, 0.0), (SQ, 0.75, 2.5, 0.0),
     (SQ, -0.5, 3.5, 0.0), (SQ, 0.5, 3.5, 0.0)],
)
design(
    Task(id="task15", targets=((0.0, 0.5), (0.0, 1.5), (-2.0, 0.5), (2.0, 0.5)),
         shapes=(SQ, TR)),
    [(TR, -1.0, ZC, 0.0), (TR, 1.0, ZC, 0.0), (TR, 0.0, 1.0 - ZC, PI),
     (SQ, 0.0, 1.5, 0.0), (SQ, -2.0, 0.5, 0.0), (SQ, 2.0, 0.5, 0.0)],
)


def resolve(actions, shape, x, z, theta, tol=1e-3):
    """Nearest enumerated action to the requested pose, or None."""
    best, best_d = None, tol
    for a in actions:
        if a.shape is not shape and a.shape != shape:
            continue
        d = math.hypot(a.pose.x - x, a.pose.z - z)
        d += abs(math.remainder(a.pose.theta - theta, 2 * math.pi))
        if d < best_d:
            best, best_d = a, d
    return best


def verify(task, solution):
    state = Assembly()
    outcome = None
    for (shape, x, z, theta) in solution:
        actions = enumerate_actions(state, task)
        if not actions:
            return False, f"no feasible actions at step {len(state)}"
        a = resolve(actions, shape, x, z, theta)
        if a is None:
            near = sorted(actions, key=lambda c: math.hypot(c.pose.x - x, c.pose.z - z))[:3]
            hints = [(c.shape.kind, round(c.pose.x, 4), round(c.pose.z, 4),
                      round(c.pose.theta, 4)) for c in near]
            return False, (f"pose ({shape.kind}, {x}, {z}, {theta:.3f}) not in lattice "
                           f"at step {len(state)}; nearest: {hints}")
        outcome = step(state, task, a)
        state = outcome.next_state
    if outcome.terminal != "success":
        return False, (f"episode ended with terminal={outcome.terminal}, "
                       f"reached={sorted(outcome.reached)} of {len(task.targets)}")
    return True, f"{len(solution)} blocks"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="src/blockforge/tasks")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    failures = 0
    for task, solution in DESIGNS:
        ok, info = verify(task, solution)
        status = "ok " if ok else "FAIL"
        print(f"[{status}] {task.id}: {info}")
        if ok:
            save_task(task, out / f"{task.id}.json")
        else:
            failures += 1
    if failures:
        print(f"{failures} task(s) failed verification; files for them were not written")
        return 1
    print(f"wrote {len(DESIGNS)} tasks to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
