#!/usr/bin/env python3
"""Smoke test for the cubelab_py extension module.

Builds nothing itself: expects `cargo build -p cubelab-py` (or --release) to
have produced libcubelab_py.so, which is staged under a temp directory with
the importable name.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        ROOT / "target" / profile / f"libcubelab_py{ext}"
        for profile in ("release", "debug")
        for ext in (".so", ".dylib")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("build the module first: cargo build -p cubelab-py")
    stage = Path(tempfile.mkdtemp(prefix="cubelab_py_"))
    shutil.copy2(built, stage / "cubelab_py.so")
    sys.path.insert(0, str(stage))


stage_module()
import cubelab_py as cl  # noqa: E402

checks = 0


def check(label: str, cond: bool) -> None:
    global checks
    if not cond:
        sys.exit(f"FAIL: {label}")
    checks += 1
    print(f"ok: {label}")


# --- congruence lattices on groups ---------------------------------------
v4 = cl.Group.product(cl.Group.cyclic(2), cl.Group.cyclic(2))
check("V4 has order 4", v4.order == 4)
subs = v4.normal_subgroups()
check("V4 has 5 normal subgroups", len(subs) == 5)
two_el = [s for s in subs if len(s) == 2]
rels = [v4.congruence(s) for s in two_el]
check("three 2-element subgroups", len(rels) == 3)

rep = cl.check_distributive_eqrels(rels)
check("V4 triple is not distributive", rep["verdict"] is False and "witness" in rep)
check("V4 triple is a 3-fold regular epi", cl.is_regular_epi(rels)["verdict"] is True)
ext = cl.is_cubic_extension(rels)
check("V4 triple is not a 3-cubic extension", ext["verdict"] is False)
check("brute oracle agrees", cl.brute_extension_oracle(rels) is False)

z12 = cl.Group.cyclic(12)
ideals = [z12.congruence(list(range(0, 12, d))) for d in (2, 3, 4)]
check("Z/12 ideals are distributive", cl.check_distributive_eqrels(ideals)["verdict"] is True)
check("Z/12 ideal cube is an extension", cl.is_cubic_extension(ideals)["verdict"] is True)
clauses = cl.equivalence_clauses(ideals)
check("all clauses unanimous", clauses["verdict"] is True and len(clauses["trace"]) >= 11)

# --- eqrel lattice ---------------------------------------------------------
r = cl.EqRel(4, [[0, 1], [2, 3]])
s = cl.EqRel(4, [[0, 2], [1, 3]])
check("meet of complementary congruences is discrete", r.meet(s) == cl.EqRel.discrete(4))
check("join of complementary congruences is full", r.join(s) == cl.EqRel.full(4))

# --- integer lattices ------------------------------------------------------
one = cl.IntLattice.symbolic(["1"])
two_a = cl.IntLattice.symbolic(["2a"])
three_a = cl.IntLattice.symbolic(["3a"])
a_sq = cl.IntLattice.symbolic(["a^2"])
lhs = two_a.meet(three_a).join(one).meet(a_sq)
check("((2a ∧ 3a) ∨ 1) ∧ a² = ⟨6a²⟩", lhs == cl.IntLattice.symbolic(["6a^2"]))
check("⟨6a²⟩ contains (−6, −6)", lhs.contains([-6, -6]))
quad = [one, two_a, three_a, a_sq]
check(
    "the rank-2 quadruple is not distributive",
    cl.check_distributive_lattices(quad)["verdict"] is False,
)

# --- 3^n diagrams ----------------------------------------------------------
z6 = cl.Group.cyclic(6)
good = cl.pointed_grid(z6, [[0, 2, 4], [0, 3]])
check("Z/6 pointed grid is exact", good["report"]["verdict"] is True)
check("grid carries 9 objects", len(good["diagram"]["grid"]) == 9)

bad = cl.pointed_grid(v4, two_el)
check("V4 pointed grid fails", bad["report"]["verdict"] is False)
lines = bad["report"]["witness"]["failing_lines"]
check("failing lines are named", len(lines) > 0 and "*" in lines[0]["line"])

k2 = cl.IntLattice(3, [[1, 0, 0], [0, 1, -1]])
k3 = cl.IntLattice(3, [[1, 0, 0], [0, 1, 0]])
ab = cl.pointed_grid_ab(3, [k2.meet(k3), k2, k3])
check("Z^3 sublattice grid is exact", ab["report"]["verdict"] is True)

fork = cl.fork_grid([r, s])
check("fork grid of the 4-element square is exact", fork["report"]["verdict"] is True)

# --- counterexample search -------------------------------------------------
spec = json.dumps(
    {
        "context": "group",
        "n": 3,
        "predicate": "non-distributive",
        "order_bound": 4,
        "max_instances": 200,
        "seed": 5,
    }
)
hits = cl.search(spec)
check("search finds non-distributive triples below order 4", len(hits) > 0)
check("witness reports carry a failing family", hits[0]["report"]["verdict"] is False)
check("search is deterministic", cl.search(spec, seed=9) == cl.search(spec, seed=9))

print(f"\nsmoke test passed: {checks} checks")
