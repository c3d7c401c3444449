"""Canonical oracle fixture matrix.

A fixed 2-D battery covering every set variant (plus 1-D enlargement
cases and a polyhedral intersection), with expected values produced by
the grid oracle.  The battery regenerates deterministically from the
declared seed, so the checked-in fixtures file is reproducible byte for
byte via the ``oracle-fixtures`` CLI subcommand.
"""

from __future__ import annotations

import numpy as np

from .io import set_from_dict
from .oracles import GridSpec, fixture_record, grid_project, parse_fixture_line
from .problem import Problem
from .sets import project_enlarged

FIXTURE_SEED = 20240917
_GRID_2D = {"lower": [-2.0, -2.0], "upper": [2.0, 2.0], "resolution": [81, 81]}
_GRID_1D = {"lower": [-4.0], "upper": [4.0], "resolution": [161]}

_VARIANTS = [
    ("halfspace", {"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0}),
    ("hyperplane", {"type": "hyperplane", "normal": [0.0, 1.0], "offset": 0.5}),
    ("box", {"type": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]}),
    ("ball", {"type": "ball", "center": [0.0, 0.0], "radius": 1.0}),
    ("affine", {"type": "affine", "basis": [[1.0, 0.0]], "anchor": [0.0, 0.5]}),
    ("subspace", {"type": "subspace", "basis": [[1.0, 1.0]]}),
]


def _grid(spec: dict) -> GridSpec:
    return GridSpec(lower=np.array(spec["lower"]), upper=np.array(spec["upper"]),
                    resolution=tuple(spec["resolution"]))


def _grid_project_enlarged(set_, x, eps, grid: GridSpec) -> np.ndarray:
    pts = grid.points()
    tol = 1e-9 * (1.0 + np.max(np.linalg.norm(pts, axis=1)))
    feas = set_.distance(pts) <= eps + tol
    cand = pts[feas]
    d = np.linalg.norm(cand - np.asarray(x, float), axis=1)
    return cand[int(np.argmin(d))].copy()


def fixture_cases() -> list[dict]:
    """The full case list, query points drawn from the declared seed."""
    rng = np.random.default_rng(FIXTURE_SEED)
    cases = []
    for name, sd in _VARIANTS:
        for j in range(4):
            x = np.round(rng.uniform(-1.8, 1.8, size=2), 6)
            cases.append({
                "id": f"{name}-{j:02d}",
                "kind": "project",
                "set": sd,
                "x": x.tolist(),
                "grid": _GRID_2D,
            })

    quadrant = [
        {"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0},
        {"type": "halfspace", "normal": [0.0, 1.0], "offset": 0.0},
    ]
    for j, x in enumerate([[1.0, 2.0], [-1.0, 2.0], [1.5, -0.5], [0.25, 0.75]]):
        cases.append({
            "id": f"intersection-{j:02d}",
            "kind": "project_intersection",
            "sets": quadrant,
            "x": x,
            "grid": _GRID_2D,
        })

    line = {"type": "halfspace", "normal": [1.0], "offset": 0.0}
    for j, (x, eps) in enumerate([([3.0], 1.0), ([2.5], 0.5), ([0.5], 1.0)]):
        cases.append({
            "id": f"enlarged-{j:02d}",
            "kind": "project_enlarged",
            "set": line,
            "x": x,
            "eps": eps,
            "grid": _GRID_1D,
        })
    ball = {"type": "ball", "center": [0.0, 0.0], "radius": 1.0}
    cases.append({
        "id": "enlarged-ball",
        "kind": "project_enlarged",
        "set": ball,
        "x": [1.9, 0.0],
        "eps": 0.5,
        "grid": _GRID_2D,
    })
    return cases


def _oracle_output(case: dict) -> np.ndarray:
    grid = _grid(case["grid"])
    if case["kind"] == "project":
        return grid_project(set_from_dict(case["set"]), np.array(case["x"]), grid)
    if case["kind"] == "project_intersection":
        prob = Problem(sets=tuple(set_from_dict(d) for d in case["sets"]))
        return grid_project(prob, np.array(case["x"]), grid)
    return _grid_project_enlarged(set_from_dict(case["set"]), np.array(case["x"]),
                                  case["eps"], _grid(case["grid"]))


def generate_fixture_lines() -> list[str]:
    lines = []
    for case in fixture_cases():
        case_id = case.pop("id")
        out = _oracle_output(case)
        tol = _grid(case["grid"]).cell_diagonal
        lines.append(fixture_record(case_id, case, out.tolist(), tol))
    return lines


def write_fixtures(path) -> int:
    lines = generate_fixture_lines()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(lines)


def load_fixtures(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [parse_fixture_line(line) for line in fh if line.strip()]


def analytic_result(case: dict) -> np.ndarray:
    """The closed-form counterpart the oracle output must agree with."""
    from .intersection import project_intersection

    x = np.array(case["x"], float)
    if case["kind"] == "project":
        return set_from_dict(case["set"]).project(x)
    if case["kind"] == "project_intersection":
        prob = Problem(sets=tuple(set_from_dict(d) for d in case["sets"]))
        return project_intersection(prob, x)
    return project_enlarged(set_from_dict(case["set"]), x, case["eps"])
