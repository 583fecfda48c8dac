"""Shared fixtures: canonical program texts, a random-program generator, and
brute-force oracles the fast paths are checked against."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from skexcad import dsl, ir, validation

THREE_CUBES = """<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,0,0,0,2,NewBody,OneSided)
<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,3,0,0,2,NewBody,OneSided)
<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,6,0,0,2,NewBody,OneSided)
"""

THREE_CUBES_LABELED = """# cube 1
<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,0,0,0,2,NewBody,OneSided)
# cube 2
<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,3,0,0,2,NewBody,OneSided)
# cube 3
<SOL>
L: (2,0)
L: (2,2)
L: (0,2)
L: (0,0)
E: (0,0,1,6,0,0,2,NewBody,OneSided)
"""

BACKREST = """# backrest
<SOL>
L: (3,0)
L: (3,5)
A: (0,5,120,1)
L: (0,0)
<CUT>
R: (1.5,2,1)
E: (-1,0,0,0,0,0,-0.5,NewBody,OneSided)
"""

UNIT_CUBE = """# cube
<SOL>
L: (1,0)
L: (1,1)
L: (0,1)
L: (0,0)
E: (0,0,1,0,0,0,1,NewBody,OneSided)
"""

FIGURE_EIGHT = """# bowtie
<SOL>
L: (1,1)
L: (1,0)
L: (0,1)
L: (0,0)
E: (0,0,1,0,0,0,1,NewBody,OneSided)
"""

EXTRUDE_ONLY = "E: (0,0,1,0,0,0,2,NewBody,OneSided)\n"


def parse_program(text: str) -> ir.CadProgram:
    result = dsl.parse(text)
    assert result.program is not None, result.diagnostics
    return result.program


@pytest.fixture
def three_cubes():
    return parse_program(THREE_CUBES)


@pytest.fixture
def three_cubes_labeled():
    return parse_program(THREE_CUBES_LABELED)


@pytest.fixture
def backrest():
    return parse_program(BACKREST)


@pytest.fixture
def unit_cube():
    return parse_program(UNIT_CUBE)


# --- random valid programs -----------------------------------------------------

_LABEL_POOL = (
    "leg", "seat", "backrest", "armrest", "shelf", "stretcher", "tabletop", "drawer",
)


def _star_polygon(rng: np.random.Generator):
    k = int(rng.integers(4, 9))
    angles = np.sort(rng.uniform(0, 2 * math.pi, size=k))
    if np.min(np.diff(angles, append=angles[0] + 2 * math.pi)) < 0.15:
        return None
    radii = rng.uniform(0.6, 2.2, size=k)
    pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return np.round(pts - pts[0], 4)  # chain starts at the origin


def _random_part(rng: np.random.Generator, label: str, use_arcs: bool, use_cuts: bool):
    pts = _star_polygon(rng)
    if pts is None:
        return None
    outer = []
    for i in range(1, len(pts)):
        if use_arcs and rng.random() < 0.25:
            outer.append(ir.Arc(end=tuple(pts[i]), sweep_deg=float(rng.uniform(15, 75)), ccw_flag=1))
        else:
            outer.append(ir.Line(end=tuple(pts[i])))
    outer.append(ir.Line(end=(0.0, 0.0)))

    cuts = ()
    if use_cuts and rng.random() < 0.4:
        centroid = pts.mean(axis=0)
        reach = float(np.min(np.linalg.norm(pts - centroid, axis=1)))
        if reach > 0.3:
            cuts = ((ir.Circle(center=tuple(np.round(centroid, 4)), radius=round(0.25 * reach, 4)),),)

    normal = rng.normal(size=3)
    extent = float(np.round(rng.uniform(0.3, 2.0) * rng.choice([-1.0, 1.0]), 4))
    extrude = ir.ExtrudeCommand(
        frame=ir.NormalFrame(*np.round(normal / np.linalg.norm(normal), 4)),
        origin=tuple(np.round(rng.uniform(-3, 3, size=3), 4)),
        extent=extent,
    )
    return ir.Part(
        label=label,
        blocks=(ir.Block(profile=ir.Profile(outer=tuple(outer), cuts=cuts), extrude=extrude),),
    )


def random_valid_program(seed: int, use_arcs=True, use_cuts=True) -> ir.CadProgram:
    """Rejection-sample a program that passes validation with no repairs."""
    rng = np.random.default_rng(seed)
    for _ in range(200):
        n_parts = int(rng.integers(1, 4))
        labels = [
            f"{rng.choice(_LABEL_POOL)} {i + 1}" for i in range(n_parts)
        ]
        parts = []
        for label in labels:
            part = _random_part(rng, label, use_arcs, use_cuts)
            if part is None:
                break
            parts.append(part)
        if len(parts) != n_parts:
            continue
        try:
            program = ir.CadProgram(parts=tuple(parts))
        except Exception:
            continue
        report = validation.validate(program)
        if report.valid and report.repaired is None:
            return program
    raise RuntimeError(f"could not generate a valid program for seed {seed}")


# --- brute-force oracles --------------------------------------------------------

def chamfer_bruteforce(a: np.ndarray, b: np.ndarray) -> float:
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def nearest_bruteforce(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    d = ((query[:, None, :] - reference[None, :, :]) ** 2).sum(axis=2)
    return d.argmin(axis=1)


def assignment_bruteforce(cost: np.ndarray) -> float:
    cost = np.asarray(cost, dtype=float)
    transposed = cost.shape[0] > cost.shape[1]
    if transposed:
        cost = cost.T
    p, g = cost.shape
    best = math.inf
    rows = np.arange(p)
    for perm in itertools.permutations(range(g), p):
        best = min(best, float(cost[rows, list(perm)].sum()))
    return best


def segments_intersect_oracle(p1, q1, p2, q2) -> bool:
    """Proper crossing via parametric solve, independent of the production test."""
    p1, q1, p2, q2 = (np.asarray(v, dtype=float) for v in (p1, q1, p2, q2))
    d1 = q1 - p1
    d2 = q2 - p2
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if denom == 0:
        return False
    delta = p2 - p1
    t = (delta[0] * d2[1] - delta[1] * d2[0]) / denom
    s = (delta[0] * d1[1] - delta[1] * d1[0]) / denom
    return 0 < t < 1 and 0 < s < 1


def polyline_self_intersects_oracle(pts: np.ndarray) -> bool:
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            gap = (j - i) % n
            if gap <= 1 or gap >= n - 1:
                continue
            if segments_intersect_oracle(
                pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]
            ):
                return True
    return False
