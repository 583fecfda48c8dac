"""Sketch validity rules: closure, orientation, self-intersection, containment.

Produces the program-level verdict behind the program-success metric.
Orientation violations are warning-class and auto-repaired by reversing the
loop; everything else is error-class.  All findings land in the report; this
module never raises on bad programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import GeometryError
from .ir import (
    Arc,
    Block,
    CadProgram,
    Circle,
    Line,
    Part,
    Profile,
)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    part_index: int
    block_index: int
    rule: str
    severity: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...]
    repaired: CadProgram | None = field(default=None, compare=False)

    def first_error(self) -> Violation:
        for v in self.violations:
            if v.severity == ERROR:
                return v
        raise LookupError("report has no error-class violations")

    @property
    def repair_count(self) -> int:
        return sum(1 for v in self.violations if v.severity == WARNING)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [
                {
                    "part": v.part_index,
                    "block": v.block_index,
                    "rule": v.rule,
                    "severity": v.severity,
                    "message": v.message,
                }
                for v in self.violations
            ],
            "repaired": self.repaired is not None,
        }


def signed_area(loop) -> float:
    """Shoelace area of a closed polyline; positive iff counter-clockwise."""
    pts = np.asarray(loop, dtype=float)
    if len(np.unique(pts, axis=0)) < 3:
        raise GeometryError("degenerate loop: fewer than 3 distinct vertices")
    return geom.polygon_signed_area(pts)


def _segments(pts: np.ndarray):
    return pts, np.roll(pts, -1, axis=0)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def has_self_intersection(pts: np.ndarray) -> bool:
    """Brute-force proper-crossing test over all non-adjacent segment pairs."""
    n = len(pts)
    if n < 4:
        return False
    a, b = _segments(pts)
    dx, dy = (b - a)[:, 0], (b - a)[:, 1]
    # c1[i, j]: which side of segment i does point a[j] fall on
    c1 = _cross(dx[:, None], dy[:, None], a[None, :, 0] - a[:, 0, None], a[None, :, 1] - a[:, 1, None])
    c2 = _cross(dx[:, None], dy[:, None], b[None, :, 0] - a[:, 0, None], b[None, :, 1] - a[:, 1, None])
    straddles = (c1 * c2 < 0) & (c1.T * c2.T < 0)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    gap = (j - i) % n
    non_adjacent = (gap > 1) & (gap < n - 1)
    return bool((straddles & non_adjacent).any())


def polylines_cross(pts_a: np.ndarray, pts_b: np.ndarray) -> bool:
    """Proper crossing between any segment of loop a and any of loop b."""
    a0, a1 = _segments(pts_a)
    b0, b1 = _segments(pts_b)
    da = a1 - a0
    db = b1 - b0
    c1 = _cross(da[:, None, 0], da[:, None, 1], b0[None, :, 0] - a0[:, 0, None], b0[None, :, 1] - a0[:, 1, None])
    c2 = _cross(da[:, None, 0], da[:, None, 1], b1[None, :, 0] - a0[:, 0, None], b1[None, :, 1] - a0[:, 1, None])
    c3 = _cross(db[None, :, 0], db[None, :, 1], a0[:, 0, None] - b0[None, :, 0], a0[:, 1, None] - b0[None, :, 1])
    c4 = _cross(db[None, :, 0], db[None, :, 1], a1[:, 0, None] - b0[None, :, 0], a1[:, 1, None] - b0[None, :, 1])
    return bool(((c1 * c2 < 0) & (c3 * c4 < 0)).any())


def points_inside(pts: np.ndarray, ring: np.ndarray) -> np.ndarray:
    return geom._points_in_polygon(np.asarray(pts, dtype=float), ring)


def _drop_zero_length(commands):
    """Remove lines that do not move the chain point; report how many."""
    kept = []
    cursor = np.zeros(2)
    dropped = 0
    for cmd in commands:
        if isinstance(cmd, Line) and tuple(cmd.end) == tuple(cursor):
            dropped += 1
            continue
        kept.append(cmd)
        if isinstance(cmd, (Line, Arc)):
            cursor = np.asarray(cmd.end, dtype=float)
    return tuple(kept), dropped


def reverse_loop(commands):
    """Reverse a chained loop's traversal direction.

    Endpoints shift one command back and arcs flip their ccw flag; sweep
    angles are unchanged.
    """
    points = [(0.0, 0.0)]
    for cmd in commands:
        points.append(tuple(cmd.end))
    reversed_cmds = []
    for k, cmd in enumerate(reversed(commands)):
        new_end = points[len(commands) - 1 - k]
        if isinstance(cmd, Line):
            reversed_cmds.append(Line(end=new_end))
        else:
            reversed_cmds.append(
                Arc(end=new_end, sweep_deg=cmd.sweep_deg, ccw_flag=1 - cmd.ccw_flag)
            )
    return tuple(reversed_cmds)


def _is_chain(commands) -> bool:
    return not (len(commands) == 1 and isinstance(commands[0], Circle))


def _chain_end(commands) -> np.ndarray:
    end = np.zeros(2)
    for cmd in commands:
        end = np.asarray(cmd.end, dtype=float)
    return end


def validate(
    program: CadProgram,
    closure_tol: float | None = None,
    tess_tol: float | None = None,
) -> ValidationReport:
    """Check every block against the sketch validity rules.

    Tolerances default to 1e-4 (closure) and 1e-3 (tessellation) of each
    profile's bounding-box diagonal, which tracks the wide coordinate ranges
    seen in generated programs.
    """
    for name, tol in (("closure_tol", closure_tol), ("tess_tol", tess_tol)):
        if tol is not None and tol <= 0:
            raise GeometryError(f"{name} must be positive, got {tol}")

    violations: list[Violation] = []
    repaired_parts: list[Part] = []
    any_repair = False

    for p_idx, part in enumerate(program.parts):
        repaired_blocks: list[Block] = []
        for b_idx, block in enumerate(part.blocks):
            profile = block.profile
            diag = geom.profile_diagonal(profile)
            c_tol = closure_tol if closure_tol is not None else 1e-4 * diag
            t_tol = tess_tol if tess_tol is not None else 1e-3 * diag

            def flag(rule, severity, message):
                violations.append(Violation(p_idx, b_idx, rule, severity, message))

            outer = profile.outer
            cuts = list(profile.cuts)
            block_repaired = False

            if _is_chain(outer):
                outer, dropped = _drop_zero_length(outer)
                if dropped:
                    flag("zero_length_segment", WARNING, f"dropped {dropped} zero-length line(s)")
                    block_repaired = True
                if not outer:
                    flag("degenerate_loop", ERROR, "outer loop empty after cleanup")
                    repaired_blocks.append(block)
                    continue
                end = _chain_end(outer)
                if float(np.linalg.norm(end)) > c_tol:
                    flag(
                        "closure",
                        ERROR,
                        f"outer loop ends at ({end[0]:g}, {end[1]:g}), not the origin",
                    )

            new_cuts = []
            for k, cut in enumerate(cuts):
                if _is_chain(cut):
                    cut, dropped = _drop_zero_length(cut)
                    if dropped:
                        flag("zero_length_segment", WARNING, f"cut {k}: dropped {dropped} zero-length line(s)")
                        block_repaired = True
                    if not cut:
                        flag("degenerate_loop", ERROR, f"cut {k} empty after cleanup")
                        continue
                    end = _chain_end(cut)
                    if float(np.linalg.norm(end)) > c_tol:
                        flag("closure", ERROR, f"cut {k} does not close onto its start")
                new_cuts.append(cut)
            cuts = new_cuts

            try:
                outer_pts = geom.loop_polyline(outer, t_tol)
                cut_pts = [geom.loop_polyline(c, t_tol) for c in cuts]
            except GeometryError as exc:
                flag("arc_geometry", ERROR, str(exc))
                repaired_blocks.append(block)
                continue

            if has_self_intersection(outer_pts):
                flag("self_intersection", ERROR, "outer loop crosses itself")
                repaired_blocks.append(block)
                continue

            try:
                area = signed_area(outer_pts)
            except GeometryError as exc:
                flag("degenerate_loop", ERROR, str(exc))
                repaired_blocks.append(block)
                continue

            if area < 0:
                flag("orientation", WARNING, "outer loop is clockwise; reversed")
                outer = reverse_loop(outer)
                outer_pts = geom.loop_polyline(outer, t_tol)
                block_repaired = True
            elif area == 0:
                flag("degenerate_loop", ERROR, "outer loop has zero area")
                repaired_blocks.append(block)
                continue

            for k, pts in enumerate(cut_pts):
                if has_self_intersection(pts):
                    flag("self_intersection", ERROR, f"cut {k} crosses itself")
                if not points_inside(pts, outer_pts).all() or polylines_cross(
                    pts, outer_pts
                ):
                    flag("cut_containment", ERROR, f"cut {k} is not strictly inside the outer loop")
            for k in range(len(cut_pts)):
                for m in range(k + 1, len(cut_pts)):
                    if (
                        polylines_cross(cut_pts[k], cut_pts[m])
                        or points_inside(cut_pts[k], cut_pts[m]).any()
                        or points_inside(cut_pts[m], cut_pts[k]).any()
                    ):
                        flag("cut_overlap", ERROR, f"cuts {k} and {m} are not disjoint")

            if block_repaired:
                any_repair = True
                repaired_blocks.append(
                    Block(profile=Profile(outer=outer, cuts=tuple(cuts)), extrude=block.extrude)
                )
            else:
                repaired_blocks.append(block)
        repaired_parts.append(Part(label=part.label, blocks=tuple(repaired_blocks)))

    valid = not any(v.severity == ERROR for v in violations)
    repaired = None
    if valid and any_repair:
        repaired = CadProgram(parts=tuple(repaired_parts), provenance=program.provenance)
    return ValidationReport(valid=valid, violations=tuple(violations), repaired=repaired)
