"""Minimal solid kernel: tessellate profiles, extrude them, and measure meshes.

The kernel supports exactly what the CAD language needs: one-sided extrusion
of a planar profile (outer loop with optional holes) along its plane normal.
Bodies are concatenated, never booleaned; extrusions with boolean op ``Cut``
compile to no surface and are flagged, since the evaluation metrics operate
on sampled surfaces of additive bodies.

Conventions fixed here and used consistently in both directions:
  * Euler frames are intrinsic Z-Y-X: R = Rz(alpha) @ Ry(theta) @ Rx(gamma).
  * Normal frames pick the in-plane axes deterministically from a reference
    vector: r = +z unless the normal is within 0.999 of +/-z, else r = +x;
    u = normalize(r x n), v = n x u.
  * Tessellated outer loops are counter-clockwise, holes clockwise, with no
    closing duplicate vertex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _earcut
from .errors import CompileError, GeometryError
from .ir import (
    Arc,
    BooleanOp,
    CadProgram,
    Circle,
    EulerFrame,
    Line,
    NormalFrame,
    Part,
    Profile,
)

_MAX_CURVE_SEGMENTS = 8192
_MIN_CIRCLE_SEGMENTS = 16


# --- basic containers -------------------------------------------------------

@dataclass(frozen=True)
class Box3:
    """Axis-aligned box given by two corners."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(c) for c in self.min_corner)
        hi = tuple(float(c) for c in self.max_corner)
        if any(h < l for l, h in zip(lo, hi)):
            raise GeometryError(f"inverted box: {lo} .. {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.min_corner) + np.asarray(self.max_corner)) / 2.0

    @property
    def extents(self) -> np.ndarray:
        return np.asarray(self.max_corner) - np.asarray(self.min_corner)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extents))


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthonormal sketch frame: u, v span the plane, n is the extrusion axis."""

    u: np.ndarray
    v: np.ndarray
    n: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        for name in ("u", "v", "n", "origin"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,):
                raise GeometryError(f"frame {name} must be a 3-vector")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("u", "v", "n"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > 1e-6:
                raise GeometryError(f"frame {name} is not unit length")
        if np.linalg.norm(np.cross(self.u, self.v) - self.n) > 1e-6:
            raise GeometryError("frame is not right-handed (u x v != n)")

    def to_world(self, xy: np.ndarray, offset: float = 0.0) -> np.ndarray:
        """Map sketch-plane points (k, 2) to world space at ``offset`` along n."""
        xy = np.asarray(xy, dtype=float)
        return (
            self.origin
            + np.outer(xy[:, 0], self.u)
            + np.outer(xy[:, 1], self.v)
            + offset * self.n
        )


class LabeledMesh:
    """Triangle mesh with a part index per triangle.

    Arrays are read-only; meshes are safe to share between threads.
    """

    def __init__(self, vertices, triangles, tri_labels, label_table, warnings=()):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.tri_labels = np.ascontiguousarray(tri_labels, dtype=np.int64).reshape(-1)
        if len(self.tri_labels) != len(self.triangles):
            raise GeometryError("tri_labels length must equal triangle count")
        if len(self.triangles) and self.triangles.max() >= len(self.vertices):
            raise GeometryError("triangle index out of range")
        self.label_table = dict(label_table)
        self.warnings = tuple(warnings)
        for arr in (self.vertices, self.triangles, self.tri_labels):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.triangles)


@dataclass(frozen=True, eq=False)
class TessellatedProfile:
    """Polygonized profile: outer ring CCW, hole rings CW, no closing duplicates."""

    outer: np.ndarray
    holes: tuple[np.ndarray, ...]


# --- 2D primitives -----------------------------------------------------------

def polygon_signed_area(points) -> float:
    """Shoelace area of an implicitly closed polyline; positive means CCW."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise GeometryError(f"polygon needs >= 3 vertices, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def arc_center(start, end, sweep_deg: float, ccw_flag: int):
    """Center and radius of the arc from ``start`` to ``end``.

    The chord and sweep angle determine the circle:
    radius = |chord| / (2 sin(sweep/2)), and the center sits at the chord
    midpoint displaced along the chord's CCW normal by
    |chord| / (2 tan(sweep/2)), with the displacement negated for clockwise
    arcs.  Returns (center (2,), radius).
    """
    if not 0.0 < sweep_deg < 360.0:
        raise GeometryError(f"arc sweep must be in (0, 360), got {sweep_deg}")
    s = np.asarray(start, dtype=float)
    e = np.asarray(end, dtype=float)
    chord = e - s
    chord_len = float(np.linalg.norm(chord))
    if chord_len == 0.0:
        raise GeometryError("arc endpoints coincide")
    half = math.radians(sweep_deg) / 2.0
    radius = chord_len / (2.0 * math.sin(half))
    d = chord_len / (2.0 * math.tan(half))
    if not int(ccw_flag):
        d = -d
    normal = np.array([-chord[1], chord[0]]) / chord_len
    center = (s + e) / 2.0 + d * normal
    return center, radius


def _max_step(radius: float, tol: float) -> float:
    # largest per-segment sweep keeping the sagitta within tol
    ratio = max(-1.0, 1.0 - tol / radius)
    return max(2.0 * math.acos(ratio), 1e-6)


def _arc_points(start, end, sweep_deg, ccw_flag, tol):
    """Sample points along an arc, excluding ``start`` and ending exactly at ``end``."""
    center, radius = arc_center(start, end, sweep_deg, ccw_flag)
    total = math.radians(sweep_deg)
    if not int(ccw_flag):
        total = -total
    segments = min(
        _MAX_CURVE_SEGMENTS, max(1, math.ceil(abs(total) / _max_step(radius, tol)))
    )
    a0 = math.atan2(start[1] - center[1], start[0] - center[0])
    ts = a0 + total * np.arange(1, segments) / segments
    pts = center + radius * np.column_stack([np.cos(ts), np.sin(ts)])
    return np.vstack([pts, np.asarray(end, dtype=float)])


def _circle_points(center, radius, tol):
    segments = min(
        _MAX_CURVE_SEGMENTS,
        max(_MIN_CIRCLE_SEGMENTS, math.ceil(2.0 * math.pi / _max_step(radius, tol))),
    )
    ts = 2.0 * math.pi * np.arange(segments) / segments
    return np.asarray(center, dtype=float) + radius * np.column_stack(
        [np.cos(ts), np.sin(ts)]
    )


def loop_control_points(commands) -> np.ndarray:
    """Coarse control points of a loop (endpoints, circle extremes), for sizing."""
    pts = [(0.0, 0.0)]
    for cmd in commands:
        if isinstance(cmd, Line) or isinstance(cmd, Arc):
            pts.append(cmd.end)
        elif isinstance(cmd, Circle):
            cx, cy = cmd.center
            r = cmd.radius
            pts.extend([(cx - r, cy - r), (cx + r, cy + r)])
    return np.asarray(pts, dtype=float)


def profile_diagonal(profile: Profile) -> float:
    pts = [loop_control_points(profile.outer)]
    pts.extend(loop_control_points(cut) for cut in profile.cuts)
    allpts = np.vstack(pts)
    diag = float(np.linalg.norm(allpts.max(axis=0) - allpts.min(axis=0)))
    return diag if diag > 0.0 else 1.0


def loop_polyline(commands, tol) -> np.ndarray:
    """Polygonize one loop in its raw traversal order (no orientation fix)."""
    if len(commands) == 1 and isinstance(commands[0], Circle):
        c = commands[0]
        return _circle_points(c.center, c.radius, tol)
    pts = [np.zeros(2)]
    for cmd in commands:
        if isinstance(cmd, Line):
            pts.append(np.asarray(cmd.end, dtype=float))
        elif isinstance(cmd, Arc):
            pts.extend(_arc_points(pts[-1], cmd.end, cmd.sweep_deg, cmd.ccw_flag, tol))
        else:
            raise GeometryError("circle mixed into a chained loop")
    ring = np.vstack(pts[:-1])  # the chain closes back onto the start point
    keep = np.any(ring != np.roll(ring, 1, axis=0), axis=1)  # drop exact repeats
    return ring[keep] if keep.any() else ring[:1]


def _oriented(points: np.ndarray, ccw: bool) -> np.ndarray:
    if len(points) < 3:
        return points
    area = polygon_signed_area(points)
    if (area > 0) == ccw:
        return points
    return np.vstack([points[:1], points[1:][::-1]])  # reverse, keep start vertex


def tessellate_profile(profile: Profile, tess_tol: float) -> TessellatedProfile:
    """Polygonize a profile: arcs and circles sampled with sagitta <= tess_tol."""
    if tess_tol <= 0.0:
        raise GeometryError(f"tess_tol must be positive, got {tess_tol}")
    outer = _oriented(loop_polyline(profile.outer, tess_tol), ccw=True)
    holes = tuple(
        _oriented(loop_polyline(cut, tess_tol), ccw=False) for cut in profile.cuts
    )
    return TessellatedProfile(outer=outer, holes=holes)


# --- triangulation -----------------------------------------------------------

def _filter_ring(points: np.ndarray) -> np.ndarray:
    """Drop duplicate and exactly-collinear vertices the way the clipper does.

    Caps and side walls must be built from identical rings, so this shares
    the clipper's node filter verbatim rather than reimplementing the rule.
    """
    node = None
    for i, (x, y) in enumerate(points):
        node = _earcut._insert_node(i, float(x), float(y), node)
    node = _earcut._filter_points(node)
    if node is None:
        raise GeometryError("loop degenerates to nothing after filtering")
    keep = []
    p = node
    while True:
        keep.append(p.i)
        p = p.next
        if p is node:
            break
    if len(keep) < 3:
        raise GeometryError("loop has fewer than 3 distinct vertices")
    keep.sort()  # restore original ring order
    return points[keep]


def _earcut_region(outer: np.ndarray, holes) -> tuple[np.ndarray, np.ndarray]:
    """Triangulate cleaned, canonically oriented rings.

    Returns (points, triangles) where points is the ring concatenation and
    triangles indexes into it.  Raises if triangle area disagrees with the
    polygon area by more than 1e-9 relative.
    """
    rings = [outer] + list(holes)
    points = np.vstack(rings)
    hole_starts = []
    offset = len(outer)
    for h in holes:
        hole_starts.append(offset)
        offset += len(h)
    tris = np.asarray(
        _earcut.earcut([tuple(p) for p in points], hole_starts), dtype=np.int64
    ).reshape(-1, 3)
    if len(tris) == 0:
        raise GeometryError("triangulation produced no triangles")

    # orient every triangle CCW and verify the area budget
    a = points[tris[:, 0]]
    b = points[tris[:, 1]]
    c = points[tris[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    flip = cross < 0
    if flip.any():
        tris[flip] = tris[flip][:, ::-1]
    tri_area = float(np.abs(cross).sum()) / 2.0
    want = polygon_signed_area(outer) + sum(polygon_signed_area(h) for h in holes)
    if abs(tri_area - want) > 1e-9 * max(abs(want), 1e-30):
        raise GeometryError(
            f"triangulation area {tri_area} disagrees with polygon area {want}"
        )
    return points, tris


def triangulate(outer, holes=()) -> tuple[np.ndarray, np.ndarray]:
    """Triangulate a polygon with holes.

    Rings may be given in either orientation; returns (points, triangles)
    with points the cleaned concatenated rings and triangles CCW index
    triples covering outer minus holes.
    """
    outer = _filter_ring(_oriented(np.asarray(outer, dtype=float), ccw=True))
    holes = tuple(
        _filter_ring(_oriented(np.asarray(h, dtype=float), ccw=False)) for h in holes
    )
    return _earcut_region(outer, holes)


# --- frames ------------------------------------------------------------------

def _euler_matrix(alpha_deg: float, theta_deg: float, gamma_deg: float) -> np.ndarray:
    ca, sa = math.cos(math.radians(alpha_deg)), math.sin(math.radians(alpha_deg))
    ct, st = math.cos(math.radians(theta_deg)), math.sin(math.radians(theta_deg))
    cg, sg = math.cos(math.radians(gamma_deg)), math.sin(math.radians(gamma_deg))
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]])
    return rz @ ry @ rx


def frame_basis(frame: EulerFrame | NormalFrame, origin=(0.0, 0.0, 0.0)) -> Frame:
    """Build the orthonormal sketch frame for either frame representation."""
    if isinstance(frame, EulerFrame):
        rot = _euler_matrix(frame.alpha_deg, frame.theta_deg, frame.gamma_deg)
        u, v, n = rot[:, 0], rot[:, 1], rot[:, 2]
    elif isinstance(frame, NormalFrame):
        n = np.array(frame.as_tuple())
        ref = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.999 else np.array([1.0, 0.0, 0.0])
        u = np.cross(ref, n)
        u = u / np.linalg.norm(u)
        v = np.cross(n, u)
    else:
        raise GeometryError(f"unsupported frame {type(frame).__name__}")
    return Frame(u=u, v=v, n=n, origin=np.asarray(origin, dtype=float))


def normal_of(frame: EulerFrame | NormalFrame) -> NormalFrame:
    """The normal-vector form of any frame (loses in-plane rotation for Euler)."""
    if isinstance(frame, NormalFrame):
        return frame
    basis = frame_basis(frame)
    return NormalFrame(*basis.n)


# --- extrusion ---------------------------------------------------------------

def extrude(
    tess: TessellatedProfile, frame: Frame, extent: float, part_index: int
) -> LabeledMesh:
    """Extrude a tessellated profile into a closed body.

    The body spans [min(0, extent), max(0, extent)] along the frame normal,
    so negative extents extrude against it.  Caps come from the ear-clipped
    profile, side walls from the boundary rings; both use the same cleaned
    rings, which is what makes the result watertight.
    """
    if extent == 0.0:
        raise GeometryError("extrusion extent must be nonzero")
    outer = _filter_ring(tess.outer)
    holes = tuple(_filter_ring(h) for h in tess.holes)
    points, tris = _earcut_region(outer, holes)

    t0, t1 = min(0.0, extent), max(0.0, extent)
    n_pts = len(points)
    bottom = frame.to_world(points, t0)
    top = frame.to_world(points, t1)
    vertices = np.vstack([bottom, top])

    faces = []
    faces.append(tris[:, ::-1])  # bottom cap, facing -n
    faces.append(tris + n_pts)  # top cap, facing +n
    offset = 0
    for ring in [outer] + list(holes):
        k = len(ring)
        idx = offset + np.arange(k)
        nxt = offset + (np.arange(k) + 1) % k
        faces.append(np.column_stack([idx, nxt, nxt + n_pts]))
        faces.append(np.column_stack([idx, nxt + n_pts, idx + n_pts]))
        offset += k
    triangles = np.vstack(faces)
    labels = np.full(len(triangles), part_index, dtype=np.int64)
    return LabeledMesh(vertices, triangles, labels, {part_index: f"part_{part_index}"})


def _edge_codes(triangles: np.ndarray, n_vertices: int):
    edges = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    directed = edges[:, 0] * n_vertices + edges[:, 1]
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    undirected = lo * n_vertices + hi
    return directed, undirected


def is_watertight(mesh: LabeledMesh) -> bool:
    """True iff every undirected edge is shared by exactly two opposite triangles."""
    if len(mesh.triangles) == 0:
        return False
    directed, undirected = _edge_codes(mesh.triangles, len(mesh.vertices))
    _, d_counts = np.unique(directed, return_counts=True)
    if (d_counts != 1).any():
        return False
    _, u_counts = np.unique(undirected, return_counts=True)
    return bool((u_counts == 2).all())


def euler_characteristic(mesh: LabeledMesh) -> int:
    """V - E + F over referenced vertices; 2 for a ball, 0 for a torus."""
    v = len(np.unique(mesh.triangles))
    _, undirected = _edge_codes(mesh.triangles, len(mesh.vertices))
    e = len(np.unique(undirected))
    return v - e + len(mesh.triangles)


def mesh_volume(mesh: LabeledMesh) -> float:
    """Signed divergence-theorem volume; requires a watertight mesh."""
    if not is_watertight(mesh):
        raise GeometryError("volume of a non-watertight mesh is undefined")
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0


def mesh_area(mesh: LabeledMesh) -> float:
    v = mesh.vertices
    t = mesh.triangles
    cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    return float(np.linalg.norm(cross, axis=1).sum()) / 2.0


def triangle_areas(mesh: LabeledMesh) -> np.ndarray:
    v = mesh.vertices
    t = mesh.triangles
    cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    return np.linalg.norm(cross, axis=1) / 2.0


# --- program compilation -----------------------------------------------------

def default_tess_tol(profile: Profile) -> float:
    return 1e-3 * profile_diagonal(profile)


def compile_program(
    program: CadProgram,
    tess_tol: float | None = None,
    closure_tol: float | None = None,
    validate_first: bool = True,
) -> LabeledMesh:
    """Compile a program into one labeled mesh, one body per block.

    Bodies are concatenated with disjoint vertex ranges, so the watertight
    edge test holds for the whole mesh whenever it holds per body.  Blocks
    whose boolean op is ``Cut`` contribute no surface and are recorded in
    ``mesh.warnings``.
    """
    warnings: list[str] = []
    if validate_first:
        from .validation import validate  # deferred: validation imports this module

        report = validate(program, closure_tol=closure_tol, tess_tol=tess_tol)
        if not report.valid:
            first = report.first_error()
            raise CompileError(
                f"program invalid: {first.message}",
                part_index=first.part_index,
                block_index=first.block_index,
            )
        if report.repaired is not None:
            program = report.repaired
            warnings.append("orientation repairs applied before compile")

    all_vertices = []
    all_triangles = []
    all_labels = []
    label_table = {}
    v_offset = 0
    for p_idx, part in enumerate(program.parts):
        label_table[p_idx] = part.label
        for b_idx, block in enumerate(part.blocks):
            if block.extrude.boolean_op is BooleanOp.CUT:
                warnings.append(
                    f"part {p_idx} block {b_idx}: Cut extrusion excluded from surface"
                )
                continue
            tol = tess_tol if tess_tol is not None else default_tess_tol(block.profile)
            try:
                tess = tessellate_profile(block.profile, tol)
                frame = frame_basis(block.extrude.frame, block.extrude.origin)
                body = extrude(tess, frame, block.extrude.extent, p_idx)
            except GeometryError as exc:
                raise CompileError(
                    f"part {p_idx} block {b_idx}: {exc}",
                    part_index=p_idx,
                    block_index=b_idx,
                ) from exc
            if not is_watertight(body):
                raise CompileError(
                    f"part {p_idx} block {b_idx}: extruded body is not watertight",
                    part_index=p_idx,
                    block_index=b_idx,
                )
            all_vertices.append(body.vertices)
            all_triangles.append(body.triangles + v_offset)
            all_labels.append(body.tri_labels)
            v_offset += len(body.vertices)
    if not all_triangles:
        raise CompileError("program produces no additive geometry")
    return LabeledMesh(
        np.vstack(all_vertices),
        np.vstack(all_triangles),
        np.concatenate(all_labels),
        label_table,
        warnings,
    )


def bounding_box(program: CadProgram, tess_tol: float | None = None) -> Box3:
    """Tight AABB of all additive bodies, from tessellated geometry."""
    mesh = compile_program(program, tess_tol=tess_tol)
    return Box3(tuple(mesh.vertices.min(axis=0)), tuple(mesh.vertices.max(axis=0)))


def part_bounding_box(part: Part, tess_tol: float | None = None) -> Box3:
    return bounding_box(CadProgram(parts=(part,)), tess_tol=tess_tol)


# --- volume estimation with cuts --------------------------------------------

def _points_in_polygon(xy: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Crossing-number containment for a batch of points (k, 2)."""
    x = xy[:, 0:1]
    y = xy[:, 1:2]
    x0, y0 = ring[:, 0], ring[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = (x1 - x0) * (y - y0) / (y1 - y0) + x0
    crossings = (straddle & (x < x_int)).sum(axis=1)
    return crossings % 2 == 1


def _points_in_block(pts: np.ndarray, tess, frame: Frame, extent: float) -> np.ndarray:
    rel = pts - frame.origin
    t = rel @ frame.n
    mask = (t >= min(0.0, extent)) & (t <= max(0.0, extent))
    xy = np.column_stack([rel @ frame.u, rel @ frame.v])
    mask &= _points_in_polygon(xy, tess.outer)
    for hole in tess.holes:
        mask &= ~_points_in_polygon(xy, hole)
    return mask


def estimate_volume(
    program: CadProgram, samples: int = 50_000, seed: int = 0, tess_tol: float | None = None
) -> float:
    """Monte-Carlo volume of additive bodies minus Cut bodies.

    The only volumetric query that honors ``Cut`` extrusions; the surface
    pipeline ignores them entirely.
    """
    adds, cuts = [], []
    for part in program.parts:
        for block in part.blocks:
            tol = tess_tol if tess_tol is not None else default_tess_tol(block.profile)
            tess = tessellate_profile(block.profile, tol)
            frame = frame_basis(block.extrude.frame, block.extrude.origin)
            entry = (tess, frame, block.extrude.extent)
            (cuts if block.extrude.boolean_op is BooleanOp.CUT else adds).append(entry)
    if not adds:
        return 0.0
    corners = []
    for tess, frame, extent in adds:
        for off in (min(0.0, extent), max(0.0, extent)):
            corners.append(frame.to_world(tess.outer, off))
    world = np.vstack(corners)
    lo, hi = world.min(axis=0), world.max(axis=0)
    box_volume = float(np.prod(hi - lo))
    if box_volume == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, 3))
    inside = np.zeros(samples, dtype=bool)
    for entry in adds:
        inside |= _points_in_block(pts, *entry)
    for entry in cuts:
        inside &= ~_points_in_block(pts, *entry)
    return box_volume * float(inside.sum()) / samples


# --- OBJ export --------------------------------------------------------------

def export_obj(mesh: LabeledMesh, obj_path, labels_path=None) -> None:
    """Write an OBJ with one ``g part_<index>`` group per label plus a JSON sidecar.

    Vertex order is the mesh's own order, so output is byte-stable.
    """
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    order = np.argsort(mesh.tri_labels, kind="stable")
    current = None
    for t_idx in order:
        label = int(mesh.tri_labels[t_idx])
        if label != current:
            lines.append(f"g part_{label}")
            current = label
        a, b, c = (int(i) + 1 for i in mesh.triangles[t_idx])
        lines.append(f"f {a} {b} {c}")
    with open(obj_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    if labels_path is not None:
        with open(labels_path, "w", encoding="utf-8") as fh:
            json.dump({str(k): v for k, v in sorted(mesh.label_table.items())}, fh, indent=2)
            fh.write("\n")
