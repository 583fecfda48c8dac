"""Dataset CAD-ification: part matching, circle/arc fitting, and rescaling.

These are the algorithms that align a predicted program with ground-truth
geometry: labels are matched one-to-one by embedding cost, circles and arcs
are recovered from point samples by RANSAC with a least-squares polish, and
matched parts are rescaled/translated onto ground-truth bounding boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geom
from .errors import AssignmentError, FitError
from .ir import Arc, Block, Circle, ExtrudeCommand, Line, Part, Profile


@dataclass(frozen=True)
class AssignmentResult:
    pairs: tuple[tuple[int, int], ...]
    unmatched_pred: tuple[int, ...]
    unmatched_gt: tuple[int, ...]
    total_cost: float


@dataclass(frozen=True)
class CircleFit:
    center: tuple[float, float]
    radius: float
    inlier_count: int
    inlier_tol: float


@dataclass(frozen=True)
class ArcFit:
    circle: CircleFit
    start_deg: float
    end_deg: float
    sweep_deg: float
    ccw_flag: int


def solve_assignment(cost) -> AssignmentResult:
    """Minimum-cost one-to-one matching of min(p, g) pairs.

    Exact (Hungarian-equivalent) via scipy's linear_sum_assignment; leftover
    rows/columns of a rectangular matrix come back unmatched.
    """
    matrix = np.asarray(cost, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise AssignmentError(f"cost matrix must be 2D and non-empty, got {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise AssignmentError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(matrix)
    pairs = tuple(sorted((int(r), int(c)) for r, c in zip(rows, cols)))
    matched_pred = {r for r, _ in pairs}
    matched_gt = {c for _, c in pairs}
    return AssignmentResult(
        pairs=pairs,
        unmatched_pred=tuple(i for i in range(matrix.shape[0]) if i not in matched_pred),
        unmatched_gt=tuple(j for j in range(matrix.shape[1]) if j not in matched_gt),
        total_cost=float(matrix[rows, cols].sum()),
    )


def label_cost_matrix(pred_labels, gt_labels, embedder) -> np.ndarray:
    """cost[i, j] = 1 - cosine(embed(pred_i), embed(gt_j)); equal strings cost 0."""
    if not pred_labels or not gt_labels:
        raise AssignmentError("label lists must be non-empty")
    pred_vecs = np.stack([embedder.embed(t) for t in pred_labels])
    gt_vecs = np.stack([embedder.embed(t) for t in gt_labels])
    cost = 1.0 - pred_vecs @ gt_vecs.T
    for i, p in enumerate(pred_labels):
        for j, g in enumerate(gt_labels):
            if p == g:
                cost[i, j] = 0.0
    return cost


# --- circle / arc fitting ----------------------------------------------------

def _circumcircle(p1, p2, p3):
    # intersection of perpendicular bisectors; None when collinear
    ax, ay = p1
    bx, by = p2
    cx, cy = p3
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    r = math.hypot(ax - ux, ay - uy)
    if not (math.isfinite(ux) and math.isfinite(uy) and math.isfinite(r)) or r <= 0.0:
        return None
    return (ux, uy), r


def _kasa_fit(points: np.ndarray):
    # algebraic least squares: 2*cx*x + 2*cy*y + c = x^2 + y^2
    a = np.column_stack([2.0 * points[:, 0], 2.0 * points[:, 1], np.ones(len(points))])
    b = (points**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy, c = sol
    arg = c + cx**2 + cy**2
    if arg <= 0.0 or not np.isfinite(arg):
        return None
    return (float(cx), float(cy)), float(math.sqrt(arg))


def default_inlier_tol(points: np.ndarray) -> float:
    diag = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    return 0.01 * diag if diag > 0 else 1e-9


def fit_circle_ransac(
    points, iters: int = 200, inlier_tol: float | None = None, seed: int = 0
) -> CircleFit:
    """RANSAC circle fit with a Kasa least-squares polish over the inliers.

    Three sampled points circumscribe each candidate; the max-inlier model
    wins (first hit on ties), then the accepted inliers refine the center and
    radius.  Deterministic given the seed.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise FitError(f"need at least 3 points, got {len(pts)}")
    if iters < 1:
        raise FitError(f"iters must be >= 1, got {iters}")
    tol = default_inlier_tol(pts) if inlier_tol is None else float(inlier_tol)
    rng = np.random.default_rng(seed)

    best_count = -1
    best_model = None
    for _ in range(iters):
        idx = rng.choice(len(pts), size=3, replace=False)
        model = _circumcircle(pts[idx[0]], pts[idx[1]], pts[idx[2]])
        if model is None:
            continue
        (cx, cy), r = model
        err = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)
        count = int((err <= tol).sum())
        if count > best_count:
            best_count = count
            best_model = model
    if best_model is None:
        raise FitError("no circle candidate found; points may be collinear")

    (cx, cy), r = best_model
    err = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)
    inliers = pts[err <= tol]
    if len(inliers) >= 3:
        refined = _kasa_fit(inliers)
        if refined is not None:
            (cx, cy), r = refined
    final_err = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)
    return CircleFit(
        center=(float(cx), float(cy)),
        radius=float(r),
        inlier_count=int((final_err <= tol).sum()),
        inlier_tol=tol,
    )


def fit_arc_ransac(
    points, iters: int = 200, inlier_tol: float | None = None, seed: int = 0
) -> ArcFit:
    """Fit a circle, then recover the angular interval from the ordered inliers.

    Direction comes from the traversal order; the sweep is the accumulated
    wrapped angle steps.  Point runs that close a full circle are rejected.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    circle = fit_circle_ransac(pts, iters=iters, inlier_tol=inlier_tol, seed=seed)
    cx, cy = circle.center
    err = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - circle.radius)
    inliers = pts[err <= circle.inlier_tol]
    angles = np.arctan2(inliers[:, 1] - cy, inliers[:, 0] - cx)
    if len(np.unique(np.round(angles, 12))) < 3:
        raise FitError("inliers span fewer than 3 distinct angles")
    steps = np.diff(angles)
    steps = (steps + math.pi) % (2.0 * math.pi) - math.pi
    total = float(steps.sum())
    sweep_deg = abs(math.degrees(total))
    if sweep_deg <= 0.0:
        raise FitError("inliers have no angular extent")
    # within one sample spacing of a full turn means the data is a circle
    if sweep_deg >= 360.0 - 360.0 / max(len(inliers), 2):
        raise FitError("not an arc: samples close a full circle")
    start = math.degrees(angles[0]) % 360.0
    end = math.degrees(angles[-1]) % 360.0
    return ArcFit(
        circle=circle,
        start_deg=start,
        end_deg=end,
        sweep_deg=sweep_deg,
        ccw_flag=1 if total > 0 else 0,
    )


# --- rescaling ----------------------------------------------------------------

def _box_extent_along(box: geom.Box3, direction: np.ndarray) -> float:
    # support width of an axis-aligned box along a unit direction
    return float(np.abs(direction) @ box.extents)


def _scaled_command(cmd, s_u: float, s_v: float, s_r: float):
    if isinstance(cmd, Line):
        return Line(end=(cmd.end[0] * s_u, cmd.end[1] * s_v))
    if isinstance(cmd, Arc):
        return Arc(
            end=(cmd.end[0] * s_u, cmd.end[1] * s_v),
            sweep_deg=cmd.sweep_deg,
            ccw_flag=cmd.ccw_flag,
        )
    return Circle(center=(cmd.center[0] * s_u, cmd.center[1] * s_v), radius=cmd.radius * s_r)


def rescale_part(pred: Part, gt_box: geom.Box3, tess_tol: float | None = None) -> Part:
    """Rescale and translate a part so its compiled AABB lands on ``gt_box``.

    Scale factors come from the ratio of box extents along the part's frame
    axes.  Sketch endpoints and circle centers scale per-axis; radii scale by
    min(s_u, s_v) so circles stay circles under anisotropy; the extent scales
    along the normal.  Origins are moved so the compiled AABB center matches
    the target center.  Rescaling a part onto its own box is the identity.
    """
    if min(gt_box.extents) <= 0.0:
        raise FitError("gt box is degenerate")
    pred_box = geom.part_bounding_box(pred, tess_tol=tess_tol)
    frame = geom.frame_basis(pred.blocks[0].extrude.frame, pred.blocks[0].extrude.origin)

    scales = []
    for axis in (frame.u, frame.v, frame.n):
        pred_extent = _box_extent_along(pred_box, axis)
        if pred_extent <= 1e-12:
            raise FitError("pred part is degenerate along a frame axis")
        scales.append(_box_extent_along(gt_box, axis) / pred_extent)
    s_u, s_v, s_n = scales
    s_r = min(s_u, s_v)

    basis = np.column_stack([frame.u, frame.v, frame.n])
    # linear part of the frame-aligned scaling, written so identity is exact
    correction = basis @ np.diag([s_u - 1.0, s_v - 1.0, s_n - 1.0]) @ basis.T

    def rescale_block(block: Block) -> Block:
        profile = Profile(
            outer=tuple(_scaled_command(c, s_u, s_v, s_r) for c in block.profile.outer),
            cuts=tuple(
                tuple(_scaled_command(c, s_u, s_v, s_r) for c in cut)
                for cut in block.profile.cuts
            ),
        )
        origin = np.asarray(block.extrude.origin)
        new_origin = origin + correction @ origin
        extrude = ExtrudeCommand(
            frame=block.extrude.frame,
            origin=tuple(new_origin),
            extent=block.extrude.extent * s_n,
            boolean_op=block.extrude.boolean_op,
            extrusion_type=block.extrude.extrusion_type,
        )
        return Block(profile=profile, extrude=extrude)

    scaled = Part(label=pred.label, blocks=tuple(rescale_block(b) for b in pred.blocks))
    scaled_box = geom.part_bounding_box(scaled, tess_tol=tess_tol)
    shift = gt_box.center - scaled_box.center

    def shift_block(block: Block) -> Block:
        origin = np.asarray(block.extrude.origin) + shift
        extrude = ExtrudeCommand(
            frame=block.extrude.frame,
            origin=tuple(origin),
            extent=block.extrude.extent,
            boolean_op=block.extrude.boolean_op,
            extrusion_type=block.extrude.extrusion_type,
        )
        return Block(profile=block.profile, extrude=extrude)

    if not shift.any():
        return scaled
    return Part(label=scaled.label, blocks=tuple(shift_block(b) for b in scaled.blocks))
