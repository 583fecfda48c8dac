import math

import numpy as np
import pytest

from skexcad import geom, ir
from skexcad.errors import CompileError, GeometryError



def _rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _transformed(program, rot, shift):
    parts = []
    for part in program.parts:
        blocks = []
        for block in part.blocks:
            frame = block.extrude.frame
            if isinstance(frame, ir.NormalFrame):
                frame = ir.NormalFrame(*(rot @ np.array(frame.as_tuple())))
            else:  # pragma: no cover - corpus uses normal frames
                raise NotImplementedError
            origin = rot @ np.array(block.extrude.origin) + shift
            blocks.append(
                ir.Block(
                    profile=block.profile,
                    extrude=ir.ExtrudeCommand(
                        frame=frame,
                        origin=tuple(origin),
                        extent=block.extrude.extent,
                        boolean_op=block.extrude.boolean_op,
                    ),
                )
            )
        parts.append(ir.Part(label=part.label, blocks=tuple(blocks)))
    return ir.CadProgram(parts=tuple(parts))


# --- arc_center ---------------------------------------------------------------

def test_arc_center_half_turn():
    center, radius = geom.arc_center((1, 0), (-1, 0), 180, 1)
    assert np.allclose(center, (0, 0), atol=1e-12)
    assert radius == pytest.approx(1.0, abs=1e-12)


def test_arc_center_quarter_turn_rotation_check():
    center, radius = geom.arc_center((1, 0), (0, 1), 90, 1)
    # rotating (start - center) by +90 degrees about the center must hit end
    rel = np.array([1, 0]) - center
    rotated = np.array([-rel[1], rel[0]]) + center
    assert np.allclose(rotated, (0, 1), atol=1e-12)
    assert radius == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sweep,ccw", [(270, 1), (270, 0), (90, 0), (200, 1)])
def test_arc_center_against_sampling_oracle(sweep, ccw):
    start, end = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    center, radius = geom.arc_center(start, end, sweep, ccw)
    # brute-force sweep: walk the arc in tiny steps and check it lands on end
    a0 = math.atan2(start[1] - center[1], start[0] - center[0])
    total = math.radians(sweep) * (1 if ccw else -1)
    ts = a0 + total * np.linspace(0, 1, 2001)
    pts = center + radius * np.column_stack([np.cos(ts), np.sin(ts)])
    assert np.allclose(pts[0], start, atol=1e-9)
    assert np.allclose(pts[-1], end, atol=1e-9)
    assert np.allclose(np.linalg.norm(pts - center, axis=1), radius, atol=1e-9)
    # both endpoints sit on the circle through start with the stated radius
    assert np.linalg.norm(start - center) == pytest.approx(radius, abs=1e-12)
    assert np.linalg.norm(end - center) == pytest.approx(radius, abs=1e-12)


def test_arc_center_errors():
    with pytest.raises(GeometryError):
        geom.arc_center((1, 0), (1, 0), 90, 1)
    with pytest.raises(GeometryError):
        geom.arc_center((1, 0), (0, 1), 360, 1)
    with pytest.raises(GeometryError):
        geom.arc_center((1, 0), (0, 1), 0, 1)


# --- tessellation ---------------------------------------------------------------

def _square_profile():
    return ir.Profile(
        outer=(
            ir.Line(end=(1, 0)),
            ir.Line(end=(1, 1)),
            ir.Line(end=(0, 1)),
            ir.Line(end=(0, 0)),
        )
    )


def test_tessellate_square_is_verbatim():
    tess = geom.tessellate_profile(_square_profile(), 1e-3)
    assert np.array_equal(tess.outer, [(0, 0), (1, 0), (1, 1), (0, 1)])
    assert tess.holes == ()


def test_tessellate_circle_radius_and_area():
    profile = ir.Profile(outer=(ir.Circle(center=(0, 0), radius=1),))
    tess = geom.tessellate_profile(profile, 1e-3)
    radii = np.linalg.norm(tess.outer, axis=1)
    assert np.allclose(radii, 1.0, atol=1e-12)
    assert geom.polygon_signed_area(tess.outer) == pytest.approx(math.pi, abs=1e-2)
    assert len(tess.outer) >= 16


def test_tessellate_circle_min_segments():
    profile = ir.Profile(outer=(ir.Circle(center=(0, 0), radius=1),))
    tess = geom.tessellate_profile(profile, 100.0)  # huge tolerance
    assert len(tess.outer) == 16


def test_tessellate_backrest(backrest):
    profile = backrest.parts[0].blocks[0].profile
    tess = geom.tessellate_profile(profile, 1e-3 * geom.profile_diagonal(profile))
    assert geom.polygon_signed_area(tess.outer) > 0
    assert len(tess.holes) == 1
    assert geom.polygon_signed_area(tess.holes[0]) < 0  # holes come out clockwise
    assert len(tess.outer) > 6  # arc got sampled


# --- triangulation ---------------------------------------------------------------

def _tri_area_sum(points, tris):
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    assert (cross > 0).all()  # all output triangles are CCW
    return cross.sum() / 2.0


def test_triangulate_square():
    points, tris = geom.triangulate([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert len(tris) == 2
    assert _tri_area_sum(points, tris) == pytest.approx(1.0, abs=1e-12)


def test_triangulate_square_with_hole():
    outer = [(0, 0), (1, 0), (1, 1), (0, 1)]
    hole = [(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)]
    points, tris = geom.triangulate(outer, [hole])
    assert _tri_area_sum(points, tris) == pytest.approx(0.75, abs=1e-12)


def test_triangulate_backrest_against_monte_carlo(backrest):
    profile = backrest.parts[0].blocks[0].profile
    tess = geom.tessellate_profile(profile, 1e-3)
    points, tris = geom.triangulate(tess.outer, tess.holes)
    tri_area = _tri_area_sum(points, tris)

    rng = np.random.default_rng(7)
    n = 1_000_000
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    samples = rng.uniform(lo, hi, size=(n, 2))
    inside = geom._points_in_polygon(samples, tess.outer)
    for hole in tess.holes:
        inside &= ~geom._points_in_polygon(samples, hole)
    box_area = float(np.prod(hi - lo))
    p_hat = inside.mean()
    mc_area = box_area * p_hat
    sigma = box_area * math.sqrt(p_hat * (1 - p_hat) / n)
    assert abs(tri_area - mc_area) < 3 * sigma


def test_triangulate_degenerate_errors():
    with pytest.raises(GeometryError):
        geom.triangulate([(0, 0), (1, 0)])
    with pytest.raises(GeometryError):
        geom.triangulate([(0, 0), (1, 0), (2, 0), (3, 0)])  # collinear, zero area


# --- frames ---------------------------------------------------------------------

def test_frame_basis_euler_identity():
    frame = geom.frame_basis(ir.EulerFrame(0, 0, 0))
    assert np.allclose(frame.u, (1, 0, 0))
    assert np.allclose(frame.v, (0, 1, 0))
    assert np.allclose(frame.n, (0, 0, 1))


def test_frame_basis_normal_z():
    frame = geom.frame_basis(ir.NormalFrame(0, 0, 1))
    assert np.allclose(frame.u, (0, -1, 0), atol=1e-12)
    assert np.allclose(frame.v, (1, 0, 0), atol=1e-12)


def test_frame_basis_normal_backrest():
    frame = geom.frame_basis(ir.NormalFrame(-1, 0, 0))
    assert np.allclose(frame.u, (0, -1, 0), atol=1e-12)
    # v = n x u; the cross product of (-1,0,0) and (0,-1,0) points along +z
    assert np.allclose(frame.v, (0, 0, 1), atol=1e-12)


def test_frame_basis_orthonormal_for_random_inputs():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = rng.normal(size=3)
        frame = geom.frame_basis(ir.NormalFrame(*n))
        assert np.allclose(np.cross(frame.u, frame.v), frame.n, atol=1e-9)
    for _ in range(50):
        frame = geom.frame_basis(ir.EulerFrame(*rng.uniform(-180, 360, 3)))
        assert np.allclose(np.cross(frame.u, frame.v), frame.n, atol=1e-9)


# --- extrusion and compilation ----------------------------------------------------

def test_unit_cube_mesh(unit_cube):
    mesh = geom.compile_program(unit_cube)
    assert len(mesh) == 12
    assert geom.is_watertight(mesh)
    assert geom.mesh_volume(mesh) == pytest.approx(1.0, abs=1e-9)
    assert geom.mesh_area(mesh) == pytest.approx(6.0, abs=1e-9)
    assert geom.euler_characteristic(mesh) == 2


def test_three_cubes_mesh(three_cubes):
    mesh = geom.compile_program(three_cubes)
    assert len(mesh) == 36
    assert geom.mesh_volume(mesh) == pytest.approx(24.0, abs=1e-9)
    assert geom.mesh_area(mesh) == pytest.approx(72.0, abs=1e-9)
    box = geom.bounding_box(three_cubes)
    assert box.min_corner[0] == pytest.approx(0.0, abs=1e-12)
    assert box.max_corner[0] == pytest.approx(8.0, abs=1e-12)
    assert (box.min_corner[2], box.max_corner[2]) == (0.0, 2.0)


def test_three_cubes_labels(three_cubes_labeled):
    mesh = geom.compile_program(three_cubes_labeled)
    assert sorted(set(mesh.tri_labels.tolist())) == [0, 1, 2]
    assert mesh.label_table == {0: "cube 1", 1: "cube 2", 2: "cube 3"}


def test_backrest_mesh(backrest):
    mesh = geom.compile_program(backrest)
    assert geom.is_watertight(mesh)
    assert geom.euler_characteristic(mesh) == 0  # one through-hole
    box = geom.bounding_box(backrest)
    assert box.min_corner[0] == pytest.approx(0.0, abs=1e-12)
    assert box.max_corner[0] == pytest.approx(0.5, abs=1e-12)  # thickness along +x


def test_backrest_volume_matches_profile_area(backrest):
    tol = 1e-3
    mesh = geom.compile_program(backrest, tess_tol=tol)
    profile = backrest.parts[0].blocks[0].profile
    tess = geom.tessellate_profile(profile, tol)
    points, tris = geom.triangulate(tess.outer, tess.holes)
    area = _tri_area_sum(points, tris)
    assert geom.mesh_volume(mesh) == pytest.approx(area * 0.5, rel=1e-9)


def test_no_degenerate_triangles(backrest, three_cubes):
    for program in (backrest, three_cubes):
        mesh = geom.compile_program(program)
        scale = geom.bounding_box(program).diagonal
        assert geom.triangle_areas(mesh).min() > 1e-12 * scale**2


def test_negating_extent_and_normal_is_congruent(backrest):
    flipped_parts = []
    for part in backrest.parts:
        blocks = []
        for block in part.blocks:
            n = np.array(block.extrude.frame.as_tuple())
            blocks.append(
                ir.Block(
                    profile=block.profile,
                    extrude=ir.ExtrudeCommand(
                        frame=ir.NormalFrame(*(-n)),
                        origin=block.extrude.origin,
                        extent=-block.extrude.extent,
                    ),
                )
            )
        flipped_parts.append(ir.Part(label=part.label, blocks=tuple(blocks)))
    flipped = ir.CadProgram(parts=tuple(flipped_parts))
    tol = 1e-3
    m0 = geom.compile_program(backrest, tess_tol=tol)
    m1 = geom.compile_program(flipped, tess_tol=tol)
    assert geom.mesh_volume(m1) == pytest.approx(geom.mesh_volume(m0), rel=1e-9)
    assert geom.mesh_area(m1) == pytest.approx(geom.mesh_area(m0), rel=1e-9)


def test_rigid_motion_volume_invariance(backrest):
    tol = 1e-3
    base = geom.mesh_volume(geom.compile_program(backrest, tess_tol=tol))
    rng = np.random.default_rng(11)
    for _ in range(20):
        moved = _transformed(backrest, _rotation(rng), rng.uniform(-5, 5, 3))
        volume = geom.mesh_volume(geom.compile_program(moved, tess_tol=tol))
        assert volume == pytest.approx(base, rel=1e-9)


def test_refinement_approaches_analytic_circle_volume():
    profile = ir.Profile(outer=(ir.Circle(center=(0, 0), radius=1),))
    program = ir.CadProgram(
        parts=(
            ir.Part(
                label="disk",
                blocks=(
                    ir.Block(
                        profile=profile,
                        extrude=ir.ExtrudeCommand(
                            frame=ir.NormalFrame(0, 0, 1), origin=(0, 0, 0), extent=1
                        ),
                    ),
                ),
            ),
        )
    )
    tols = [4e-3, 2e-3, 1e-3, 5e-4]
    volumes = [geom.mesh_volume(geom.compile_program(program, tess_tol=t)) for t in tols]
    for coarse, fine in zip(volumes, volumes[1:]):
        assert coarse <= fine <= math.pi
    assert volumes[-1] == pytest.approx(math.pi, abs=5e-3)


def test_cut_block_excluded_with_warning(unit_cube):
    cut_block = ir.Block(
        profile=ir.Profile(outer=(ir.Circle(center=(0.5, 0.5), radius=0.2),)),
        extrude=ir.ExtrudeCommand(
            frame=ir.NormalFrame(0, 0, 1),
            origin=(0, 0, 0),
            extent=1,
            boolean_op=ir.BooleanOp.CUT,
        ),
    )
    part = unit_cube.parts[0]
    program = ir.CadProgram(
        parts=(ir.Part(label=part.label, blocks=part.blocks + (cut_block,)),)
    )
    mesh = geom.compile_program(program)
    assert any("Cut extrusion" in w for w in mesh.warnings)
    assert geom.mesh_volume(mesh) == pytest.approx(1.0, abs=1e-9)


def test_estimate_volume_honors_cuts(unit_cube):
    part = unit_cube.parts[0]
    slab = ir.Block(
        profile=ir.Profile(
            outer=(
                ir.Line(end=(1, 0)),
                ir.Line(end=(1, 0.5)),
                ir.Line(end=(0, 0.5)),
                ir.Line(end=(0, 0)),
            )
        ),
        extrude=ir.ExtrudeCommand(
            frame=ir.NormalFrame(0, 0, 1),
            origin=(0, 0, 0),
            extent=1,
            boolean_op=ir.BooleanOp.CUT,
        ),
    )
    program = ir.CadProgram(
        parts=(ir.Part(label=part.label, blocks=part.blocks + (slab,)),)
    )
    estimate = geom.estimate_volume(program, samples=40_000, seed=5)
    # same sketch frame as the cube, half the sketch height: removes half the cube
    assert estimate == pytest.approx(0.5, abs=0.03)


def test_compile_invalid_program_raises(three_cubes):
    bad = _figure_eight_program()
    with pytest.raises(CompileError) as err:
        geom.compile_program(bad)
    assert err.value.part_index == 0


def _figure_eight_program():
    return ir.CadProgram(
        parts=(
            ir.Part(
                label="bowtie",
                blocks=(
                    ir.Block(
                        profile=ir.Profile(
                            outer=(
                                ir.Line(end=(1, 1)),
                                ir.Line(end=(1, 0)),
                                ir.Line(end=(0, 1)),
                                ir.Line(end=(0, 0)),
                            )
                        ),
                        extrude=ir.ExtrudeCommand(
                            frame=ir.NormalFrame(0, 0, 1), origin=(0, 0, 0), extent=1
                        ),
                    ),
                ),
            ),
        )
    )


def test_mesh_volume_requires_watertight(unit_cube):
    mesh = geom.compile_program(unit_cube)
    broken = geom.LabeledMesh(
        mesh.vertices, mesh.triangles[:-1], mesh.tri_labels[:-1], mesh.label_table
    )
    with pytest.raises(GeometryError):
        geom.mesh_volume(broken)


def test_export_obj_stable(tmp_path, backrest):
    mesh = geom.compile_program(backrest)
    a = tmp_path / "a.obj"
    b = tmp_path / "b.obj"
    geom.export_obj(mesh, a, tmp_path / "a.json")
    geom.export_obj(geom.compile_program(backrest), b, tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()
    content = a.read_text()
    assert "g part_0" in content
    assert (tmp_path / "a.json").read_text() == '{\n  "0": "backrest"\n}\n'


def test_bounding_box_unit_cube_euler_identity():
    program = ir.CadProgram(
        parts=(
            ir.Part(
                label="cube",
                blocks=(
                    ir.Block(
                        profile=_square_profile(),
                        extrude=ir.ExtrudeCommand(
                            frame=ir.EulerFrame(0, 0, 0), origin=(0, 0, 0), extent=1
                        ),
                    ),
                ),
            ),
        )
    )
    box = geom.bounding_box(program)
    assert box.min_corner == (0.0, 0.0, 0.0)
    assert box.max_corner == (1.0, 1.0, 1.0)
