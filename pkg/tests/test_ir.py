import math

import pytest

from skexcad import ir
from skexcad.errors import ConstructionError


def test_arc_rejects_bad_sweep():
    with pytest.raises(ConstructionError):
        ir.Arc(end=(1, 0), sweep_deg=0, ccw_flag=1)
    with pytest.raises(ConstructionError):
        ir.Arc(end=(1, 0), sweep_deg=360, ccw_flag=1)
    with pytest.raises(ConstructionError):
        ir.Arc(end=(1, 0), sweep_deg=90, ccw_flag=2)
    with pytest.raises(ConstructionError):
        ir.Arc(end=(1, 0), sweep_deg=90, ccw_flag=0.5)


def test_arc_accepts_both_flags():
    assert ir.Arc(end=(1, 0), sweep_deg=90, ccw_flag=0).ccw_flag == 0
    assert ir.Arc(end=(1, 0), sweep_deg=90, ccw_flag=1).ccw_flag == 1


def test_circle_radius_positive():
    with pytest.raises(ConstructionError):
        ir.Circle(center=(0, 0), radius=0)
    with pytest.raises(ConstructionError):
        ir.Circle(center=(0, 0), radius=-1)


def test_non_finite_rejected():
    with pytest.raises(ConstructionError):
        ir.Line(end=(math.inf, 0))
    with pytest.raises(ConstructionError):
        ir.Circle(center=(0, 0), radius=math.nan)


def test_normal_frame_normalizes():
    f = ir.NormalFrame(0, 0, 2)
    assert f.as_tuple() == (0.0, 0.0, 1.0)
    with pytest.raises(ConstructionError):
        ir.NormalFrame(0, 0, 0)


def test_extent_nonzero():
    with pytest.raises(ConstructionError):
        ir.ExtrudeCommand(frame=ir.NormalFrame(0, 0, 1), origin=(0, 0, 0), extent=0)


def test_profile_loop_shape_rules():
    circle = ir.Circle(center=(0, 0), radius=1)
    line = ir.Line(end=(1, 0))
    with pytest.raises(ConstructionError):
        ir.Profile(outer=(circle, line))
    with pytest.raises(ConstructionError):
        ir.Profile(outer=())
    ir.Profile(outer=(circle,))  # a lone circle is a valid loop


def test_label_normalization():
    part = _part("  Leg   1 ")
    assert part.label == "leg 1"
    with pytest.raises(ConstructionError):
        _part("   ")


def _part(label):
    return ir.Part(
        label=label,
        blocks=(
            ir.Block(
                profile=ir.Profile(outer=(ir.Circle(center=(0, 0), radius=1),)),
                extrude=ir.ExtrudeCommand(
                    frame=ir.NormalFrame(0, 0, 1), origin=(0, 0, 0), extent=1
                ),
            ),
        ),
    )


def test_program_rejects_duplicate_labels():
    with pytest.raises(ConstructionError):
        ir.CadProgram(parts=(_part("leg 1"), _part("Leg 1")))


def test_command_count_three_cubes(three_cubes, three_cubes_labeled):
    # unlabeled text folds into one part; the labeled variant counts per cube
    assert ir.command_count(three_cubes) == [15]
    assert ir.command_count(three_cubes_labeled) == [5, 5, 5]


def test_command_count_single_circle():
    program = ir.CadProgram(parts=(_part("disk"),))
    assert ir.command_count(program) == [2]


def test_command_count_backrest(backrest):
    assert ir.command_count(backrest) == [6]


def test_json_round_trip(backrest, three_cubes_labeled):
    for program in (backrest, three_cubes_labeled):
        again = ir.from_json(ir.to_json(program))
        assert again.parts == program.parts
        assert again.provenance == program.provenance


def test_json_round_trip_euler_frame():
    block = ir.Block(
        profile=ir.Profile(outer=(ir.Circle(center=(0, 0), radius=1),)),
        extrude=ir.ExtrudeCommand(
            frame=ir.EulerFrame(30, 45, 60), origin=(1, 2, 3), extent=-0.5,
            boolean_op=ir.BooleanOp.CUT,
        ),
    )
    program = ir.CadProgram(parts=(ir.Part(label="hole", blocks=(block,)),))
    again = ir.from_json(ir.to_json(program))
    assert again.parts == program.parts
