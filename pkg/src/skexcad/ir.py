"""In-memory representation of sketch-extrude CAD programs.

A program is an ordered list of semantically labeled parts.  Each part owns
one or more blocks, and a block pairs a 2D profile (an outer loop plus
optional hole loops) with an extrusion command.  All types are immutable and
validated at construction time; anything tolerance-dependent (loop closure,
self-intersection, hole containment) is left to the validation pass.

Sketch coordinates are 2D and implicitly chained: every line/arc starts where
the previous command ended, and the first command of a loop starts at the
origin.  Circles stand alone as whole loops.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConstructionError

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]


def _finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ConstructionError(f"{name} must be finite, got {v!r}")


def _as_point2(p) -> Point2:
    x, y = p
    x, y = float(x), float(y)
    _finite("2D point", x, y)
    return (x, y)


def _as_point3(p) -> Point3:
    x, y, z = p
    x, y, z = float(x), float(y), float(z)
    _finite("3D point", x, y, z)
    return (x, y, z)


def normalize_label(label: str) -> str:
    """Case-fold and collapse whitespace so repeated labels match verbatim."""
    norm = " ".join(str(label).split()).casefold()
    if not norm:
        raise ConstructionError("part label is empty after trimming")
    return norm


@dataclass(frozen=True)
class Line:
    """Straight segment to ``end`` from the chained start point."""

    end: Point2

    def __post_init__(self):
        object.__setattr__(self, "end", _as_point2(self.end))


@dataclass(frozen=True)
class Arc:
    """Circular arc to ``end`` sweeping ``sweep_deg`` degrees.

    ``ccw_flag`` is 1 for counter-clockwise travel, 0 for clockwise.  Emitted
    programs always use 1, but both values are accepted on input.
    """

    end: Point2
    sweep_deg: float
    ccw_flag: int

    def __post_init__(self):
        object.__setattr__(self, "end", _as_point2(self.end))
        sweep = float(self.sweep_deg)
        _finite("arc sweep", sweep)
        if not 0.0 < sweep < 360.0:
            raise ConstructionError(f"arc sweep must be in (0, 360), got {sweep}")
        object.__setattr__(self, "sweep_deg", sweep)
        flag = float(self.ccw_flag)
        if flag not in (0.0, 1.0):
            raise ConstructionError(f"arc ccw flag must be 0 or 1, got {self.ccw_flag}")
        object.__setattr__(self, "ccw_flag", int(flag))


@dataclass(frozen=True)
class Circle:
    """Full circle; always a standalone loop."""

    center: Point2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point2(self.center))
        r = float(self.radius)
        _finite("circle radius", r)
        if r <= 0.0:
            raise ConstructionError(f"circle radius must be > 0, got {r}")
        object.__setattr__(self, "radius", r)


SketchCommand = Line | Arc | Circle


def _check_loop(commands: tuple[SketchCommand, ...], what: str) -> None:
    if not commands:
        raise ConstructionError(f"{what} loop has no commands")
    has_circle = any(isinstance(c, Circle) for c in commands)
    if has_circle and len(commands) > 1:
        raise ConstructionError(f"{what} loop mixes a circle with other commands")


@dataclass(frozen=True)
class Profile:
    """Outer loop plus zero or more hole loops, all in the same sketch plane."""

    outer: tuple[SketchCommand, ...]
    cuts: tuple[tuple[SketchCommand, ...], ...] = ()

    def __post_init__(self):
        outer = tuple(self.outer)
        cuts = tuple(tuple(c) for c in self.cuts)
        _check_loop(outer, "outer")
        for k, cut in enumerate(cuts):
            _check_loop(cut, f"cut {k}")
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "cuts", cuts)


@dataclass(frozen=True)
class EulerFrame:
    """Sketch-plane orientation as intrinsic Z-Y-X Euler angles, in degrees."""

    alpha_deg: float
    theta_deg: float
    gamma_deg: float

    def __post_init__(self):
        a, t, g = float(self.alpha_deg), float(self.theta_deg), float(self.gamma_deg)
        _finite("euler angles", a, t, g)
        object.__setattr__(self, "alpha_deg", a)
        object.__setattr__(self, "theta_deg", t)
        object.__setattr__(self, "gamma_deg", g)


@dataclass(frozen=True)
class NormalFrame:
    """Sketch-plane orientation as the plane normal; normalized on construction."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        x, y, z = float(self.nx), float(self.ny), float(self.nz)
        _finite("frame normal", x, y, z)
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise ConstructionError("frame normal is the zero vector")
        if abs(norm - 1.0) > 1e-9:  # keep already-unit vectors bit-stable
            x, y, z = x / norm, y / norm, z / norm
        object.__setattr__(self, "nx", x)
        object.__setattr__(self, "ny", y)
        object.__setattr__(self, "nz", z)

    def as_tuple(self) -> Point3:
        return (self.nx, self.ny, self.nz)


class BooleanOp(Enum):
    NEW_BODY = "NewBody"
    CUT = "Cut"


class ExtrusionType(Enum):
    ONE_SIDED = "OneSided"


@dataclass(frozen=True)
class ExtrudeCommand:
    """One-sided extrusion of the preceding profile.

    ``extent`` is a signed distance along the frame normal; negative extents
    extrude against the normal.  Zero extents are rejected.
    """

    frame: EulerFrame | NormalFrame
    origin: Point3
    extent: float
    boolean_op: BooleanOp = BooleanOp.NEW_BODY
    extrusion_type: ExtrusionType = ExtrusionType.ONE_SIDED

    def __post_init__(self):
        if not isinstance(self.frame, (EulerFrame, NormalFrame)):
            raise ConstructionError(f"unsupported frame type {type(self.frame).__name__}")
        object.__setattr__(self, "origin", _as_point3(self.origin))
        e = float(self.extent)
        _finite("extent", e)
        if e == 0.0:
            raise ConstructionError("extrusion extent must be nonzero")
        object.__setattr__(self, "extent", e)
        if not isinstance(self.boolean_op, BooleanOp):
            raise ConstructionError(f"unknown boolean op {self.boolean_op!r}")
        if self.extrusion_type is not ExtrusionType.ONE_SIDED:
            raise ConstructionError("only one-sided extrusion is supported")


@dataclass(frozen=True)
class Block:
    """A (profile, extrude) pair: one extrusion step of a part."""

    profile: Profile
    extrude: ExtrudeCommand


@dataclass(frozen=True)
class Part:
    """A labeled group of blocks, the unit of semantic matching."""

    label: str
    blocks: tuple[Block, ...]

    def __post_init__(self):
        object.__setattr__(self, "label", normalize_label(self.label))
        blocks = tuple(self.blocks)
        if not blocks:
            raise ConstructionError(f"part {self.label!r} has no blocks")
        object.__setattr__(self, "blocks", blocks)


@dataclass(frozen=True)
class CadProgram:
    """An ordered list of parts plus an optional source-text hash."""

    parts: tuple[Part, ...]
    provenance: str | None = field(default=None, compare=False)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ConstructionError("program has no parts")
        labels = [p.label for p in parts]
        if len(set(labels)) != len(labels):
            # identical labels merge into one part in the textual form, so a
            # program with duplicates could not survive a print/parse cycle
            raise ConstructionError("part labels must be distinct")
        object.__setattr__(self, "parts", parts)


def command_count(program: CadProgram) -> list[int]:
    """Number of sketch + extrude commands per part, in part order."""
    counts = []
    for part in program.parts:
        n = 0
        for block in part.blocks:
            n += len(block.profile.outer)
            n += sum(len(cut) for cut in block.profile.cuts)
            n += 1  # the extrude command
        counts.append(n)
    return counts


def source_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# --- canonical JSON serialization ------------------------------------------

def _command_to_dict(cmd: SketchCommand) -> dict:
    if isinstance(cmd, Line):
        return {"type": "line", "end": list(cmd.end)}
    if isinstance(cmd, Arc):
        return {
            "type": "arc",
            "end": list(cmd.end),
            "sweep_deg": cmd.sweep_deg,
            "ccw_flag": cmd.ccw_flag,
        }
    if isinstance(cmd, Circle):
        return {"type": "circle", "center": list(cmd.center), "radius": cmd.radius}
    raise ConstructionError(f"unknown sketch command {cmd!r}")


def _command_from_dict(d: dict) -> SketchCommand:
    kind = d.get("type")
    if kind == "line":
        return Line(end=tuple(d["end"]))
    if kind == "arc":
        return Arc(end=tuple(d["end"]), sweep_deg=d["sweep_deg"], ccw_flag=d["ccw_flag"])
    if kind == "circle":
        return Circle(center=tuple(d["center"]), radius=d["radius"])
    raise ConstructionError(f"unknown command type {kind!r}")


def _frame_to_dict(frame: EulerFrame | NormalFrame) -> dict:
    if isinstance(frame, NormalFrame):
        return {"type": "normal", "n": [frame.nx, frame.ny, frame.nz]}
    return {
        "type": "euler",
        "alpha_deg": frame.alpha_deg,
        "theta_deg": frame.theta_deg,
        "gamma_deg": frame.gamma_deg,
    }


def _frame_from_dict(d: dict) -> EulerFrame | NormalFrame:
    if d["type"] == "normal":
        return NormalFrame(*d["n"])
    if d["type"] == "euler":
        return EulerFrame(d["alpha_deg"], d["theta_deg"], d["gamma_deg"])
    raise ConstructionError(f"unknown frame type {d['type']!r}")


def to_dict(program: CadProgram) -> dict:
    return {
        "parts": [
            {
                "label": part.label,
                "blocks": [
                    {
                        "profile": {
                            "outer": [_command_to_dict(c) for c in block.profile.outer],
                            "cuts": [
                                [_command_to_dict(c) for c in cut]
                                for cut in block.profile.cuts
                            ],
                        },
                        "extrude": {
                            "frame": _frame_to_dict(block.extrude.frame),
                            "origin": list(block.extrude.origin),
                            "extent": block.extrude.extent,
                            "boolean_op": block.extrude.boolean_op.value,
                            "extrusion_type": block.extrude.extrusion_type.value,
                        },
                    }
                    for block in part.blocks
                ],
            }
            for part in program.parts
        ],
        "provenance": program.provenance,
    }


def from_dict(d: dict) -> CadProgram:
    parts = []
    for pd in d["parts"]:
        blocks = []
        for bd in pd["blocks"]:
            profile = Profile(
                outer=tuple(_command_from_dict(c) for c in bd["profile"]["outer"]),
                cuts=tuple(
                    tuple(_command_from_dict(c) for c in cut)
                    for cut in bd["profile"].get("cuts", ())
                ),
            )
            ed = bd["extrude"]
            extrude = ExtrudeCommand(
                frame=_frame_from_dict(ed["frame"]),
                origin=tuple(ed["origin"]),
                extent=ed["extent"],
                boolean_op=BooleanOp(ed.get("boolean_op", "NewBody")),
                extrusion_type=ExtrusionType(ed.get("extrusion_type", "OneSided")),
            )
            blocks.append(Block(profile=profile, extrude=extrude))
        parts.append(Part(label=pd["label"], blocks=tuple(blocks)))
    return CadProgram(parts=tuple(parts), provenance=d.get("provenance"))


def to_json(program: CadProgram, indent: int | None = 2) -> str:
    return json.dumps(to_dict(program), indent=indent)


def from_json(text: str) -> CadProgram:
    return from_dict(json.loads(text))
