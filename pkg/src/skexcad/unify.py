"""Fixed-width parameter vectors bridging CAD commands and learned models.

Every command's continuous attributes live in 12 named slots; a boolean mask
marks which slots the command type actually uses, and masked-out slots are
exactly zero.  Coordinates and lengths normalize affinely into [-1, 1] by an
isotropic box, angles map [0, 360] onto [-1, 1], and flags map {0, 1} onto
{-1, +1}.

Token streams mirror the block structure: a loop-start token opens each loop
(the first loop of a block is the outer one, later loops are holes) and an
extrude token closes the block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import EncodeError
from .ir import (
    Arc,
    Block,
    BooleanOp,
    CadProgram,
    Circle,
    EulerFrame,
    ExtrudeCommand,
    Line,
    NormalFrame,
    Part,
    Profile,
)

N_SLOTS = 12
SLOT_NAMES = (
    "x", "y", "sweep_deg", "ccw_flag", "radius",
    "e1", "e2", "e3", "ox", "oy", "oz", "extent",
)
COMMAND_TYPES = ("SOL", "Line", "Arc", "Circle", "ExtrudeNew", "ExtrudeCut")

_MASKS = {
    "SOL": (),
    "Line": ("x", "y"),
    "Arc": ("x", "y", "sweep_deg", "ccw_flag"),
    "Circle": ("x", "y", "radius"),
    "ExtrudeNew": ("e1", "e2", "e3", "ox", "oy", "oz", "extent"),
    "ExtrudeCut": ("e1", "e2", "e3", "ox", "oy", "oz", "extent"),
}


def mask_for(command_type: str) -> tuple[bool, ...]:
    if command_type not in _MASKS:
        raise EncodeError(f"unknown command type {command_type!r}")
    active = _MASKS[command_type]
    return tuple(name in active for name in SLOT_NAMES)


@dataclass(frozen=True)
class UnifiedParamVector:
    slots: tuple[float, ...]
    mask: tuple[bool, ...]
    command_type: str
    frame_form: str | None = None  # "normal" | "euler" on extrude tokens

    def __post_init__(self):
        slots = tuple(float(s) for s in self.slots)
        mask = tuple(bool(m) for m in self.mask)
        if len(slots) != N_SLOTS or len(mask) != N_SLOTS:
            raise EncodeError(f"expected {N_SLOTS} slots and mask bits")
        if mask != mask_for(self.command_type):
            raise EncodeError(f"mask inconsistent with command type {self.command_type!r}")
        for s, m in zip(slots, mask):
            if not m and s != 0.0:
                raise EncodeError("masked-out slots must be exactly 0")
        is_extrude = self.command_type in ("ExtrudeNew", "ExtrudeCut")
        if is_extrude and self.frame_form not in ("normal", "euler"):
            raise EncodeError("extrude tokens need a frame form tag")
        if not is_extrude and self.frame_form is not None:
            raise EncodeError("frame form is only meaningful on extrude tokens")
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "mask", mask)


@dataclass(frozen=True)
class NormalizationBox:
    center: tuple[float, float, float]
    half_extent: float

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        h = float(self.half_extent)
        if not h > 0.0:
            raise EncodeError(f"half extent must be positive, got {h}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extent", h)


@dataclass(frozen=True)
class EncodedPart:
    label: str
    tokens: tuple[UnifiedParamVector, ...]


@dataclass(frozen=True)
class DecodeResult:
    program: CadProgram
    clamped: int  # count of slots adjusted back into their valid range


_SOL_TOKEN = UnifiedParamVector(
    slots=(0.0,) * N_SLOTS, mask=mask_for("SOL"), command_type="SOL"
)


def _vector(command_type: str, frame_form=None, **values) -> UnifiedParamVector:
    slots = [0.0] * N_SLOTS
    for name, value in values.items():
        slots[SLOT_NAMES.index(name)] = value
    return UnifiedParamVector(
        slots=tuple(slots),
        mask=mask_for(command_type),
        command_type=command_type,
        frame_form=frame_form,
    )


class _Normalizer:
    def __init__(self, box: NormalizationBox):
        self.c = box.center
        self.h = box.half_extent

    def check(self, value: float, what: str) -> float:
        if abs(value) > 1.0 + 1e-9:
            raise EncodeError(f"{what} normalizes to {value}; box is too small")
        return value

    def coord(self, value: float, axis: int, what: str) -> float:
        return self.check((value - self.c[axis]) / self.h, what)

    def length(self, value: float, what: str) -> float:
        return self.check(value / self.h, what)

    @staticmethod
    def angle(deg: float) -> float:
        return (deg % 360.0) / 180.0 - 1.0

    @staticmethod
    def flag(bit: int) -> float:
        return 2.0 * bit - 1.0


def encode(program: CadProgram, box: NormalizationBox) -> list[EncodedPart]:
    """Encode a program into per-part token sequences."""
    norm = _Normalizer(box)
    encoded = []
    for part in program.parts:
        tokens: list[UnifiedParamVector] = []
        for block in part.blocks:
            loops = [block.profile.outer, *block.profile.cuts]
            for loop in loops:
                tokens.append(_SOL_TOKEN)
                for cmd in loop:
                    tokens.append(_encode_command(cmd, norm))
            tokens.append(_encode_extrude(block.extrude, norm))
        encoded.append(EncodedPart(label=part.label, tokens=tuple(tokens)))
    return encoded


def _encode_command(cmd, norm: _Normalizer) -> UnifiedParamVector:
    if isinstance(cmd, Line):
        return _vector(
            "Line",
            x=norm.coord(cmd.end[0], 0, "line x"),
            y=norm.coord(cmd.end[1], 1, "line y"),
        )
    if isinstance(cmd, Arc):
        return _vector(
            "Arc",
            x=norm.coord(cmd.end[0], 0, "arc x"),
            y=norm.coord(cmd.end[1], 1, "arc y"),
            sweep_deg=norm.angle(cmd.sweep_deg),
            ccw_flag=norm.flag(cmd.ccw_flag),
        )
    if isinstance(cmd, Circle):
        return _vector(
            "Circle",
            x=norm.coord(cmd.center[0], 0, "circle x"),
            y=norm.coord(cmd.center[1], 1, "circle y"),
            radius=norm.length(cmd.radius, "circle radius"),
        )
    raise EncodeError(f"cannot encode command {cmd!r}")


def _encode_extrude(cmd: ExtrudeCommand, norm: _Normalizer) -> UnifiedParamVector:
    if isinstance(cmd.frame, NormalFrame):
        form = "normal"
        e1, e2, e3 = cmd.frame.as_tuple()
    else:
        form = "euler"
        e1 = norm.angle(cmd.frame.alpha_deg)
        e2 = norm.angle(cmd.frame.theta_deg)
        e3 = norm.angle(cmd.frame.gamma_deg)
    kind = "ExtrudeCut" if cmd.boolean_op is BooleanOp.CUT else "ExtrudeNew"
    return _vector(
        kind,
        frame_form=form,
        e1=e1,
        e2=e2,
        e3=e3,
        ox=norm.coord(cmd.origin[0], 0, "origin x"),
        oy=norm.coord(cmd.origin[1], 1, "origin y"),
        oz=norm.coord(cmd.origin[2], 2, "origin z"),
        extent=norm.length(cmd.extent, "extent"),
    )


class _Denormalizer:
    def __init__(self, box: NormalizationBox):
        self.c = box.center
        self.h = box.half_extent
        self.clamped = 0

    def slot(self, vec: UnifiedParamVector, name: str) -> float:
        value = vec.slots[SLOT_NAMES.index(name)]
        if value < -1.0:
            self.clamped += 1
            value = -1.0
        elif value > 1.0:
            self.clamped += 1
            value = 1.0
        return value

    def coord(self, vec, name, axis) -> float:
        return self.slot(vec, name) * self.h + self.c[axis]

    def length(self, vec, name) -> float:
        return self.slot(vec, name) * self.h

    def angle(self, vec, name) -> float:
        return (self.slot(vec, name) + 1.0) * 180.0

    def flag(self, vec, name) -> int:
        # exact 0 decodes as counter-clockwise, the convention of emitted programs
        return 1 if self.slot(vec, name) >= 0.0 else 0

    def positive_length(self, vec, name) -> float:
        value = self.length(vec, name)
        if value <= 0.0:
            self.clamped += 1
            value = 1e-9 * self.h
        return value

    def nonzero_length(self, vec, name) -> float:
        value = self.length(vec, name)
        if value == 0.0:
            self.clamped += 1
            value = 1e-9 * self.h
        return value

    def sweep(self, vec, name) -> float:
        value = self.angle(vec, name)
        if value <= 0.0:
            self.clamped += 1
            value = 1e-6
        elif value >= 360.0:
            self.clamped += 1
            value = 360.0 - 1e-6
        return value


def decode(encoded, box: NormalizationBox) -> DecodeResult:
    """Rebuild a program from token sequences; out-of-range slots are clamped."""
    den = _Denormalizer(box)
    parts = []
    for part in encoded:
        blocks = []
        loops: list[list] = []
        for token in part.tokens:
            kind = token.command_type
            if kind == "SOL":
                loops.append([])
            elif kind in ("Line", "Arc", "Circle"):
                if not loops:
                    raise EncodeError(f"{kind} token before any loop start")
                loops[-1].append(_decode_command(token, den))
            elif kind in ("ExtrudeNew", "ExtrudeCut"):
                if not loops or not loops[0]:
                    raise EncodeError("extrude token closes an empty block")
                blocks.append(
                    Block(
                        profile=Profile(
                            outer=tuple(loops[0]),
                            cuts=tuple(tuple(c) for c in loops[1:] if c),
                        ),
                        extrude=_decode_extrude(token, den),
                    )
                )
                loops = []
            else:
                raise EncodeError(f"unknown token type {kind!r}")
        if loops and any(loops):
            raise EncodeError(f"part {part.label!r} has loops without an extrude")
        if not blocks:
            raise EncodeError(f"part {part.label!r} decodes to no blocks")
        parts.append(Part(label=part.label, blocks=tuple(blocks)))
    return DecodeResult(program=CadProgram(parts=tuple(parts)), clamped=den.clamped)


def _decode_command(vec: UnifiedParamVector, den: _Denormalizer):
    if vec.command_type == "Line":
        return Line(end=(den.coord(vec, "x", 0), den.coord(vec, "y", 1)))
    if vec.command_type == "Arc":
        return Arc(
            end=(den.coord(vec, "x", 0), den.coord(vec, "y", 1)),
            sweep_deg=den.sweep(vec, "sweep_deg"),
            ccw_flag=den.flag(vec, "ccw_flag"),
        )
    return Circle(
        center=(den.coord(vec, "x", 0), den.coord(vec, "y", 1)),
        radius=den.positive_length(vec, "radius"),
    )


def _decode_extrude(vec: UnifiedParamVector, den: _Denormalizer) -> ExtrudeCommand:
    if vec.frame_form == "normal":
        e = [vec.slots[SLOT_NAMES.index(n)] for n in ("e1", "e2", "e3")]
        if math.sqrt(sum(c * c for c in e)) < 1e-12:
            den.clamped += 1
            e = [0.0, 0.0, 1.0]
        frame = NormalFrame(*e)
    else:
        frame = EulerFrame(
            den.angle(vec, "e1"), den.angle(vec, "e2"), den.angle(vec, "e3")
        )
    return ExtrudeCommand(
        frame=frame,
        origin=(
            den.coord(vec, "ox", 0),
            den.coord(vec, "oy", 1),
            den.coord(vec, "oz", 2),
        ),
        extent=den.nonzero_length(vec, "extent"),
        boolean_op=BooleanOp.CUT if vec.command_type == "ExtrudeCut" else BooleanOp.NEW_BODY,
    )


# --- quantization -------------------------------------------------------------

def quantize(vec: UnifiedParamVector, bins: int = 256) -> tuple[int, ...]:
    """Uniform bin index per slot over [-1, 1]; masked slots take index 0."""
    indices = []
    for value, active in zip(vec.slots, vec.mask):
        if not active:
            indices.append(0)
            continue
        if not -1.0 - 1e-9 <= value <= 1.0 + 1e-9:
            raise EncodeError(f"slot value {value} outside [-1, 1]")
        idx = int(math.floor((value + 1.0) / 2.0 * bins))
        indices.append(min(max(idx, 0), bins - 1))
    return tuple(indices)


def dequantize(
    indices,
    command_type: str,
    frame_form: str | None = None,
    bins: int = 256,
) -> UnifiedParamVector:
    """Bin centers for active slots; masked slots come back as exact zeros."""
    indices = tuple(int(i) for i in indices)
    if len(indices) != N_SLOTS:
        raise EncodeError(f"expected {N_SLOTS} indices")
    mask = mask_for(command_type)
    slots = []
    for idx, active in zip(indices, mask):
        if not 0 <= idx < bins:
            raise EncodeError(f"bin index {idx} out of range(0, {bins})")
        slots.append((idx + 0.5) / bins * 2.0 - 1.0 if active else 0.0)
    return UnifiedParamVector(
        slots=tuple(slots), mask=mask, command_type=command_type, frame_form=frame_form
    )


# --- box fitting and the token JSON schema -------------------------------------

def fit_normalization_box(program: CadProgram, pad: float = 0.0) -> NormalizationBox:
    """Smallest isotropic box (AABB-centered) whose encoding stays in [-1, 1].

    Sketch coordinates share the box's x/y normalization even though they are
    frame-local, so the half extent covers them alongside the world AABB,
    origins, radii and extents.
    """
    from . import geom  # compiled AABB requires the kernel

    aabb = geom.bounding_box(program)
    center = tuple(aabb.center)
    h = float(max(aabb.extents)) / 2.0
    for part in program.parts:
        for block in part.blocks:
            for loop in (block.profile.outer, *block.profile.cuts):
                for cmd in loop:
                    if isinstance(cmd, (Line, Arc)):
                        h = max(h, abs(cmd.end[0] - center[0]), abs(cmd.end[1] - center[1]))
                    else:
                        h = max(
                            h,
                            abs(cmd.center[0] - center[0]),
                            abs(cmd.center[1] - center[1]),
                            cmd.radius,
                        )
            ext = block.extrude
            h = max(h, abs(ext.extent))
            h = max(h, *(abs(o - c) for o, c in zip(ext.origin, center)))
    h = h * (1.0 + pad) if pad > 0 else h
    return NormalizationBox(center=center, half_extent=h * (1.0 + 1e-12))


def encoded_to_dict(encoded, box: NormalizationBox, extras: dict | None = None) -> dict:
    """Token JSON consumed by downstream model code.

    ``extras`` maps part index to extra keys (e.g. bounding-box centers or
    precomputed embeddings) merged into that part's record.
    """
    parts = []
    for idx, part in enumerate(encoded):
        record = {
            "part": idx,
            "label": part.label,
            "tokens": [
                {
                    "type": t.command_type,
                    "slots": list(t.slots),
                    "mask": list(t.mask),
                    "frame_form": t.frame_form,
                }
                for t in part.tokens
            ],
        }
        if extras and idx in extras:
            record.update(extras[idx])
        parts.append(record)
    return {
        "box": {"center": list(box.center), "half_extent": box.half_extent},
        "parts": parts,
    }


def encoded_from_dict(data: dict):
    box = NormalizationBox(
        center=tuple(data["box"]["center"]), half_extent=data["box"]["half_extent"]
    )
    encoded = []
    for record in data["parts"]:
        tokens = tuple(
            UnifiedParamVector(
                slots=tuple(t["slots"]),
                mask=tuple(t["mask"]),
                command_type=t["type"],
                frame_form=t.get("frame_form"),
            )
            for t in record["tokens"]
        )
        encoded.append(EncodedPart(label=record["label"], tokens=tokens))
    return encoded, box


def encoded_to_json(encoded, box, extras=None, indent=2) -> str:
    return json.dumps(encoded_to_dict(encoded, box, extras), indent=indent)


def encoded_from_json(text: str):
    return encoded_from_dict(json.loads(text))
