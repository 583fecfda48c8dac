"""Parser and printer for the textual CAD language.

The language is line-oriented: ``<SOL>`` opens a profile, ``L:``/``A:``/``R:``
add curves, ``<CUT>`` opens a hole loop, and ``E:`` extrudes and closes the
block.  A ``#`` comment immediately before a ``<SOL>`` labels the part that
block belongs to; blocks keep joining that part until a new label appears.

VLM responses interleave prose with code, so unrecognized lines outside a
block are skipped with warnings.  Inside a block they are errors: a truncated
or garbled command should fail the program, not silently drop geometry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import geom
from .errors import ConstructionError
from .ir import (
    Arc,
    Block,
    BooleanOp,
    CadProgram,
    Circle,
    ExtrudeCommand,
    ExtrusionType,
    Line,
    NormalFrame,
    Part,
    Profile,
    normalize_label,
    source_hash,
)

UNLABELED = "unlabeled"

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_SOL_RE = re.compile(r"^<\s*SOL\s*>$", re.IGNORECASE)
_CUT_RE = re.compile(r"^<\s*CUT\s*>$", re.IGNORECASE)
_CMD_RE = re.compile(r"^([LARE])\s*:\s*\((.*)\)\s*(?:#.*)?$", re.IGNORECASE)
_NUM_RE = re.compile(rf"^{_NUM}$")


@dataclass(frozen=True)
class SourceDiagnostic:
    severity: str  # "error" | "warning"
    line: int  # 1-based
    message: str
    snippet: str


@dataclass(frozen=True)
class ParseResult:
    program: CadProgram | None
    diagnostics: tuple[SourceDiagnostic, ...]

    @property
    def errors(self) -> tuple[SourceDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    @property
    def warnings(self) -> tuple[SourceDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "warning")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.diagnostics: list[SourceDiagnostic] = []
        # part order = first appearance of each label
        self.part_blocks: dict[str, list[Block]] = {}
        self.current_label = UNLABELED
        self.pending_comment: str | None = None
        # open-block state
        self.in_block = False
        self.block_line = 0
        self.outer: list = []
        self.cuts: list[list] = []
        self.in_cut = False

    def error(self, line_no, message, snippet=""):
        self.diagnostics.append(SourceDiagnostic("error", line_no, message, snippet))

    def warn(self, line_no, message, snippet=""):
        self.diagnostics.append(SourceDiagnostic("warning", line_no, message, snippet))

    def run(self) -> ParseResult:
        for line_no, raw in enumerate(self.source.splitlines(), start=1):
            self.handle_line(line_no, raw)
        if self.in_block:
            self.error(self.block_line, "unclosed block: sketch has no extrude command")
        program = None
        if not any(d.severity == "error" for d in self.diagnostics):
            program = self.build_program()
        return ParseResult(program=program, diagnostics=tuple(self.diagnostics))

    # --- line dispatch -----------------------------------------------------

    def handle_line(self, line_no: int, raw: str):
        line = raw.strip()
        if not line:
            return  # blank lines never break a comment/SOL association
        if line.startswith("#"):
            text = line[1:].strip()
            self.pending_comment = text or None
            return

        if _SOL_RE.match(line):
            if line != "<SOL>":
                self.warn(line_no, "non-canonical profile marker", line)
            if self.in_block:
                self.error(self.block_line, "unclosed block: sketch has no extrude command")
                self.reset_block()
            if self.pending_comment is not None:
                try:
                    self.current_label = normalize_label(self.pending_comment)
                except ConstructionError:
                    pass
            self.in_block = True
            self.block_line = line_no
            self.pending_comment = None
            return

        self.pending_comment = None

        if _CUT_RE.match(line):
            if line != "<CUT>":
                self.warn(line_no, "non-canonical cut marker", line)
            if not self.in_block or not self.outer:
                self.error(line_no, "<CUT> before any base sketch in the block", line)
                return
            if self.in_cut and not self.cuts[-1]:
                self.error(line_no, "empty cut loop", line)
                return
            self.cuts.append([])
            self.in_cut = True
            return

        m = _CMD_RE.match(line)
        if m:
            self.handle_command(line_no, line, m.group(1), m.group(2))
            return

        if self.in_block:
            self.error(line_no, "unrecognized line inside a command block", line)
        else:
            self.warn(line_no, "skipping prose outside command blocks", line)

    def handle_command(self, line_no, line, letter, argtext):
        canonical = letter.upper()
        if letter != canonical:
            self.warn(line_no, f"lowercase command keyword {letter!r}", line)

        args = [a.strip() for a in argtext.split(",")]
        if canonical != "E":
            if not self.in_block:
                self.error(line_no, f"{canonical}: command outside a profile", line)
                return
            values = self.parse_numbers(line_no, line, canonical, args)
            if values is None:
                return
            try:
                cmd = self.build_sketch_command(canonical, values)
            except ConstructionError as exc:
                self.error(line_no, str(exc), line)
                return
            self.append_sketch_command(line_no, line, cmd)
            return

        # extrude: 7 numbers + boolean + extrusion type
        if not self.in_block or not self.outer:
            self.error(line_no, "extrude without a preceding sketch", line)
            self.reset_block()
            return
        if len(args) != 9:
            self.error(line_no, f"E: expected 9 arguments, got {len(args)}", line)
            self.reset_block()
            return
        numbers = []
        for a in args[:7]:
            if not _NUM_RE.match(a):
                self.error(line_no, f"E: malformed number {a!r}", line)
                self.reset_block()
                return
            numbers.append(float(a))
        bool_word, type_word = args[7], args[8]
        op = {"newbody": BooleanOp.NEW_BODY, "cut": BooleanOp.CUT}.get(bool_word.lower())
        if op is None:
            self.error(line_no, f"E: unknown boolean type {bool_word!r}", line)
            self.reset_block()
            return
        if bool_word not in ("NewBody", "Cut"):
            self.warn(line_no, f"non-canonical boolean spelling {bool_word!r}", line)
        if type_word.lower() != "onesided":
            self.error(line_no, f"E: unknown extrusion type {type_word!r}", line)
            self.reset_block()
            return
        if type_word != "OneSided":
            self.warn(line_no, f"non-canonical extrusion type spelling {type_word!r}", line)
        if self.in_cut and not self.cuts[-1]:
            self.error(line_no, "empty cut loop before extrude", line)
            self.reset_block()
            return
        try:
            extrude = ExtrudeCommand(
                frame=NormalFrame(numbers[0], numbers[1], numbers[2]),
                origin=(numbers[3], numbers[4], numbers[5]),
                extent=numbers[6],
                boolean_op=op,
                extrusion_type=ExtrusionType.ONE_SIDED,
            )
            profile = Profile(
                outer=tuple(self.outer), cuts=tuple(tuple(c) for c in self.cuts)
            )
        except ConstructionError as exc:
            self.error(line_no, str(exc), line)
            self.reset_block()
            return
        self.part_blocks.setdefault(self.current_label, []).append(
            Block(profile=profile, extrude=extrude)
        )
        self.reset_block()

    def parse_numbers(self, line_no, line, letter, args):
        arity = {"L": 2, "A": 4, "R": 3}[letter]
        if len(args) != arity:
            self.error(line_no, f"{letter}: expected {arity} arguments, got {len(args)}", line)
            return None
        values = []
        for a in args:
            if not _NUM_RE.match(a):
                self.error(line_no, f"{letter}: malformed number {a!r}", line)
                return None
            values.append(float(a))
        return values

    def build_sketch_command(self, letter, values):
        if letter == "L":
            return Line(end=(values[0], values[1]))
        if letter == "A":
            return Arc(end=(values[0], values[1]), sweep_deg=values[2], ccw_flag=values[3])
        return Circle(center=(values[0], values[1]), radius=values[2])

    def append_sketch_command(self, line_no, line, cmd):
        loop = self.cuts[-1] if self.in_cut else self.outer
        if loop and isinstance(loop[-1], Circle):
            self.error(line_no, "command after a circle in the same loop", line)
            return
        if isinstance(cmd, Circle) and loop:
            self.error(line_no, "circle must be the only command of its loop", line)
            return
        loop.append(cmd)

    def reset_block(self):
        self.in_block = False
        self.outer = []
        self.cuts = []
        self.in_cut = False

    def build_program(self) -> CadProgram | None:
        if not self.part_blocks:
            self.error(1, "no CAD program found in source")
            return None
        try:
            parts = tuple(
                Part(label=label, blocks=tuple(blocks))
                for label, blocks in self.part_blocks.items()
            )
            return CadProgram(parts=parts, provenance=source_hash(self.source))
        except ConstructionError as exc:
            self.error(1, f"program assembly failed: {exc}")
            return None


def parse(source: str) -> ParseResult:
    """Parse arbitrary text into a program plus diagnostics; never raises."""
    return _Parser(str(source)).run()


# --- printing ---------------------------------------------------------------

def _fmt(x: float) -> str:
    # shortest decimal that round-trips; integers print bare
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _sketch_line(cmd) -> str:
    if isinstance(cmd, Line):
        return f"L: ({_fmt(cmd.end[0])},{_fmt(cmd.end[1])})"
    if isinstance(cmd, Arc):
        return (
            f"A: ({_fmt(cmd.end[0])},{_fmt(cmd.end[1])},"
            f"{_fmt(cmd.sweep_deg)},{cmd.ccw_flag})"
        )
    return f"R: ({_fmt(cmd.center[0])},{_fmt(cmd.center[1])},{_fmt(cmd.radius)})"


def print_program(program: CadProgram) -> str:
    """Emit canonical text; frames are printed in normal-vector form."""
    lines = []
    for part in program.parts:
        lines.append(f"# {part.label}")
        for block in part.blocks:
            lines.append("<SOL>")
            for cmd in block.profile.outer:
                lines.append(_sketch_line(cmd))
            for cut in block.profile.cuts:
                lines.append("<CUT>")
                for cmd in cut:
                    lines.append(_sketch_line(cmd))
            e = block.extrude
            n = geom.normal_of(e.frame)
            lines.append(
                "E: ("
                + ",".join(_fmt(c) for c in (n.nx, n.ny, n.nz))
                + ","
                + ",".join(_fmt(c) for c in e.origin)
                + f",{_fmt(e.extent)},{e.boolean_op.value},{e.extrusion_type.value})"
            )
    return "\n".join(lines) + "\n"
