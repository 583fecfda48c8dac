"""Synthetic training programs, encoded through the CAD toolchain CLI.

Programs are written as ``.cad`` text (the toolchain's input format) and
encoded to token JSON by invoking ``skexcad encode --with-embeddings``; this
package never reaches into the toolchain's internals.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np

_AXES = {
    "z": "0,0,1",
    "x": "1,0,0",
    "y": "0,1,0",
}


def _rect_block(rng, label, axis, origin, size, extent):
    w, h = size
    ox, oy, oz = origin
    return (
        f"# {label}\n"
        "<SOL>\n"
        f"L: ({w:g},0)\n"
        f"L: ({w:g},{h:g})\n"
        f"L: (0,{h:g})\n"
        "L: (0,0)\n"
        f"E: ({_AXES[axis]},{ox:g},{oy:g},{oz:g},{extent:g},NewBody,OneSided)\n"
    )


def _disk_block(rng, label, axis, origin, center, radius, extent):
    ox, oy, oz = origin
    return (
        f"# {label}\n"
        "<SOL>\n"
        f"R: ({center[0]:g},{center[1]:g},{radius:g})\n"
        f"E: ({_AXES[axis]},{ox:g},{oy:g},{oz:g},{extent:g},NewBody,OneSided)\n"
    )


def synthetic_program_text(seed: int) -> str:
    """A small furniture-like assembly: a slab plus one to three simple parts."""
    rng = np.random.default_rng(seed)
    r = lambda lo, hi: round(float(rng.uniform(lo, hi)), 2)

    blocks = []
    slab_w, slab_h = r(1.5, 3.0), r(1.5, 3.0)
    blocks.append(
        _rect_block(rng, "seat 1", "z", (r(-1, 1), r(-1, 1), 0.0), (slab_w, slab_h), r(0.2, 0.5))
    )
    n_extra = int(rng.integers(0, 3))
    for i in range(n_extra):
        kind = rng.choice(["leg", "panel"])
        if kind == "leg":
            blocks.append(
                _disk_block(
                    rng,
                    f"leg {i + 1}",
                    "z",
                    (r(-1, 1), r(-1, 1), r(0.3, 0.6)),
                    (r(0.4, 1.2), r(0.4, 1.2)),
                    r(0.1, 0.35),
                    r(0.8, 2.0),
                )
            )
        else:
            blocks.append(
                _rect_block(
                    rng,
                    f"panel {i + 1}",
                    rng.choice(["x", "y"]),
                    (r(-1, 1), r(-1, 1), r(0.2, 0.8)),
                    (r(0.8, 2.0), r(0.8, 2.0)),
                    r(0.15, 0.4),
                )
            )
    return "".join(blocks)


def run_toolchain(args: list[str]) -> None:
    """Run a `skexcad` subcommand, surfacing stderr on failure."""
    proc = subprocess.run(["skexcad", *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"skexcad {' '.join(args)} failed:\n{proc.stderr}")


def build_dataset(out_dir, count: int, seed: int = 0) -> list[Path]:
    """Write <key>.cad + <key>.tokens.json pairs; returns the token paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    token_paths = []
    for i in range(count):
        key = f"prog_{i:03d}"
        cad_path = out_dir / f"{key}.cad"
        cad_path.write_text(synthetic_program_text(seed * 100_003 + i), encoding="utf-8")
        tokens_path = out_dir / f"{key}.tokens.json"
        run_toolchain(
            ["encode", str(cad_path), "--with-embeddings", "--out", str(tokens_path)]
        )
        token_paths.append(tokens_path)
    return token_paths
