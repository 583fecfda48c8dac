"""Dataset handling: token-JSON files in, padded training batches out.

The input files follow the CAD toolchain's encode schema (``skexcad encode
--with-embeddings``): a normalization box plus per-part records carrying the
label, command tokens (type, 12 slots, 12-bit mask), the part AABB center,
and precomputed 512-dim label/image embeddings.  Parts are sorted by their
center lexicographically (z, then y, then x) and given order indices so the
global stage can tell repeated labels apart.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import COMMAND_TYPES, N_SLOTS

TYPE_INDEX = {name: i for i, name in enumerate(COMMAND_TYPES)}


@dataclass
class PartRecord:
    label: str
    types: np.ndarray        # (N,) int
    slots: np.ndarray        # (N, 12) float
    mask: np.ndarray         # (N, 12) bool
    frame_forms: list        # per token, None or "normal"/"euler"
    label_embedding: np.ndarray
    center: np.ndarray


@dataclass
class ProgramRecord:
    key: str
    parts: list[PartRecord]  # sorted by center (z, y, x)
    image_embedding: np.ndarray
    box_center: np.ndarray
    box_half_extent: float

    @property
    def n_parts(self) -> int:
        return len(self.parts)


def load_program(path) -> ProgramRecord:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    parts = []
    image = None
    for record in data["parts"]:
        types = np.array([TYPE_INDEX[t["type"]] for t in record["tokens"]], dtype=np.int64)
        slots = np.array([t["slots"] for t in record["tokens"]], dtype=np.float64)
        mask = np.array([t["mask"] for t in record["tokens"]], dtype=bool)
        forms = [t.get("frame_form") for t in record["tokens"]]
        parts.append(
            PartRecord(
                label=record["label"],
                types=types,
                slots=slots,
                mask=mask,
                frame_forms=forms,
                label_embedding=np.asarray(record["label_embedding"], dtype=np.float64),
                center=np.asarray(record["center"], dtype=np.float64),
            )
        )
        if image is None:
            image = np.asarray(record["image_embedding"], dtype=np.float64)
    parts.sort(key=lambda p: (p.center[2], p.center[1], p.center[0]))
    key = Path(path).stem
    if key.endswith(".tokens"):
        key = key[: -len(".tokens")]
    return ProgramRecord(
        key=key,
        parts=parts,
        image_embedding=image,
        box_center=np.asarray(data["box"]["center"], dtype=np.float64),
        box_half_extent=float(data["box"]["half_extent"]),
    )


def load_dataset(directory) -> list[ProgramRecord]:
    paths = sorted(Path(directory).glob("*.tokens.json"))
    if not paths:
        raise FileNotFoundError(f"no *.tokens.json files under {directory}")
    return [load_program(p) for p in paths]


def quantize_slots(slots: np.ndarray, bins: int) -> np.ndarray:
    """Uniform bin index over [-1, 1], matching the toolchain's quantizer."""
    idx = np.floor((slots + 1.0) / 2.0 * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


@dataclass
class PartBatch:
    """Padded tensors for a list of programs.

    ``cmd_pad`` marks command positions beyond each part's length, and
    ``part_pad`` marks part rows beyond each program's part count; losses and
    attention respect both.
    """

    types: torch.Tensor        # (B, M, N) long
    slots: torch.Tensor        # (B, M, N, 12)
    slot_mask: torch.Tensor    # (B, M, N, 12) bool, active and unpadded
    bin_targets: torch.Tensor  # (B, M, N, 12) long
    cmd_pad: torch.Tensor      # (B, M, N) bool
    part_pad: torch.Tensor     # (B, M) bool
    label_emb: torch.Tensor    # (B, M, text_dim)
    image_emb: torch.Tensor    # (B, image_dim)
    order_idx: torch.Tensor    # (B, M) long

    def to(self, device) -> "PartBatch":
        return PartBatch(**{k: v.to(device) for k, v in vars(self).items()})

    def clone(self) -> "PartBatch":
        return PartBatch(**{k: v.clone() for k, v in vars(self).items()})


def collate(programs: list[ProgramRecord], bins: int = 256, dtype=torch.float32) -> PartBatch:
    batch = len(programs)
    max_parts = max(p.n_parts for p in programs)
    max_cmds = max(len(part.types) for p in programs for part in p.parts)
    text_dim = len(programs[0].parts[0].label_embedding)
    image_dim = len(programs[0].image_embedding)

    types = np.zeros((batch, max_parts, max_cmds), dtype=np.int64)
    slots = np.zeros((batch, max_parts, max_cmds, N_SLOTS))
    slot_mask = np.zeros((batch, max_parts, max_cmds, N_SLOTS), dtype=bool)
    bin_targets = np.zeros((batch, max_parts, max_cmds, N_SLOTS), dtype=np.int64)
    cmd_pad = np.ones((batch, max_parts, max_cmds), dtype=bool)
    part_pad = np.ones((batch, max_parts), dtype=bool)
    label_emb = np.zeros((batch, max_parts, text_dim))
    image_emb = np.zeros((batch, image_dim))
    order_idx = np.zeros((batch, max_parts), dtype=np.int64)

    for b, program in enumerate(programs):
        image_emb[b] = program.image_embedding
        for m, part in enumerate(program.parts):
            n = len(part.types)
            types[b, m, :n] = part.types
            slots[b, m, :n] = part.slots
            slot_mask[b, m, :n] = part.mask
            bin_targets[b, m, :n] = quantize_slots(part.slots, bins)
            cmd_pad[b, m, :n] = False
            part_pad[b, m] = False
            label_emb[b, m] = part.label_embedding
            order_idx[b, m] = m

    return PartBatch(
        types=torch.from_numpy(types),
        slots=torch.from_numpy(slots).to(dtype),
        slot_mask=torch.from_numpy(slot_mask),
        bin_targets=torch.from_numpy(bin_targets),
        cmd_pad=torch.from_numpy(cmd_pad),
        part_pad=torch.from_numpy(part_pad),
        label_emb=torch.from_numpy(label_emb).to(dtype),
        image_emb=torch.from_numpy(image_emb).to(dtype),
        order_idx=torch.from_numpy(order_idx),
    )


def batches(programs, batch_size: int, seed: int, bins: int = 256, dtype=torch.float32):
    """Shuffled minibatches, deterministic per (seed, epoch counter)."""
    rng = np.random.default_rng(seed)
    epoch = 0
    while True:
        order = rng.permutation(len(programs))
        for start in range(0, len(order), batch_size):
            chosen = [programs[i] for i in order[start : start + batch_size]]
            yield collate(chosen, bins=bins, dtype=dtype)
        epoch += 1


def sinusoidal_table(length: int, dim: int) -> np.ndarray:
    """Standard fixed positional encoding table (length, dim); dim must be even."""
    if dim % 2:
        raise ValueError("positional dimension must be even")
    position = np.arange(length)[:, None]
    div = np.exp(np.arange(0, dim, 2) * (-math.log(10000.0) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(position * div)
    table[:, 1::2] = np.cos(position * div)
    return table
