"""Emit predictions as toolchain token JSON: ground-truth structure with
model-predicted slot values, decodable by ``skexcad decode``."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .data import ProgramRecord, collate
from .model import TrAssembler


def predict_slots(model: TrAssembler, program: ProgramRecord) -> list[np.ndarray]:
    """Per-part predicted slot arrays (N, 12), masked slots exactly zero."""
    model.eval()
    batch = collate([program], bins=model.config.bins, dtype=next(model.parameters()).dtype)
    with torch.no_grad():
        preds = model(batch)
    if model.config.head == "quantized":
        bins = model.config.bins
        idx = preds.argmax(dim=-1)
        preds = (idx.to(preds.dtype) + 0.5) / bins * 2.0 - 1.0  # bin centers
    preds = preds.clamp(-1.0, 1.0)
    out = []
    for m, part in enumerate(program.parts):
        n = len(part.types)
        slots = preds[0, m, :n].cpu().numpy().astype(float)
        slots[~part.mask] = 0.0
        out.append(slots)
    model.train()
    return out


def write_prediction_json(gt_tokens_path, slot_arrays, out_path) -> None:
    """Clone the ground-truth token file with slots replaced by predictions.

    The ground-truth file's part order is preserved; slot_arrays must follow
    the *sorted* part order used by the data loader, so re-align by center.
    """
    data = json.loads(Path(gt_tokens_path).read_text(encoding="utf-8"))
    order = sorted(
        range(len(data["parts"])),
        key=lambda i: (
            data["parts"][i]["center"][2],
            data["parts"][i]["center"][1],
            data["parts"][i]["center"][0],
        ),
    )
    if len(order) != len(slot_arrays):
        raise ValueError("prediction count does not match part count")
    for sorted_pos, part_idx in enumerate(order):
        record = data["parts"][part_idx]
        slots = slot_arrays[sorted_pos]
        if len(slots) != len(record["tokens"]):
            raise ValueError("prediction length does not match token count")
        for token, row in zip(record["tokens"], slots):
            token["slots"] = [float(v) for v in row]
    Path(out_path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
