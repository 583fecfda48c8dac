"""Training loop with atomic checkpoints and NaN diagnostics."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .config import ModelConfig
from .data import batches, collate
from .model import TrAssembler, bin_accuracy, masked_cross_entropy, masked_mse


class TrainingDiverged(RuntimeError):
    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss} at step {step}")
        self.step = step


@dataclass
class TrainResult:
    losses: list[float]          # one entry per step
    epoch_losses: list[float]    # mean loss per completed pass over the data
    final_loss: float
    steps: int


def loss_fn(model: TrAssembler, batch):
    preds = model(batch)
    if model.config.head == "continuous":
        return masked_mse(preds, batch.slots, batch.slot_mask)
    return masked_cross_entropy(preds, batch.bin_targets, batch.slot_mask)


def train(
    programs,
    config: ModelConfig,
    steps: int,
    seed: int = 0,
    checkpoint_path=None,
    device: str = "cpu",
    log_every: int = 0,
) -> tuple[TrAssembler, TrainResult]:
    """Minimize the masked slot loss for a fixed number of steps.

    Deterministic given the seed: model init, batch order and optimizer all
    derive from it.  Raises TrainingDiverged on a non-finite loss.
    """
    torch.manual_seed(seed)
    model = TrAssembler(config).to(device)
    opt = torch.optim.Adam(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)

    steps_per_epoch = max(1, (len(programs) + config.batch_size - 1) // config.batch_size)
    losses = []
    epoch_losses = []
    stream = batches(programs, config.batch_size, seed=seed, bins=config.bins)
    running = []
    for step in range(steps):
        batch = next(stream).to(device)
        opt.zero_grad()
        loss = loss_fn(model, batch)
        if not torch.isfinite(loss):
            raise TrainingDiverged(step, loss.item())
        loss.backward()
        opt.step()
        losses.append(loss.item())
        running.append(losses[-1])
        if len(running) == steps_per_epoch:
            epoch_losses.append(sum(running) / len(running))
            running = []
        if log_every and (step + 1) % log_every == 0:
            print(f"step {step + 1}/{steps} loss {losses[-1]:.6f}")

    result = TrainResult(
        losses=losses,
        epoch_losses=epoch_losses,
        final_loss=losses[-1],
        steps=steps,
    )
    if checkpoint_path is not None:
        save_checkpoint(model, config, checkpoint_path, extra={"final_loss": result.final_loss})
    return model, result


def evaluate(model: TrAssembler, programs, device: str = "cpu") -> dict:
    """Full-dataset loss (and bin accuracy for the quantized head)."""
    model.eval()
    batch = collate(programs, bins=model.config.bins).to(device)
    with torch.no_grad():
        preds = model(batch)
        out = {}
        if model.config.head == "continuous":
            out["masked_mse"] = float(masked_mse(preds, batch.slots, batch.slot_mask))
        else:
            out["masked_ce"] = float(
                masked_cross_entropy(preds, batch.bin_targets, batch.slot_mask)
            )
            out["bin_accuracy"] = bin_accuracy(preds, batch.bin_targets, batch.slot_mask)
    model.train()
    return out


def save_checkpoint(model: TrAssembler, config: ModelConfig, path, extra=None) -> None:
    """Write-temp-then-rename so a crash never leaves a torn checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "state_dict": model.state_dict(),
        "config": asdict(config),
        "extra": extra or {},
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path, device: str = "cpu") -> tuple[TrAssembler, dict]:
    payload = torch.load(path, map_location=device, weights_only=False)
    config = ModelConfig(**payload["config"])
    model = TrAssembler(config).to(device)
    model.load_state_dict(payload["state_dict"])
    return model, payload.get("extra", {})


def write_loss_curve(result: TrainResult, path) -> None:
    Path(path).write_text(
        json.dumps(
            {"losses": result.losses, "epoch_losses": result.epoch_losses},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
