"""Shared fixtures: a synthetic token dataset built once through the CAD
toolchain CLI, plus a hand-rolled toy batch that needs no toolchain at all."""

import numpy as np
import pytest
import torch

from trassembler import ModelConfig, ProgramRecord, collate, datagen, load_dataset
from trassembler.data import PartRecord


@pytest.fixture(scope="session")
def overfit_dataset(tmp_path_factory):
    """32 synthetic programs encoded to token JSON (the overfit corpus)."""
    root = tmp_path_factory.mktemp("overfit_data")
    datagen.build_dataset(root, 32, seed=0)
    return root, load_dataset(root)


def toy_config(**overrides) -> ModelConfig:
    base = dict(
        token_dim=32,
        heads=2,
        pos_dim=8,
        order_dim=8,
        image_dim=16,
        text_dim=16,
        max_commands=16,
        max_parts=8,
        bins=16,
    )
    base.update(overrides)
    return ModelConfig(**base)


def toy_program(seed: int, n_parts: int = 2, n_cmds=(3, 4), dims=(16, 16)) -> ProgramRecord:
    """A synthetic ProgramRecord with random slots; no toolchain involved."""
    rng = np.random.default_rng(seed)
    image_dim, text_dim = dims
    parts = []
    for m in range(n_parts):
        n = n_cmds[m % len(n_cmds)]
        types = rng.integers(0, 6, size=n)
        slots = rng.uniform(-1, 1, size=(n, 12))
        mask = rng.random((n, 12)) < 0.5
        slots[~mask] = 0.0
        parts.append(
            PartRecord(
                label=f"part {m}",
                types=types.astype(np.int64),
                slots=slots,
                mask=mask,
                frame_forms=[None] * n,
                label_embedding=rng.normal(size=text_dim),
                center=rng.normal(size=3),
            )
        )
    parts.sort(key=lambda p: (p.center[2], p.center[1], p.center[0]))
    return ProgramRecord(
        key=f"toy_{seed}",
        parts=parts,
        image_embedding=rng.normal(size=image_dim),
        box_center=np.zeros(3),
        box_half_extent=1.0,
    )


def toy_batch(seed: int = 0, n_programs: int = 2, dtype=torch.float32, bins: int = 16):
    programs = [toy_program(seed + i, dims=(16, 16)) for i in range(n_programs)]
    return collate(programs, bins=bins, dtype=dtype)
