import numpy as np
import pytest
import torch

from trassembler import ModelConfig, TrAssembler, collate, masked_cross_entropy, masked_mse
from trassembler.data import quantize_slots, sinusoidal_table

from conftest import toy_batch, toy_config, toy_program


def test_config_rejects_indivisible_heads():
    with pytest.raises(ValueError):
        ModelConfig(token_dim=250, heads=8)


def test_default_config_matches_reference_sizes():
    cfg = ModelConfig()
    assert cfg.token_dim == 256
    assert cfg.heads == 8
    assert cfg.image_dim == cfg.text_dim == 512
    assert cfg.batch_size == 64
    assert cfg.lr == 3e-4
    assert cfg.weight_decay == 1e-6


def test_encode_part_shapes_and_sum():
    torch.manual_seed(0)
    model = TrAssembler(toy_config())
    types = torch.randint(0, 6, (1, 1, 5))
    tokens, part_token = model.encode_part(types)
    assert tokens.shape == (1, 1, 5, 32)
    assert part_token.shape == (1, 1, 32)
    assert torch.allclose(part_token, tokens.sum(dim=-2), atol=1e-6)


def test_single_command_part_token_equals_its_token():
    torch.manual_seed(0)
    model = TrAssembler(toy_config())
    types = torch.randint(0, 6, (1, 1, 1))
    tokens, part_token = model.encode_part(types)
    assert torch.allclose(part_token, tokens[:, :, 0], atol=1e-7)


def test_permuting_commands_changes_part_token():
    torch.manual_seed(1)
    model = TrAssembler(toy_config())
    types = torch.tensor([[[1, 2, 3, 4]]])
    _, original = model.encode_part(types)
    _, permuted = model.encode_part(types.flip(-1))
    assert not torch.allclose(original, permuted, atol=1e-6)


def test_full_forward_shapes_at_dataset_maxima():
    torch.manual_seed(2)
    cfg = ModelConfig()  # real sizes: 256-dim tokens, 8 heads
    model = TrAssembler(cfg)
    rng = np.random.default_rng(0)
    for m, n in [(1, 1), (15, 110), (4, 17)]:
        programs = [
            toy_program(int(rng.integers(1 << 30)), n_parts=m, n_cmds=(n,), dims=(512, 512))
        ]
        batch = collate(programs, bins=cfg.bins)
        out = model(batch)
        assert out.shape == (1, m, n, 12)


def test_quantized_head_shape():
    cfg = toy_config(head="quantized")
    model = TrAssembler(cfg)
    batch = toy_batch(bins=cfg.bins)
    out = model(batch)
    assert out.shape == (*batch.types.shape, 12, cfg.bins)


def test_heads_share_encoder_shapes():
    cont = TrAssembler(toy_config(head="continuous"))
    quant = TrAssembler(toy_config(head="quantized"))
    cont_shapes = {k: tuple(v.shape) for k, v in cont.state_dict().items() if not k.startswith("head.")}
    quant_shapes = {k: tuple(v.shape) for k, v in quant.state_dict().items() if not k.startswith("head.")}
    assert cont_shapes == quant_shapes


def test_global_encode_permutation_equivariance():
    torch.manual_seed(3)
    model = TrAssembler(toy_config()).eval()
    b, m, d = 1, 4, 32
    part_tokens = torch.randn(b, m, d)
    image = torch.randn(b, 16)
    labels = torch.randn(b, m, 16)
    order = torch.arange(m).unsqueeze(0)
    out = model.global_encode(part_tokens, image, labels, order)

    perm = torch.tensor([2, 0, 3, 1])
    out_perm = model.global_encode(
        part_tokens[:, perm], image, labels[:, perm], order[:, perm]
    )
    assert torch.allclose(out[:, perm], out_perm, atol=1e-5)


def test_image_conditioning_is_live():
    torch.manual_seed(4)
    model = TrAssembler(toy_config()).eval()
    batch = toy_batch(seed=5)
    with torch.no_grad():
        base = model(batch)
        zeroed = batch.clone()
        zeroed.image_emb.zero_()
        changed = model(zeroed)
    assert not torch.allclose(base, changed, atol=1e-6)


def test_label_conditioning_is_live():
    torch.manual_seed(4)
    model = TrAssembler(toy_config()).eval()
    batch = toy_batch(seed=6)
    with torch.no_grad():
        base = model(batch)
        batch.label_emb.add_(1.0)
        changed = model(batch)
    assert not torch.allclose(base, changed, atol=1e-6)


def test_masked_loss_ignores_masked_targets():
    torch.manual_seed(5)
    model = TrAssembler(toy_config())
    batch = toy_batch(seed=7)
    preds = model(batch)
    loss = masked_mse(preds, batch.slots, batch.slot_mask)
    # perturb a masked target: the loss must not move at all
    perturbed = batch.slots.clone()
    masked_positions = (~batch.slot_mask).nonzero()
    i = tuple(masked_positions[0])
    perturbed[i] += 123.0
    assert masked_mse(preds, perturbed, batch.slot_mask) == loss


def test_masked_loss_zero_gradient_for_masked_slots():
    torch.manual_seed(6)
    model = TrAssembler(toy_config())
    batch = toy_batch(seed=8)
    preds = model(batch)
    preds.retain_grad()
    loss = masked_mse(preds, batch.slots, batch.slot_mask)
    loss.backward()
    grads_on_masked = preds.grad[~batch.slot_mask]
    assert torch.all(grads_on_masked == 0)


def test_padding_does_not_affect_real_outputs():
    torch.manual_seed(7)
    model = TrAssembler(toy_config()).eval()
    small = toy_program(11, n_parts=2, n_cmds=(3, 4), dims=(16, 16))
    big = toy_program(12, n_parts=3, n_cmds=(7, 7, 7), dims=(16, 16))
    alone = collate([small], bins=16)
    padded = collate([small, big], bins=16)
    with torch.no_grad():
        out_alone = model(alone)
        out_padded = model(padded)
    n, m = alone.types.shape[2], alone.types.shape[1]
    assert torch.allclose(out_alone[0, :m, :n], out_padded[0, :m, :n], atol=1e-5)


def test_quantize_slots_matches_uniform_bins():
    slots = np.array([[-1.0, 1.0, 0.0, 0.999, -0.999] + [0.0] * 7])
    idx = quantize_slots(slots, 256)
    assert idx[0, 0] == 0
    assert idx[0, 1] == 255
    assert idx[0, 2] == 128
    assert idx[0, 3] == 255
    assert idx[0, 4] == 0


def test_quantized_loss_runs():
    cfg = toy_config(head="quantized")
    model = TrAssembler(cfg)
    batch = toy_batch(seed=9, bins=cfg.bins)
    logits = model(batch)
    loss = masked_cross_entropy(logits, batch.bin_targets, batch.slot_mask)
    assert torch.isfinite(loss)


def test_sinusoidal_table_shape_and_range():
    table = sinusoidal_table(50, 16)
    assert table.shape == (50, 16)
    assert np.abs(table).max() <= 1.0
    assert not np.allclose(table[0], table[1])
