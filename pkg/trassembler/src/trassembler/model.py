"""Hierarchical transformer over labeled CAD structure.

Three stages share one 256-dim token space:

  * part encoder: embeds command types through a learnable dictionary,
    concatenates a fixed positional encoding (projected back to the token
    width), runs self-attention over the command sequence, and sums the
    command tokens into one part token;
  * global encoder: concatenates each part token with the image embedding,
    the part-label embedding and a learned order embedding, projects back to
    the token width, and attends across parts;
  * part decoder: concatenates the refined part token onto every command
    token, attends across the part's commands, and an MLP head emits either
    12 continuous slot values or 12 x bins classification logits.

Each stage is the same block: layer norm, multi-head self-attention, then
three fully connected layers, wrapped in residual connections for stable
optimization.  Structure is input, attributes are output; parameter values
never feed back in.
"""

from __future__ import annotations

import torch
from torch import nn

from .config import ModelConfig, N_SLOTS
from .data import PartBatch, sinusoidal_table


def _safe_attention(attn: nn.MultiheadAttention, x, key_padding_mask):
    """Self-attention that tolerates fully padded rows (they attend position 0)."""
    if key_padding_mask is not None:
        all_masked = key_padding_mask.all(dim=-1)
        if all_masked.any():
            key_padding_mask = key_padding_mask.clone()
            key_padding_mask[all_masked, 0] = False
    out, _ = attn(x, x, x, key_padding_mask=key_padding_mask, need_weights=False)
    return out


class Block(nn.Module):
    """Layer norm -> self-attention -> three fully connected layers."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.fc = nn.Sequential(
            nn.Linear(dim, dim), nn.ReLU(), nn.Linear(dim, dim), nn.ReLU(), nn.Linear(dim, dim)
        )

    def forward(self, x, key_padding_mask=None):
        x = x + _safe_attention(self.attn, self.norm(x), key_padding_mask)
        return x + self.fc(x)


class TrAssembler(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.token_dim

        self.type_embed = nn.Embedding(6, d)
        table = torch.from_numpy(sinusoidal_table(config.max_commands, config.pos_dim))
        self.register_buffer("pos_table", table.to(torch.get_default_dtype()))
        self.in_proj = nn.Linear(d + config.pos_dim, d)
        self.part_blocks = nn.ModuleList(
            Block(d, config.heads) for _ in range(config.part_encoder_blocks)
        )

        self.order_embed = nn.Embedding(config.max_parts, config.order_dim)
        self.cond_proj = nn.Linear(
            d + config.image_dim + config.text_dim + config.order_dim, d
        )
        self.global_blocks = nn.ModuleList(
            Block(d, config.heads) for _ in range(config.global_encoder_blocks)
        )

        self.dec_proj = nn.Linear(2 * d, d)
        self.dec_blocks = nn.ModuleList(
            Block(d, config.heads) for _ in range(config.part_decoder_blocks)
        )
        out_dim = N_SLOTS if config.head == "continuous" else N_SLOTS * config.bins
        self.head = nn.Sequential(nn.Linear(d, d), nn.ReLU(), nn.Linear(d, out_dim))

    # --- stages -----------------------------------------------------------

    def encode_part(self, types, cmd_pad=None):
        """Command tokens and the summed part token.

        types: (..., N) long; cmd_pad: (..., N) bool marking padding.
        Returns (tokens (..., N, d), part_token (..., d)).
        """
        n = types.shape[-1]
        x = self.type_embed(types)
        pos = self.pos_table[:n].expand(*x.shape[:-2], n, -1)
        x = self.in_proj(torch.cat([x, pos], dim=-1))

        flat = x.reshape(-1, n, x.shape[-1])
        pad = None
        if cmd_pad is not None:
            pad = cmd_pad.reshape(-1, n)
        for block in self.part_blocks:
            flat = block(flat, key_padding_mask=pad)
        tokens = flat.reshape(*x.shape)
        if cmd_pad is not None:
            tokens = tokens * (~cmd_pad).unsqueeze(-1)
        part_token = tokens.sum(dim=-2)
        return tokens, part_token

    def global_encode(self, part_tokens, image_emb, label_emb, order_idx, part_pad=None):
        """Refine part tokens with image, label and order conditioning.

        part_tokens: (B, M, d); image_emb: (B, image_dim);
        label_emb: (B, M, text_dim); order_idx: (B, M) long.
        """
        m = part_tokens.shape[1]
        image = image_emb.unsqueeze(1).expand(-1, m, -1)
        order = self.order_embed(order_idx)
        x = self.cond_proj(torch.cat([part_tokens, image, label_emb, order], dim=-1))
        for block in self.global_blocks:
            x = block(x, key_padding_mask=part_pad)
        if part_pad is not None:
            x = x * (~part_pad).unsqueeze(-1)
        return x

    def decode_part(self, refined, tokens, cmd_pad=None):
        """Predict per-command attributes from refined part + command tokens.

        refined: (B, M, d); tokens: (B, M, N, d).
        Returns (B, M, N, 12) or (B, M, N, 12, bins).
        """
        b, m, n, d = tokens.shape
        paired = torch.cat([tokens, refined.unsqueeze(2).expand(-1, -1, n, -1)], dim=-1)
        x = self.dec_proj(paired).reshape(b * m, n, d)
        pad = cmd_pad.reshape(b * m, n) if cmd_pad is not None else None
        for block in self.dec_blocks:
            x = block(x, key_padding_mask=pad)
        out = self.head(x).reshape(b, m, n, -1)
        if self.config.head == "quantized":
            out = out.reshape(b, m, n, N_SLOTS, self.config.bins)
        return out

    def forward(self, batch: PartBatch):
        tokens, part_tokens = self.encode_part(batch.types, batch.cmd_pad)
        refined = self.global_encode(
            part_tokens, batch.image_emb, batch.label_emb, batch.order_idx, batch.part_pad
        )
        return self.decode_part(refined, tokens, batch.cmd_pad)


def masked_mse(preds, slots, slot_mask):
    """Mean squared error over active, unpadded slots only."""
    if not slot_mask.any():
        return preds.sum() * 0.0
    diff = (preds - slots)[slot_mask]
    return (diff * diff).mean()


def masked_cross_entropy(logits, bin_targets, slot_mask):
    """Cross-entropy over bins, restricted to active slots."""
    if not slot_mask.any():
        return logits.sum() * 0.0
    active_logits = logits[slot_mask]
    active_targets = bin_targets[slot_mask]
    return nn.functional.cross_entropy(active_logits, active_targets)


def bin_accuracy(logits, bin_targets, slot_mask):
    if not slot_mask.any():
        return 1.0
    pred = logits[slot_mask].argmax(dim=-1)
    return float((pred == bin_targets[slot_mask]).float().mean())
