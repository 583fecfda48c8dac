"""Model and training configuration."""

from dataclasses import dataclass

COMMAND_TYPES = ("SOL", "Line", "Arc", "Circle", "ExtrudeNew", "ExtrudeCut")
N_SLOTS = 12


@dataclass
class ModelConfig:
    token_dim: int = 256
    heads: int = 8
    part_encoder_blocks: int = 1
    global_encoder_blocks: int = 1
    part_decoder_blocks: int = 1
    image_dim: int = 512
    text_dim: int = 512
    pos_dim: int = 64          # sinusoidal, concatenated to command tokens
    order_dim: int = 64        # learned, concatenated to part tokens
    max_commands: int = 128
    max_parts: int = 32
    head: str = "continuous"   # "continuous" (12 values) or "quantized" (12 x bins logits)
    bins: int = 256
    batch_size: int = 64
    lr: float = 3e-4
    weight_decay: float = 1e-6
    epochs: int = 50           # desk default; full runs use 300

    def __post_init__(self):
        if self.token_dim % self.heads != 0:
            raise ValueError(f"token_dim {self.token_dim} not divisible by heads {self.heads}")
        if self.head not in ("continuous", "quantized"):
            raise ValueError(f"unknown head {self.head!r}")
