"""Hierarchical transformer predicting continuous CAD command attributes,
conditioned on labeled discrete structure, images and part order."""

from .config import ModelConfig, COMMAND_TYPES, N_SLOTS
from .data import PartBatch, ProgramRecord, collate, load_dataset, load_program, quantize_slots
from .model import TrAssembler, bin_accuracy, masked_cross_entropy, masked_mse
from .train import (
    TrainingDiverged,
    TrainResult,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .datagen import build_dataset, synthetic_program_text
from .predict import predict_slots, write_prediction_json

__version__ = "0.1.0"
