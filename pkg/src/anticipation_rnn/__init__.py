"""Constraint-aware melody generation.

A backward constraint-summary LSTM conditions a forward token LSTM, so
left-to-right sampling can anticipate user-pinned notes at future positions.
"""

__version__ = "0.1.0"

from .checkpoint import load_checkpoint, save_checkpoint
from .encoding import Corpus, MelodySequence, Token, Vocabulary, parse_corpus
from .model import AnticipationRNN, CellCounter, ModelConfig
from .sampler import ConstraintSet, GenerationRecord, generate
from .trainer import TrainConfig, TrainReport, evaluate_nll, train

__all__ = [
    "__version__",
    "AnticipationRNN",
    "ModelConfig",
    "CellCounter",
    "Vocabulary",
    "Token",
    "MelodySequence",
    "Corpus",
    "parse_corpus",
    "ConstraintSet",
    "GenerationRecord",
    "generate",
    "TrainConfig",
    "TrainReport",
    "train",
    "evaluate_nll",
    "save_checkpoint",
    "load_checkpoint",
]
