"""Training loop: masked examples, Adam, validation-based checkpointing.

A run is fully reproducible from its seed: parameter init, the train/val
split (done per sequence, so no melody contributes windows to both sides),
per-epoch mask draws, dropout and example shuffling all derive from it.
Validation masks are drawn once and reused so epochs stay comparable.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .dataset import MASK_POLICIES, batch_examples, make_examples
from .encoding import Corpus, Vocabulary, augment
from .errors import InvalidInputError, TrainingDivergedError, VocabularyMismatchError
from .model import AnticipationRNN, ModelConfig
from .numerics import AdamState, adam_step, backward


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    window: int = 32
    mask_policy: str = "uniform"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    validation_fraction: float = 0.1
    seed: int = 0
    augment_corpus: bool = False
    checkpoint_path: str | Path | None = None

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.window < 2:
            raise InvalidInputError("bad epochs/batch_size/window")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise InvalidInputError("validation fraction must lie in [0, 1)")
        if self.mask_policy not in MASK_POLICIES:
            raise InvalidInputError(f"mask policy must be one of {MASK_POLICIES}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_nll: float
    val_nll: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0  # 1-based; 0 means no epochs ran

    def to_text(self) -> str:
        lines = ["# epoch train_nll val_nll seconds"]
        for e in self.epochs:
            lines.append(f"{e.epoch} {e.train_nll!r} {e.val_nll!r} {e.seconds:.3f}")
        lines.append(f"# best_epoch {self.best_epoch}")
        return "\n".join(lines) + "\n"


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([seed, *tags])


def _split_corpus(corpus: Corpus, fraction: float, rng: np.random.Generator):
    n = len(corpus)
    order = rng.permutation(n)
    n_val = int(round(n * fraction))
    if fraction > 0 and n_val == 0 and n > 1:
        n_val = 1
    val_idx = set(order[:n_val].tolist())
    train = tuple(corpus.sequences[i] for i in range(n) if i not in val_idx)
    val = tuple(corpus.sequences[i] for i in range(n) if i in val_idx)
    return Corpus(train, corpus.name + "/train"), Corpus(val, corpus.name + "/val")


def _check_vocab_covers(vocab: Vocabulary, corpus: Corpus) -> None:
    for seq in corpus.sequences:
        for tok in seq.tokens:
            if tok.surface not in vocab:
                raise VocabularyMismatchError(f"token {tok.surface!r} not in model vocabulary")


def _mean_nll(model: AnticipationRNN, batches) -> float:
    total = 0.0
    count = 0
    for b in batches:
        n_valid = int(b.valid.sum())
        loss = model.forward_loss(b, train=False)
        total += float(loss.value) * n_valid
        count += n_valid
    return total / count


def train(
    corpus: Corpus, model_config: ModelConfig, config: TrainConfig
) -> tuple[AnticipationRNN, TrainReport]:
    """Train on the corpus; returns the best-validation model and the report.

    The model config's vocab_size is replaced with the size of the
    vocabulary actually built from the (optionally augmented) corpus.
    """
    if len(corpus) == 0:
        raise InvalidInputError("cannot train on an empty corpus")

    if config.augment_corpus:
        corpus, _ = augment(corpus)
    vocab = Vocabulary.from_corpus(corpus)
    model_config = dataclasses.replace(model_config, vocab_size=len(vocab))

    model = AnticipationRNN(model_config, vocab)
    model.init_params(seed=int(_rng(config.seed, 0).integers(2**31)))

    train_corpus, val_corpus = _split_corpus(corpus, config.validation_fraction, _rng(config.seed, 1))
    if len(train_corpus) == 0:
        train_corpus = corpus

    val_batches = []
    if len(val_corpus) > 0:
        val_examples = list(
            make_examples(val_corpus, vocab, config.window, _rng(config.seed, 2), config.mask_policy)
        )
        val_batches = batch_examples(val_examples, config.batch_size)

    opt = AdamState(
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )

    report = TrainReport()
    best_values: dict[str, np.ndarray] | None = None
    best_val = np.inf
    step = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        mask_rng = _rng(config.seed, 3, epoch)
        drop_rng = _rng(config.seed, 4, epoch)
        examples = list(
            make_examples(train_corpus, vocab, config.window, mask_rng, config.mask_policy)
        )
        order = mask_rng.permutation(len(examples))
        batches = batch_examples([examples[i] for i in order], config.batch_size)

        total = 0.0
        count = 0
        for b in batches:
            step += 1
            model.store.zero_grad()
            loss = model.forward_loss(b, train=True, rng=drop_rng)
            if not np.isfinite(loss.value):
                raise TrainingDivergedError(step)
            backward(loss)
            if config.clip_norm > 0:
                model.store.clip_grad_global_norm(config.clip_norm)
            adam_step(model.store, opt)
            n_valid = int(b.valid.sum())
            total += float(loss.value) * n_valid
            count += n_valid

        train_nll = total / count
        val_nll = _mean_nll(model, val_batches) if val_batches else float("nan")
        seconds = time.perf_counter() - t0
        report.epochs.append(EpochStats(epoch, train_nll, val_nll, seconds))

        metric = val_nll if val_batches else train_nll
        if metric < best_val:
            best_val = metric
            best_values = model.store.snapshot()
            report.best_epoch = epoch

    if best_values is not None:
        model.store.load_values(best_values)
    if config.checkpoint_path is not None:
        save_checkpoint(model, config.checkpoint_path)
    return model, report


def evaluate_nll(
    model: AnticipationRNN,
    corpus: Corpus,
    mask_policy: str = "none",
    window: int = 32,
    seed: int = 0,
) -> float:
    """Teacher-forced mean NLL per valid position, dropout off, deterministic."""
    if len(corpus) == 0:
        raise InvalidInputError("cannot evaluate on an empty corpus")
    if mask_policy not in MASK_POLICIES:
        raise InvalidInputError(f"mask policy must be one of {MASK_POLICIES}")
    _check_vocab_covers(model.vocab, corpus)
    examples = list(make_examples(corpus, model.vocab, window, _rng(seed, 7), mask_policy))
    return _mean_nll(model, batch_examples(examples, 64))
