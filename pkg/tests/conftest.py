"""Shared fixtures: two trained desk-scale models used across test modules.

Training runs once per session (about a minute total); every test needing a
trained checkpoint shares these.
"""

import numpy as np
import pytest

from anticipation_rnn.model import ModelConfig
from anticipation_rnn.sampler import ConstraintSet
from anticipation_rnn.synthetic import default_chain, tiny_chain
from anticipation_rnn.trainer import TrainConfig, train

# canonical desk experiment: 5-pitch chain, half-beat notes, 16-token melodies
DESK_NOTES = 8
DESK_WINDOW = 17  # 16 tokens plus the END slot
DESK_PINS = ((5, "A4"), (11, "C4"))

# small 3-pitch chain for exact enumeration: 6-token melodies, window 7
TINY_NOTES = 6
TINY_WINDOW = 7


@pytest.fixture(scope="session")
def desk_chain():
    return default_chain()


@pytest.fixture(scope="session")
def desk_corpus(desk_chain):
    return desk_chain.sample_corpus(2000, DESK_NOTES, seed=5)


@pytest.fixture(scope="session")
def desk_heldout(desk_chain):
    return desk_chain.sample_corpus(300, DESK_NOTES, seed=999)


@pytest.fixture(scope="session")
def desk_model(desk_corpus):
    config = ModelConfig(
        vocab_size=1,
        token_embed_dim=20,
        constraint_embed_dim=20,
        constraint_hidden=32,
        token_hidden=32,
        dropout=0.2,
    )
    train_config = TrainConfig(
        epochs=30,
        batch_size=16,
        window=DESK_WINDOW,
        mask_policy="uniform",
        learning_rate=3e-3,
        validation_fraction=0.1,
        seed=5,
    )
    model, report = train(desk_corpus, config, train_config)
    assert report.best_epoch > 0
    return model


@pytest.fixture(scope="session")
def desk_constraints(desk_model):
    return ConstraintSet.of(DESK_PINS, DESK_WINDOW)


@pytest.fixture(scope="session")
def tiny_chain_model():
    return tiny_chain()


@pytest.fixture(scope="session")
def tiny_model(tiny_chain_model):
    corpus = tiny_chain_model.sample_corpus(1500, TINY_NOTES, seed=21)
    config = ModelConfig(
        vocab_size=1,
        token_embed_dim=16,
        constraint_embed_dim=16,
        constraint_hidden=32,
        token_hidden=32,
        dropout=0.2,
    )
    train_config = TrainConfig(
        epochs=25,
        batch_size=16,
        window=TINY_WINDOW,
        mask_policy="uniform",
        learning_rate=3e-3,
        validation_fraction=0.1,
        seed=9,
    )
    model, _ = train(corpus, config, train_config)
    return model


def make_random_batch(model, batch_size: int, length: int, seed: int, mask_rate: float = 0.5):
    """Random teacher-forcing batch over the model's melody alphabet."""
    from anticipation_rnn.dataset import Batch

    rng = np.random.default_rng(seed)
    vocab = model.vocab
    melody = np.array(vocab.melody_ids())
    targets = rng.choice(melody, size=(batch_size, length))
    inputs = np.concatenate(
        [np.full((batch_size, 1), vocab.start_id, dtype=np.int64), targets[:, :-1]], axis=1
    )
    cids = np.where(rng.random((batch_size, length)) < mask_rate, targets, vocab.nc_id)
    return Batch(inputs, cids, targets, np.ones((batch_size, length), dtype=bool))
