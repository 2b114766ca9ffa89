import numpy as np
import pytest

from anticipation_rnn.checkpoint import load_checkpoint, save_checkpoint
from anticipation_rnn.encoding import Vocabulary
from anticipation_rnn.errors import InvalidInputError, StateError
from anticipation_rnn.model import AnticipationRNN, CellCounter, ModelConfig
from anticipation_rnn.numerics import finite_difference_check

from conftest import make_random_batch


@pytest.fixture
def vocab():
    return Vocabulary.from_surfaces(["C4", "D4", "E4", "G4", "A4"])


@pytest.fixture
def small_model(vocab):
    config = ModelConfig(
        vocab_size=len(vocab),
        token_embed_dim=5,
        constraint_embed_dim=5,
        constraint_hidden=8,
        token_hidden=8,
        dropout=0.2,
    )
    return AnticipationRNN.init_random(config, vocab, seed=2)


class TestConfig:
    def test_rejects_bad_dims(self, vocab):
        with pytest.raises(InvalidInputError):
            ModelConfig(vocab_size=0)
        with pytest.raises(InvalidInputError):
            ModelConfig(vocab_size=9, dropout=1.0)

    def test_vocab_size_must_match(self, vocab):
        with pytest.raises(InvalidInputError):
            AnticipationRNN(ModelConfig(vocab_size=3), vocab)


class TestConstraintSummary:
    def test_single_position(self, small_model):
        out = small_model.constraint_summary(np.array([[4]]))
        assert out.shape == (1, 1, 8)

    def test_backward_information_flow(self, small_model):
        # o_t reacts to future constraints and ignores past ones
        rng = np.random.default_rng(0)
        n = 9
        base = rng.integers(2, small_model.config.vocab_size, size=(1, n))
        o_base = small_model.constraint_summary(base)
        t = 5  # 1-based probe position
        for j in range(1, n + 1):
            changed = base.copy()
            changed[0, j - 1] = 3 if base[0, j - 1] != 3 else 4
            o_changed = small_model.constraint_summary(changed)
            delta = np.abs(o_changed[0, t - 1] - o_base[0, t - 1]).max()
            if j < t:
                assert delta == 0.0
            else:
                assert delta > 1e-12

    def test_processing_order_matters(self, small_model):
        cids = np.array([[4, 5, 6, 7]])
        backward_o = small_model.constraint_summary(cids)
        forward_o = small_model.constraint_summary(cids[:, ::-1])
        assert np.abs(backward_o[0, 0] - forward_o[0, -1]).max() > 1e-12

    def test_all_nc_is_deterministic(self, small_model):
        nc = small_model.all_nc_ids(6)
        a = small_model.constraint_summary(nc)
        b = small_model.constraint_summary(nc)
        np.testing.assert_array_equal(a, b)


class TestTokenStep:
    def test_zero_projection_gives_uniform(self, vocab):
        config = ModelConfig(
            vocab_size=len(vocab),
            token_embed_dim=5,
            constraint_embed_dim=5,
            constraint_hidden=8,
            token_hidden=8,
        )
        model = AnticipationRNN(config, vocab)  # all parameters zero
        probs = model.step_probabilities(model.all_nc_ids(3), np.array([[4, 5, 6]]))
        np.testing.assert_allclose(probs, 1.0 / len(vocab), atol=1e-15)

    def test_eval_mode_is_deterministic(self, small_model):
        o = small_model.constraint_summary(small_model.all_nc_ids(1))
        state = small_model.fresh_token_state(1)
        prev = np.array([0])
        a, _ = small_model.token_step(prev, o[:, 0], state)
        b, _ = small_model.token_step(prev, o[:, 0], state)
        np.testing.assert_array_equal(a, b)


class TestForwardLoss:
    def test_train_mode_requires_rng(self, small_model):
        batch = make_random_batch(small_model, 2, 4, seed=0)
        with pytest.raises(StateError):
            small_model.forward_loss(batch, train=True)

    def test_zero_dropout_train_equals_eval(self, vocab):
        config = ModelConfig(
            vocab_size=len(vocab),
            token_embed_dim=5,
            constraint_embed_dim=5,
            constraint_hidden=8,
            token_hidden=8,
            dropout=0.0,
        )
        model = AnticipationRNN.init_random(config, vocab, seed=4)
        batch = make_random_batch(model, 3, 5, seed=1)
        train_loss = model.forward_loss(batch, train=True, rng=np.random.default_rng(0))
        eval_loss = model.forward_loss(batch, train=False)
        assert float(train_loss.value) == float(eval_loss.value)

    def test_untrained_loss_near_log_vocab(self, small_model):
        batch = make_random_batch(small_model, 128, 12, seed=2, mask_rate=0.0)
        loss = float(small_model.forward_loss(batch).value)
        target = np.log(small_model.config.vocab_size)
        assert abs(loss - target) / target < 0.10

    def test_duplicated_example_keeps_loss(self, small_model):
        single = make_random_batch(small_model, 1, 6, seed=3)
        from anticipation_rnn.dataset import Batch

        k = 7
        dup = Batch(
            np.repeat(single.input_ids, k, axis=0),
            np.repeat(single.constraint_ids, k, axis=0),
            np.repeat(single.target_ids, k, axis=0),
            np.repeat(single.valid, k, axis=0),
        )
        a = float(small_model.forward_loss(single).value)
        b = float(small_model.forward_loss(dup).value)
        assert abs(a - b) < 1e-9

    def test_cell_step_accounting(self, small_model):
        for n in (1, 4, 9):
            batch = make_random_batch(small_model, 2, n, seed=n)
            counter = CellCounter()
            small_model.forward_loss(batch, counter=counter)
            assert counter.constraint_steps == n
            assert counter.token_steps == n
            assert counter.total == 2 * n

    def test_teacher_forced_probabilities_match_loss(self, small_model):
        batch = make_random_batch(small_model, 4, 6, seed=5)
        loss = float(small_model.forward_loss(batch).value)
        probs = small_model.step_probabilities(batch.constraint_ids, batch.target_ids)
        b, n = batch.target_ids.shape
        picked = probs[np.arange(b)[:, None], np.arange(n)[None, :], batch.target_ids]
        reference = float(-np.log(picked).mean())
        assert abs(loss - reference) < 1e-9


class TestGradientCheck:
    def test_full_model_gradients(self, vocab):
        config = ModelConfig(
            vocab_size=len(vocab),
            token_embed_dim=5,
            constraint_embed_dim=5,
            constraint_hidden=12,
            token_hidden=12,
            dropout=0.0,
        )
        model = AnticipationRNN(config, vocab)
        model.init_params(seed=11, scale=4.0)
        batch = make_random_batch(model, 4, 5, seed=6)
        error = finite_difference_check(
            lambda store: model.forward_loss(batch, train=False),
            model.store,
            epsilon=1e-5,
            samples=60,
            seed=1,
        )
        assert error <= 1e-4


class TestCheckpoint:
    def test_round_trip_bit_identical(self, small_model, tmp_path):
        path = tmp_path / "model.ckpt"
        save_checkpoint(small_model, path)
        loaded = load_checkpoint(path)
        assert loaded.config == small_model.config
        assert loaded.vocab.surfaces() == small_model.vocab.surfaces()
        for p in small_model.store.params():
            np.testing.assert_array_equal(loaded.store[p.name].value, p.value)

    def test_save_is_deterministic(self, small_model, tmp_path):
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(small_model, a)
        save_checkpoint(small_model, b)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(InvalidInputError):
            load_checkpoint(path)

    def test_rejects_truncation(self, small_model, tmp_path):
        path = tmp_path / "model.ckpt"
        save_checkpoint(small_model, path)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(InvalidInputError):
            load_checkpoint(path)
