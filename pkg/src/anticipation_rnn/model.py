"""Two-RNN architecture for constraint-aware left-to-right generation.

A constraint LSTM stack reads the dense constraint sequence backward (from
position N to 1) and emits one summary vector per position: o_t digests every
constraint at or after t. The token LSTM stack then runs forward; at step t
it consumes the previous token's embedding concatenated with o_t and predicts
the token at t. Generation therefore costs one backward constraint pass plus
one forward token pass: 2N cell time-steps for a length-N sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import Batch
from .encoding import Vocabulary
from .errors import InvalidInputError, StateError
from .numerics import (
    ParameterStore,
    Var,
    add,
    concat_cols,
    constant,
    hadamard_const,
    lstm_cell,
    matmul,
    rows,
    slice_cols,
    softmax_xent,
    stack_rows,
)


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    token_embed_dim: int = 20
    constraint_embed_dim: int = 20
    constraint_hidden: int = 256
    token_hidden: int = 256
    layers: int = 2
    dropout: float = 0.2

    def __post_init__(self):
        dims = (
            self.vocab_size,
            self.token_embed_dim,
            self.constraint_embed_dim,
            self.constraint_hidden,
            self.token_hidden,
            self.layers,
        )
        if any(d < 1 for d in dims):
            raise InvalidInputError("all model dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidInputError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "token_embed_dim": self.token_embed_dim,
            "constraint_embed_dim": self.constraint_embed_dim,
            "constraint_hidden": self.constraint_hidden,
            "token_hidden": self.token_hidden,
            "layers": self.layers,
            "dropout": self.dropout,
        }


@dataclass
class CellCounter:
    """Per-generation instrumentation: cell time-steps taken by each stack."""

    constraint_steps: int = 0
    token_steps: int = 0

    @property
    def total(self) -> int:
        return self.constraint_steps + self.token_steps


@dataclass
class StepDistribution:
    """Categorical next-token distribution at one generation step."""

    logits: np.ndarray
    probs: np.ndarray


def _lstm_param_names(prefix: str, layers: int) -> list[tuple[str, str, str]]:
    return [(f"{prefix}{l}_wx", f"{prefix}{l}_wh", f"{prefix}{l}_b") for l in range(layers)]


class AnticipationRNN:
    """Constraint-summary LSTM plus token LSTM over one shared vocabulary."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary):
        if len(vocab) != config.vocab_size:
            raise InvalidInputError(
                f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}"
            )
        self.config = config
        self.vocab = vocab
        self.store = ParameterStore()
        self._build_params()

    # -- parameters ---------------------------------------------------------

    def _build_params(self) -> None:
        cfg = self.config
        V = cfg.vocab_size
        self.store.add("token_embed", np.zeros((V, cfg.token_embed_dim)))
        self.store.add("constraint_embed", np.zeros((V, cfg.constraint_embed_dim)))
        in_dim = cfg.constraint_embed_dim
        for wx, wh, b in _lstm_param_names("constraint_lstm", cfg.layers):
            self.store.add(wx, np.zeros((in_dim, 4 * cfg.constraint_hidden)))
            self.store.add(wh, np.zeros((cfg.constraint_hidden, 4 * cfg.constraint_hidden)))
            self.store.add(b, np.zeros(4 * cfg.constraint_hidden))
            in_dim = cfg.constraint_hidden
        in_dim = cfg.token_embed_dim + cfg.constraint_hidden
        for wx, wh, b in _lstm_param_names("token_lstm", cfg.layers):
            self.store.add(wx, np.zeros((in_dim, 4 * cfg.token_hidden)))
            self.store.add(wh, np.zeros((cfg.token_hidden, 4 * cfg.token_hidden)))
            self.store.add(b, np.zeros(4 * cfg.token_hidden))
            in_dim = cfg.token_hidden
        self.store.add("out_w", np.zeros((cfg.token_hidden, V)))
        self.store.add("out_b", np.zeros(V))

    def init_params(self, seed: int, scale: float = 1.5) -> None:
        """Unit-normal embeddings, uniform +-scale/sqrt(fan_in) weights,
        zero biases with forget gates at 1.

        The default scale sits a little above the textbook 1/sqrt(fan_in)
        bound: the gradient path from the loss to the constraint stack runs
        through four LSTM layers, and with smaller weights its early signal
        is too weak for the model to ever start reading the constraints.
        """
        rng = np.random.default_rng(seed)
        for p in self.store.params():
            if p.name.endswith("_b") or p.name == "out_b":
                p.value.fill(0.0)
                if p.name.endswith("_b"):
                    hdim = p.value.shape[0] // 4
                    p.value[hdim : 2 * hdim] = 1.0
                continue
            if p.name.endswith("_embed"):
                p.value[...] = rng.standard_normal(p.value.shape)
                continue
            fan_in = p.value.shape[0]
            bound = scale / np.sqrt(fan_in)
            p.value[...] = rng.uniform(-bound, bound, size=p.value.shape)

    @classmethod
    def init_random(cls, config: ModelConfig, vocab: Vocabulary, seed: int) -> "AnticipationRNN":
        model = cls(config, vocab)
        model.init_params(seed)
        return model

    # -- recorded-graph forward (training) ----------------------------------

    def _stack_step_tape(self, x: Var, states: list[Var], prefix: str) -> tuple[list[Var], Var]:
        cfg = self.config
        new_states = []
        for wx_n, wh_n, b_n in _lstm_param_names(prefix, cfg.layers):
            wh = self.store[wh_n]
            hdim = wh.value.shape[0]
            hc_prev = states[len(new_states)]
            h_prev = slice_cols(hc_prev, 0, hdim)
            c_prev = slice_cols(hc_prev, hdim, 2 * hdim)
            preact = add(add(matmul(x, self.store[wx_n]), matmul(h_prev, wh)), self.store[b_n])
            hc = lstm_cell(preact, c_prev)
            new_states.append(hc)
            x = slice_cols(hc, 0, hdim)
        return new_states, x

    def _constraint_pass_tape(self, constraint_ids: np.ndarray, counter: CellCounter | None) -> list[Var]:
        """Backward pass over constraints; returns [o_1, ..., o_N] as Vars."""
        cfg = self.config
        B, N = constraint_ids.shape
        states = [constant(np.zeros((B, 2 * cfg.constraint_hidden))) for _ in range(cfg.layers)]
        outputs: list[Var | None] = [None] * N
        for t in range(N, 0, -1):
            emb = rows(self.store["constraint_embed"], constraint_ids[:, t - 1])
            states, top_h = self._stack_step_tape(emb, states, "constraint_lstm")
            outputs[t - 1] = top_h
        if counter is not None:
            counter.constraint_steps += N
        return outputs  # type: ignore[return-value]

    def forward_loss(
        self,
        batch: Batch,
        train: bool = False,
        rng: np.random.Generator | None = None,
        counter: CellCounter | None = None,
    ) -> Var:
        """Teacher-forced mean NLL over the batch's valid positions."""
        cfg = self.config
        if train and rng is None:
            raise StateError("train mode requires an rng for dropout")
        B, N = batch.input_ids.shape
        o_vars = self._constraint_pass_tape(batch.constraint_ids, counter)

        states = [constant(np.zeros((B, 2 * cfg.token_hidden))) for _ in range(cfg.layers)]
        top_hs: list[Var] = []
        for t in range(1, N + 1):
            emb = rows(self.store["token_embed"], batch.input_ids[:, t - 1])
            x = concat_cols(emb, o_vars[t - 1])
            if train and cfg.dropout > 0.0:
                keep = rng.random(x.value.shape) >= cfg.dropout
                x = hadamard_const(x, keep / (1.0 - cfg.dropout))
            states, top_h = self._stack_step_tape(x, states, "token_lstm")
            top_hs.append(top_h)
        if counter is not None:
            counter.token_steps += N

        hs = stack_rows(top_hs)  # (N*B, H), t-major
        logits = add(matmul(hs, self.store["out_w"]), self.store["out_b"])
        targets = batch.target_ids.T.reshape(-1)
        valid = batch.valid.T.reshape(-1)
        return softmax_xent(logits, targets, valid)

    # -- raw array forward (inference) ---------------------------------------

    def constraint_summary(
        self, constraint_ids: np.ndarray, counter: CellCounter | None = None
    ) -> np.ndarray:
        """o vectors for a (B, N) id array; o[:, t-1] summarizes c_t..c_N."""
        cfg = self.config
        constraint_ids = np.atleast_2d(np.asarray(constraint_ids, dtype=np.int64))
        B, N = constraint_ids.shape
        embed = self.store["constraint_embed"].value
        h = [np.zeros((B, cfg.constraint_hidden)) for _ in range(cfg.layers)]
        c = [np.zeros((B, cfg.constraint_hidden)) for _ in range(cfg.layers)]
        out = np.empty((B, N, cfg.constraint_hidden))
        names = _lstm_param_names("constraint_lstm", cfg.layers)
        for t in range(N, 0, -1):
            x = embed[constraint_ids[:, t - 1]]
            for l, (wx_n, wh_n, b_n) in enumerate(names):
                preact = (
                    x @ self.store[wx_n].value + h[l] @ self.store[wh_n].value
                ) + self.store[b_n].value
                h[l], c[l], _ = kernels.lstm_cell_forward(preact, c[l])
                x = h[l]
            out[:, t - 1] = x
        if counter is not None:
            counter.constraint_steps += N
        return out

    def fresh_token_state(self, batch_size: int) -> list[tuple[np.ndarray, np.ndarray]]:
        cfg = self.config
        return [
            (np.zeros((batch_size, cfg.token_hidden)), np.zeros((batch_size, cfg.token_hidden)))
            for _ in range(cfg.layers)
        ]

    def token_step(
        self,
        prev_ids: np.ndarray,
        o_t: np.ndarray,
        state: list[tuple[np.ndarray, np.ndarray]],
        counter: CellCounter | None = None,
    ) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
        """One forward step (eval mode, no dropout); returns (logits, state)."""
        cfg = self.config
        prev_ids = np.asarray(prev_ids, dtype=np.int64)
        x = np.concatenate([self.store["token_embed"].value[prev_ids], o_t], axis=1)
        new_state = []
        for l, (wx_n, wh_n, b_n) in enumerate(_lstm_param_names("token_lstm", cfg.layers)):
            h_prev, c_prev = state[l]
            preact = (
                x @ self.store[wx_n].value + h_prev @ self.store[wh_n].value
            ) + self.store[b_n].value
            h, c, _ = kernels.lstm_cell_forward(preact, c_prev)
            new_state.append((h, c))
            x = h
        logits = x @ self.store["out_w"].value + self.store["out_b"].value
        if counter is not None:
            counter.token_steps += 1
        return logits, new_state

    def step_probabilities(
        self,
        constraint_ids: np.ndarray,
        token_ids: np.ndarray,
        counter: CellCounter | None = None,
    ) -> np.ndarray:
        """Teacher-forced per-step distributions, shape (B, N, V).

        token_ids holds the realized tokens s_1..s_N per row; the input at
        step t is START for t=1 and s_{t-1} after.
        """
        constraint_ids = np.atleast_2d(np.asarray(constraint_ids, dtype=np.int64))
        token_ids = np.atleast_2d(np.asarray(token_ids, dtype=np.int64))
        if constraint_ids.shape != token_ids.shape:
            raise InvalidInputError("constraint and token id arrays must match in shape")
        B, N = token_ids.shape
        o = self.constraint_summary(constraint_ids, counter)
        state = self.fresh_token_state(B)
        prev = np.full(B, self.vocab.start_id, dtype=np.int64)
        probs = np.empty((B, N, self.config.vocab_size))
        for t in range(1, N + 1):
            logits, state = self.token_step(prev, o[:, t - 1], state, counter)
            z = logits - logits.max(axis=1, keepdims=True)
            e = np.exp(z)
            probs[:, t - 1] = e / e.sum(axis=1, keepdims=True)
            prev = token_ids[:, t - 1]
        return probs

    def all_nc_ids(self, n: int, batch_size: int = 1) -> np.ndarray:
        """The unconstrained conditioning: a constraint sequence of all NC."""
        return np.full((batch_size, n), self.vocab.nc_id, dtype=np.int64)
