"""Verification toolkit for the constrained sampler.

Four categorical divergences, per-step divergence traces along a realized
sequence (unconstrained model versus constrained model, teacher-forced on
the same tokens), exact sequence log-probabilities, constraint-enforcement
rates over bulk samples, the log-log proportionality regression between
constrained and unconstrained sequence probabilities, and a brute-force
enumeration oracle that computes the ideal renormalized constrained
distribution on instances small enough to enumerate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GuardError, InvalidInputError, ProbabilityFloorWarning
from .model import AnticipationRNN
from .numerics import PROB_FLOOR
from .sampler import ConstraintSet, generate_batch

ORACLE_GUARD = 10**6


class DivergenceKind(Enum):
    KL = "kl"
    REVERSED_KL = "reversed-kl"
    JEFFREYS = "jeffreys"
    JENSEN_SHANNON = "js"


def _check_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidInputError("distribution must be a vector")
    if np.any(p < 0) or not np.isfinite(p).all() or abs(p.sum() - 1.0) > 1e-6:
        raise InvalidInputError("not a valid probability vector")
    return p


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    """Sum of p_i log(p_i/q_i) with 0 log 0 = 0; zero q under positive p is floored."""
    mask = p > 0
    qm = q[mask]
    if np.any(qm == 0.0):
        warnings.warn("zero q under positive p floored at 1e-30", ProbabilityFloorWarning)
        qm = np.maximum(qm, PROB_FLOOR)
    return float((p[mask] * (np.log(p[mask]) - np.log(qm))).sum())


def divergence(kind: DivergenceKind, p, q) -> float:
    """Natural-log divergence between two categorical distributions.

    Non-negative by construction; sums that round to tiny negatives near
    p = q are clamped to zero.
    """
    p = _check_distribution(p)
    q = _check_distribution(q)
    if p.shape != q.shape:
        raise InvalidInputError("distributions must have equal length")
    if kind is DivergenceKind.KL:
        value = _kl(p, q)
    elif kind is DivergenceKind.REVERSED_KL:
        value = _kl(q, p)
    elif kind is DivergenceKind.JEFFREYS:
        value = _kl(p, q) + _kl(q, p)
    elif kind is DivergenceKind.JENSEN_SHANNON:
        m = (p + q) / 2.0
        value = 0.5 * _kl(p, m) + 0.5 * _kl(q, m)
    else:
        raise InvalidInputError(f"unknown divergence kind {kind!r}")
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# Model-level diagnostics
# ---------------------------------------------------------------------------


def _teacher_forced_logprobs(
    model: AnticipationRNN, constraint_ids: np.ndarray, token_ids: np.ndarray
) -> np.ndarray:
    """Per-sequence log-probability, chunked; floors zero step probabilities."""
    token_ids = np.atleast_2d(token_ids)
    constraint_ids = np.atleast_2d(constraint_ids)
    out = np.empty(token_ids.shape[0])
    chunk = 8192
    for lo in range(0, token_ids.shape[0], chunk):
        hi = min(lo + chunk, token_ids.shape[0])
        probs = model.step_probabilities(constraint_ids[lo:hi], token_ids[lo:hi])
        b, n = token_ids[lo:hi].shape
        picked = probs[np.arange(b)[:, None], np.arange(n)[None, :], token_ids[lo:hi]]
        if np.any(picked <= 0.0):
            warnings.warn("zero step probability floored at 1e-30", ProbabilityFloorWarning)
            picked = np.maximum(picked, PROB_FLOOR)
        out[lo:hi] = np.log(picked).sum(axis=1)
    return out


def sequence_log_prob(
    model: AnticipationRNN, constraints: ConstraintSet, token_ids: np.ndarray
) -> float:
    """log p(s) = sum_t log p(s_t | s_<t) under the given constraint set.

    With an empty constraint set (all-NC conditioning) this is the
    unconstrained sequence log-probability.
    """
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if token_ids.ndim != 1 or token_ids.shape[0] != constraints.length:
        raise InvalidInputError("sequence length must equal the constraint set length")
    cids = constraints.dense_ids(model.vocab)
    return float(_teacher_forced_logprobs(model, cids[None, :], token_ids[None, :])[0])


def divergence_trace(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    token_ids: np.ndarray,
    kind: DivergenceKind,
) -> np.ndarray:
    """sqrt(D(unconstrained_t || constrained_t)) at each step of a sequence.

    Both traces are teacher-forced on the same realized tokens; the argument
    order (unconstrained first) is the fixed trace convention.
    """
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if token_ids.ndim != 1 or token_ids.shape[0] != constraints.length:
        raise InvalidInputError("sequence length must equal the constraint set length")
    n = constraints.length
    cids = constraints.dense_ids(model.vocab)
    nc_ids = model.all_nc_ids(n)
    p_unc = model.step_probabilities(nc_ids, token_ids[None, :])[0]
    p_con = model.step_probabilities(cids[None, :], token_ids[None, :])[0]
    # divergences are mathematically >= 0 but can round to ~ -1e-17 at p = q
    return np.array(
        [np.sqrt(max(divergence(kind, p_unc[t], p_con[t]), 0.0)) for t in range(n)]
    )


def enforcement_rate(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    samples: int,
    seed: int = 0,
    mode: str = "learned",
) -> float:
    """Fraction of sampled sequences satisfying every constraint."""
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    if not constraints.pairs:
        return 1.0
    ids, _ = generate_batch(model, constraints, samples, seed=seed, mode=mode)
    ok = np.ones(samples, dtype=bool)
    for pos, surface in constraints.pairs:
        ok &= ids[:, pos - 1] == model.vocab.id_of(surface)
    return float(ok.mean())


@dataclass
class RatioReport:
    """Log-log scatter of constrained vs unconstrained sequence probability.

    Proportionality between the two distributions shows up as a unit slope:
    the point cloud is then a pure translation of the identity line, with
    intercept -log(alpha) for normalizer alpha.
    """

    log_p_unconstrained: np.ndarray
    log_p_constrained: np.ndarray
    slope: float
    intercept: float
    sample_count: int

    def to_text(self) -> str:
        lines = ["# log_p_unconstrained log_p_constrained"]
        for x, y in zip(self.log_p_unconstrained, self.log_p_constrained):
            lines.append(f"{float(x)!r} {float(y)!r}")
        lines.append(f"# slope {self.slope!r} intercept {self.intercept!r}")
        return "\n".join(lines) + "\n"


def ratio_report(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    samples: int,
    seed: int = 0,
) -> RatioReport:
    """Sample from the constrained model and regress the two log-probs.

    Both log-probabilities are computed by the same teacher-forced replay,
    so with no constraints the scatter is exactly the identity line.
    """
    if samples < 2:
        raise InvalidInputError("need at least 2 samples for a regression")
    ids, _ = generate_batch(model, constraints, samples, seed=seed, mode="learned")
    cids = constraints.dense_ids(model.vocab)
    con = _teacher_forced_logprobs(model, np.repeat(cids[None, :], samples, 0), ids)
    unc = _teacher_forced_logprobs(model, model.all_nc_ids(constraints.length, samples), ids)
    slope, intercept = np.polyfit(unc, con, 1)
    return RatioReport(unc, con, float(slope), float(intercept), samples)


# ---------------------------------------------------------------------------
# Exact enumeration oracle
# ---------------------------------------------------------------------------


@dataclass
class OracleResult:
    """Exact renormalized constrained distribution over the melody alphabet.

    ``sequences`` enumerates every length-N id tuple over the melody tokens;
    ``probs`` is the ideal constrained distribution (zero on violators,
    proportional to the unconstrained model elsewhere). ``alpha`` is the
    unconstrained mass of the satisfying set, normalized within the
    enumerated universe so a constraint-free oracle has alpha 1.
    """

    sequences: np.ndarray  # (M, N) int64 token ids
    probs: np.ndarray  # (M,)
    alpha: float
    log_p_unconstrained: np.ndarray  # (M,) raw model log-probs

    def tv_distance(self, sample_ids: np.ndarray) -> float:
        """Total variation between the oracle and an empirical sample set."""
        sample_ids = np.atleast_2d(sample_ids)
        index = {tuple(row): k for k, row in enumerate(map(tuple, self.sequences))}
        counts = np.zeros(len(self.probs))
        outside = 0
        for row in map(tuple, sample_ids):
            k = index.get(row)
            if k is None:
                outside += 1
            else:
                counts[k] += 1
        empirical = counts / sample_ids.shape[0]
        return 0.5 * (np.abs(self.probs - empirical).sum() + outside / sample_ids.shape[0])


def oracle_constrained_distribution(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    end_padded: bool = False,
    alphabet: list[str] | None = None,
) -> OracleResult:
    """Enumerate an alphabet to the constraint length and renormalize.

    The universe defaults to the full melody alphabet (hold plus every note)
    but can be restricted to given token surfaces. With ``end_padded`` the
    final position is fixed to END instead of being enumerated: models
    trained on fixed windows place END exactly there, so that universe is
    where their probability mass actually lives.

    Guarded: refuses instances with more than 10^6 sequences.
    """
    vocab = model.vocab
    n = constraints.length
    free = n - 1 if end_padded else n
    if end_padded:
        if n < 2:
            raise InvalidInputError("end-padded enumeration needs length >= 2")
        if any(pos == n for pos, _ in constraints.pairs):
            raise InvalidInputError("the end-padded final position cannot be constrained")
    if alphabet is None:
        ids = vocab.melody_ids()
    else:
        ids = sorted({vocab.id_of(s) for s in alphabet})
        if any(i < 3 for i in ids):
            raise InvalidInputError("enumeration alphabet must contain melody tokens only")
    alphabet_ids = np.array(ids, dtype=np.int64)
    m = len(alphabet_ids) ** free
    if m > ORACLE_GUARD:
        raise GuardError(f"enumeration of {m} sequences exceeds the guard ({ORACLE_GUARD})")

    grids = np.meshgrid(*([alphabet_ids] * free), indexing="ij")
    sequences = np.stack([g.reshape(-1) for g in grids], axis=1)
    if end_padded:
        pad = np.full((sequences.shape[0], 1), vocab.end_id, dtype=np.int64)
        sequences = np.concatenate([sequences, pad], axis=1)

    log_unc = _teacher_forced_logprobs(
        model, model.all_nc_ids(n, sequences.shape[0]), sequences
    )
    p_unc = np.exp(log_unc)
    total = p_unc.sum()

    satisfies = np.ones(sequences.shape[0], dtype=bool)
    for pos, surface in constraints.pairs:
        satisfies &= sequences[:, pos - 1] == vocab.id_of(surface)
    if not satisfies.any():
        raise InvalidInputError("no enumerated sequence satisfies the constraints")

    sat_mass = p_unc[satisfies].sum()
    alpha = float(sat_mass / total)
    probs = np.where(satisfies, p_unc, 0.0)
    probs /= sat_mass
    return OracleResult(sequences, probs, alpha, log_unc)
