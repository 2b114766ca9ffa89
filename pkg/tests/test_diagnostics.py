import math

import numpy as np
import pytest

from anticipation_rnn.diagnostics import (
    DivergenceKind,
    divergence,
    divergence_trace,
    enforcement_rate,
    oracle_constrained_distribution,
    ratio_report,
    sequence_log_prob,
)
from anticipation_rnn.encoding import Vocabulary
from anticipation_rnn.errors import GuardError, InvalidInputError, ProbabilityFloorWarning
from anticipation_rnn.model import AnticipationRNN, ModelConfig
from anticipation_rnn.sampler import ConstraintSet

ALL_KINDS = list(DivergenceKind)


def uniform_model(notes=("A4", "B4")):
    vocab = Vocabulary.from_surfaces(list(notes))
    config = ModelConfig(
        vocab_size=len(vocab),
        token_embed_dim=4,
        constraint_embed_dim=4,
        constraint_hidden=6,
        token_hidden=6,
    )
    return AnticipationRNN(config, vocab)  # all-zero parameters: uniform next-token


def random_model():
    vocab = Vocabulary.from_surfaces(["C4", "D4", "E4"])
    config = ModelConfig(
        vocab_size=len(vocab),
        token_embed_dim=4,
        constraint_embed_dim=4,
        constraint_hidden=6,
        token_hidden=6,
    )
    return AnticipationRNN.init_random(config, vocab, seed=8)


def direct_kl(p, q):
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0:
            total += pi * math.log(pi / max(qi, 1e-30))
    return total


class TestDivergence:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_zero_at_equal_distributions(self, kind):
        p = np.array([0.2, 0.3, 0.5])
        assert divergence(kind, p, p) <= 1e-12

    def test_kl_reference_value(self):
        assert abs(divergence(DivergenceKind.KL, [1.0, 0.0], [0.5, 0.5]) - math.log(2)) < 1e-12

    def test_js_disjoint_supports_reach_log_two(self):
        assert abs(divergence(DivergenceKind.JENSEN_SHANNON, [1, 0], [0, 1]) - math.log(2)) < 1e-12

    def test_thousand_random_pairs_match_direct_summation(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            v = int(rng.integers(2, 21))
            p = rng.random(v) + 1e-3
            p /= p.sum()
            q = rng.random(v) + 1e-3
            q /= q.sum()
            kl = direct_kl(p, q)
            rkl = direct_kl(q, p)
            m = (p + q) / 2
            js = 0.5 * direct_kl(p, m) + 0.5 * direct_kl(q, m)
            assert abs(divergence(DivergenceKind.KL, p, q) - kl) < 1e-9
            assert abs(divergence(DivergenceKind.REVERSED_KL, p, q) - rkl) < 1e-9
            assert abs(divergence(DivergenceKind.JEFFREYS, p, q) - (kl + rkl)) < 1e-9
            assert abs(divergence(DivergenceKind.JENSEN_SHANNON, p, q) - js) < 1e-9
            # structural identities
            assert divergence(DivergenceKind.JEFFREYS, p, q) == divergence(
                DivergenceKind.KL, p, q
            ) + divergence(DivergenceKind.REVERSED_KL, p, q)
            assert (
                abs(
                    divergence(DivergenceKind.JENSEN_SHANNON, p, q)
                    - divergence(DivergenceKind.JENSEN_SHANNON, q, p)
                )
                < 1e-12
            )
            assert divergence(DivergenceKind.JENSEN_SHANNON, p, q) <= math.log(2) + 1e-12

    def test_zero_q_under_positive_p_floored_with_warning(self):
        with pytest.warns(ProbabilityFloorWarning):
            value = divergence(DivergenceKind.KL, [0.5, 0.5], [1.0, 0.0])
        assert math.isfinite(value)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidInputError):
            divergence(DivergenceKind.KL, [0.5, 0.5], [0.5, 0.25, 0.25])
        with pytest.raises(InvalidInputError):
            divergence(DivergenceKind.KL, [0.9, 0.3], [0.5, 0.5])
        with pytest.raises(InvalidInputError):
            divergence(DivergenceKind.KL, [0.5, 0.5], [1.2, -0.2])


class TestSequenceLogProb:
    def test_uniform_model_single_step(self):
        model = uniform_model()
        lp = sequence_log_prob(model, ConstraintSet.of([], 1), np.array([4]))
        assert abs(lp - math.log(1.0 / len(model.vocab))) < 1e-12

    def test_appending_tokens_decreases_log_prob(self):
        model = uniform_model()
        values = [
            sequence_log_prob(model, ConstraintSet.of([], n), np.full(n, 4, dtype=np.int64))
            for n in range(1, 6)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_length_mismatch(self):
        model = uniform_model()
        with pytest.raises(InvalidInputError):
            sequence_log_prob(model, ConstraintSet.of([], 3), np.array([4]))


class TestDivergenceTrace:
    def test_all_nc_trace_is_identically_zero(self):
        model = random_model()
        s = np.array([4, 5, 6, 4])
        trace = divergence_trace(model, ConstraintSet.of([], 4), s, DivergenceKind.REVERSED_KL)
        assert (np.abs(trace) <= 1e-12).all()

    def test_trace_non_negative(self):
        model = random_model()
        s = np.array([4, 5, 6, 4, 5])
        trace = divergence_trace(
            model, ConstraintSet.of([(2, "D4")], 5), s, DivergenceKind.JENSEN_SHANNON
        )
        assert (trace >= 0).all()

    def test_peak_at_constrained_position_on_trained_model(self, desk_model, desk_constraints):
        from anticipation_rnn.sampler import generate

        constrained_positions = {pos for pos, _ in desk_constraints.pairs}
        record = generate(desk_model, desk_constraints, seed=31)
        trace = divergence_trace(
            desk_model, desk_constraints, record.token_ids, DivergenceKind.REVERSED_KL
        )
        assert int(np.argmax(trace)) + 1 in constrained_positions


class TestEnforcementRate:
    def test_clamped_is_always_one(self):
        model = random_model()
        cs = ConstraintSet.of([(1, "C4"), (3, "E4")], 4)
        assert enforcement_rate(model, cs, 200, seed=0, mode="clamped") == 1.0

    def test_empty_constraints_vacuously_one(self):
        model = random_model()
        assert enforcement_rate(model, ConstraintSet.of([], 4), 10, seed=0) == 1.0

    def test_untrained_model_rarely_satisfies(self):
        model = random_model()
        cs = ConstraintSet.of([(2, "D4"), (4, "C4")], 5)
        rate = enforcement_rate(model, cs, 500, seed=1)
        assert rate < 0.5


class TestRatioReport:
    def test_empty_constraints_is_identity_line(self):
        model = random_model()
        rep = ratio_report(model, ConstraintSet.of([], 6), 200, seed=3)
        np.testing.assert_array_equal(rep.log_p_unconstrained, rep.log_p_constrained)
        assert abs(rep.slope - 1.0) < 1e-9
        assert abs(rep.intercept) < 1e-9

    def test_report_text_round_trips(self):
        model = random_model()
        rep = ratio_report(model, ConstraintSet.of([(2, "D4")], 4), 50, seed=4)
        lines = [l for l in rep.to_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 50
        x, y = map(float, lines[0].split())
        assert x == rep.log_p_unconstrained[0] and y == rep.log_p_constrained[0]

    def test_minimum_sample_count(self):
        model = random_model()
        with pytest.raises(InvalidInputError):
            ratio_report(model, ConstraintSet.of([], 4), 1)


class TestOracle:
    def test_uniform_two_token_reference(self):
        model = uniform_model(("A4", "B4"))
        cs = ConstraintSet.of([(2, "B4")], 2)
        result = oracle_constrained_distribution(model, cs, alphabet=["A4", "B4"])
        assert abs(result.alpha - 0.5) < 1e-12
        dist = {
            tuple(model.vocab.surface_of(i) for i in seq): p
            for seq, p in zip(result.sequences, result.probs)
            if p > 0
        }
        assert dist == {("A4", "B4"): pytest.approx(0.5), ("B4", "B4"): pytest.approx(0.5)}

    def test_empty_constraints_alpha_is_one(self):
        model = uniform_model()
        result = oracle_constrained_distribution(model, ConstraintSet.of([], 2))
        assert abs(result.alpha - 1.0) < 1e-12
        assert abs(result.probs.sum() - 1.0) < 1e-10
        # uniform model: every enumerated sequence equally likely
        np.testing.assert_allclose(result.probs, 1.0 / len(result.probs), atol=1e-12)

    def test_violators_have_exactly_zero_probability(self):
        model = random_model()
        cs = ConstraintSet.of([(1, "C4")], 3)
        result = oracle_constrained_distribution(model, cs)
        target = model.vocab.id_of("C4")
        violating = result.sequences[:, 0] != target
        assert (result.probs[violating] == 0.0).all()
        assert abs(result.probs.sum() - 1.0) < 1e-10

    def test_alpha_identity_against_raw_mass(self):
        model = random_model()
        cs = ConstraintSet.of([(2, "E4")], 4)
        result = oracle_constrained_distribution(model, cs)
        p_unc = np.exp(result.log_p_unconstrained)
        p_unc /= p_unc.sum()
        satisfied = result.probs > 0
        err = np.abs(result.probs[satisfied] * result.alpha - p_unc[satisfied]).max()
        assert err <= 1e-10

    def test_guard_rejects_large_enumerations(self):
        model = random_model()  # melody alphabet of 4 tokens
        with pytest.raises(GuardError):
            oracle_constrained_distribution(model, ConstraintSet.of([], 30))

    def test_end_padded_constraints_on_final_position_rejected(self):
        model = random_model()
        with pytest.raises(InvalidInputError):
            oracle_constrained_distribution(
                model, ConstraintSet.of([(4, "C4")], 4), end_padded=True
            )

    def test_tv_distance_of_exact_samples_is_small(self):
        model = uniform_model()
        result = oracle_constrained_distribution(model, ConstraintSet.of([], 2))
        rng = np.random.default_rng(0)
        picks = rng.choice(len(result.probs), size=20000, p=result.probs)
        assert result.tv_distance(result.sequences[picks]) < 0.02

    def test_tv_distance_of_disjoint_samples_is_one(self):
        model = uniform_model()
        result = oracle_constrained_distribution(model, ConstraintSet.of([], 2))
        outside = np.zeros((10, 2), dtype=np.int64)  # START tokens: not in universe
        assert result.tv_distance(outside) == 1.0
