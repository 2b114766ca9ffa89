import numpy as np
import pytest
from fastapi.testclient import TestClient

from anticipation_rnn.checkpoint import save_checkpoint
from anticipation_rnn.encoding import Vocabulary
from anticipation_rnn.model import AnticipationRNN, ModelConfig
from anticipation_rnn.service import create_app


@pytest.fixture(scope="module")
def model():
    vocab = Vocabulary.from_surfaces(["C4", "D4", "E4", "G4", "A4"])
    config = ModelConfig(
        vocab_size=len(vocab),
        token_embed_dim=5,
        constraint_embed_dim=5,
        constraint_hidden=8,
        token_hidden=8,
    )
    return AnticipationRNN.init_random(config, vocab, seed=12)


@pytest.fixture(scope="module")
def client(model):
    return TestClient(create_app(model))


class TestHealthAndInfo:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_model_info(self, client, model):
        body = client.get("/api/model").json()
        assert body["vocabulary"] == model.vocab.surfaces()
        assert body["note_tokens"] == ["C4", "D4", "E4", "G4", "A4"]
        assert body["hold_token"] == "__"
        assert body["min_length"] == 1

    def test_503_before_checkpoint_loads(self, model, tmp_path_factory):
        path = tmp_path_factory.mktemp("ckpt") / "m.ckpt"
        save_checkpoint(model, path)
        app = create_app(path)
        # no lifespan context: startup hook never ran, model not loaded yet
        bare = TestClient(app)
        assert bare.post("/api/generate", json={"constraints": [], "length": 4}).status_code == 503
        with TestClient(app) as started:
            assert started.get("/healthz").json()["loaded"] is True


class TestGenerate:
    def test_empty_constraints_two_n_accounting(self, client):
        body = client.post(
            "/api/generate", json={"constraints": [], "length": 16, "seed": 5}
        ).json()
        assert len(body["tokens"]) == 16
        assert body["constraint_calls"] == 16
        assert body["token_calls"] == 16
        assert body["constraint_calls"] + body["token_calls"] == 32
        assert len(body["entropies"]) == 16
        assert body["seed"] == 5

    def test_position_zero_is_400(self, client):
        response = client.post(
            "/api/generate",
            json={"constraints": [{"pos": 0, "token": "C4"}], "length": 8},
        )
        assert response.status_code == 400

    def test_position_past_length_is_400(self, client):
        response = client.post(
            "/api/generate",
            json={"constraints": [{"pos": 9, "token": "C4"}], "length": 8},
        )
        assert response.status_code == 400

    def test_duplicate_position_is_400(self, client):
        response = client.post(
            "/api/generate",
            json={
                "constraints": [{"pos": 2, "token": "C4"}, {"pos": 2, "token": "D4"}],
                "length": 8,
            },
        )
        assert response.status_code == 400

    def test_unknown_token_is_422(self, client):
        response = client.post(
            "/api/generate",
            json={"constraints": [{"pos": 1, "token": "Z9"}], "length": 8},
        )
        assert response.status_code == 422

    def test_special_token_constraint_is_400(self, client):
        response = client.post(
            "/api/generate",
            json={"constraints": [{"pos": 1, "token": "END"}], "length": 8},
        )
        assert response.status_code == 400

    def test_bad_temperature_is_400(self, client):
        response = client.post(
            "/api/generate", json={"constraints": [], "length": 4, "temperature": 0}
        )
        assert response.status_code == 400

    def test_same_seed_same_response(self, client):
        payload = {
            "constraints": [{"pos": 3, "token": "E4"}],
            "length": 12,
            "seed": 99,
            "temperature": 1.0,
        }
        a = client.post("/api/generate", json=payload).json()
        b = client.post("/api/generate", json=payload).json()
        assert a == b

    def test_clamped_mode_all_satisfied(self, client):
        body = client.post(
            "/api/generate",
            json={
                "constraints": [{"pos": 1, "token": "G4"}, {"pos": 4, "token": "C4"}],
                "length": 6,
                "mode": "clamped",
                "seed": 1,
            },
        ).json()
        assert body["satisfied"] == [True, True]
        assert body["tokens"][0] == "G4" and body["tokens"][3] == "C4"

    def test_unseeded_request_echoes_usable_seed(self, client):
        payload = {"constraints": [], "length": 6}
        first = client.post("/api/generate", json=payload).json()
        replay = client.post(
            "/api/generate", json={**payload, "seed": first["seed"]}
        ).json()
        assert replay["tokens"] == first["tokens"]


class TestTrace:
    def test_all_nc_trace_is_zero(self, client):
        body = client.post(
            "/api/trace", json={"constraints": [], "tokens": ["C4", "D4", "E4"]}
        ).json()
        assert len(body["values"]) == 3
        assert max(abs(v) for v in body["values"]) <= 1e-12

    def test_constraint_position_must_fit_sequence(self, client):
        response = client.post(
            "/api/trace",
            json={"constraints": [{"pos": 7, "token": "C4"}], "tokens": ["C4", "D4"]},
        )
        assert response.status_code == 400

    def test_unknown_sequence_token_is_422(self, client):
        response = client.post(
            "/api/trace", json={"constraints": [], "tokens": ["C4", "bogus"]}
        )
        assert response.status_code == 422

    def test_empty_sequence_is_400(self, client):
        response = client.post("/api/trace", json={"constraints": [], "tokens": []})
        assert response.status_code == 400
