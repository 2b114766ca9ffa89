"""HTTP/JSON service over one loaded checkpoint.

Token surfaces (never ids) cross the wire, so the vocabulary stays a
server-side concern. The checkpoint snapshot is immutable and shared by all
requests; each request owns its rng, so concurrent requests behave exactly
like serialized ones given the same seeds.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .diagnostics import DivergenceKind, divergence_trace
from .errors import InvalidInputError
from .model import AnticipationRNN
from .numerics import entropy
from .sampler import ConstraintSet, generate

MAX_LENGTH = 1024


class ConstraintIn(BaseModel):
    pos: int
    token: str


class GenerateRequest(BaseModel):
    constraints: list[ConstraintIn] = Field(default_factory=list)
    length: int
    temperature: float = 1.0
    seed: int | None = None
    mode: Literal["learned", "clamped"] = "learned"


class GenerateResponse(BaseModel):
    tokens: list[str]
    satisfied: list[bool]
    entropies: list[float]
    constraint_calls: int
    token_calls: int
    seed: int


class TraceRequest(BaseModel):
    constraints: list[ConstraintIn] = Field(default_factory=list)
    tokens: list[str]
    kind: Literal["kl", "reversed-kl", "jeffreys", "js"] = "reversed-kl"


class TraceResponse(BaseModel):
    values: list[float]


def _bad_request(field: str, message: str):
    raise HTTPException(status_code=400, detail=[{"field": field, "message": message}])


def _vocab_mismatch(message: str):
    raise HTTPException(status_code=422, detail=[{"field": "token", "message": message}])


def _validated_constraints(model: AnticipationRNN, pairs: list[ConstraintIn], length: int) -> ConstraintSet:
    if not 1 <= length <= MAX_LENGTH:
        _bad_request("length", f"length must lie in 1..{MAX_LENGTH}")
    seen = set()
    for c in pairs:
        if not 1 <= c.pos <= length:
            _bad_request("constraints", f"position {c.pos} outside 1..{length} (positions are 1-based)")
        if c.pos in seen:
            _bad_request("constraints", f"duplicate position {c.pos}")
        seen.add(c.pos)
        if c.token not in model.vocab:
            _vocab_mismatch(f"token {c.token!r} not in model vocabulary")
    cs = ConstraintSet.of([(c.pos, c.token) for c in pairs], length)
    try:
        cs.validate_tokens(model.vocab)
    except InvalidInputError as exc:
        _bad_request("constraints", str(exc))
    return cs


def create_app(
    checkpoint: str | Path | AnticipationRNN,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """App over one checkpoint; a path is loaded at startup (503 until then)."""
    preloaded = checkpoint if isinstance(checkpoint, AnticipationRNN) else None

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.model is None:
            from .checkpoint import load_checkpoint

            app.state.model = load_checkpoint(checkpoint)
        yield

    app = FastAPI(title="anticipation-rnn", lifespan=lifespan)
    app.state.model = preloaded

    def current_model() -> AnticipationRNN:
        model = app.state.model
        if model is None:
            raise HTTPException(status_code=503, detail="model is still loading")
        return model

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "loaded": app.state.model is not None}

    @app.get("/api/model")
    def model_info():
        model = current_model()
        return {
            "vocabulary": model.vocab.surfaces(),
            "note_tokens": model.vocab.note_surfaces(),
            "hold_token": model.vocab.surface_of(model.vocab.hold_id),
            "config": model.config.to_dict(),
            "min_length": 1,
            "max_length": MAX_LENGTH,
        }

    @app.post("/api/generate", response_model=GenerateResponse)
    def api_generate(req: GenerateRequest):
        model = current_model()
        cs = _validated_constraints(model, req.constraints, req.length)
        if not req.temperature > 0:
            _bad_request("temperature", "temperature must be positive")
        seed = req.seed if req.seed is not None else int(np.random.SeedSequence().entropy % (2**31))
        record = generate(model, cs, temperature=req.temperature, seed=seed, mode=req.mode)
        return GenerateResponse(
            tokens=record.surfaces,
            satisfied=cs.satisfied_by(record.token_ids, model.vocab),
            entropies=[entropy(d.probs) for d in record.distributions],
            constraint_calls=record.constraint_cell_calls,
            token_calls=record.token_cell_calls,
            seed=record.seed,
        )

    @app.post("/api/trace", response_model=TraceResponse)
    def api_trace(req: TraceRequest):
        model = current_model()
        if not req.tokens:
            _bad_request("tokens", "sequence must be non-empty")
        cs = _validated_constraints(model, req.constraints, len(req.tokens))
        for s in req.tokens:
            if s not in model.vocab:
                _vocab_mismatch(f"token {s!r} not in model vocabulary")
        ids = np.array([model.vocab.id_of(s) for s in req.tokens], dtype=np.int64)
        kind = {k.value: k for k in DivergenceKind}[req.kind]
        values = divergence_trace(model, cs, ids, kind)
        return TraceResponse(values=[float(v) for v in values])

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
