"""HTTP facade for interactive sessions and one-shot optimization jobs.

Desk-scale by design: state lives in process memory, images are cached as
PNG bytes under content-addressed ids, and an optional journal directory
makes sessions survive restarts by replaying (seed, ballots).  Ballot
submissions carry the iteration they voted on; a stale iteration gets a
409 with the current one, so two concurrent ballots on a session resolve
to exactly one winner.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from inspire.criteria import CriterionWeights, FeatureStackConfig
from inspire.generators import GeneratorRegistry, SmoothnessDiscriminator, default_registry
from inspire.hevol import (
    HevolConfig,
    HevolSession,
    SelectionBallot,
    SESSION_PRESETS,
    image_id_for,
    record_selection,
    replay_session,
    start_session,
)
from inspire.images import CodecError, decode_png, encode_png
from inspire.optimizers import (
    OPTIMIZER_NAMES,
    RetrievalProblem,
    minimum_budget,
    run_optimizer,
)

MAX_OPTIMIZE_BUDGET = 200_000


class CreateSessionRequest(BaseModel):
    generator: str
    preset: Optional[str] = None
    config: Optional[dict] = None
    seed: int = 0


class PickModel(BaseModel):
    index: int = Field(ge=0)
    count: int = Field(ge=1)


class SelectionRequest(BaseModel):
    picks: list[PickModel]
    iteration: Optional[int] = None


class OptimizeRequest(BaseModel):
    generator: str
    optimizer: str
    criterion: str = "L2+VGG"
    budget: int = Field(ge=1, le=MAX_OPTIMIZE_BUDGET)
    seed: int = 0
    target_png: str


class _SessionRecord:
    def __init__(self, session: HevolSession) -> None:
        self.session = session
        self.lock = threading.Lock()
        self.images: dict[str, bytes] = {}

    def cache_batch(self) -> None:
        for image_id in self.session.batch_image_ids():
            self.cache_image(image_id)

    def cache_image(self, image_id: str) -> bytes:
        png = self.images.get(image_id)
        if png is None:
            png = encode_png(self.session.render(image_id))
            self.images[image_id] = png
        return png


def _journal_path(journal_dir: str, session_id: str) -> str:
    return os.path.join(journal_dir, f"{session_id}.json")


def _write_journal(journal_dir: Optional[str], session: HevolSession) -> None:
    if not journal_dir:
        return
    os.makedirs(journal_dir, exist_ok=True)
    payload = {
        "session_id": session.session_id,
        "generator": session.generator_id,
        "config": session.config.to_json(),
        "seed": session.seed,
        "ballots": [b.to_json() for b in session.ballots],
    }
    tmp = _journal_path(journal_dir, session.session_id) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
    os.replace(tmp, _journal_path(journal_dir, session.session_id))


def _load_journals(journal_dir: str, registry: GeneratorRegistry) -> dict[str, _SessionRecord]:
    records: dict[str, _SessionRecord] = {}
    if not os.path.isdir(journal_dir):
        return records
    for name in sorted(os.listdir(journal_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(journal_dir, name), encoding="utf-8") as fh:
            payload = json.load(fh)
        session = replay_session(
            payload["generator"],
            HevolConfig.from_json(payload["config"]),
            int(payload["seed"]),
            [SelectionBallot.from_json(b) for b in payload["ballots"]],
            registry=registry,
            session_id=payload["session_id"],
        )
        record = _SessionRecord(session)
        record.cache_batch()
        records[session.session_id] = record
    return records


def create_app(
    registry: Optional[GeneratorRegistry] = None,
    journal_dir: Optional[str] = None,
) -> FastAPI:
    registry = registry or default_registry()
    app = FastAPI(title="inspire", docs_url=None, redoc_url=None)
    # the browser frontend is served from its own origin; the service is a
    # local single-user toy, so a blanket allowance is fine
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.registry = registry
    app.state.journal_dir = journal_dir
    app.state.sessions = _load_journals(journal_dir, registry) if journal_dir else {}
    app.state.sessions_lock = threading.Lock()

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception) -> JSONResponse:
        # Never leak stack traces or state to clients.
        return JSONResponse(status_code=500, content={"error": "internal error"})

    def _record(session_id: str) -> _SessionRecord:
        record = app.state.sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return record

    def _batch_payload(record: _SessionRecord) -> dict:
        session = record.session
        history = [
            {"iteration": entry["iteration"], "best_image_id": entry["best_image_id"]}
            for entry in session.history
        ]
        return {
            "session_id": session.session_id,
            "generator": session.generator_id,
            "config": session.config.to_json(),
            "seed": session.seed,
            "iteration": session.iteration,
            "mu": session.config.mu,
            "lam": session.config.lam,
            "batch": [
                {"index": slot.index, "image_id": slot.image_id}
                for slot in session.current_batch
            ],
            "best_image_id": history[-1]["best_image_id"] if history else None,
            "images_shown": session.images_shown,
            "unique_images": session.unique_images,
            "history": history,
        }

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(app.state.sessions)}

    @app.get("/generators")
    def generators() -> list[dict]:
        return app.state.registry.describe()

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        if req.preset is not None and req.config is not None:
            raise HTTPException(status_code=422, detail="give preset or config, not both")
        if req.preset is None and req.config is None:
            raise HTTPException(status_code=422, detail="one of preset/config is required")
        try:
            config = (
                SESSION_PRESETS[req.preset]
                if req.preset is not None
                else HevolConfig.from_json(req.config)
            )
        except KeyError:
            raise HTTPException(
                status_code=404,
                detail=f"unknown preset {req.preset!r}; expected one of {sorted(SESSION_PRESETS)}",
            )
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad session config: {exc}")
        try:
            gen = app.state.registry.resolve(req.generator)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=404, detail=f"unknown generator: {exc}")
        session_id = uuid.uuid4().hex[:12]
        session = start_session(
            req.generator, config, seed=req.seed,
            registry=app.state.registry, session_id=session_id,
        )
        record = _SessionRecord(session)
        record.cache_batch()
        with app.state.sessions_lock:
            app.state.sessions[session_id] = record
        _write_journal(app.state.journal_dir, session)
        return _batch_payload(record)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _batch_payload(_record(session_id))

    @app.post("/sessions/{session_id}/selection")
    def post_selection(session_id: str, req: SelectionRequest) -> dict:
        record = _record(session_id)
        with record.lock:
            session = record.session
            if req.iteration is not None and req.iteration != session.iteration:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "iteration conflict",
                        "iteration": session.iteration,
                    },
                )
            mu = session.config.mu
            total = sum(p.count for p in req.picks)
            if not req.picks:
                raise HTTPException(status_code=422, detail="ballot needs at least one pick")
            if total > mu:
                raise HTTPException(
                    status_code=422,
                    detail=f"total multiplicity {total} exceeds mu={mu}",
                )
            for pick in req.picks:
                if pick.index >= session.config.batch_size:
                    raise HTTPException(
                        status_code=422,
                        detail=f"pick index {pick.index} outside batch of {session.config.batch_size}",
                    )
            ballot = SelectionBallot(tuple((p.index, p.count) for p in req.picks))
            record_selection(session, ballot)
            record.cache_batch()
            _write_journal(app.state.journal_dir, session)
            return _batch_payload(record)

    @app.post("/sessions/{session_id}/undo")
    def post_undo(session_id: str) -> dict:
        record = _record(session_id)
        with record.lock:
            session = record.session
            if session.iteration < 1:
                raise HTTPException(status_code=409, detail="nothing to undo")
            rewound = replay_session(
                session.generator_id,
                session.config,
                session.seed,
                session.ballots[:-1],
                registry=app.state.registry,
                session_id=session.session_id,
            )
            record.session = rewound
            record.cache_batch()
            _write_journal(app.state.journal_dir, rewound)
            return _batch_payload(record)

    @app.get("/sessions/{session_id}/best")
    def get_best(session_id: str) -> dict:
        record = _record(session_id)
        session = record.session
        if session.iteration < 1:
            raise HTTPException(status_code=409, detail="no completed iteration yet")
        latent = session.best_latent
        image_id = image_id_for(session.generator_id, latent)
        record.cache_image(image_id)
        return {
            "session_id": session.session_id,
            "iteration": session.iteration,
            "image_id": image_id,
            "latent": latent.tolist(),
            "images_shown": session.images_shown,
            "unique_images": session.unique_images,
        }

    @app.get("/images/{image_id}.png")
    def get_image(image_id: str) -> Response:
        for record in list(app.state.sessions.values()):
            png = record.images.get(image_id)
            if png is None and image_id in record.session.latent_index:
                png = record.cache_image(image_id)
            if png is not None:
                return Response(content=png, media_type="image/png")
        raise HTTPException(status_code=404, detail=f"unknown image {image_id}")

    @app.post("/optimize")
    def optimize(req: OptimizeRequest) -> dict:
        try:
            gen = app.state.registry.resolve(req.generator)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=404, detail=f"unknown generator: {exc}")
        name = req.optimizer.lower()
        if name not in OPTIMIZER_NAMES:
            raise HTTPException(
                status_code=422,
                detail=f"unknown optimizer {req.optimizer!r}; expected one of {OPTIMIZER_NAMES}",
            )
        try:
            weights = CriterionWeights.preset(req.criterion)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if req.budget < minimum_budget(name, gen.total_dim):
            raise HTTPException(
                status_code=422,
                detail=f"budget {req.budget} below minimum for {name}",
            )
        try:
            target = decode_png(base64.b64decode(req.target_png, validate=True))
        except (CodecError, binascii.Error, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad target image: {exc}")
        try:
            problem = RetrievalProblem(
                gen, SmoothnessDiscriminator(), target, weights, FeatureStackConfig()
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            trace = run_optimizer(name, problem, req.budget, req.seed)
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"run failed: {exc}")
        return trace.to_json(criterion=weights.preset_name, budget_units=req.budget)

    return app


def serve(
    port: int = 8000,
    host: str = "127.0.0.1",
    registry: Optional[GeneratorRegistry] = None,
    journal_dir: Optional[str] = None,
) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(registry, journal_dir), host=host, port=port, log_level="warning")
