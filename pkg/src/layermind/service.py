"""HTTP service over the pipeline: the sole surface the review UI consumes.

All endpoints live under ``/api/v1``; responses are JSON; errors use a
uniform ``{code, message, detail}`` envelope. Pipeline phases run as
background jobs polled via ``GET .../runs/{run_id}``. Per-user writes
serialize through the graph store's single-writer lock.
"""

from __future__ import annotations

import logging
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from layermind.config import PipelineConfig
from layermind.errors import (
    LayermindError,
    LlmError,
    NotFoundError,
    PhaseOrderError,
    PreconditionError,
)
from layermind.graph.model import LayerTag
from layermind.graph.store import read_json
from layermind.hitl import session_report
from layermind.pipeline import PHASES, Pipeline

logger = logging.getLogger(__name__)


class RunRequest(BaseModel):
    phase: str


class AnswerRequest(BaseModel):
    answer: str = ""
    skip: bool = False


class LikertRequest(BaseModel):
    node_id: str
    phase: str
    rating: int


class EvalRequest(BaseModel):
    condition: str


class RunManager:
    """Background phase execution with in-memory + on-disk status."""

    def __init__(self, pipeline: Pipeline):
        self.pipeline = pipeline
        self.runs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def start(self, user_id: str, phase: str) -> dict:
        run_id = f"{phase}-{uuid.uuid4().hex[:8]}"
        record = {"run_id": run_id, "user_id": user_id, "phase": phase, "status": "running"}
        with self._lock:
            self.runs[run_id] = record

        def work():
            try:
                report = self.pipeline.run_phase(user_id, phase)
                report["run_id"] = run_id
                with self._lock:
                    self.runs[run_id] = {**report, "status": "done"}
            except LayermindError as exc:
                logger.warning("run %s failed: %s", run_id, exc)
                with self._lock:
                    self.runs[run_id] = {**record, "status": "failed", "error": str(exc)}

        threading.Thread(target=work, daemon=True).start()
        return record

    def get(self, user_id: str, run_id: str) -> dict:
        with self._lock:
            if run_id in self.runs:
                return self.runs[run_id]
        path = self.pipeline.user_dir(user_id) / "runs" / f"{run_id}.json"
        if path.is_file():
            return {**read_json(path), "status": "done"}
        raise NotFoundError(f"unknown run: {run_id!r}")


def _envelope(code: int, message: str, detail: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=code,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(config: PipelineConfig, static_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="layermind", version="0.1.0")
    pipeline = Pipeline(config)
    runs = RunManager(pipeline)
    app.state.pipeline = pipeline

    # the review bundle may be hosted separately from the API
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    if config.api_token:

        @app.middleware("http")
        async def check_token(request: Request, call_next):
            if request.url.path.startswith("/api/"):
                header = request.headers.get("Authorization", "")
                if header != f"Bearer {config.api_token}":
                    return _envelope(401, "unauthorized", "missing or invalid API token")
            return await call_next(request)

    @app.exception_handler(RequestValidationError)
    async def invalid_request(_: Request, exc: RequestValidationError):
        return _envelope(400, "validation error", str(exc.errors()[:1]))

    @app.exception_handler(NotFoundError)
    async def not_found(_: Request, exc: NotFoundError):
        return _envelope(404, "not found", str(exc))

    @app.exception_handler(PhaseOrderError)
    async def phase_order(_: Request, exc: PhaseOrderError):
        return _envelope(409, "phase order violation", str(exc))

    @app.exception_handler(PreconditionError)
    async def precondition(_: Request, exc: PreconditionError):
        return _envelope(409, "precondition failed", str(exc))

    @app.exception_handler(LlmError)
    async def llm_error(_: Request, exc: LlmError):
        return _envelope(502, "language model failure", str(exc))

    @app.exception_handler(LayermindError)
    async def generic(_: Request, exc: LayermindError):
        return _envelope(500, "internal error", str(exc))

    # ------------------------------------------------------------------
    # Journals and runs
    # ------------------------------------------------------------------

    @app.post("/api/v1/users/{user_id}/journals")
    async def post_journals(user_id: str, request: Request):
        payload = (await request.body()).decode("utf-8")
        if not payload.strip():
            return _envelope(400, "validation error", "request body must be JSONL journal entries")
        return pipeline.ingest_journals(user_id, payload)

    @app.post("/api/v1/users/{user_id}/runs", status_code=202)
    def post_run(user_id: str, body: RunRequest):
        if body.phase not in PHASES:
            return _envelope(400, "validation error", f"unknown phase {body.phase!r}")
        return runs.start(user_id, body.phase)

    @app.get("/api/v1/users/{user_id}/runs/{run_id}")
    def get_run(user_id: str, run_id: str):
        return runs.get(user_id, run_id)

    # ------------------------------------------------------------------
    # Graph reads
    # ------------------------------------------------------------------

    @app.get("/api/v1/users/{user_id}/graph")
    def get_graph(user_id: str, layer: str | None = None, version: int | None = None):
        export = pipeline.export_graph(user_id, version)
        if layer is None:
            return export
        tag = LayerTag.parse(layer)
        return [n for n in export["nodes"] if n["layer"] == tag.name]

    @app.get("/api/v1/users/{user_id}/nodes/{node_id}/trace")
    def get_trace(user_id: str, node_id: str):
        graph = pipeline.store.load(user_id)
        instances = graph.trace_to_evidence(node_id)
        return {
            "node_id": node_id,
            "instances": [
                {
                    "id": i.id,
                    "what": i.what,
                    "when": i.when,
                    "where": i.where,
                    "who": i.who,
                    "why": i.why,
                    "how": i.how,
                    "date": i.date.isoformat(),
                    "journal_entry_id": i.journal_entry_id,
                }
                for i in instances
            ],
        }

    # ------------------------------------------------------------------
    # Review session
    # ------------------------------------------------------------------

    @app.get("/api/v1/users/{user_id}/hitl/session")
    def get_session(user_id: str):
        return session_report(pipeline.load_session(user_id))

    @app.get("/api/v1/users/{user_id}/hitl/next")
    def get_next(user_id: str):
        session = pipeline.load_session(user_id)
        pending = session.pending()
        if not pending:
            return {"item": None, "complete": True, "counts": session.counts()}
        item = pending[0]
        return {
            "item": {
                "id": item.id,
                "node_id": item.node_id,
                "question": item.question,
                "layer": item.layer.name,
            },
            "complete": False,
            "counts": session.counts(),
        }

    @app.post("/api/v1/users/{user_id}/hitl/items/{item_id}/answer")
    def post_answer(user_id: str, item_id: str, body: AnswerRequest):
        if body.skip:
            return pipeline.skip_session_item(user_id, item_id)
        if not body.answer.strip():
            return _envelope(400, "validation error", "answer must be non-empty (or set skip=true)")
        return pipeline.answer_item(user_id, item_id, body.answer)

    # ------------------------------------------------------------------
    # Ratings and evaluation
    # ------------------------------------------------------------------

    @app.post("/api/v1/users/{user_id}/likert")
    def post_likert(user_id: str, body: LikertRequest):
        from layermind.evaluation import LikertRecord

        graph = pipeline.store.load(user_id)
        graph.node(body.node_id)  # 404 on unknown node
        record = LikertRecord(node_id=body.node_id, phase=body.phase, rating=body.rating)
        with pipeline.store.writer_lock(user_id):  # ratings append serially per user
            pipeline.likert_log(user_id).record(record)
        return {"node_id": body.node_id, "phase": body.phase, "rating": body.rating, "stored": True}

    @app.post("/api/v1/users/{user_id}/eval", status_code=202)
    def post_eval(user_id: str, body: EvalRequest):
        if body.condition not in ("pre", "post"):
            return _envelope(400, "validation error", "condition must be 'pre' or 'post'")
        return runs.start(user_id, f"evaluate_{body.condition}")

    @app.get("/api/v1/users/{user_id}/eval/report")
    def get_report(user_id: str, condition: str = "pre"):
        if condition not in ("pre", "post"):
            return _envelope(400, "validation error", "condition must be 'pre' or 'post'")
        return pipeline.export_report(user_id, condition)

    # ------------------------------------------------------------------
    # Static review UI (when built)
    # ------------------------------------------------------------------

    if static_dir is not None and Path(static_dir).is_dir():
        static_path = Path(static_dir)

        @app.get("/")
        def index():
            return RedirectResponse("/ui/")

        app.mount("/ui", StaticFiles(directory=static_path, html=True), name="ui")

    return app


def serve(config: PipelineConfig, host: str = "127.0.0.1", port: int = 8000, static_dir=None) -> None:
    import uvicorn

    uvicorn.run(create_app(config, static_dir=static_dir), host=host, port=port, log_level="info")
