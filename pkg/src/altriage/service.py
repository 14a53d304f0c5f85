"""HTTP facade over a Project.

Thin by design: every endpoint delegates to the project and returns its JSON.
No endpoint computes anything the library does not already expose, so a
browser client and a scripted client always see the same numbers.

Errors follow one shape, {"code": ..., "message": ...}. Auth is a single
static bearer token; health stays open so load balancers can probe it.
"""

from __future__ import annotations

from typing import Any

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .augment import (
    AmbiguousSpan,
    DirectionConflict,
    EmptyResidual,
    PositionOutOfBounds,
    SpanLacksSignal,
    SpanNotFound,
)
from .classifier import TrainConfig
from .datasets import RatioUnreachable, UnlabeledAddition
from .evaluation import LeakageDetected
from .loop import (
    NoActiveRound,
    NoDataset,
    PreviousIncomplete,
    Project,
    QueueIncomplete,
    UnknownRecord,
)
from .store import ConflictPending

_ERROR_MAP: tuple[tuple[type[Exception], int, str], ...] = (
    (UnknownRecord, 404, "record_not_found"),
    (NoDataset, 409, "no_dataset"),
    (PreviousIncomplete, 409, "previous_incomplete"),
    (NoActiveRound, 409, "no_active_round"),
    (QueueIncomplete, 409, "queue_incomplete"),
    (ConflictPending, 409, "conflict_pending"),
    (LeakageDetected, 409, "leakage_detected"),
    (SpanNotFound, 422, "span_not_found"),
    (AmbiguousSpan, 422, "ambiguous_span"),
    (SpanLacksSignal, 422, "span_lacks_signal"),
    (PositionOutOfBounds, 422, "position_out_of_bounds"),
    (DirectionConflict, 422, "direction_conflict"),
    (EmptyResidual, 422, "empty_residual"),
    (RatioUnreachable, 409, "ratio_unreachable"),
    (UnlabeledAddition, 409, "unlabeled_addition"),
    (FileExistsError, 409, "already_exists"),
    (KeyError, 404, "not_found"),
    (ValueError, 422, "invalid_request"),
)


class StartRound(BaseModel):
    mode: str
    config: dict[str, Any] = Field(default_factory=dict)


class LabelSubmission(BaseModel):
    record_id: str
    label: str
    oracle_id: str


class Adjudication(BaseModel):
    record_id: str
    label: str
    oracle_id: str


class CounterfactualRequest(BaseModel):
    source_id: str
    direction: str
    span: str
    position: int | None = None


def create_app(project: Project, token: str | None = None) -> FastAPI:
    app = FastAPI(title="altriage", docs_url=None, redoc_url=None)

    async def require_token(request: Request) -> None:
        if token is None:
            return
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {token}":
            raise _AuthError()

    class _AuthError(Exception):
        pass

    @app.exception_handler(_AuthError)
    async def _auth_error(_request: Request, _exc: _AuthError) -> JSONResponse:
        return JSONResponse(
            status_code=401, content={"code": "unauthorized", "message": "bad or missing token"}
        )

    @app.exception_handler(Exception)
    async def _domain_error(_request: Request, exc: Exception) -> JSONResponse:
        for etype, status, code in _ERROR_MAP:
            if isinstance(exc, etype):
                message = str(exc.args[0]) if exc.args else str(exc)
                return JSONResponse(status_code=status, content={"code": code, "message": message})
        return JSONResponse(
            status_code=500, content={"code": "internal_error", "message": str(exc)}
        )

    guarded = [Depends(require_token)]

    @app.get("/healthz")
    async def healthz() -> dict:
        return {
            "status": "ok",
            "events": project.state.applied_events,
            "records": len(project.store),
        }

    @app.get("/rounds", dependencies=guarded)
    async def list_rounds() -> list[dict]:
        return [project.state.rounds[n].to_json() for n in sorted(project.state.rounds)]

    @app.post("/rounds", dependencies=guarded, status_code=201)
    async def start_round(body: StartRound) -> dict:
        config = TrainConfig.from_json(body.config) if body.config else TrainConfig()
        state = project.start_round(body.mode, config)
        return state.to_json()

    @app.post("/rounds/{number}/advance", dependencies=guarded)
    async def advance_round(number: int) -> dict:
        current = project.state.current_round()
        if current is None or current.round != number:
            raise NoActiveRound(f"round {number} is not the active round")
        phase = project.advance()
        return {"round": number, "phase": phase}

    @app.get("/queue/next", dependencies=guarded)
    async def queue_next(strategy: str | None = Query(default=None)) -> dict:
        item = project.queue_next(strategy)
        return {"item": item}

    @app.get("/queue/summary", dependencies=guarded)
    async def queue_summary() -> dict:
        return project.queue_summary()

    @app.get("/conflicts", dependencies=guarded)
    async def list_conflicts() -> list[dict]:
        return project.conflicts()

    @app.get("/rules", dependencies=guarded)
    async def get_rules() -> dict:
        if project.state.rules is None:
            raise KeyError("no filter rules configured")
        return project.state.rules.to_json()

    @app.post("/labels", dependencies=guarded)
    async def submit_label(body: LabelSubmission) -> dict:
        ack = project.submit_labels({body.record_id: body.label}, oracle_id=body.oracle_id)
        return {
            "record_id": body.record_id,
            "event_id": ack["events"][body.record_id],
            "deduplicated": ack["accepted"] == 0,
            "conflict": body.record_id in ack["conflicts"],
        }

    @app.post("/labels/adjudicate", dependencies=guarded)
    async def adjudicate(body: Adjudication) -> dict:
        project.adjudicate(body.record_id, body.label, body.oracle_id)
        return {"record_id": body.record_id, "label": body.label}

    @app.post("/counterfactuals", dependencies=guarded, status_code=201)
    async def create_counterfactual(body: CounterfactualRequest) -> dict:
        synthetic, pair = project.create_counterfactual(
            body.source_id, body.direction, body.span, body.position
        )
        return {"record": synthetic.to_json(), "pair": pair}

    @app.get("/metrics", dependencies=guarded)
    async def get_metrics(
        round: int = Query(...), beta: float | None = Query(default=None)
    ) -> dict:
        return project.metrics_report(round, beta=beta)

    @app.get("/metrics/final", dependencies=guarded)
    async def final_table() -> dict:
        table = project.state.final_table
        if table is None:
            raise KeyError("final table not computed")
        return table

    @app.get("/records/{record_id}", dependencies=guarded)
    async def get_record(record_id: str) -> dict:
        current = project.state.current_round()
        best = None
        round_number = None
        if current is not None and current.selected_checkpoint_ids:
            best = current.selected_checkpoint_ids[0]
            round_number = current.round
        return project.record_view(record_id, round_number=round_number, best=best)

    return app


def serve(project: Project, host: str, port: int, token: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(project, token=token), host=host, port=port, log_level="warning")
