"""HTTP shell around the session logic.

Endpoints speak the dataset's JSON object format. Within a session every
mutating request serializes on one lock; pictures are rasterized once and
cached. Session logs are flushed to disk (one JSON file per session) on
every phase change when a log directory is configured.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .dataset import dumps
from .generator import GenConfig, GeneratorError
from .raster import png_bytes, rasterize
from .session import (
    EmptySelectionError,
    PhaseViolationError,
    SelectionRule,
    Session,
    SessionError,
    create_session,
    finish_session,
    iterate_from_selection,
    picture_state,
    record_response,
    session_log,
)


class _SessionBox:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.pictures: dict[int, bytes] = {}


def _config_from_payload(payload: dict) -> GenConfig:
    fields = {}
    for name in (
        "picture_width",
        "picture_height",
        "inset_ratio",
        "generative_ratio",
        "min_site_offset",
        "f_min",
        "f_max",
        "background_luminance",
        "eye_distance",
    ):
        if name in payload:
            fields[name] = payload[name]
    return GenConfig(**fields)


def create_app(
    log_dir: Optional[str] = None,
    viewer_dir: Optional[str] = None,
    default_soa_ms: float = 250.0,
) -> FastAPI:
    app = FastAPI(title="texscene session server")
    boxes: dict[str, _SessionBox] = {}
    registry_lock = threading.Lock()

    def get_box(session_id: str) -> _SessionBox:
        with registry_lock:
            box = boxes.get(session_id)
        if box is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return box

    def flush_log(session: Session) -> None:
        if log_dir is None:
            return
        path = Path(log_dir) / f"session-{session.id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(session_log(session)) + "\n", encoding="utf-8")

    @app.exception_handler(SessionError)
    def session_error(_request: Request, exc: SessionError):
        status = 409 if isinstance(exc, (PhaseViolationError, EmptySelectionError)) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(GeneratorError)
    def generator_error(_request: Request, exc: GeneratorError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/sessions")
    async def post_sessions(request: Request):
        payload = await request.json()
        config = _config_from_payload(payload.get("config") or {})
        rule = None
        if "window_ms" in payload:
            rule = SelectionRule(window_ms=float(payload["window_ms"]))
        session = create_session(
            config,
            seed=int(payload["seed"]),
            n_pictures=int(payload.get("n_pictures", 20)),
            soa_ms=float(payload.get("soa_ms", default_soa_ms)),
            picture_iterations=int(payload.get("picture_iterations", 6)),
            rule=rule,
        )
        with registry_lock:
            boxes[session.id] = _SessionBox(session)
        flush_log(session)
        return JSONResponse(
            {
                "session_id": session.id,
                "soa_ms": session.soa_ms,
                "window_ms": session.rule.window_ms,
                "plan": [
                    {
                        "index": e.index,
                        "seed": e.token.seed,
                        "iteration": e.token.iteration,
                        "onset_ms": e.onset_ms,
                    }
                    for e in session.plan
                ],
            }
        )

    @app.get("/sessions/{session_id}/picture/{index}")
    def get_picture(session_id: str, index: int):
        box = get_box(session_id)
        with box.lock:
            if index not in box.pictures:
                if not 0 <= index < len(box.session.plan):
                    raise HTTPException(status_code=404, detail="no such picture")
                state = picture_state(box.session, index)
                box.pictures[index] = png_bytes(rasterize(state))
            data = box.pictures[index]
        return Response(content=data, media_type="image/png")

    @app.post("/sessions/{session_id}/responses")
    async def post_response(session_id: str, request: Request):
        payload = await request.json()
        box = get_box(session_id)
        with box.lock:
            record_response(
                box.session,
                onset_index=int(payload["onset_index"]),
                t_response_ms=float(payload["t_response_ms"]),
                key=str(payload.get("key", "space")),
            )
            count = len(box.session.responses)
        return {"recorded": True, "count": count}

    @app.post("/sessions/{session_id}/finish")
    async def post_finish(session_id: str, request: Request):
        body = await request.body()
        payload = {}
        if body:
            import json

            payload = json.loads(body)
        box = get_box(session_id)
        with box.lock:
            selected = finish_session(
                box.session, payload.get("measured_onsets_ms")
            )
            flush_log(box.session)
        return {"selected": list(selected)}

    @app.post("/sessions/{session_id}/iterate")
    async def post_iterate(session_id: str, request: Request):
        body = await request.body()
        payload = {}
        if body:
            import json

            payload = json.loads(body)
        box = get_box(session_id)
        with box.lock:
            tokens = iterate_from_selection(box.session, payload.get("selected"))
            flush_log(box.session)
        return {
            "new_tokens": [
                {"seed": t.seed, "iteration": t.iteration} for t in tokens
            ]
        }

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        box = get_box(session_id)
        with box.lock:
            text = dumps(session_log(box.session))
        return PlainTextResponse(content=text, media_type="application/json")

    if viewer_dir is not None and Path(viewer_dir).is_dir():
        app.mount("/", StaticFiles(directory=viewer_dir, html=True), name="viewer")

    return app
