"""HTTP API over the session runtime: versioned JSON endpoints for the console.

Every turn response carries the ordered action badges and both constraint
verdicts — the transparency contract. Requests to one session serialize on a
per-session lock; distinct sessions run concurrently.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import PolicyConfig
from .llm_client import ChatClient
from .orchestrator import SessionCompleteError, StudentInput, TurnTrace, ValidationError
from .rendering import TemplateSet, default_templates
from .scenarios import ScenarioStore
from .session import SessionStore, TutorSession

API_PREFIX = "/api/v1"


class CreateSessionBody(BaseModel):
    policy: Literal["es", "baseline"]
    scenario_id: str | None = None
    skill_id: str | None = None


class TurnBody(BaseModel):
    kind: Literal["attempt", "hint_request", "chat"]
    answer: str | None = None
    confidence: int | None = None
    text: str | None = None


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body: dict = {"code": code, "message": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _problem_payload(session: TutorSession) -> dict | None:
    state = session.state
    if state.done:
        return None
    problem = state.current_problem
    return {
        "problem_id": problem.problem_id,
        "prompt": problem.prompt,
        "skill_id": state.skill_id,
        "index": state.problem_index,
        "total": len(state.problems),
    }


def _badges(trace: TurnTrace, templates: TemplateSet) -> list[dict]:
    return [
        {
            "agent": action["agent"],
            "action": action["action"],
            "rationale": templates.rationales.get(
                action.get("rationale_key", ""), action.get("rationale_key", "")
            ),
        }
        for action in (a.to_dict() for a in trace.decision.actions)
    ]


def create_app(
    data_dir: str | Path,
    config: PolicyConfig | None = None,
    scenarios: ScenarioStore | None = None,
    render_client: ChatClient | None = None,
    templates: TemplateSet | None = None,
    console_dir: str | Path | None = None,
) -> FastAPI:
    config = config or PolicyConfig()
    templates = templates or default_templates()
    store = SessionStore(
        data_dir,
        config=config,
        scenarios=scenarios,
        render_client=render_client,
        templates=templates,
    )

    app = FastAPI(title="tutorlab", version="0.1.0")
    app.state.store = store

    if console_dir is not None and Path(console_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    @app.get(API_PREFIX + "/health")
    def health() -> dict:
        return {"status": "ok", "policy_config_hash": config.hash()}

    @app.get(API_PREFIX + "/scenarios")
    def scenarios_index() -> list[dict]:
        return store.scenarios.summaries()

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if (body.scenario_id is None) == (body.skill_id is None):
            return _error(
                400,
                "validation_error",
                "exactly one of scenario_id or skill_id is required",
                "scenario_id",
            )
        try:
            session = store.create(body.policy, scenario_id=body.scenario_id, skill_id=body.skill_id)
        except KeyError:
            return _error(404, "not_found", f"unknown scenario {body.scenario_id!r}", "scenario_id")
        return {
            "session_id": session.session_id,
            "policy": session.state.policy_id,
            "problem": _problem_payload(session),
        }

    @app.post(API_PREFIX + "/sessions/{session_id}/turns")
    def submit_turn(session_id: str, body: TurnBody):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"unknown session {session_id!r}")
        if body.kind == "attempt" and body.answer is None:
            return _error(400, "validation_error", "attempt inputs require an answer", "answer")
        if body.confidence is not None and body.confidence not in (1, 2, 3, 4, 5):
            return _error(400, "validation_error", "confidence must be in 1..5", "confidence")
        student_input = StudentInput(
            kind=body.kind, answer=body.answer, confidence=body.confidence, text=body.text
        )
        with session.lock:
            try:
                trace = session.submit(student_input)
            except SessionCompleteError:
                return _error(409, "session_complete", "this session has no remaining problems")
            except ValidationError as exc:
                return _error(400, "validation_error", str(exc), exc.field_name)
            advanced = any(a.action.value == "NEXT_PROBLEM" for a in trace.decision.actions)
            payload = {
                "message": trace.rendered_text,
                "badges": _badges(trace, templates),
                "constraint_checks": [c.to_dict() for c in trace.decision.constraint_checks],
                "trace_id": f"{session_id}:{trace.turn_index}",
                "renderer_mode": trace.renderer_mode,
                "done": session.state.done,
            }
            if advanced:
                payload["problem"] = _problem_payload(session)
        return payload

    @app.get(API_PREFIX + "/sessions/{session_id}/traces")
    def get_traces(session_id: str):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"unknown session {session_id!r}")
        return [t.to_dict() for t in session.traces]

    return app
