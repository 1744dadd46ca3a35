"""Interactive session runtime: live state, append-only persistence, replay.

A session owns one learner's dialogue under one policy. Every turn is
appended to a per-session JSONL trace log before the response goes out, and
a session can be rebuilt from that log alone by re-processing the recorded
inputs (template rendering keeps this exact).
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .config import PolicyConfig
from .llm_client import ChatClient
from .orchestrator import (
    ES_POLICY,
    SessionState,
    StudentInput,
    TraceSink,
    TurnPolicy,
    TurnTrace,
    new_session_state,
    process_turn,
    read_traces,
)
from .rendering import TemplateSet
from .scenarios import ANSWER_CORRECT, ANSWER_WRONG, ScenarioSpec, ScenarioStore, make_practice_problems
from .simulation import BASELINE_POLICY, DialogueMetrics, constraint_adherence, hint_efficiency

POLICY_IDS = ("es", "baseline")


def policy_for(policy_id: str) -> TurnPolicy:
    if policy_id == "es":
        return ES_POLICY
    if policy_id == "baseline":
        return BASELINE_POLICY
    raise ValueError(f"unknown policy {policy_id!r}")


class TutorSession:
    """One live dialogue: engine state plus its trace log."""

    def __init__(
        self,
        state: SessionState,
        sink: TraceSink | None = None,
        render_client: ChatClient | None = None,
        templates: TemplateSet | None = None,
        meta: dict | None = None,
    ):
        self.state = state
        self.sink = sink
        self.render_client = render_client
        self.templates = templates
        self.meta = meta or {}
        self.traces: list[TurnTrace] = []
        self.lock = threading.Lock()

    @property
    def session_id(self) -> str:
        return self.state.session_id

    def submit(self, student_input: StudentInput) -> TurnTrace:
        """Process one turn; the trace is persisted before the result returns."""
        policy = policy_for(self.state.policy_id)
        trace = process_turn(
            self.state,
            student_input,
            policy=policy,
            render_client=self.render_client,
            templates=self.templates,
        )
        self.traces.append(trace)
        if self.sink is not None:
            self.sink.append(trace)
        return trace


class SessionStore:
    """Creates, serves, persists, and rebuilds sessions under a data directory."""

    def __init__(
        self,
        data_dir: str | Path,
        config: PolicyConfig | None = None,
        scenarios: ScenarioStore | None = None,
        render_client: ChatClient | None = None,
        templates: TemplateSet | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or PolicyConfig()
        self.scenarios = scenarios or ScenarioStore.bundled()
        self.render_client = render_client
        self.templates = templates
        self._sessions: dict[str, TutorSession] = {}

    def _paths(self, session_id: str) -> tuple[Path, Path]:
        return (
            self.data_dir / f"{session_id}.meta.json",
            self.data_dir / f"{session_id}.traces.jsonl",
        )

    def create(
        self,
        policy_id: str,
        scenario_id: str | None = None,
        skill_id: str | None = None,
        session_id: str | None = None,
    ) -> TutorSession:
        if policy_id not in POLICY_IDS:
            raise ValueError(f"unknown policy {policy_id!r}")
        if (scenario_id is None) == (skill_id is None):
            raise ValueError("exactly one of scenario_id or skill_id is required")
        if scenario_id is not None:
            spec = self.scenarios.get(scenario_id)  # KeyError -> not found
            skill = spec.skill_id
            problems = spec.problems
        else:
            skill = skill_id or ""
            problems = make_practice_problems(skill, self.config.simulation.problems_per_dialogue)

        session_id = session_id or uuid.uuid4().hex
        state = new_session_state(
            session_id=session_id,
            policy_id=policy_id,
            config=self.config,
            skill_id=skill,
            problems=problems,
        )
        meta = {
            "session_id": session_id,
            "policy": policy_id,
            "scenario_id": scenario_id,
            "skill_id": skill,
            "created_at": time.time(),
            "policy_config_hash": state.config_hash,
        }
        meta_path, trace_path = self._paths(session_id)
        meta_path.write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        session = TutorSession(
            state,
            sink=TraceSink(trace_path),
            render_client=self.render_client,
            templates=self.templates,
            meta=meta,
        )
        self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> TutorSession:
        if session_id not in self._sessions:
            return self.rebuild(session_id)
        return self._sessions[session_id]

    def __contains__(self, session_id: str) -> bool:
        meta_path, _ = self._paths(session_id)
        return session_id in self._sessions or meta_path.exists()

    def rebuild(self, session_id: str) -> TutorSession:
        """Reconstruct a session from its persisted log by re-running every input."""
        meta_path, trace_path = self._paths(session_id)
        if not meta_path.exists():
            raise KeyError(f"unknown session {session_id!r}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("scenario_id"):
            spec = self.scenarios.get(meta["scenario_id"])
            problems = spec.problems
            skill = spec.skill_id
        else:
            skill = meta["skill_id"]
            problems = make_practice_problems(skill, self.config.simulation.problems_per_dialogue)
        state = new_session_state(
            session_id=session_id,
            policy_id=meta["policy"],
            config=self.config,
            skill_id=skill,
            problems=problems,
        )
        session = TutorSession(
            state,
            sink=TraceSink(trace_path),
            render_client=self.render_client,
            templates=self.templates,
            meta=meta,
        )
        if trace_path.exists():
            recorded = read_traces(trace_path)
            policy = policy_for(meta["policy"])
            for trace in recorded:
                replayed = process_turn(
                    state,
                    StudentInput.from_dict(trace.student_input),
                    policy=policy,
                    templates=self.templates,
                )
                session.traces.append(replayed)
        self._sessions[session_id] = session
        return session

    def traces_on_disk(self, session_id: str) -> list[TurnTrace]:
        _, trace_path = self._paths(session_id)
        if not trace_path.exists():
            return []
        return read_traces(trace_path)


@dataclass
class ReplayResult:
    scenario_id: str
    policy: str
    transcript: list
    traces: list
    metrics: DialogueMetrics

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "policy": self.policy,
            "transcript": self.transcript,
            "metrics": self.metrics.to_dict(),
        }


def _resolve_answer(move_answer: str | None, state: SessionState) -> str | None:
    if move_answer == ANSWER_CORRECT:
        return state.current_problem.answer
    if move_answer == ANSWER_WRONG:
        answer = state.current_problem.answer
        return f"{answer}1" if answer else "wrong"
    return move_answer


def replay_scenario(
    spec: ScenarioSpec,
    policy_id: str,
    config: PolicyConfig | None = None,
    templates: TemplateSet | None = None,
) -> ReplayResult:
    """Deterministic end-to-end run of a scenario's scripted student.

    Placeholder answers resolve against the live problem, so one script stays
    meaningful under policies with different progression rules.
    """
    if not spec.scripted_moves:
        raise ValueError(f"scenario {spec.scenario_id!r} has no scripted student moves")
    config = config or PolicyConfig()
    state = new_session_state(
        session_id=f"replay-{spec.scenario_id}-{policy_id}",
        policy_id=policy_id,
        config=config,
        skill_id=spec.skill_id,
        problems=spec.problems,
        rng_seed_label=f"replay:{spec.scenario_id}",
    )
    policy = policy_for(policy_id)
    traces: list[TurnTrace] = []
    transcript: list[dict] = []
    initial_p = state.mastery.p_mastery
    for move in spec.scripted_moves:
        if state.done:
            break
        student_input = StudentInput(
            kind=move.kind,
            answer=_resolve_answer(move.answer, state) if move.kind == "attempt" else None,
            confidence=move.confidence,
        )
        trace = process_turn(state, student_input, policy=policy, templates=templates)
        traces.append(trace)
        transcript.append(
            {
                "student": student_input.display_text(),
                "tutor": trace.rendered_text,
                "badges": [
                    {"agent": a.agent.value, "action": a.action.value}
                    for a in trace.decision.actions
                ],
            }
        )

    measured_gain = state.mastery.p_mastery - initial_p
    hints = sum(len(t.decision.hint_actions()) for t in traces)
    metrics = DialogueMetrics(
        measured_mastery_gain=measured_gain,
        latent_mastery_gain=None,
        hints_given=hints,
        constraint_adherence=constraint_adherence(traces),
        hint_efficiency=hint_efficiency(measured_gain, hints),
        turns=len(traces),
        prompt_tokens_total=sum(t.prompt_token_count for t in traces),
        latency_proxy_ms=sum(t.latency_ms for t in traces),
    )
    return ReplayResult(
        scenario_id=spec.scenario_id,
        policy=policy_id,
        transcript=transcript,
        traces=traces,
        metrics=metrics,
    )
