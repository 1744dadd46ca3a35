"""Deterministic arbitration of agent proposals into ordered, constraint-checked turns.

The layered priority rule is the whole control story: safety suppresses
hint delivery, assessment runs every attempt, feedback precedes scaffolding
precedes motivation, and progression goes last. Every turn leaves a full
audit trace: proposals, suppressions, both constraint verdicts, and the
rendered wording.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol

from .agents import (
    HINT_ACTIONS,
    HINT_LEVEL_BY_ACTION,
    HINT_LEVEL_RANK,
    ActionType,
    AffectState,
    AgentName,
    AgentProposal,
    ConstraintCheck,
    EthicsVerdict,
    InputKind,
    LearnerSnapshot,
    detect_affect,
    domain_hint,
    ethics_check,
    gather_proposals,
    is_low_effort,
)
from .bkt import BktParams, SkillMastery, bkt_update, is_mastered, new_mastery
from .config import PolicyConfig
from .features import FeatureVector, InteractionEvent, note_hint_delivery, reset_problem_counters, update_features
from .rendering import (
    RenderContext,
    RenderRequest,
    TemplateSet,
    build_prompt,
    count_tokens,
    prompt_token_count,
    render_llm,
    render_template,
)
from .scenarios import ContentStore, Problem, answers_match

#: Subsumption order: earlier agents' actions render first and outrank later ones.
PRIORITY = (
    AgentName.ETHICS,
    AgentName.ASSESSMENT,
    AgentName.FEEDBACK,
    AgentName.SCAFFOLD,
    AgentName.MOTIVATOR,
    AgentName.TUTOR,
)

_PRIORITY_INDEX = {agent: i for i, agent in enumerate(PRIORITY)}


class ValidationError(ValueError):
    """Bad caller input, carrying the offending field name."""

    def __init__(self, message: str, field_name: str):
        super().__init__(message)
        self.field_name = field_name


class SessionCompleteError(RuntimeError):
    """The session's problem sequence is exhausted; no further turns accepted."""


class TraceSinkError(OSError):
    pass


@dataclass(frozen=True)
class SuppressedProposal:
    proposal: AgentProposal
    reason: str

    def to_dict(self) -> dict:
        return {"proposal": self.proposal.to_dict(), "reason": self.reason}

    @classmethod
    def from_dict(cls, raw: dict) -> "SuppressedProposal":
        return cls(proposal=AgentProposal.from_dict(raw["proposal"]), reason=raw["reason"])


@dataclass(frozen=True)
class TurnDecision:
    """One arbitrated tutor turn: ordered actions, what was muted, and why."""

    actions: tuple[AgentProposal, ...]
    suppressed: tuple[SuppressedProposal, ...]
    constraint_checks: tuple[ConstraintCheck, ...]

    def hint_actions(self) -> list[AgentProposal]:
        return [a for a in self.actions if a.action in HINT_ACTIONS]

    def has_action(self, action: ActionType) -> bool:
        return any(a.action is action for a in self.actions)

    def to_dict(self) -> dict:
        return {
            "actions": [a.to_dict() for a in self.actions],
            "suppressed": [s.to_dict() for s in self.suppressed],
            "constraint_checks": [c.to_dict() for c in self.constraint_checks],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TurnDecision":
        return cls(
            actions=tuple(AgentProposal.from_dict(a) for a in raw["actions"]),
            suppressed=tuple(SuppressedProposal.from_dict(s) for s in raw["suppressed"]),
            constraint_checks=tuple(ConstraintCheck.from_dict(c) for c in raw["constraint_checks"]),
        )


@dataclass(frozen=True)
class StudentInput:
    kind: str  # attempt | hint_request | chat
    answer: str | None = None
    confidence: int | None = None
    text: str | None = None
    response_ms: int = 1000

    def __post_init__(self) -> None:
        if self.kind not in ("attempt", "hint_request", "chat"):
            raise ValidationError(f"unknown input kind {self.kind!r}", "kind")
        if self.confidence is not None and self.confidence not in (1, 2, 3, 4, 5):
            raise ValidationError("confidence must be an integer in 1..5", "confidence")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "answer": self.answer,
            "confidence": self.confidence,
            "text": self.text,
            "response_ms": self.response_ms,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "StudentInput":
        return cls(
            kind=raw["kind"],
            answer=raw.get("answer"),
            confidence=raw.get("confidence"),
            text=raw.get("text"),
            response_ms=raw.get("response_ms", 1000),
        )

    def display_text(self) -> str:
        if self.kind == "attempt":
            return self.answer or ""
        if self.kind == "hint_request":
            return "(asked for a hint)"
        return self.text or ""


@dataclass(frozen=True)
class TurnTrace:
    """Append-only audit record for one tutor turn."""

    turn_index: int
    session_id: str
    snapshot: dict
    student_input: dict
    proposals: tuple[dict, ...]
    decision: TurnDecision
    rendered_text: str
    renderer_mode: str
    prompt_token_count: int
    completion_token_count: int
    latency_ms: float
    rng_seed_state: str | None
    policy: str
    policy_config_hash: str

    def to_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "session_id": self.session_id,
            "snapshot": self.snapshot,
            "student_input": self.student_input,
            "proposals": list(self.proposals),
            "decision": self.decision.to_dict(),
            "rendered_text": self.rendered_text,
            "renderer_mode": self.renderer_mode,
            "prompt_token_count": self.prompt_token_count,
            "completion_token_count": self.completion_token_count,
            "latency_ms": self.latency_ms,
            "rng_seed_state": self.rng_seed_state,
            "policy": self.policy,
            "policy_config_hash": self.policy_config_hash,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TurnTrace":
        return cls(
            turn_index=raw["turn_index"],
            session_id=raw["session_id"],
            snapshot=raw["snapshot"],
            student_input=raw["student_input"],
            proposals=tuple(raw["proposals"]),
            decision=TurnDecision.from_dict(raw["decision"]),
            rendered_text=raw["rendered_text"],
            renderer_mode=raw["renderer_mode"],
            prompt_token_count=raw["prompt_token_count"],
            completion_token_count=raw["completion_token_count"],
            latency_ms=raw["latency_ms"],
            rng_seed_state=raw.get("rng_seed_state"),
            policy=raw["policy"],
            policy_config_hash=raw["policy_config_hash"],
        )


@dataclass
class SessionState:
    """Mutable per-session tutoring state; one logical owner per session."""

    session_id: str
    policy_id: str
    config: PolicyConfig
    skill_id: str
    problems: tuple[Problem, ...]
    content: ContentStore
    params: BktParams
    mastery: SkillMastery
    features: FeatureVector = field(default_factory=FeatureVector)
    problem_index: int = 0
    attempt_count_problem: int = 0
    low_effort_attempts_problem: int = 0
    hints_given_problem: int = 0
    errors_problem: int = 0
    remediation_streak: int = 0
    highest_hint_level_problem: str | None = None
    last_correct: bool | None = None
    history: list = field(default_factory=list)
    turn_index: int = 0
    done: bool = False
    clock_ms: int = 0
    rng_seed_label: str | None = None
    config_hash: str = ""

    def __post_init__(self) -> None:
        if not self.problems:
            raise ValueError("a session needs at least one problem")
        if not self.config_hash:
            self.config_hash = self.config.hash()

    @property
    def current_problem(self) -> Problem:
        return self.problems[self.problem_index]

    def advance_problem(self) -> None:
        """NEXT_PROBLEM effect: per-problem counters reset, per-skill state persists."""
        self.attempt_count_problem = 0
        self.low_effort_attempts_problem = 0
        self.hints_given_problem = 0
        self.errors_problem = 0
        self.remediation_streak = 0
        self.highest_hint_level_problem = None
        self.last_correct = None
        if self.problem_index + 1 < len(self.problems):
            self.problem_index += 1
            self.features = reset_problem_counters(self.features, self.current_problem.problem_id)
        else:
            self.done = True
            self.features = reset_problem_counters(self.features, None)


def new_session_state(
    *,
    session_id: str,
    policy_id: str,
    config: PolicyConfig,
    skill_id: str,
    problems: tuple[Problem, ...],
    rng_seed_label: str | None = None,
) -> SessionState:
    params = config.params_for(skill_id)
    return SessionState(
        session_id=session_id,
        policy_id=policy_id,
        config=config,
        skill_id=skill_id,
        problems=problems,
        content=ContentStore(skill_id, problems),
        params=params,
        mastery=new_mastery(skill_id, params),
        rng_seed_label=rng_seed_label,
    )


def build_turn_snapshot(
    state: SessionState,
    kind: InputKind,
    confidence: int | None,
    low_effort: bool,
) -> LearnerSnapshot:
    """Freeze the post-update learner state, with affect detected, for this turn."""
    provisional = LearnerSnapshot(
        skill_id=state.skill_id,
        problem_id=state.current_problem.problem_id,
        features=state.features,
        mastery=state.mastery,
        affect=AffectState.NEUTRAL,
        attempt_count_problem=state.attempt_count_problem,
        hints_given_problem=state.hints_given_problem,
        last_correct=state.last_correct if kind is InputKind.ATTEMPT else None,
        confidence=confidence,
        last_input_kind=kind,
        low_effort_attempts_problem=state.low_effort_attempts_problem,
        errors_problem=state.errors_problem,
        remediation_streak=state.remediation_streak,
        last_input_low_effort=low_effort,
        highest_hint_level_problem=state.highest_hint_level_problem,
    )
    return replace(provisional, affect=detect_affect(provisional, state.config))


def arbitrate(
    proposals: list[AgentProposal] | tuple[AgentProposal, ...],
    snapshot: LearnerSnapshot,
    config: PolicyConfig,
) -> TurnDecision:
    """Subsumption arbitration: safety verdict first, then priority ordering.

    A DENY_HINT verdict suppresses every hint-delivery proposal; survivors
    are ordered by the fixed agent hierarchy with progression last. A final
    safety net re-checks the outgoing decision and replaces any violating
    delivery with a denial — unreachable through the shipped rules, kept as
    defense in depth.
    """
    verdict: EthicsVerdict = ethics_check(snapshot, proposals, config)
    suppressed: list[SuppressedProposal] = []
    survivors: list[AgentProposal] = []
    for proposal in proposals:
        if verdict.deny is not None and proposal.action in HINT_ACTIONS:
            suppressed.append(SuppressedProposal(proposal, verdict.deny.rationale_key))
        else:
            survivors.append(proposal)
    survivors.sort(key=lambda p: _PRIORITY_INDEX[p.agent])
    actions: list[AgentProposal] = ([verdict.deny] if verdict.deny is not None else []) + survivors

    checks = verdict.checks

    # Defense in depth: a delivery that slipped past the rules becomes a denial.
    violating = [
        a
        for a in actions
        if a.action in HINT_ACTIONS
        and (snapshot.attempt_count_problem == 0 or snapshot.hints_given_problem >= config.hint_cap)
    ]
    if violating:
        reason = (
            "attempt_before_hint" if snapshot.attempt_count_problem == 0 else "hint_cap"
        )
        actions = [a for a in actions if a not in violating]
        suppressed.extend(SuppressedProposal(a, f"safety_net:{reason}") for a in violating)
        if not any(a.action is ActionType.DENY_HINT for a in actions):
            actions.insert(0, AgentProposal(AgentName.ETHICS, ActionType.DENY_HINT, reason))
        checks = tuple(
            replace(c, detail={**c.detail, "safety_net_triggered": True}) for c in checks
        )

    if config.single_agent_mode and len(actions) > 1:
        suppressed.extend(SuppressedProposal(a, "single_agent_mode") for a in actions[1:])
        actions = actions[:1]

    return TurnDecision(
        actions=tuple(actions), suppressed=tuple(suppressed), constraint_checks=checks
    )


class TurnPolicy(Protocol):
    """A decision layer plus its prompt shape; the turn pipeline stays shared."""

    policy_id: str

    def decide(
        self, snapshot: LearnerSnapshot, state: SessionState, student_input: StudentInput
    ) -> tuple[list[AgentProposal], TurnDecision]: ...

    def build_messages(
        self, request: RenderRequest, state: SessionState, student_input: StudentInput
    ) -> tuple[str, str]: ...

    def max_completion_tokens(self, config: PolicyConfig) -> int: ...

    def simulated_call_ms(self, prompt_tokens: int, rng: random.Random | None, config: PolicyConfig) -> float: ...


@dataclass(frozen=True)
class EsPolicy:
    """The ensemble policy: rule agents, subsumption arbitration, bounded prompt."""

    policy_id: str = "es"
    simulate_model_call: bool = False

    def decide(
        self, snapshot: LearnerSnapshot, state: SessionState, student_input: StudentInput
    ) -> tuple[list[AgentProposal], TurnDecision]:
        proposals = gather_proposals(snapshot, state.config)
        return proposals, arbitrate(proposals, snapshot, state.config)

    def build_messages(
        self, request: RenderRequest, state: SessionState, student_input: StudentInput
    ) -> tuple[str, str]:
        return build_prompt(request, state.config.renderer)

    def max_completion_tokens(self, config: PolicyConfig) -> int:
        return config.renderer.max_tokens

    def simulated_call_ms(
        self, prompt_tokens: int, rng: random.Random | None, config: PolicyConfig
    ) -> float:
        if not self.simulate_model_call:
            return 0.0
        sim = config.simulation
        base = sim.llm_call_ms_mean * prompt_tokens / 512.0
        jitter = rng.gauss(0.0, sim.llm_call_ms_jitter) if rng is not None else 0.0
        return max(0.0, base + jitter)


ES_POLICY = EsPolicy()


def process_turn(
    state: SessionState,
    student_input: StudentInput,
    rng: random.Random | None = None,
    *,
    policy: TurnPolicy | None = None,
    render_client=None,
    templates: TemplateSet | None = None,
) -> TurnTrace:
    """Run one full tutor turn and mutate the session state.

    Pipeline: feature update and mastery update on attempts, affect
    detection, agent proposals, arbitration, content resolution, rendering
    (with template fallback), progression, trace. Renderer failures never
    abort the turn.
    """
    if state.done:
        raise SessionCompleteError(f"session {state.session_id} has no remaining problems")
    policy = policy or ES_POLICY
    cfg = state.config
    kind = InputKind(student_input.kind)
    state.clock_ms += max(0, student_input.response_ms)

    low_effort = False
    if kind is InputKind.ATTEMPT:
        if student_input.answer is None:
            raise ValidationError("attempt inputs require an answer", "answer")
        low_effort = is_low_effort(student_input.answer, cfg.low_effort_lexicon)
        state.attempt_count_problem += 1
        if low_effort:
            # An effort signal, not knowledge evidence: it counts as a raw
            # attempt but feeds neither the student model nor the features,
            # matching its non-attempt status in the help-gating rule.
            state.low_effort_attempts_problem += 1
            state.last_correct = False
        else:
            correct = answers_match(student_input.answer, state.current_problem.answer)
            if not correct:
                state.errors_problem += 1
            event = InteractionEvent(
                learner_id=state.session_id,
                skill_id=state.skill_id,
                problem_id=state.current_problem.problem_id,
                timestamp_ms=state.clock_ms,
                correct=correct,
                hint_requested=False,
                response_ms=max(0, student_input.response_ms),
                attempt_index=state.attempt_count_problem,
                confidence=student_input.confidence,
            )
            state.features = update_features(
                state.features,
                event,
                window=cfg.rolling_window,
                wheel_threshold=cfg.wheel_spin_threshold,
                mastered=is_mastered(state.mastery.p_mastery, cfg.mastery_threshold),
            )
            state.mastery = bkt_update(state.mastery, state.params, correct)
            state.last_correct = correct

    snapshot = build_turn_snapshot(state, kind, student_input.confidence, low_effort)

    proposals, decision = policy.decide(snapshot, state, student_input)

    # Resolve authored hint content and apply delivery effects.
    final_actions: list[AgentProposal] = []
    for proposal in decision.actions:
        if proposal.action in HINT_ACTIONS:
            level = HINT_LEVEL_BY_ACTION[proposal.action]
            key = domain_hint(state.content, state.skill_id, state.current_problem.problem_id, level)
            params = dict(proposal.params)
            params["level"] = level
            params["hint_key"] = key
            params["hint_text"] = state.content.hint_text(key)
            if level == "FULL":
                params["answer"] = state.current_problem.answer
            final_actions.append(replace(proposal, params=params))
            state.hints_given_problem += 1
            if HINT_LEVEL_RANK[level] > HINT_LEVEL_RANK[state.highest_hint_level_problem]:
                state.highest_hint_level_problem = level
            state.features = note_hint_delivery(state.features, state.clock_ms)
        else:
            final_actions.append(proposal)
    decision = replace(decision, actions=tuple(final_actions))

    feedback_action = next((a for a in decision.actions if a.agent is AgentName.FEEDBACK), None)
    if feedback_action is not None:
        if feedback_action.action in (ActionType.REMEDIATE, ActionType.REMEDIATE_DEEP):
            state.remediation_streak += 1
        else:
            state.remediation_streak = 0

    request = RenderRequest(
        decisions=tuple(a.to_dict() for a in decision.actions),
        context=RenderContext(
            skill_id=state.skill_id,
            p_mastery=state.mastery.p_mastery,
            attempt_count_problem=state.attempt_count_problem,
            hints_given_problem=state.hints_given_problem,
            constraint_state={c.name: c.passed for c in decision.constraint_checks},
            history=tuple(state.history[-4:]),
        ),
    )
    system, user = policy.build_messages(request, state, student_input)
    prompt_tokens = prompt_token_count(system, user)

    if cfg.renderer.mode == "llm":
        result = render_llm(request, cfg.renderer, client=render_client, templates=templates)
        rendered_text, renderer_mode = result.text, result.mode
    else:
        rendered_text, renderer_mode = render_template(request, templates), "template"
    completion_tokens = min(count_tokens(rendered_text), policy.max_completion_tokens(cfg))

    latency_ms = (
        cfg.simulation.rule_eval_ms
        + cfg.simulation.template_render_ms
        + policy.simulated_call_ms(prompt_tokens, rng, cfg)
    )

    state.history.append(["student", student_input.display_text()])
    state.history.append(["tutor", rendered_text])

    trace = TurnTrace(
        turn_index=state.turn_index,
        session_id=state.session_id,
        snapshot=snapshot.to_dict(),
        student_input=student_input.to_dict(),
        proposals=tuple(p.to_dict() for p in proposals),
        decision=decision,
        rendered_text=rendered_text,
        renderer_mode=renderer_mode,
        prompt_token_count=prompt_tokens,
        completion_token_count=completion_tokens,
        latency_ms=latency_ms,
        rng_seed_state=state.rng_seed_label,
        policy=policy.policy_id,
        policy_config_hash=state.config_hash,
    )
    state.turn_index += 1

    if decision.has_action(ActionType.NEXT_PROBLEM):
        state.advance_problem()

    return trace


class TraceSink:
    """Append-only JSONL trace log; one atomic line per turn."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, trace: TurnTrace) -> None:
        line = json.dumps(trace.to_dict(), sort_keys=True, separators=(",", ":"))
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        except OSError as exc:
            raise TraceSinkError(f"trace sink {self.path}: {exc}") from exc


def log_turn(sink: TraceSink | str | Path, trace: TurnTrace) -> None:
    """Serialize one trace to the sink; I/O failures surface to the caller."""
    if not isinstance(sink, TraceSink):
        sink = TraceSink(sink)
    sink.append(trace)


def read_traces(path: str | Path) -> list[TurnTrace]:
    traces = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                traces.append(TurnTrace.from_dict(json.loads(line)))
    return traces
