"""The specialized pedagogical agents: pure rules from learner state to proposals.

Each agent maps an immutable LearnerSnapshot to at most one proposal per
turn. Nothing here mutates state or calls a model; the ensemble is a set of
deterministic functions the orchestrator evaluates and arbitrates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .bkt import SkillMastery, is_mastered
from .config import PolicyConfig
from .features import FeatureVector
from .scenarios import ContentStore


class ActionType(str, Enum):
    CONFIRM = "CONFIRM"
    NUDGE = "NUDGE"
    REMEDIATE = "REMEDIATE"
    REMEDIATE_DEEP = "REMEDIATE_DEEP"
    HINT_MIN = "HINT_MIN"
    HINT_MED = "HINT_MED"
    HINT_FULL = "HINT_FULL"
    DENY_HINT = "DENY_HINT"
    ENCOURAGE = "ENCOURAGE"
    NEXT_PROBLEM = "NEXT_PROBLEM"


#: The only actions that put hint content in front of the learner.
HINT_ACTIONS = frozenset({ActionType.HINT_MIN, ActionType.HINT_MED, ActionType.HINT_FULL})

HINT_LEVEL_BY_ACTION = {
    ActionType.HINT_MIN: "MIN",
    ActionType.HINT_MED: "MED",
    ActionType.HINT_FULL: "FULL",
}


class AgentName(str, Enum):
    ETHICS = "Ethics"
    ASSESSMENT = "Assessment"
    FEEDBACK = "Feedback"
    SCAFFOLD = "Scaffold"
    MOTIVATOR = "Motivator"
    TUTOR = "Tutor"


class AffectState(str, Enum):
    NEUTRAL = "neutral"
    FRUSTRATED = "frustrated"
    LOW_CONFIDENCE = "low_confidence"


class InputKind(str, Enum):
    ATTEMPT = "attempt"
    HINT_REQUEST = "hint_request"
    CHAT = "chat"


@dataclass(frozen=True)
class AgentProposal:
    agent: AgentName
    action: ActionType
    rationale_key: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "agent": self.agent.value,
            "action": self.action.value,
            "rationale_key": self.rationale_key,
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AgentProposal":
        return cls(
            agent=AgentName(raw["agent"]),
            action=ActionType(raw["action"]),
            rationale_key=raw["rationale_key"],
            params=dict(raw.get("params", {})),
        )


@dataclass(frozen=True)
class ConstraintCheck:
    """Per-turn verdict for one named pedagogical constraint.

    `passed` reflects the final decision: it is False only when a hint was
    actually delivered in violation. `status` distinguishes vacuous turns,
    satisfied checks, and violations that the safety layer blocked.
    """

    name: str  # "attempt_before_hint" | "hint_cap"
    passed: bool
    status: str  # "vacuous" | "satisfied" | "violated_blocked" | "violated_delivered"
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "status": self.status, "detail": dict(self.detail)}

    @classmethod
    def from_dict(cls, raw: dict) -> "ConstraintCheck":
        return cls(
            name=raw["name"], passed=raw["passed"], status=raw["status"], detail=dict(raw.get("detail", {}))
        )


ATTEMPT_BEFORE_HINT = "attempt_before_hint"
HINT_CAP = "hint_cap"
CONSTRAINT_NAMES = (ATTEMPT_BEFORE_HINT, HINT_CAP)


@dataclass(frozen=True)
class LearnerSnapshot:
    """Everything an agent may read about the learner, frozen per turn."""

    skill_id: str
    problem_id: str
    features: FeatureVector
    mastery: SkillMastery
    affect: AffectState
    attempt_count_problem: int
    hints_given_problem: int
    last_correct: bool | None
    confidence: int | None
    last_input_kind: InputKind
    low_effort_attempts_problem: int = 0
    errors_problem: int = 0
    remediation_streak: int = 0
    last_input_low_effort: bool = False
    highest_hint_level_problem: str | None = None  # MIN/MED/FULL already delivered

    @property
    def genuine_attempts_problem(self) -> int:
        """Attempts that count for the attempt-before-hint rule."""
        return max(0, self.attempt_count_problem - self.low_effort_attempts_problem)

    def to_dict(self) -> dict:
        return {
            "skill_id": self.skill_id,
            "problem_id": self.problem_id,
            "features": self.features.record(),
            "mastery": {
                "skill_id": self.mastery.skill_id,
                "p_mastery": self.mastery.p_mastery,
                "opportunity_count": self.mastery.opportunity_count,
            },
            "affect": self.affect.value,
            "attempt_count_problem": self.attempt_count_problem,
            "hints_given_problem": self.hints_given_problem,
            "last_correct": self.last_correct,
            "confidence": self.confidence,
            "last_input_kind": self.last_input_kind.value,
            "low_effort_attempts_problem": self.low_effort_attempts_problem,
            "errors_problem": self.errors_problem,
            "remediation_streak": self.remediation_streak,
            "last_input_low_effort": self.last_input_low_effort,
            "highest_hint_level_problem": self.highest_hint_level_problem,
        }


def normalize_effort_text(text: str) -> str:
    return " ".join(text.lower().split()).strip(".!")


def is_low_effort(text: str, lexicon: tuple[str, ...]) -> bool:
    """True for inputs that signal no real attempt (the "idk" family)."""
    return normalize_effort_text(text) in {normalize_effort_text(t) for t in lexicon}


def detect_affect(snapshot: LearnerSnapshot, config: PolicyConfig) -> AffectState:
    """Heuristic affect from error patterns; frustration dominates."""
    if (
        snapshot.features.error_streak >= config.frustration_error_streak
        or snapshot.features.wheel_spinning
    ):
        return AffectState.FRUSTRATED
    if snapshot.confidence is not None and snapshot.confidence <= config.low_confidence_max:
        return AffectState.LOW_CONFIDENCE
    return AffectState.NEUTRAL


def feedback_propose(snapshot: LearnerSnapshot, config: PolicyConfig) -> AgentProposal | None:
    """Corrective feedback on answer attempts; non-answers get none."""
    if snapshot.last_input_kind is not InputKind.ATTEMPT or snapshot.last_correct is None:
        return None
    if snapshot.last_input_low_effort:
        return None
    if snapshot.last_correct:
        return AgentProposal(AgentName.FEEDBACK, ActionType.CONFIRM, "correct_answer")
    if snapshot.mastery.p_mastery >= config.nudge_mastery_split:
        return AgentProposal(AgentName.FEEDBACK, ActionType.NUDGE, "likely_slip")
    if snapshot.remediation_streak >= config.remediate_deep_after:
        return AgentProposal(AgentName.FEEDBACK, ActionType.REMEDIATE_DEEP, "strategy_change")
    return AgentProposal(AgentName.FEEDBACK, ActionType.REMEDIATE, "low_mastery_error")


HINT_LEVEL_RANK = {None: 0, "MIN": 1, "MED": 2, "FULL": 3}


def _hint_action_for_errors(errors_problem: int) -> ActionType:
    if errors_problem >= 3:
        return ActionType.HINT_FULL
    if errors_problem == 2:
        return ActionType.HINT_MED
    return ActionType.HINT_MIN


def scaffold_propose(snapshot: LearnerSnapshot, config: PolicyConfig) -> AgentProposal | None:
    """Graded hinting: on request, or proactively under a sustained error streak.

    The level escalates with errors on the current problem. A request always
    draws a proposal at the ladder level; an unrequested offer fires only
    when deepening struggle raises the warranted level above what this
    problem has already received, so the tutor escalates support rather than
    repeating it. The scaffold is cap-aware and goes silent at the cap; the
    hard guarantee stays with the safety check.
    """
    if snapshot.hints_given_problem >= config.hint_cap:
        return None
    action = _hint_action_for_errors(snapshot.errors_problem)
    if snapshot.last_input_kind is InputKind.HINT_REQUEST:
        return AgentProposal(
            agent=AgentName.SCAFFOLD,
            action=action,
            rationale_key="hint_requested",
            params={"level": HINT_LEVEL_BY_ACTION[action]},
        )
    escalates = (
        HINT_LEVEL_RANK[HINT_LEVEL_BY_ACTION[action]]
        > HINT_LEVEL_RANK[snapshot.highest_hint_level_problem]
    )
    if snapshot.features.error_streak >= config.proactive_hint_streak and escalates:
        return AgentProposal(
            agent=AgentName.SCAFFOLD,
            action=action,
            rationale_key="proactive_support",
            params={"level": HINT_LEVEL_BY_ACTION[action]},
        )
    return None


def motivator_propose(snapshot: LearnerSnapshot, config: PolicyConfig) -> AgentProposal | None:
    if (
        snapshot.affect in (AffectState.FRUSTRATED, AffectState.LOW_CONFIDENCE)
        or snapshot.features.error_streak >= config.encourage_error_streak
    ):
        return AgentProposal(AgentName.MOTIVATOR, ActionType.ENCOURAGE, "affect_support")
    return None


def tutor_propose(snapshot: LearnerSnapshot, config: PolicyConfig) -> AgentProposal | None:
    if is_mastered(snapshot.mastery.p_mastery, config.mastery_threshold):
        return AgentProposal(AgentName.TUTOR, ActionType.NEXT_PROBLEM, "mastery_threshold_reached")
    return None


@dataclass(frozen=True)
class EthicsVerdict:
    deny: AgentProposal | None
    checks: tuple[ConstraintCheck, ConstraintCheck]


def ethics_check(
    snapshot: LearnerSnapshot,
    candidates: list[AgentProposal] | tuple[AgentProposal, ...],
    config: PolicyConfig,
) -> EthicsVerdict:
    """Attempt-before-hint and hint-cap enforcement over this turn's candidates.

    Always returns a verdict for both constraints; with no hint candidate in
    play they pass vacuously. Low-effort inputs do not count as attempts, so
    "idk" spam cannot unlock hints.
    """
    hint_candidates = [p for p in candidates if p.action in HINT_ACTIONS]
    counters = {
        "attempt_count_problem": snapshot.attempt_count_problem,
        "genuine_attempts_problem": snapshot.genuine_attempts_problem,
        "hints_given_problem": snapshot.hints_given_problem,
        "hint_cap": config.hint_cap,
        "hint_candidates": [p.action.value for p in hint_candidates],
    }

    if not hint_candidates:
        checks = tuple(
            ConstraintCheck(name=name, passed=True, status="vacuous", detail=counters)
            for name in CONSTRAINT_NAMES
        )
        return EthicsVerdict(deny=None, checks=checks)

    attempt_violated = snapshot.genuine_attempts_problem == 0
    cap_violated = snapshot.hints_given_problem >= config.hint_cap

    checks = (
        ConstraintCheck(
            name=ATTEMPT_BEFORE_HINT,
            passed=True,
            status="violated_blocked" if attempt_violated else "satisfied",
            detail=counters,
        ),
        ConstraintCheck(
            name=HINT_CAP,
            passed=True,
            status="violated_blocked" if cap_violated else "satisfied",
            detail=counters,
        ),
    )
    deny = None
    if attempt_violated or cap_violated:
        deny = AgentProposal(
            agent=AgentName.ETHICS,
            action=ActionType.DENY_HINT,
            rationale_key=ATTEMPT_BEFORE_HINT if attempt_violated else HINT_CAP,
        )
    return EthicsVerdict(deny=deny, checks=checks)


def constraint_checks_for_delivery(
    snapshot: LearnerSnapshot, delivering_hint: bool, config: PolicyConfig
) -> tuple[ConstraintCheck, ConstraintCheck]:
    """Audit verdicts for a policy that may deliver hints without enforcement.

    Unlike ethics_check, this can return failed checks: it records what a
    delivery actually did to each constraint rather than blocking it.
    """
    counters = {
        "attempt_count_problem": snapshot.attempt_count_problem,
        "genuine_attempts_problem": snapshot.genuine_attempts_problem,
        "hints_given_problem": snapshot.hints_given_problem,
        "hint_cap": config.hint_cap,
    }
    if not delivering_hint:
        return tuple(  # type: ignore[return-value]
            ConstraintCheck(name=name, passed=True, status="vacuous", detail=counters)
            for name in CONSTRAINT_NAMES
        )
    attempt_violated = snapshot.genuine_attempts_problem == 0
    cap_violated = snapshot.hints_given_problem >= config.hint_cap
    return (
        ConstraintCheck(
            name=ATTEMPT_BEFORE_HINT,
            passed=not attempt_violated,
            status="violated_delivered" if attempt_violated else "satisfied",
            detail=counters,
        ),
        ConstraintCheck(
            name=HINT_CAP,
            passed=not cap_violated,
            status="violated_delivered" if cap_violated else "satisfied",
            detail=counters,
        ),
    )


def gather_proposals(snapshot: LearnerSnapshot, config: PolicyConfig) -> list[AgentProposal]:
    """Evaluate the non-safety agents on one immutable snapshot."""
    proposals = [
        feedback_propose(snapshot, config),
        scaffold_propose(snapshot, config),
        motivator_propose(snapshot, config),
        tutor_propose(snapshot, config),
    ]
    return [p for p in proposals if p is not None]


def domain_hint(store: ContentStore, skill_id: str, problem_id: str, level: str) -> str:
    """Authored-content key for a hint at the requested level.

    A missing level falls back to the nearest lower one; an unknown problem
    is a lookup error.
    """
    order = ("MIN", "MED", "FULL")
    if level not in order:
        raise KeyError(f"unknown hint level {level!r}")
    for candidate in order[: order.index(level) + 1][::-1]:
        try:
            key = store.hint_key(skill_id, problem_id, candidate)
            store.hint_text(key)
            return key
        except KeyError:
            if candidate == "MIN":
                raise
    raise KeyError(f"no hint content for {skill_id!r}/{problem_id!r}")
