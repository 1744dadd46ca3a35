"""Monte Carlo harness: synthetic students face the ensemble and an over-assist baseline.

Synthetic students carry a latent knowledge state the tutor never sees, so
the harness can separate measured mastery gain (the tutor's posterior) from
real learning. Runs are paired — the same sampled student meets both
policies — and every cell derives its own seeded stream, so reports are
reproducible bit for bit.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction

from .agents import (
    HINT_ACTIONS,
    HINT_LEVEL_BY_ACTION,
    HINT_LEVEL_RANK,
    ActionType,
    AgentName,
    AgentProposal,
    LearnerSnapshot,
    constraint_checks_for_delivery,
    is_low_effort,
)
from .config import Archetype, PolicyConfig, StudentBehavior
from .bkt import BktParams
from .orchestrator import (
    EsPolicy,
    InputKind,
    SessionState,
    StudentInput,
    TurnDecision,
    TurnTrace,
    build_turn_snapshot,
    new_session_state,
    process_turn,
)
from .rendering import BASELINE_MAX_TOKENS
from .scenarios import Problem, ScenarioSpec, make_practice_problems
from .stats import wilcoxon_signed_rank

__all__ = [
    "Archetype",
    "StudentBehavior",
    "SyntheticStudent",
    "StudentMove",
    "DialogueMetrics",
    "SimulationReport",
    "BaselinePolicy",
    "sample_student",
    "student_respond",
    "baseline_policy_step",
    "run_dialogue",
    "run_monte_carlo",
    "hint_efficiency",
    "constraint_adherence",
    "compare_reports",
]

#: Correctness boost a hint level grants an unmastered student.
HINT_BOOST = {None: 0.0, "MIN": 0.15, "MED": 0.35}
#: A full walkthrough makes the next attempt near-certain regardless of knowledge.
FULL_HINT_P_CORRECT = 0.95
#: Hint levels at which an attempt can still produce real learning.
LEARNING_COMPATIBLE_ASSIST = (None, "MIN")
#: Hint dependence: each full answer received raises the urge to ask instead of try,
#: and each denial teaches that asking without trying goes nowhere.
GAMING_BOOST_PER_FULL = 0.05
DENIAL_DAMPING_PER_DENY = 0.07
GAMING_REQUEST_RATE_CAP = 0.5
REQUEST_RATE_FLOOR = 0.0
#: Before any attempt on a problem, this share of ask-impulses becomes a fast
#: wrong probe instead: students usually type something first. Probes are real
#: (non-low-effort) attempts but carry no thought, so no learning draw.
PROBE_FIRST_RATE = 0.4

_PARAM_CLAMP = (0.01, 0.99)
_RESAMPLE_TRIES = 12

METRIC_FIELDS = (
    "measured_mastery_gain",
    "latent_mastery_gain",
    "hints_given",
    "constraint_adherence",
    "hint_efficiency",
    "turns",
    "prompt_tokens_total",
    "latency_proxy_ms",
)


@dataclass
class SyntheticStudent:
    """A simulated learner: perturbed skill parameters plus a hidden knowledge bit."""

    archetype: str
    true_params: BktParams
    latent_known: bool
    behavior: StudentBehavior
    seed_label: str = ""
    full_hints_received: int = 0
    denials_received: int = 0
    initial_latent_known: bool = field(init=False)

    def __post_init__(self) -> None:
        self.initial_latent_known = self.latent_known

    def fresh(self) -> "SyntheticStudent":
        """Same student, reset to the pre-dialogue knowledge state."""
        return SyntheticStudent(
            archetype=self.archetype,
            true_params=self.true_params,
            latent_known=self.initial_latent_known,
            behavior=self.behavior,
            seed_label=self.seed_label,
        )

    def request_rate(self) -> float:
        """Base rate shifted by what the tutor has taught this student.

        Handed answers breed asking; explicit denials teach that effort comes
        first. The two policies push this in opposite directions.
        """
        rate = (
            self.behavior.hint_request_rate
            + GAMING_BOOST_PER_FULL * self.full_hints_received
            - DENIAL_DAMPING_PER_DENY * self.denials_received
        )
        return min(GAMING_REQUEST_RATE_CAP, max(REQUEST_RATE_FLOOR, rate))

    def confidence(self) -> int:
        raw = 3 + self.behavior.confidence_bias + (1 if self.latent_known else -1)
        return max(1, min(5, raw))


@dataclass(frozen=True)
class StudentMove:
    kind: str  # attempt | hint_request
    correct: bool | None = None
    low_effort: bool = False
    confidence: int = 3


def _clamp(value: float) -> float:
    lo, hi = _PARAM_CLAMP
    return min(hi, max(lo, value))


def sample_student(archetype: Archetype, noise_sigma: float, rng: random.Random) -> SyntheticStudent:
    """Perturb the archetype center by Gaussian noise, keeping parameters sane.

    Values clamp to [0.01, 0.99]; draws breaking the slip+guess bound are
    resampled a bounded number of times, then shrunk halfway toward the
    center until valid (the center itself is always valid).
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    center = archetype.center_params

    def draw() -> tuple[float, float, float, float]:
        return (
            _clamp(center.p_l0 + rng.gauss(0.0, noise_sigma)),
            _clamp(center.p_t + rng.gauss(0.0, noise_sigma)),
            _clamp(center.p_s + rng.gauss(0.0, noise_sigma)),
            _clamp(center.p_g + rng.gauss(0.0, noise_sigma)),
        )

    p_l0, p_t, p_s, p_g = draw()
    for _ in range(_RESAMPLE_TRIES):
        if p_s + p_g < 1.0:
            break
        p_l0, p_t, p_s, p_g = draw()
    while p_s + p_g >= 1.0:
        p_s = _clamp((p_s + center.p_s) / 2.0)
        p_g = _clamp((p_g + center.p_g) / 2.0)

    params = BktParams(p_l0=p_l0, p_t=p_t, p_s=p_s, p_g=p_g)
    latent_known = rng.random() < params.p_l0
    return SyntheticStudent(
        archetype=archetype.name,
        true_params=params,
        latent_known=latent_known,
        behavior=archetype.behavior,
    )


def student_respond(
    student: SyntheticStudent,
    hint_level_received: str | None,
    rng: random.Random,
    attempted_this_problem: bool = True,
) -> StudentMove:
    """One student move given the assistance already received on this problem.

    Draw order is fixed (low-effort, hint-request/probe, correctness,
    learning) so seeded runs replay exactly. A FULL walkthrough makes the
    attempt near-certain but assistance above MIN blocks the learning
    transition: performance without learning. Received answers also feed
    hint dependence (see request_rate), the gaming dynamic over-assistance
    enables; on an untouched problem some ask-impulses surface as fast wrong
    probes instead of requests.
    """
    r_low_effort = rng.random()
    r_request = rng.random()
    confidence = student.confidence()

    if r_low_effort < student.behavior.low_effort_rate:
        return StudentMove(kind="attempt", correct=False, low_effort=True, confidence=confidence)
    if r_request < student.request_rate():
        if attempted_this_problem or rng.random() >= PROBE_FIRST_RATE:
            return StudentMove(kind="hint_request", confidence=confidence)
        return StudentMove(kind="attempt", correct=False, low_effort=False, confidence=confidence)

    params = student.true_params
    if hint_level_received == "FULL":
        p_correct = FULL_HINT_P_CORRECT
    elif student.latent_known:
        p_correct = 1.0 - params.p_s
    else:
        p_correct = min(0.99, params.p_g + HINT_BOOST[hint_level_received])
    correct = rng.random() < p_correct

    if (
        not student.latent_known
        and hint_level_received in LEARNING_COMPATIBLE_ASSIST
        and rng.random() < params.p_t
    ):
        student.latent_known = True

    return StudentMove(kind="attempt", correct=correct, low_effort=False, confidence=confidence)


# The monolithic tutor decides everything in-prompt, so its system message has
# to carry the whole playbook that the rule layer encodes structurally.
MONOLITHIC_SYSTEM = (
    "You are a friendly math tutor chatbot having an ongoing conversation with a "
    "middle-school student. On every turn you must do all of the following yourself: "
    "read the full conversation so far, judge whether the student's latest answer is "
    "correct, choose the feedback to give, decide whether to offer a hint and how "
    "strong it should be, decide whether to reveal the worked solution, decide when "
    "to encourage the student, and decide when to move on to the next problem. Keep "
    "the student happy and moving: if they ask for help, give the most useful help "
    "you can, including the full worked solution when that unblocks them; if they "
    "seem stuck or unsure, walk them through the answer rather than letting them "
    "struggle. Advance to the next problem once they answer correctly. Respond "
    "conversationally in a few sentences, referring back to earlier turns when "
    "relevant."
)


def baseline_policy_step(
    state: SessionState, student_input: StudentInput, snapshot: LearnerSnapshot | None = None
) -> TurnDecision:
    """Decision step of the over-assist monolithic policy.

    Every hint request is granted immediately at FULL, any error triggers the
    full answer on the spot, there is no cap and no attempt-before-hint
    check, and a correct answer confirms and advances. Constraint verdicts
    are still recorded honestly for the audit trail.
    """
    if snapshot is None:
        low_effort = student_input.kind == "attempt" and is_low_effort(
            student_input.answer or "", state.config.low_effort_lexicon
        )
        snapshot = build_turn_snapshot(
            state, InputKind(student_input.kind), student_input.confidence, low_effort
        )

    actions: list[AgentProposal] = []
    deliver_full = student_input.kind == "hint_request"
    if student_input.kind == "attempt":
        if state.last_correct:
            actions.append(AgentProposal(AgentName.FEEDBACK, ActionType.CONFIRM, "correct_answer"))
            actions.append(
                AgentProposal(AgentName.TUTOR, ActionType.NEXT_PROBLEM, "baseline_over_assist")
            )
        else:
            actions.append(AgentProposal(AgentName.FEEDBACK, ActionType.NUDGE, "baseline_over_assist"))
            deliver_full = True
        # Pandering to the confidence slider: unsure students get the answer too.
        if student_input.confidence is not None and student_input.confidence <= 2:
            deliver_full = True
    elif student_input.kind == "chat" and state.errors_problem >= 1:
        deliver_full = True

    if deliver_full:
        hint = AgentProposal(
            AgentName.SCAFFOLD,
            ActionType.HINT_FULL,
            "baseline_over_assist",
            params={"level": "FULL"},
        )
        # The answer recap reads before any advancement clause.
        progression = [a for a in actions if a.action is ActionType.NEXT_PROBLEM]
        actions = [a for a in actions if a.action is not ActionType.NEXT_PROBLEM] + [hint] + progression
    checks = constraint_checks_for_delivery(snapshot, deliver_full, state.config)
    return TurnDecision(actions=tuple(actions), suppressed=(), constraint_checks=checks)


@dataclass(frozen=True)
class BaselinePolicy:
    """Monolithic over-assist tutor: one big prompt, full history, no guardrails."""

    policy_id: str = "baseline"

    def decide(
        self, snapshot: LearnerSnapshot, state: SessionState, student_input: StudentInput
    ) -> tuple[list[AgentProposal], TurnDecision]:
        decision = baseline_policy_step(state, student_input, snapshot)
        return list(decision.actions), decision

    def build_messages(self, request, state: SessionState, student_input: StudentInput):
        import json as _json

        payload = {
            "problem": state.current_problem.prompt,
            "student_input": student_input.display_text(),
            "history": [list(turn) for turn in state.history],
        }
        return MONOLITHIC_SYSTEM, _json.dumps(payload, separators=(",", ":"))

    def max_completion_tokens(self, config: PolicyConfig) -> int:
        return BASELINE_MAX_TOKENS

    def simulated_call_ms(
        self, prompt_tokens: int, rng: random.Random | None, config: PolicyConfig
    ) -> float:
        sim = config.simulation
        base = sim.llm_call_ms_mean * prompt_tokens / 512.0
        jitter = rng.gauss(0.0, sim.llm_call_ms_jitter) if rng is not None else 0.0
        return max(0.0, base + jitter)


BASELINE_POLICY = BaselinePolicy()


@dataclass(frozen=True)
class DialogueMetrics:
    measured_mastery_gain: float
    latent_mastery_gain: float | None
    hints_given: int
    constraint_adherence: float
    hint_efficiency: float
    turns: int
    prompt_tokens_total: int
    latency_proxy_ms: float

    def to_dict(self) -> dict:
        return {
            "measured_mastery_gain": self.measured_mastery_gain,
            "latent_mastery_gain": self.latent_mastery_gain,
            "hints_given": self.hints_given,
            "constraint_adherence": self.constraint_adherence,
            "hint_efficiency": self.hint_efficiency,
            "turns": self.turns,
            "prompt_tokens_total": self.prompt_tokens_total,
            "latency_proxy_ms": self.latency_proxy_ms,
        }


def hint_efficiency(measured_gain: float, hints: int) -> float:
    """Mastery gain per hint; zero-hint dialogues count one hint of effort."""
    if hints < 0:
        raise ValueError("hints must be >= 0")
    return measured_gain / max(hints, 1)


def constraint_adherence(traces: list[TurnTrace]) -> float:
    """Fraction of hint-relevant turns whose delivered actions respect both rules.

    A turn is hint-relevant when a hint was delivered or denied. Turns with
    no hint in play are vacuously compliant; a dialogue with no hint events
    scores 1.0.
    """
    relevant = 0
    passed = 0
    for trace in traces:
        decision = trace.decision
        in_play = bool(decision.hint_actions()) or decision.has_action(ActionType.DENY_HINT)
        if not in_play:
            continue
        relevant += 1
        if all(check.passed for check in decision.constraint_checks):
            passed += 1
    if relevant == 0:
        return 1.0
    return passed / relevant


def _wrong_answer(problem: Problem) -> str:
    try:
        return str(Fraction(problem.answer.strip()) + 1)
    except (ValueError, ZeroDivisionError):
        return problem.answer + "?"


def run_dialogue(
    policy_id: str,
    scenario_or_skill: ScenarioSpec | str,
    student: SyntheticStudent,
    max_turns: int,
    rng: random.Random,
    config: PolicyConfig,
    *,
    session_id: str = "sim",
    seed_label: str | None = None,
) -> tuple[DialogueMetrics, list[TurnTrace]]:
    """Drive one full tutoring dialogue between a policy and a synthetic student."""
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    if isinstance(scenario_or_skill, ScenarioSpec):
        skill_id = scenario_or_skill.skill_id
        problems = scenario_or_skill.problems
    else:
        skill_id = scenario_or_skill
        problems = make_practice_problems(skill_id, config.simulation.problems_per_dialogue)

    state = new_session_state(
        session_id=session_id,
        policy_id=policy_id,
        config=config,
        skill_id=skill_id,
        problems=problems,
        rng_seed_label=seed_label,
    )
    policy = EsPolicy(simulate_model_call=True) if policy_id == "es" else BASELINE_POLICY

    initial_p = state.mastery.p_mastery
    initial_known = student.latent_known
    assist_level: str | None = None
    traces: list[TurnTrace] = []

    for _ in range(max_turns):
        if state.done:
            break
        move = student_respond(
            student,
            assist_level,
            rng,
            attempted_this_problem=state.attempt_count_problem > 0,
        )
        if move.kind == "hint_request":
            student_input = StudentInput(kind="hint_request", confidence=move.confidence)
        elif move.low_effort:
            student_input = StudentInput(kind="attempt", answer="idk", confidence=move.confidence)
        else:
            answer = (
                state.current_problem.answer if move.correct else _wrong_answer(state.current_problem)
            )
            student_input = StudentInput(kind="attempt", answer=answer, confidence=move.confidence)
        trace = process_turn(state, student_input, rng, policy=policy)
        traces.append(trace)
        for action in trace.decision.actions:
            if action.action in HINT_ACTIONS:
                level = HINT_LEVEL_BY_ACTION[action.action]
                if HINT_LEVEL_RANK[level] > HINT_LEVEL_RANK[assist_level]:
                    assist_level = level
                if level == "FULL":
                    student.full_hints_received += 1
            elif action.action is ActionType.DENY_HINT:
                student.denials_received += 1
        if trace.decision.has_action(ActionType.NEXT_PROBLEM):
            assist_level = None

    measured_gain = state.mastery.p_mastery - initial_p
    hints = sum(len(t.decision.hint_actions()) for t in traces)
    metrics = DialogueMetrics(
        measured_mastery_gain=measured_gain,
        latent_mastery_gain=float(student.latent_known) - float(initial_known),
        hints_given=hints,
        constraint_adherence=constraint_adherence(traces),
        hint_efficiency=hint_efficiency(measured_gain, hints),
        turns=len(traces),
        prompt_tokens_total=sum(t.prompt_token_count for t in traces),
        latency_proxy_ms=sum(t.latency_ms for t in traces),
    )
    return metrics, traces


@dataclass
class SimulationReport:
    config: dict
    runs: list
    aggregates: dict
    tests: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "runs": self.runs,
            "aggregates": self.aggregates,
            "tests": self.tests,
        }


def _aggregate(rows: list[dict]) -> dict:
    out: dict = {}
    for metric in METRIC_FIELDS:
        values = [row[metric] for row in rows if row[metric] is not None]
        if not values:
            out[metric] = {"mean": None, "std": None}
            continue
        mean = statistics.fmean(values)
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        out[metric] = {"mean": mean, "std": std}
    return out


def run_monte_carlo(
    config: PolicyConfig,
    *,
    seed: int,
    policies: tuple[str, ...] = ("es", "baseline"),
    skill_id: str = "practice_skill",
) -> SimulationReport:
    """Paired Monte Carlo: each sampled student faces every policy.

    Streams derive from (seed, archetype, run index, role), so any cell can
    be reproduced in isolation and parallel execution would not change the
    report.
    """
    sim = config.simulation
    rows: list[dict] = []
    for archetype in sim.archetypes:
        for i in range(sim.runs_per_archetype):
            student_rng = random.Random(f"{seed}:{archetype.name}:{i}:student")
            base_student = sample_student(archetype, sim.noise_sigma, student_rng)
            for policy_id in policies:
                label = f"{seed}:{archetype.name}:{i}:dialogue"
                metrics, _ = run_dialogue(
                    policy_id,
                    skill_id,
                    base_student.fresh(),
                    sim.max_turns,
                    random.Random(label),
                    config,
                    session_id=f"sim-{archetype.name}-{i}-{policy_id}",
                    seed_label=label,
                )
                rows.append(
                    {
                        "archetype": archetype.name,
                        "run_index": i,
                        "policy": policy_id,
                        **metrics.to_dict(),
                    }
                )

    aggregates: dict = {}
    for policy_id in policies:
        policy_rows = [r for r in rows if r["policy"] == policy_id]
        aggregates[policy_id] = {
            "overall": _aggregate(policy_rows),
            "by_archetype": {
                a.name: _aggregate([r for r in policy_rows if r["archetype"] == a.name])
                for a in sim.archetypes
            },
        }

    tests: dict = {}
    if set(policies) >= {"es", "baseline"}:
        tests = paired_tests(rows)

    report_config = {
        "seed": seed,
        "policies": list(policies),
        "skill_id": skill_id,
        "runs_per_archetype": sim.runs_per_archetype,
        "noise_sigma": sim.noise_sigma,
        "max_turns": sim.max_turns,
        "problems_per_dialogue": sim.problems_per_dialogue,
        "archetypes": [a.name for a in sim.archetypes],
        "policy_config_hash": config.hash(),
    }
    return SimulationReport(config=report_config, runs=rows, aggregates=aggregates, tests=tests)


def paired_tests(rows: list[dict], metrics: tuple[str, ...] | None = None) -> dict:
    """Wilcoxon signed-rank on (baseline - es) per-run differences."""
    metrics = metrics or (
        "measured_mastery_gain",
        "constraint_adherence",
        "hint_efficiency",
        "hints_given",
        "prompt_tokens_total",
        "latency_proxy_ms",
    )
    by_key: dict = {}
    for row in rows:
        by_key.setdefault((row["archetype"], row["run_index"]), {})[row["policy"]] = row
    tests = {}
    for metric in metrics:
        diffs = []
        for pair in by_key.values():
            if "es" in pair and "baseline" in pair:
                diffs.append(pair["baseline"][metric] - pair["es"][metric])
        if diffs:
            tests[metric] = wilcoxon_signed_rank(diffs).to_dict()
    return tests


def compare_reports(report_a: dict, report_b: dict) -> dict:
    """Pair two single-policy reports row-by-row and test the differences."""
    seed_a, seed_b = report_a["config"]["seed"], report_b["config"]["seed"]
    if seed_a != seed_b:
        raise ValueError(
            f"reports must share a master seed for a paired comparison (got {seed_a} and {seed_b})"
        )
    rows = list(report_a["runs"]) + list(report_b["runs"])
    policies = sorted({r["policy"] for r in rows})
    if set(policies) != {"es", "baseline"}:
        raise ValueError(f"need one es report and one baseline report, got policies {policies}")
    aggregates = {
        policy_id: _aggregate([r for r in rows if r["policy"] == policy_id])
        for policy_id in policies
    }
    return {"aggregates": aggregates, "tests": paired_tests(rows)}
