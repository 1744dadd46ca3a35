from __future__ import annotations

import json
import random
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

import tutorlab.orchestrator as orchestrator_module
from tutorlab.agents import (
    ActionType,
    AffectState,
    AgentName,
    AgentProposal,
    EthicsVerdict,
    InputKind,
    LearnerSnapshot,
    constraint_checks_for_delivery,
)
from tutorlab.bkt import SkillMastery
from tutorlab.config import PolicyConfig
from tutorlab.features import FeatureVector
from tutorlab.orchestrator import (
    PRIORITY,
    SessionCompleteError,
    StudentInput,
    TraceSink,
    TraceSinkError,
    TurnTrace,
    ValidationError,
    arbitrate,
    log_turn,
    new_session_state,
    process_turn,
    read_traces,
)
from tutorlab.scenarios import make_practice_problems

CFG = PolicyConfig()


def fresh_state(policy_id: str = "es", config: PolicyConfig = CFG):
    return new_session_state(
        session_id="t-session",
        policy_id=policy_id,
        config=config,
        skill_id="practice_skill",
        problems=make_practice_problems("practice_skill", 5),
    )


def snapshot(**overrides) -> LearnerSnapshot:
    base = dict(
        skill_id="s1",
        problem_id="p1",
        features=FeatureVector(),
        mastery=SkillMastery("s1", 0.3),
        affect=AffectState.NEUTRAL,
        attempt_count_problem=1,
        hints_given_problem=0,
        last_correct=None,
        confidence=None,
        last_input_kind=InputKind.ATTEMPT,
    )
    base.update(overrides)
    return LearnerSnapshot(**base)


def proposal(agent: AgentName, action: ActionType) -> AgentProposal:
    return AgentProposal(agent, action, "test")


class TestArbitrate:
    def test_deny_suppresses_hint_delivery(self):
        snap = snapshot(attempt_count_problem=0, last_input_kind=InputKind.HINT_REQUEST)
        decision = arbitrate([proposal(AgentName.SCAFFOLD, ActionType.HINT_FULL)], snap, CFG)
        assert [a.action for a in decision.actions] == [ActionType.DENY_HINT]
        assert len(decision.suppressed) == 1
        assert decision.suppressed[0].proposal.action is ActionType.HINT_FULL
        assert decision.suppressed[0].reason == "attempt_before_hint"

    def test_confirm_then_next_ordering(self):
        snap = snapshot(last_correct=True, mastery=SkillMastery("s1", 0.97))
        decision = arbitrate(
            [
                proposal(AgentName.TUTOR, ActionType.NEXT_PROBLEM),
                proposal(AgentName.FEEDBACK, ActionType.CONFIRM),
            ],
            snap,
            CFG,
        )
        assert [a.action for a in decision.actions] == [ActionType.CONFIRM, ActionType.NEXT_PROBLEM]

    def test_three_way_priority_ordering(self):
        snap = snapshot(last_correct=False, errors_problem=1)
        decision = arbitrate(
            [
                proposal(AgentName.MOTIVATOR, ActionType.ENCOURAGE),
                proposal(AgentName.SCAFFOLD, ActionType.HINT_MIN),
                proposal(AgentName.FEEDBACK, ActionType.REMEDIATE),
            ],
            snap,
            CFG,
        )
        assert [a.action for a in decision.actions] == [
            ActionType.REMEDIATE,
            ActionType.HINT_MIN,
            ActionType.ENCOURAGE,
        ]

    def test_both_constraints_reported_every_turn(self):
        decision = arbitrate([], snapshot(), CFG)
        assert {c.name for c in decision.constraint_checks} == {"attempt_before_hint", "hint_cap"}

    def test_single_agent_mode_keeps_highest_priority(self):
        config = replace(CFG, single_agent_mode=True)
        snap = snapshot(last_correct=False, errors_problem=1)
        decision = arbitrate(
            [
                proposal(AgentName.MOTIVATOR, ActionType.ENCOURAGE),
                proposal(AgentName.FEEDBACK, ActionType.REMEDIATE),
            ],
            snap,
            config,
        )
        assert [a.action for a in decision.actions] == [ActionType.REMEDIATE]
        assert {s.reason for s in decision.suppressed} == {"single_agent_mode"}

    def test_safety_net_replaces_rogue_delivery(self, monkeypatch):
        # Force the safety layer to miss so the net has to catch the delivery.
        def blind_ethics(snap, candidates, config):
            return EthicsVerdict(
                deny=None,
                checks=constraint_checks_for_delivery(snap, False, config),
            )

        monkeypatch.setattr(orchestrator_module, "ethics_check", blind_ethics)
        snap = snapshot(attempt_count_problem=0)
        decision = arbitrate([proposal(AgentName.SCAFFOLD, ActionType.HINT_FULL)], snap, CFG)
        assert [a.action for a in decision.actions] == [ActionType.DENY_HINT]
        assert any(s.reason.startswith("safety_net") for s in decision.suppressed)
        assert all(c.detail.get("safety_net_triggered") for c in decision.constraint_checks)


@given(
    agents=st.lists(
        st.sampled_from(
            [
                (AgentName.FEEDBACK, ActionType.REMEDIATE),
                (AgentName.SCAFFOLD, ActionType.HINT_MIN),
                (AgentName.MOTIVATOR, ActionType.ENCOURAGE),
                (AgentName.TUTOR, ActionType.NEXT_PROBLEM),
            ]
        ),
        unique_by=lambda pair: pair[0],
        max_size=4,
    ),
    attempt_count=st.integers(0, 3),
    hints_given=st.integers(0, 4),
)
def test_action_order_is_a_priority_subsequence(agents, attempt_count, hints_given):
    snap = snapshot(attempt_count_problem=attempt_count, hints_given_problem=hints_given)
    decision = arbitrate([proposal(a, act) for a, act in agents], snap, CFG)
    order = [PRIORITY.index(a.agent) for a in decision.actions]
    assert order == sorted(order)
    assert len({a.agent for a in decision.actions}) == len(decision.actions)
    if decision.has_action(ActionType.DENY_HINT):
        assert not decision.hint_actions()


class TestProcessTurn:
    def test_pre_attempt_hint_request_denied(self):
        state = fresh_state()
        trace = process_turn(state, StudentInput(kind="hint_request"))
        assert trace.decision.has_action(ActionType.DENY_HINT)
        assert not trace.decision.hint_actions()
        assert state.hints_given_problem == 0
        deny = next(a for a in trace.decision.actions if a.action is ActionType.DENY_HINT)
        assert deny.rationale_key == "attempt_before_hint"

    def test_mastery_crossing_confirms_then_advances(self):
        state = fresh_state()
        state.mastery = SkillMastery("practice_skill", 0.94)
        answer = state.current_problem.answer
        trace = process_turn(state, StudentInput(kind="attempt", answer=answer))
        actions = [a.action for a in trace.decision.actions]
        assert actions == [ActionType.CONFIRM, ActionType.NEXT_PROBLEM]
        # default params: 0.94 -> 141/143 evidence posterior -> 0.9874 with learning
        assert state.mastery.p_mastery > 0.95
        assert state.problem_index == 1
        assert state.attempt_count_problem == 0

    def test_incorrect_then_request_delivers_ladder_hint(self):
        state = fresh_state()
        process_turn(state, StudentInput(kind="attempt", answer="nonsense"))
        trace = process_turn(state, StudentInput(kind="hint_request"))
        hints = trace.decision.hint_actions()
        assert len(hints) == 1
        assert hints[0].action is ActionType.HINT_MIN
        assert all(c.passed for c in trace.decision.constraint_checks)
        assert state.hints_given_problem == 1
        assert "hint_text" in hints[0].params

    def test_full_hint_carries_answer(self):
        state = fresh_state()
        for _ in range(3):
            process_turn(state, StudentInput(kind="attempt", answer="nonsense"))
        trace = process_turn(state, StudentInput(kind="hint_request"))
        hints = trace.decision.hint_actions()
        assert hints and hints[0].action is ActionType.HINT_FULL
        assert hints[0].params["answer"] == state.current_problem.answer

    def test_low_effort_attempt_neither_updates_model_nor_unlocks(self):
        state = fresh_state()
        before = state.mastery.p_mastery
        process_turn(state, StudentInput(kind="attempt", answer="idk"))
        assert state.mastery.p_mastery == before
        assert state.attempt_count_problem == 1
        assert state.low_effort_attempts_problem == 1
        trace = process_turn(state, StudentInput(kind="hint_request"))
        assert trace.decision.has_action(ActionType.DENY_HINT)

    def test_attempt_requires_answer(self):
        state = fresh_state()
        with pytest.raises(ValidationError) as err:
            process_turn(state, StudentInput(kind="attempt"))
        assert err.value.field_name == "answer"

    def test_chat_turn_yields_neutral_or_motivation(self):
        state = fresh_state()
        trace = process_turn(state, StudentInput(kind="chat", text="hello"))
        assert not trace.decision.hint_actions()
        assert trace.rendered_text

    def test_exhausting_problems_completes_session(self):
        state = fresh_state()
        state.mastery = SkillMastery("practice_skill", 0.99)
        while not state.done:
            process_turn(state, StudentInput(kind="attempt", answer=state.current_problem.answer))
        assert state.done
        with pytest.raises(SessionCompleteError):
            process_turn(state, StudentInput(kind="attempt", answer="1"))

    def test_counters_reset_on_advancement_but_skill_state_persists(self):
        state = fresh_state()
        state.mastery = SkillMastery("practice_skill", 0.94)
        process_turn(state, StudentInput(kind="attempt", answer="wrong-answer"))
        state.mastery = SkillMastery("practice_skill", 0.94, state.mastery.opportunity_count)
        process_turn(state, StudentInput(kind="attempt", answer=state.current_problem.answer))
        assert state.problem_index == 1
        assert state.errors_problem == 0
        assert state.hints_given_problem == 0
        assert state.mastery.opportunity_count == 2

    def test_trace_is_deterministic_for_equal_histories(self):
        def run():
            state = fresh_state()
            traces = [
                process_turn(state, StudentInput(kind="attempt", answer="nonsense")),
                process_turn(state, StudentInput(kind="hint_request")),
                process_turn(state, StudentInput(kind="attempt", answer=state.current_problem.answer)),
            ]
            return [t.to_dict() for t in traces]

        assert run() == run()

    def test_remediation_streak_escalates_to_deep(self):
        state = fresh_state()
        actions_seen = []
        for _ in range(4):
            trace = process_turn(state, StudentInput(kind="attempt", answer="nonsense"))
            feedback = [a.action for a in trace.decision.actions if a.agent is AgentName.FEEDBACK]
            actions_seen.extend(feedback)
        assert ActionType.REMEDIATE in actions_seen
        assert ActionType.REMEDIATE_DEEP in actions_seen
        deep_index = actions_seen.index(ActionType.REMEDIATE_DEEP)
        assert all(a is ActionType.REMEDIATE for a in actions_seen[:deep_index])


class TestTraceLog:
    def make_trace(self) -> TurnTrace:
        state = fresh_state()
        return process_turn(state, StudentInput(kind="attempt", answer="nonsense"))

    def test_round_trip_equality(self, tmp_path):
        trace = self.make_trace()
        path = tmp_path / "traces.jsonl"
        log_turn(path, trace)
        loaded = read_traces(path)
        assert len(loaded) == 1
        assert loaded[0] == trace

    def test_many_traces_in_order(self, tmp_path):
        state = fresh_state()
        path = tmp_path / "traces.jsonl"
        sink = TraceSink(path)
        for _ in range(100):
            if state.done:
                break
            log_turn(sink, process_turn(state, StudentInput(kind="attempt", answer="nonsense")))
        loaded = read_traces(path)
        assert [t.turn_index for t in loaded] == list(range(len(loaded)))
        assert len(loaded) == 100

    def test_unwritable_sink_names_path(self, tmp_path):
        bad = tmp_path / "missing-dir" / "traces.jsonl"
        with pytest.raises(TraceSinkError, match="missing-dir"):
            log_turn(bad, self.make_trace())

    def test_jsonl_lines_are_valid_json(self, tmp_path):
        path = tmp_path / "traces.jsonl"
        log_turn(path, self.make_trace())
        line = path.read_text().strip()
        record = json.loads(line)
        assert record["policy"] == "es"
        assert record["decision"]["constraint_checks"]


def test_trace_snapshot_contains_all_learner_fields():
    state = fresh_state()
    trace = process_turn(state, StudentInput(kind="attempt", answer="nonsense", confidence=2))
    snap = trace.snapshot
    for field in (
        "skill_id",
        "problem_id",
        "features",
        "mastery",
        "affect",
        "attempt_count_problem",
        "hints_given_problem",
        "last_correct",
        "confidence",
        "last_input_kind",
    ):
        assert field in snap
    assert snap["confidence"] == 2


def test_policy_config_hash_recorded_and_stable():
    state_a, state_b = fresh_state(), fresh_state()
    trace_a = process_turn(state_a, StudentInput(kind="chat", text="hi"))
    trace_b = process_turn(state_b, StudentInput(kind="chat", text="hi"))
    assert trace_a.policy_config_hash == trace_b.policy_config_hash
    assert len(trace_a.policy_config_hash) == 16


def test_runtime_safety_net_fuzz():
    """Randomized end-to-end fuzz: no delivered hint may ever break a constraint."""
    rng = random.Random(2024)
    for _ in range(60):
        state = fresh_state()
        for _ in range(rng.randint(1, 25)):
            if state.done:
                break
            roll = rng.random()
            if roll < 0.4:
                move = StudentInput(kind="hint_request")
            elif roll < 0.5:
                move = StudentInput(kind="attempt", answer="idk")
            elif roll < 0.8:
                move = StudentInput(kind="attempt", answer="nonsense")
            else:
                move = StudentInput(kind="attempt", answer=state.current_problem.answer)
            hints_before = state.hints_given_problem
            attempts_before = state.attempt_count_problem
            trace = process_turn(state, move)
            for action in trace.decision.hint_actions():
                assert attempts_before + (1 if move.kind == "attempt" else 0) > 0
                assert hints_before < CFG.hint_cap
