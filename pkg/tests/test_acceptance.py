"""Acceptance gate: one test per shipping criterion, at its stated tolerance.

The Monte Carlo fixtures run the full default configuration (600 dialogues
per archetype per policy, seed 42) once per session; the safety sweep
re-derives the identical ES dialogues from the same seed scheme and inspects
every turn.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import replace

import pytest
from click.testing import CliRunner

from tutorlab.agents import (
    ActionType,
    AffectState,
    InputKind,
    LearnerSnapshot,
    detect_affect,
    gather_proposals,
)
from tutorlab.bkt import SkillMastery, bkt_update
from tutorlab.cli import main as tutor_cli
from tutorlab.config import PolicyConfig
from tutorlab.features import FeatureVector
from tutorlab.llm_client import ChatClientError, ScriptedChatClient
from tutorlab.orchestrator import arbitrate
from tutorlab.rendering import RenderContext, RendererConfig, RenderRequest, render_llm, render_template
from tutorlab.scenarios import ScenarioStore, TIERS
from tutorlab.session import replay_scenario
from tutorlab.simulation import run_dialogue, run_monte_carlo, sample_student
from tutorlab.stats import wilcoxon_signed_rank

from oracles import full_update_oracle, random_valid_params, wilcoxon_brute_force

CFG = PolicyConfig()
SEED = 42


@pytest.fixture(scope="module")
def full_report():
    start = time.perf_counter()
    report = run_monte_carlo(CFG, seed=SEED)
    report.config["_elapsed_s"] = time.perf_counter() - start
    return report


@pytest.fixture(scope="module")
def scenario_store():
    return ScenarioStore.bundled()


def report_line(name: str, passed: bool) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}")


def test_bkt_oracle_equivalence():
    """bkt_update matches an exact-arithmetic oracle to 1e-12 on 10,000 draws."""
    rng = random.Random(20_240)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        params = random_valid_params(rng)
        p = rng.random()
        correct = rng.random() < 0.5
        got = bkt_update(SkillMastery("s", p), params, correct).p_mastery
        want = float(full_update_oracle(p, params, correct))
        worst = max(worst, abs(got - want))
        assert abs(got - want) <= 1e-12
    elapsed = time.perf_counter() - start

    from tutorlab.bkt import BktParams

    spot = BktParams(p_l0=0.3, p_t=0.1, p_s=0.1, p_g=0.2)
    assert bkt_update(SkillMastery("s", 0.5), spot, True).p_mastery == pytest.approx(0.836364, abs=5e-7)
    assert bkt_update(SkillMastery("s", 0.5), spot, False).p_mastery == pytest.approx(0.2, abs=1e-9)
    assert elapsed < 1.0, f"oracle sweep took {elapsed:.2f}s"
    report_line("bkt-oracle-equivalence", True)


def _random_snapshot(rng: random.Random) -> LearnerSnapshot:
    attempt_count = rng.randint(0, 6)
    snap = LearnerSnapshot(
        skill_id="s",
        problem_id="p",
        features=FeatureVector(
            rolling_accuracy=rng.random(),
            error_streak=rng.randint(0, 6),
            wheel_spinning=rng.random() < 0.2,
        ),
        mastery=SkillMastery("s", rng.random()),
        affect=AffectState.NEUTRAL,
        attempt_count_problem=attempt_count,
        hints_given_problem=rng.randint(0, 5),
        last_correct=rng.choice([None, True, False]),
        confidence=rng.choice([None, 1, 2, 3, 4, 5]),
        last_input_kind=rng.choice(list(InputKind)),
        low_effort_attempts_problem=rng.randint(0, attempt_count) if attempt_count else 0,
        errors_problem=rng.randint(0, 6),
        remediation_streak=rng.randint(0, 4),
        highest_hint_level_problem=rng.choice([None, "MIN", "MED", "FULL"]),
    )
    return replace(snap, affect=detect_affect(snap, CFG))


def test_safety_invariant_full_monte_carlo_and_fuzz():
    """Zero hint deliveries pre-attempt or above the cap: exact, no tolerance."""
    start = time.perf_counter()
    sim = CFG.simulation
    deliveries = 0
    for archetype in sim.archetypes:
        for i in range(sim.runs_per_archetype):
            student = sample_student(
                archetype, sim.noise_sigma, random.Random(f"{SEED}:{archetype.name}:{i}:student")
            )
            _, traces = run_dialogue(
                "es",
                "practice_skill",
                student,
                sim.max_turns,
                random.Random(f"{SEED}:{archetype.name}:{i}:dialogue"),
                CFG,
            )
            for trace in traces:
                hints = trace.decision.hint_actions()
                if not hints:
                    continue
                deliveries += len(hints)
                assert trace.snapshot["attempt_count_problem"] > 0
                assert trace.snapshot["hints_given_problem"] < CFG.hint_cap

    rng = random.Random(777)
    for _ in range(100_000):
        snap = _random_snapshot(rng)
        decision = arbitrate(gather_proposals(snap, CFG), snap, CFG)
        for action in decision.actions:
            if action.action in (ActionType.HINT_MIN, ActionType.HINT_MED, ActionType.HINT_FULL):
                assert snap.attempt_count_problem > 0
                assert snap.hints_given_problem < CFG.hint_cap

    elapsed = time.perf_counter() - start
    assert deliveries > 0, "sweep must actually exercise hint deliveries"
    assert elapsed < 120.0, f"safety sweep took {elapsed:.1f}s"
    report_line("safety-invariant", True)


def test_mastery_gain_paradox_direction(full_report):
    """Over-assistance inflates measured gain while real learning lags."""
    start_runs = full_report.config["runs_per_archetype"]
    assert start_runs == 600
    assert len(full_report.runs) == 2400 * 2

    baseline = full_report.aggregates["baseline"]["overall"]
    es = full_report.aggregates["es"]["overall"]

    assert baseline["measured_mastery_gain"]["mean"] > es["measured_mastery_gain"]["mean"]
    assert baseline["latent_mastery_gain"]["mean"] <= es["latent_mastery_gain"]["mean"]
    assert baseline["hints_given"]["mean"] >= 5.0 * es["hints_given"]["mean"]
    assert es["hint_efficiency"]["mean"] >= 2.0 * baseline["hint_efficiency"]["mean"]
    # Paired signed-rank results ship in the report; the hint-volume contrast
    # is one-sided on nearly every pair and must register as significant.
    assert full_report.tests["hints_given"]["p_value"] < 0.001
    assert full_report.config["_elapsed_s"] < 300.0
    report_line("mastery-gain-paradox", True)


def test_es_adherence_exactly_one_with_zero_variance(full_report):
    es = full_report.aggregates["es"]["overall"]["constraint_adherence"]
    assert es["mean"] == 1.0
    assert es["std"] == 0.0
    es_runs = [r for r in full_report.runs if r["policy"] == "es"]
    assert all(r["constraint_adherence"] == 1.0 for r in es_runs)
    report_line("es-adherence-100", True)


def test_baseline_adherence_band(full_report):
    overall = full_report.aggregates["baseline"]["overall"]["constraint_adherence"]["mean"]
    assert 0.45 <= overall <= 0.80, f"baseline adherence {overall:.3f} outside band"
    struggling = full_report.aggregates["baseline"]["by_archetype"]["Struggling"]
    assert struggling["constraint_adherence"]["mean"] < 1.0
    report_line("baseline-adherence-band", True)


def test_token_structure_bound(scenario_store):
    """Bounded stateless prompts: ES tokens at most half of full-history prompts."""
    es_means = []
    baseline_means = []
    for scenario_id in scenario_store.ids():
        spec = scenario_store.get(scenario_id)
        es_result = replay_scenario(spec, "es")
        baseline_result = replay_scenario(spec, "baseline")
        if es_result.metrics.turns < 6 or baseline_result.metrics.turns < 6:
            continue
        es_means.append(es_result.metrics.prompt_tokens_total / es_result.metrics.turns)
        baseline_means.append(
            baseline_result.metrics.prompt_tokens_total / baseline_result.metrics.turns
        )
    assert len(es_means) >= 10, "most scenario replays should run 6+ turns"
    mean_es = sum(es_means) / len(es_means)
    mean_baseline = sum(baseline_means) / len(baseline_means)
    assert mean_es <= 0.5 * mean_baseline, f"es {mean_es:.1f} vs baseline {mean_baseline:.1f}"
    report_line("token-structure", True)


def test_wilcoxon_exact_path_matches_permutation_oracle():
    rng = random.Random(4_242)
    for _ in range(1000):
        n = rng.randint(1, 12)
        diffs = [
            rng.choice([-1, 1]) * rng.choice([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
            for _ in range(n)
        ]
        if all(d == 0 for d in diffs):
            diffs[0] = 1.0
        got = wilcoxon_signed_rank(diffs)
        want_stat, want_p = wilcoxon_brute_force(diffs)
        assert got.method == "exact"
        assert got.statistic == pytest.approx(want_stat)
        assert got.p_value == pytest.approx(want_p)

    assert wilcoxon_signed_rank([1, 2, 3]).p_value == pytest.approx(0.25)
    assert wilcoxon_signed_rank([1, 2, 3, 4, 5]).p_value == pytest.approx(0.0625)
    report_line("wilcoxon-exact", True)


def test_simulate_cli_byte_identical(tmp_path):
    runner = CliRunner()
    outputs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        result = runner.invoke(
            tutor_cli, ["simulate", "--seed", "42", "--runs", "10", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    report_line("determinism-simulate", True)


def test_all_scenario_replays_byte_identical(scenario_store):
    for scenario_id in scenario_store.ids():
        spec = scenario_store.get(scenario_id)
        for policy in ("es", "baseline"):
            first = replay_scenario(spec, policy)
            second = replay_scenario(spec, policy)
            a = json.dumps(
                {"traces": [t.to_dict() for t in first.traces], "metrics": first.metrics.to_dict()},
                sort_keys=True,
            )
            b = json.dumps(
                {"traces": [t.to_dict() for t in second.traces], "metrics": second.metrics.to_dict()},
                sort_keys=True,
            )
            assert a == b, f"{scenario_id}/{policy} replay not reproducible"
    report_line("determinism-replay", True)


def test_scenario_suite_contract(scenario_store):
    assert len(scenario_store) == 24

    for tier in TIERS:
        clean = replay_scenario(scenario_store.get(f"clean_correct_{tier}"), "es")
        assert clean.metrics.hints_given == 0
        assert clean.metrics.constraint_adherence == 1.0

    for tier in TIERS:
        spec = scenario_store.get(f"hint_abuse_{tier}")
        es_result = replay_scenario(spec, "es")
        pre_attempt_requests = 0
        for trace in es_result.traces:
            if trace.student_input["kind"] != "hint_request":
                continue
            genuine = (
                trace.snapshot["attempt_count_problem"]
                - trace.snapshot["low_effort_attempts_problem"]
            )
            if genuine == 0:
                pre_attempt_requests += 1
                assert trace.decision.has_action(ActionType.DENY_HINT)
                assert not trace.decision.hint_actions()
        assert pre_attempt_requests > 0, "hint-abuse scripts must include pre-attempt requests"

        baseline_result = replay_scenario(spec, "baseline")
        request_turns = [
            t for t in baseline_result.traces if t.student_input["kind"] == "hint_request"
        ]
        assert request_turns
        assert all(t.decision.hint_actions() for t in request_turns)
    report_line("scenario-suite", True)


def test_offline_completeness(monkeypatch):
    """No key, no endpoint, no network: template mode plus the scripted stub."""
    monkeypatch.delenv("TUTOR_LLM_API_KEY", raising=False)
    monkeypatch.delenv("TUTOR_LLM_ENDPOINT", raising=False)

    request = RenderRequest(
        decisions=(
            {"agent": "Ethics", "action": "DENY_HINT", "rationale_key": "attempt_before_hint", "params": {}},
        ),
        context=RenderContext(
            skill_id="s",
            p_mastery=0.4,
            attempt_count_problem=0,
            hints_given_problem=0,
            constraint_state={"attempt_before_hint": True, "hint_cap": True},
        ),
    )
    config = RendererConfig(mode="llm", endpoint_url="http://example.invalid/v1/chat")

    no_key = render_llm(request, config, client=None)
    assert no_key.mode == "fallback" and no_key.detail == "no api key configured"

    stubbed = render_llm(request, config, client=ScriptedChatClient(replies=["worded"]))
    assert stubbed.mode == "llm" and stubbed.text == "worded"

    timed_out = render_llm(
        request, config, client=ScriptedChatClient(replies=[ChatClientError("timeout")])
    )
    assert timed_out.mode == "fallback"
    assert timed_out.text == render_template(request)
    report_line("offline-completeness", True)
