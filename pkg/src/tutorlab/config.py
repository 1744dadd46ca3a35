"""Single policy-config document: every rule threshold, cap, and default in one place.

Everything is overridable from one JSON file; the defaults here are the
shipped ruleset. The config hash ties every trace back to the exact ruleset
that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bkt import DEFAULT_PARAMS, BktParams
from .rendering import RendererConfig


@dataclass(frozen=True)
class StudentBehavior:
    """Per-archetype behavioral rates for synthetic students."""

    hint_request_rate: float
    low_effort_rate: float
    confidence_bias: int  # -2..+2 shift applied to the reported 1-5 confidence

    def __post_init__(self) -> None:
        for name in ("hint_request_rate", "low_effort_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability, got {value!r}")
        if not -2 <= self.confidence_bias <= 2:
            raise ValueError("confidence_bias must be in -2..+2")


@dataclass(frozen=True)
class Archetype:
    """A synthetic-learner family: central skill parameters plus behavior."""

    name: str
    center_params: BktParams
    behavior: StudentBehavior


DEFAULT_ARCHETYPES = (
    Archetype(
        name="Struggling",
        center_params=BktParams(p_l0=0.10, p_t=0.05, p_s=0.15, p_g=0.15),
        behavior=StudentBehavior(hint_request_rate=0.35, low_effort_rate=0.20, confidence_bias=-2),
    ),
    Archetype(
        name="Low",
        center_params=BktParams(p_l0=0.25, p_t=0.08, p_s=0.12, p_g=0.18),
        behavior=StudentBehavior(hint_request_rate=0.25, low_effort_rate=0.10, confidence_bias=-1),
    ),
    Archetype(
        name="Average",
        center_params=BktParams(p_l0=0.45, p_t=0.12, p_s=0.10, p_g=0.20),
        behavior=StudentBehavior(hint_request_rate=0.15, low_effort_rate=0.05, confidence_bias=0),
    ),
    Archetype(
        name="High",
        center_params=BktParams(p_l0=0.70, p_t=0.20, p_s=0.05, p_g=0.20),
        behavior=StudentBehavior(hint_request_rate=0.05, low_effort_rate=0.01, confidence_bias=1),
    ),
)


@dataclass(frozen=True)
class SimulationConfig:
    runs_per_archetype: int = 600
    noise_sigma: float = 0.05
    max_turns: int = 30
    problems_per_dialogue: int = 30
    archetypes: tuple[Archetype, ...] = DEFAULT_ARCHETYPES
    # Latency proxy costs, milliseconds per component.
    rule_eval_ms: int = 1
    template_render_ms: int = 2
    llm_call_ms_mean: float = 450.0
    llm_call_ms_jitter: float = 120.0


@dataclass(frozen=True)
class PolicyConfig:
    hint_cap: int = 3
    mastery_threshold: float = 0.95
    nudge_mastery_split: float = 0.5
    remediate_deep_after: int = 2  # consecutive REMEDIATEs before escalating
    proactive_hint_streak: int = 2  # error streak that triggers an unrequested hint offer
    frustration_error_streak: int = 3
    low_confidence_max: int = 2
    encourage_error_streak: int = 2
    low_effort_lexicon: tuple[str, ...] = ("idk", "i don't know", "?", "")
    rolling_window: int = 5
    wheel_spin_threshold: int = 10
    single_agent_mode: bool = False
    default_bkt: BktParams = DEFAULT_PARAMS
    skill_params: dict = field(default_factory=dict)  # skill_id -> BktParams overrides
    renderer: RendererConfig = RendererConfig()
    simulation: SimulationConfig = SimulationConfig()

    def params_for(self, skill_id: str) -> BktParams:
        return self.skill_params.get(skill_id, self.default_bkt)

    def to_dict(self) -> dict:
        return {
            "hint_cap": self.hint_cap,
            "mastery_threshold": self.mastery_threshold,
            "nudge_mastery_split": self.nudge_mastery_split,
            "remediate_deep_after": self.remediate_deep_after,
            "proactive_hint_streak": self.proactive_hint_streak,
            "frustration_error_streak": self.frustration_error_streak,
            "low_confidence_max": self.low_confidence_max,
            "encourage_error_streak": self.encourage_error_streak,
            "low_effort_lexicon": list(self.low_effort_lexicon),
            "rolling_window": self.rolling_window,
            "wheel_spin_threshold": self.wheel_spin_threshold,
            "single_agent_mode": self.single_agent_mode,
            "default_bkt": _params_dict(self.default_bkt),
            "skill_params": {k: _params_dict(v) for k, v in sorted(self.skill_params.items())},
            "renderer": {
                "mode": self.renderer.mode,
                "model_name": self.renderer.model_name,
                "temperature": self.renderer.temperature,
                "max_tokens": self.renderer.max_tokens,
                "endpoint_url": self.renderer.endpoint_url,
                "api_key_env": self.renderer.api_key_env,
                "timeout_ms": self.renderer.timeout_ms,
            },
            "simulation": {
                "runs_per_archetype": self.simulation.runs_per_archetype,
                "noise_sigma": self.simulation.noise_sigma,
                "max_turns": self.simulation.max_turns,
                "problems_per_dialogue": self.simulation.problems_per_dialogue,
                "rule_eval_ms": self.simulation.rule_eval_ms,
                "template_render_ms": self.simulation.template_render_ms,
                "llm_call_ms_mean": self.simulation.llm_call_ms_mean,
                "llm_call_ms_jitter": self.simulation.llm_call_ms_jitter,
                "archetypes": [
                    {
                        "name": a.name,
                        "center_params": _params_dict(a.center_params),
                        "behavior": {
                            "hint_request_rate": a.behavior.hint_request_rate,
                            "low_effort_rate": a.behavior.low_effort_rate,
                            "confidence_bias": a.behavior.confidence_bias,
                        },
                    }
                    for a in self.simulation.archetypes
                ],
            },
        }

    def hash(self) -> str:
        """Stable digest of the full ruleset, recorded in every trace."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _params_dict(params: BktParams) -> dict:
    return {"p_l0": params.p_l0, "p_t": params.p_t, "p_s": params.p_s, "p_g": params.p_g}


def _params_from(raw: dict) -> BktParams:
    return BktParams(
        p_l0=float(raw["p_l0"]), p_t=float(raw["p_t"]), p_s=float(raw["p_s"]), p_g=float(raw["p_g"])
    )


def config_from_dict(raw: dict) -> PolicyConfig:
    """Build a PolicyConfig from a (possibly partial) JSON document."""
    base = PolicyConfig()
    known = {f.name for f in fields(PolicyConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown policy-config keys: {sorted(unknown)}")

    kwargs: dict = {}
    for key in (
        "hint_cap",
        "mastery_threshold",
        "nudge_mastery_split",
        "remediate_deep_after",
        "proactive_hint_streak",
        "frustration_error_streak",
        "low_confidence_max",
        "encourage_error_streak",
        "rolling_window",
        "wheel_spin_threshold",
        "single_agent_mode",
    ):
        if key in raw:
            kwargs[key] = raw[key]
    if "low_effort_lexicon" in raw:
        kwargs["low_effort_lexicon"] = tuple(raw["low_effort_lexicon"])
    if "default_bkt" in raw:
        kwargs["default_bkt"] = _params_from(raw["default_bkt"])
    if "skill_params" in raw:
        kwargs["skill_params"] = {k: _params_from(v) for k, v in raw["skill_params"].items()}
    if "renderer" in raw:
        kwargs["renderer"] = replace(base.renderer, **raw["renderer"])
    if "simulation" in raw:
        sim_raw = dict(raw["simulation"])
        if "archetypes" in sim_raw:
            sim_raw["archetypes"] = tuple(
                Archetype(
                    name=a["name"],
                    center_params=_params_from(a["center_params"]),
                    behavior=StudentBehavior(
                        hint_request_rate=float(a["behavior"]["hint_request_rate"]),
                        low_effort_rate=float(a["behavior"]["low_effort_rate"]),
                        confidence_bias=int(a["behavior"]["confidence_bias"]),
                    ),
                )
                for a in sim_raw["archetypes"]
            )
        kwargs["simulation"] = replace(base.simulation, **sim_raw)
    return replace(base, **kwargs)


def load_policy_config(path: str | Path | None) -> PolicyConfig:
    if path is None:
        return PolicyConfig()
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
