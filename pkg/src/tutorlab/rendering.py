"""Surface realization of arbitrated tutor turns.

The renderer words decisions; it never makes them. Template mode is a pure
function of the request. LLM mode sends one aggregation prompt built from the
ordered decisions plus a compact sanitized context, and degrades to the
template wording on any failure so the learner path never sees an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .llm_client import ChatClient, client_from_env

SYSTEM_MESSAGE = (
    "You are the voice of a tutoring system. Compose a single response from "
    "the ordered decisions; do not change the decisions. Be concise."
)

#: Dialogue turns included in the sanitized prompt context.
HISTORY_WINDOW = 4

#: max_tokens for the monolithic comparison policy (vs 120 for the ensemble renderer).
BASELINE_MAX_TOKENS = 300

TEMPLATE_SLOTS = ("skill", "hint_text", "answer", "rationale", "level")

#: Resolved content stays out of the wire prompt; hint_key identifies it.
PROMPT_EXCLUDED_PARAMS = ("hint_text", "answer")
#: Each history snippet is clipped to keep the sanitized context compact.
HISTORY_SNIPPET_CHARS = 80


@dataclass(frozen=True)
class RendererConfig:
    mode: str = "template"  # "template" | "llm"
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.3
    max_tokens: int = 120
    endpoint_url: str | None = None
    api_key_env: str = "TUTOR_LLM_API_KEY"
    timeout_ms: int = 10_000

    def __post_init__(self) -> None:
        if self.mode not in ("template", "llm"):
            raise ValueError(f"renderer mode must be 'template' or 'llm', got {self.mode!r}")


@dataclass(frozen=True)
class RenderContext:
    """Sanitized per-turn context: skill state only, never learner identity."""

    skill_id: str
    p_mastery: float
    attempt_count_problem: int
    hints_given_problem: int
    constraint_state: dict
    history: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class RenderRequest:
    """Ordered decisions plus context; decisions are plain mappings
    {agent, action, rationale_key, params} in arbitration order."""

    decisions: tuple[dict, ...]
    context: RenderContext


@dataclass(frozen=True)
class RenderResult:
    text: str
    mode: str  # "template" | "llm" | "fallback"
    detail: str = ""


class TemplateError(KeyError):
    """A decision's action has no registered wording template."""


@dataclass
class TemplateSet:
    actions: dict
    rationales: dict
    empty: str

    @classmethod
    def from_dict(cls, raw: dict) -> "TemplateSet":
        return cls(
            actions=dict(raw["actions"]),
            rationales=dict(raw.get("rationales", {})),
            empty=raw.get("empty", "What would you like to try next?"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> "TemplateSet":
        raw = resources.files("tutorlab").joinpath("data/templates.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(raw))


_DEFAULT_TEMPLATES: TemplateSet | None = None


def default_templates() -> TemplateSet:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = TemplateSet.bundled()
    return _DEFAULT_TEMPLATES


def render_template(request: RenderRequest, templates: TemplateSet | None = None) -> str:
    """One clause per decision, joined in arbitration order. Pure."""
    templates = templates or default_templates()
    if not request.decisions:
        return templates.empty
    clauses = []
    for decision in request.decisions:
        action = decision["action"]
        template = templates.actions.get(action)
        if template is None:
            raise TemplateError(f"no wording template registered for action {action!r}")
        params = decision.get("params", {})
        slots = {
            "skill": request.context.skill_id,
            "hint_text": params.get("hint_text", ""),
            "answer": params.get("answer", ""),
            "level": params.get("level", ""),
            "rationale": templates.rationales.get(
                decision.get("rationale_key", ""), decision.get("rationale_key", "")
            ),
        }
        try:
            clauses.append(template.format_map(slots))
        except KeyError as exc:
            raise TemplateError(
                f"template for action {action!r} names unknown slot {exc.args[0]!r}"
            ) from exc
    return " ".join(clause.strip() for clause in clauses if clause.strip())


def build_prompt(request: RenderRequest, config: RendererConfig) -> tuple[str, str]:
    """(system, user) messages for the aggregation call.

    The user message is canonical JSON with fixed key order, so equal
    requests produce byte-identical prompts. The context stays compact no
    matter how long the dialogue runs: history is clipped to the last
    HISTORY_WINDOW turns with each snippet truncated, and decision params
    carry content ids rather than resolved hint text.
    """
    context = request.context
    payload = {
        "decisions": [
            {
                "agent": d["agent"],
                "action": d["action"],
                "rationale_key": d.get("rationale_key", ""),
                "params": {
                    k: d.get("params", {})[k]
                    for k in sorted(d.get("params", {}))
                    if k not in PROMPT_EXCLUDED_PARAMS
                },
            }
            for d in request.decisions
        ],
        "context": {
            "skill_id": context.skill_id,
            "p_mastery": round(context.p_mastery, 4),
            "attempt_count_problem": context.attempt_count_problem,
            "hints_given_problem": context.hints_given_problem,
            "constraint_state": {k: context.constraint_state[k] for k in sorted(context.constraint_state)},
            "history": [
                [speaker, text[:HISTORY_SNIPPET_CHARS]]
                for speaker, text in context.history[-HISTORY_WINDOW:]
            ],
        },
    }
    return SYSTEM_MESSAGE, json.dumps(payload, separators=(",", ":"))


def count_tokens(text: str) -> int:
    """Deterministic proxy count: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


def prompt_token_count(system: str, user: str) -> int:
    return count_tokens(system) + count_tokens(user)


def render_llm(
    request: RenderRequest,
    config: RendererConfig,
    client: ChatClient | None = None,
    templates: TemplateSet | None = None,
) -> RenderResult:
    """One chat-completion call; any failure falls back to template wording.

    Without a configured client and API key there is no network attempt at
    all: the template text is returned immediately.
    """
    system, user = build_prompt(request, config)
    if client is None:
        client = client_from_env(config.api_key_env, config.endpoint_url)
    if client is None:
        return RenderResult(
            text=render_template(request, templates), mode="fallback", detail="no api key configured"
        )
    try:
        text = client.complete(
            [{"role": "system", "content": system}, {"role": "user", "content": user}],
            model=config.model_name,
            temperature=config.temperature,
            max_tokens=config.max_tokens,
            timeout_ms=config.timeout_ms,
        )
    except Exception as exc:  # any transport failure degrades, never surfaces
        return RenderResult(text=render_template(request, templates), mode="fallback", detail=str(exc))
    if not text.strip():
        return RenderResult(
            text=render_template(request, templates), mode="fallback", detail="empty completion"
        )
    return RenderResult(text=text, mode="llm")
