"""Problem content, authored test scenarios, and answer checking.

A scenario is one interaction signature crossed with a difficulty tier: a
skill, a short problem sequence with three hint levels per problem, and an
optional scripted student for deterministic replay. The shipped store holds
the full 8-signature x 3-tier grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

SIGNATURES = (
    "clean_correct",
    "hint_abuse",
    "deep_struggle",
    "careless_slips",
    "fast_guesser",
    "steady_improver",
    "help_avoider",
    "wheel_spinner",
)
#: Signatures named in the study design vs. authored stand-ins.
CORE_SIGNATURES = ("clean_correct", "hint_abuse", "deep_struggle")
TIERS = ("easy", "medium", "hard")
HINT_LEVELS = ("MIN", "MED", "FULL")

#: Scripted-move answer placeholders, resolved against the live problem at replay.
ANSWER_CORRECT = "@correct"
ANSWER_WRONG = "@wrong"


def canonical_answer(text: str) -> str:
    """Normalize a short answer for exact-match comparison.

    Whitespace is stripped, case folded, and anything that parses as a
    number or fraction is reduced to lowest terms, so "3/6", " 1/2 ", and
    "0.5" all compare equal.
    """
    compact = "".join(text.lower().split())
    try:
        return str(Fraction(compact))
    except (ValueError, ZeroDivisionError):
        return compact


def answers_match(given: str, expected: str) -> bool:
    return canonical_answer(given) == canonical_answer(expected)


@dataclass(frozen=True)
class Problem:
    """One short-answer item with a three-level hint ladder."""

    problem_id: str
    prompt: str
    answer: str
    hint_min: str
    hint_med: str
    hint_full: str

    def hint_text(self, level: str) -> str:
        if level == "MIN":
            return self.hint_min
        if level == "MED":
            return self.hint_med
        if level == "FULL":
            return self.hint_full
        raise KeyError(f"unknown hint level {level!r}")

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "prompt": self.prompt,
            "answer": self.answer,
            "hint_min": self.hint_min,
            "hint_med": self.hint_med,
            "hint_full": self.hint_full,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Problem":
        return cls(
            problem_id=raw["problem_id"],
            prompt=raw["prompt"],
            answer=raw["answer"],
            hint_min=raw["hint_min"],
            hint_med=raw["hint_med"],
            hint_full=raw["hint_full"],
        )


@dataclass(frozen=True)
class ScriptedMove:
    """One pre-authored student input for deterministic replay."""

    kind: str  # attempt | hint_request | chat
    answer: str | None = None  # literal, or @correct / @wrong placeholders
    confidence: int | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.answer is not None:
            out["answer"] = self.answer
        if self.confidence is not None:
            out["confidence"] = self.confidence
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ScriptedMove":
        return cls(kind=raw["kind"], answer=raw.get("answer"), confidence=raw.get("confidence"))


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    signature: str
    difficulty_tier: str
    skill_id: str
    problems: tuple[Problem, ...]
    scripted_moves: tuple[ScriptedMove, ...] = ()
    signature_set: str = "core"  # "core" for study-named signatures, "extended" for authored stand-ins
    description: str = ""

    def summary(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "signature": self.signature,
            "difficulty_tier": self.difficulty_tier,
            "skill_id": self.skill_id,
            "problem_count": len(self.problems),
            "scripted": bool(self.scripted_moves),
            "signature_set": self.signature_set,
            "description": self.description,
        }

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "signature": self.signature,
            "difficulty_tier": self.difficulty_tier,
            "skill_id": self.skill_id,
            "signature_set": self.signature_set,
            "description": self.description,
            "problems": [p.to_dict() for p in self.problems],
            "scripted_moves": [m.to_dict() for m in self.scripted_moves],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioSpec":
        return cls(
            scenario_id=raw["scenario_id"],
            signature=raw["signature"],
            difficulty_tier=raw["difficulty_tier"],
            skill_id=raw["skill_id"],
            problems=tuple(Problem.from_dict(p) for p in raw["problems"]),
            scripted_moves=tuple(ScriptedMove.from_dict(m) for m in raw.get("scripted_moves", [])),
            signature_set=raw.get("signature_set", "core"),
            description=raw.get("description", ""),
        )


class ScenarioValidationError(ValueError):
    pass


def validate_scenario(spec: ScenarioSpec) -> None:
    if spec.signature not in SIGNATURES:
        raise ScenarioValidationError(f"{spec.scenario_id}: unknown signature {spec.signature!r}")
    if spec.difficulty_tier not in TIERS:
        raise ScenarioValidationError(f"{spec.scenario_id}: unknown tier {spec.difficulty_tier!r}")
    if not spec.problems:
        raise ScenarioValidationError(f"{spec.scenario_id}: no problems")
    for problem in spec.problems:
        for field_name in ("prompt", "answer", "hint_min", "hint_med", "hint_full"):
            if not getattr(problem, field_name):
                raise ScenarioValidationError(
                    f"{spec.scenario_id}/{problem.problem_id}: missing {field_name}"
                )
        if canonical_answer(problem.answer) not in canonical_answer(problem.hint_full):
            raise ScenarioValidationError(
                f"{spec.scenario_id}/{problem.problem_id}: full hint must contain the worked answer"
            )
    for move in spec.scripted_moves:
        if move.kind not in ("attempt", "hint_request", "chat"):
            raise ScenarioValidationError(f"{spec.scenario_id}: bad scripted move kind {move.kind!r}")
        if move.kind == "attempt" and move.answer is None:
            raise ScenarioValidationError(f"{spec.scenario_id}: scripted attempt without an answer")


class ScenarioStore:
    """All shipped scenarios, validated as a complete signature x tier grid."""

    def __init__(self, specs: list[ScenarioSpec]):
        self._by_id = {s.scenario_id: s for s in specs}
        if len(self._by_id) != len(specs):
            raise ScenarioValidationError("duplicate scenario ids")
        for spec in specs:
            validate_scenario(spec)
        cells = {(s.signature, s.difficulty_tier) for s in specs}
        expected = {(sig, tier) for sig in SIGNATURES for tier in TIERS}
        if cells != expected or len(specs) != len(expected):
            missing = sorted(expected - cells)
            extra = sorted(cells - expected)
            raise ScenarioValidationError(
                f"scenario grid incomplete: {len(specs)} specs, missing {missing}, extra {extra}"
            )

    def __len__(self) -> int:
        return len(self._by_id)

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    def get(self, scenario_id: str) -> ScenarioSpec:
        try:
            return self._by_id[scenario_id]
        except KeyError:
            raise KeyError(f"unknown scenario {scenario_id!r}") from None

    def __contains__(self, scenario_id: str) -> bool:
        return scenario_id in self._by_id

    def summaries(self) -> list[dict]:
        return [self._by_id[sid].summary() for sid in self.ids()]

    @classmethod
    def from_dir(cls, directory: str | Path) -> "ScenarioStore":
        directory = Path(directory)
        specs = []
        for path in sorted(directory.glob("*.json")):
            specs.append(ScenarioSpec.from_dict(json.loads(path.read_text(encoding="utf-8"))))
        return cls(specs)

    @classmethod
    def bundled(cls) -> "ScenarioStore":
        """The 24 scenarios shipped as package data."""
        root = resources.files("tutorlab").joinpath("data/scenarios")
        specs = []
        for entry in sorted(root.iterdir(), key=lambda e: e.name):
            if entry.name.endswith(".json"):
                specs.append(ScenarioSpec.from_dict(json.loads(entry.read_text(encoding="utf-8"))))
        return cls(specs)


class ContentStore:
    """Hint/answer lookup over a problem set, keyed for the renderer."""

    def __init__(self, skill_id: str, problems: tuple[Problem, ...] | list[Problem]):
        self.skill_id = skill_id
        self._problems = {p.problem_id: p for p in problems}

    def hint_key(self, skill_id: str, problem_id: str, level: str) -> str:
        """Stable key for an authored hint; FULL falls back through MED to MIN."""
        if skill_id != self.skill_id or problem_id not in self._problems:
            raise KeyError(f"no content for {skill_id!r}/{problem_id!r}")
        if level not in HINT_LEVELS:
            raise KeyError(f"unknown hint level {level!r}")
        return f"{skill_id}.{problem_id}.hint_{level.lower()}"

    def hint_text(self, key: str) -> str:
        skill_id, problem_id, slot = key.rsplit(".", 2)
        if skill_id != self.skill_id or problem_id not in self._problems:
            raise KeyError(f"no content for key {key!r}")
        level = slot.removeprefix("hint_").upper()
        return self._problems[problem_id].hint_text(level)

    def problem(self, problem_id: str) -> Problem:
        return self._problems[problem_id]


def make_practice_problems(skill_id: str, count: int) -> tuple[Problem, ...]:
    """Synthesize a free-practice problem set for a skill.

    Items are small addition facts derived deterministically from the skill
    name, so answer checking and the hint ladder work end to end without
    authored content.
    """
    base = sum(skill_id.encode("utf-8")) % 7
    problems = []
    for i in range(1, count + 1):
        a = base + (i % 9) + 2
        b = (i * 3) % 8 + 1
        answer = str(a + b)
        problems.append(
            Problem(
                problem_id=f"p{i}",
                prompt=f"Compute {a} + {b}.",
                answer=answer,
                hint_min=f"Start from {a} and count up by {b}.",
                hint_med=f"Break it up: {a} + {b} is {a} + {b - 1} + 1.",
                hint_full=f"Count up from {a} by {b} to reach {answer}. The answer is {answer}.",
            )
        )
    return tuple(problems)
