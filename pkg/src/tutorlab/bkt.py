"""Per-skill Bayesian Knowledge Tracing: mastery posteriors updated after each attempt.

The two-state model: a learner either knows a skill or not. Each observed
attempt shifts the mastery posterior through slip/guess evidence, then a
learning-transition step moves probability mass from unmastered to mastered.
All operations are pure functions; callers own the state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path


@dataclass(frozen=True)
class BktParams:
    """Slip/guess/learning parameters for one skill.

    p_l0: prior probability the skill is already mastered.
    p_t:  probability of learning the skill at each opportunity.
    p_s:  probability a mastered learner answers incorrectly (slip).
    p_g:  probability an unmastered learner answers correctly (guess).
    """

    p_l0: float
    p_t: float
    p_s: float
    p_g: float

    def __post_init__(self) -> None:
        for name in ("p_l0", "p_t", "p_s", "p_g"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value!r}")
        # Identifiability guard: with p_s + p_g >= 1 an incorrect answer would
        # count as evidence FOR mastery, inverting every update.
        if self.p_s + self.p_g >= 1.0:
            raise ValueError(
                f"p_s + p_g must be < 1, got {self.p_s} + {self.p_g}"
            )


#: Fallback parameters for skills with no fitted values.
DEFAULT_PARAMS = BktParams(p_l0=0.3, p_t=0.1, p_s=0.1, p_g=0.2)


@dataclass(frozen=True)
class SkillMastery:
    """Current mastery posterior for one skill."""

    skill_id: str
    p_mastery: float
    opportunity_count: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_mastery <= 1.0:
            raise ValueError(f"p_mastery must be in [0, 1], got {self.p_mastery!r}")
        if self.opportunity_count < 0:
            raise ValueError("opportunity_count must be >= 0")


def new_mastery(skill_id: str, params: BktParams = DEFAULT_PARAMS) -> SkillMastery:
    """Fresh mastery state seeded at the skill's prior."""
    return SkillMastery(skill_id=skill_id, p_mastery=params.p_l0, opportunity_count=0)


def posterior_given_obs(p_mastery: float, params: BktParams, correct: bool) -> float:
    """Bayes-update the mastery posterior on one observed answer.

    Degenerate denominators (possible only at the extremes of the parameter
    box) resolve to the limiting value: 0 on the correct branch, 1 on the
    incorrect branch.
    """
    if correct:
        num = p_mastery * (1.0 - params.p_s)
        den = num + (1.0 - p_mastery) * params.p_g
        if den == 0.0:
            return 0.0
    else:
        num = p_mastery * params.p_s
        den = num + (1.0 - p_mastery) * (1.0 - params.p_g)
        if den == 0.0:
            return 1.0
    return min(1.0, max(0.0, num / den))


def apply_learning(p_cond: float, p_t: float) -> float:
    """Learning-transition step: unmastered mass converts at rate p_t."""
    return p_cond + (1.0 - p_cond) * p_t


def bkt_update(mastery: SkillMastery, params: BktParams, correct: bool) -> SkillMastery:
    """One full opportunity: evidence posterior, then learning transition."""
    p_next = apply_learning(posterior_given_obs(mastery.p_mastery, params, correct), params.p_t)
    return replace(
        mastery,
        p_mastery=p_next,
        opportunity_count=mastery.opportunity_count + 1,
    )


def is_mastered(p_mastery: float, threshold: float) -> bool:
    """Strict comparison: mastery means the posterior exceeds the threshold."""
    return p_mastery > threshold


def load_params_table(path: str | Path) -> dict[str, BktParams]:
    """Load a per-skill parameter table from a JSON array.

    Expected shape: [{"skill_id": ..., "p_l0": ..., "p_t": ..., "p_s": ..., "p_g": ...}, ...]
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"expected a JSON array of skill entries in {path}")
    table: dict[str, BktParams] = {}
    for i, entry in enumerate(raw):
        try:
            skill_id = entry["skill_id"]
            params = BktParams(
                p_l0=float(entry["p_l0"]),
                p_t=float(entry["p_t"]),
                p_s=float(entry["p_s"]),
                p_g=float(entry["p_g"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad skill entry at index {i} in {path}: {exc}") from exc
        if skill_id in table:
            raise ValueError(f"duplicate skill_id {skill_id!r} in {path}")
        table[skill_id] = params
    return table
