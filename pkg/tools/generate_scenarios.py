#!/usr/bin/env python3
"""Regenerate the shipped scenario files from the authored definitions below.

The scenario grid is 8 interaction signatures x 3 difficulty tiers. Problems
are authored per tier; scripted student moves are authored per signature and
use the @correct/@wrong placeholders so one script stays valid under both
policies. Run from the repo root:

    python tools/generate_scenarios.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "tutorlab" / "data" / "scenarios"

TIER_PROBLEMS = {
    "easy": {
        "skill_id": "fractions_add_like",
        "problems": [
            {
                "problem_id": "p1",
                "prompt": "What is 1/5 + 2/5?",
                "answer": "3/5",
                "hint_min": "Both fractions have the same denominator, so only the numerators add.",
                "hint_med": "Add the numerators: 1 + 2 = 3. The denominator stays 5.",
                "hint_full": "Add the numerators and keep the denominator: 1/5 + 2/5 = 3/5. The answer is 3/5.",
            },
            {
                "problem_id": "p2",
                "prompt": "What is 2/7 + 3/7?",
                "answer": "5/7",
                "hint_min": "The denominators match, so add across the top.",
                "hint_med": "Add the numerators: 2 + 3 = 5. Keep the denominator 7.",
                "hint_full": "Add the numerators and keep the denominator: 2/7 + 3/7 = 5/7. The answer is 5/7.",
            },
            {
                "problem_id": "p3",
                "prompt": "What is 3/8 + 1/8? Give the answer in lowest terms.",
                "answer": "1/2",
                "hint_min": "Add the numerators first, then check if the fraction reduces.",
                "hint_med": "3/8 + 1/8 = 4/8. Both 4 and 8 are divisible by 4.",
                "hint_full": "3/8 + 1/8 = 4/8, and 4/8 reduces to 1/2. The answer is 1/2.",
            },
        ],
    },
    "medium": {
        "skill_id": "one_step_equations",
        "problems": [
            {
                "problem_id": "p1",
                "prompt": "Solve for x: x + 7 = 12",
                "answer": "5",
                "hint_min": "Undo the +7 by doing the opposite operation to both sides.",
                "hint_med": "Subtract 7 from both sides: x = 12 - 7.",
                "hint_full": "Subtract 7 from both sides: x = 12 - 7 = 5. The answer is 5.",
            },
            {
                "problem_id": "p2",
                "prompt": "Solve for x: 3x = 21",
                "answer": "7",
                "hint_min": "x is multiplied by 3, so divide to undo it.",
                "hint_med": "Divide both sides by 3: x = 21 / 3.",
                "hint_full": "Divide both sides by 3: x = 21 / 3 = 7. The answer is 7.",
            },
            {
                "problem_id": "p3",
                "prompt": "Solve for x: x - 4 = 9",
                "answer": "13",
                "hint_min": "Undo the -4 by doing the opposite to both sides.",
                "hint_med": "Add 4 to both sides: x = 9 + 4.",
                "hint_full": "Add 4 to both sides: x = 9 + 4 = 13. The answer is 13.",
            },
        ],
    },
    "hard": {
        "skill_id": "two_step_equations",
        "problems": [
            {
                "problem_id": "p1",
                "prompt": "Solve for x: 2x + 3 = 11",
                "answer": "4",
                "hint_min": "Deal with the +3 first, then the multiplication.",
                "hint_med": "Subtract 3 from both sides to get 2x = 8, then divide by 2.",
                "hint_full": "Subtract 3: 2x = 8. Divide by 2: x = 4. The answer is 4.",
            },
            {
                "problem_id": "p2",
                "prompt": "Solve for x: 5x - 7 = 18",
                "answer": "5",
                "hint_min": "Move the -7 out of the way first.",
                "hint_med": "Add 7 to both sides to get 5x = 25, then divide by 5.",
                "hint_full": "Add 7: 5x = 25. Divide by 5: x = 5. The answer is 5.",
            },
            {
                "problem_id": "p3",
                "prompt": "Solve for x: 4x + 6 = 2x + 14",
                "answer": "4",
                "hint_min": "Collect the x terms on one side before solving.",
                "hint_med": "Subtract 2x from both sides: 2x + 6 = 14. Now solve the one-step leftover.",
                "hint_full": "Subtract 2x: 2x + 6 = 14. Subtract 6: 2x = 8. Divide by 2: x = 4. The answer is 4.",
            },
        ],
    },
}


def attempt(answer: str, confidence: int | None = None) -> dict:
    move: dict = {"kind": "attempt", "answer": answer}
    if confidence is not None:
        move["confidence"] = confidence
    return move


def hint(confidence: int | None = None) -> dict:
    move: dict = {"kind": "hint_request"}
    if confidence is not None:
        move["confidence"] = confidence
    return move


# Signature scripts. @correct resolves to the live problem's answer at replay,
# so the same script works under policies with different progression rules.
SIGNATURES = {
    "clean_correct": {
        "set": "core",
        "description": "Confident student answers every problem correctly on the first try.",
        "moves": [
            attempt("@correct", 4),
            attempt("@correct", 4),
            attempt("@correct", 5),
            attempt("@correct", 5),
            attempt("@correct", 5),
        ],
    },
    "hint_abuse": {
        "set": "core",
        "description": "Student spams hint requests and low-effort answers before trying.",
        "moves": [
            hint(2),
            hint(2),
            attempt("idk", 2),
            hint(2),
            attempt("@wrong", 2),
            hint(2),
            hint(3),
            hint(3),
            hint(3),
            attempt("@correct", 3),
        ],
    },
    "deep_struggle": {
        "set": "core",
        "description": "Persistent errors force escalating remediation and scaffolding.",
        "moves": [
            attempt("@wrong", 3),
            attempt("@wrong", 2),
            attempt("@wrong", 2),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@correct", 2),
            attempt("@correct", 3),
            attempt("@correct", 3),
        ],
    },
    "careless_slips": {
        "set": "extended",
        "description": "Strong student with occasional slips that self-correct next attempt.",
        "moves": [
            attempt("@correct", 4),
            attempt("@correct", 4),
            attempt("@wrong", 4),
            attempt("@correct", 4),
            attempt("@correct", 5),
            attempt("@wrong", 4),
            attempt("@correct", 5),
            attempt("@correct", 5),
        ],
    },
    "fast_guesser": {
        "set": "extended",
        "description": "Rapid-fire guessing without reading; never asks for help.",
        "moves": [
            attempt("@wrong", 5),
            attempt("@wrong", 5),
            attempt("@wrong", 5),
            attempt("@wrong", 4),
            attempt("@correct", 4),
            attempt("@wrong", 5),
            attempt("@wrong", 5),
            attempt("@correct", 4),
        ],
    },
    "steady_improver": {
        "set": "extended",
        "description": "Early mistakes give way to a stable run of correct answers.",
        "moves": [
            attempt("@wrong", 2),
            attempt("@wrong", 3),
            attempt("@correct", 3),
            attempt("@correct", 4),
            attempt("@correct", 4),
            attempt("@correct", 5),
            attempt("@correct", 5),
            attempt("@correct", 5),
        ],
    },
    "help_avoider": {
        "set": "extended",
        "description": "Struggles repeatedly but never requests a hint.",
        "moves": [
            attempt("@wrong", 4),
            attempt("@wrong", 4),
            attempt("@wrong", 4),
            attempt("@wrong", 4),
            attempt("@correct", 4),
            attempt("@correct", 4),
            attempt("@wrong", 4),
            attempt("@correct", 4),
            attempt("@correct", 5),
        ],
    },
    "wheel_spinner": {
        "set": "extended",
        "description": "Many attempts, no successes, no mastery progress.",
        "moves": [
            attempt("@wrong", 3),
            attempt("@wrong", 3),
            attempt("@wrong", 2),
            attempt("@wrong", 2),
            attempt("@wrong", 2),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
            attempt("@wrong", 1),
        ],
    },
}


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for stale in OUT_DIR.glob("*.json"):
        stale.unlink()
    count = 0
    for signature, sig_def in SIGNATURES.items():
        for tier, tier_def in TIER_PROBLEMS.items():
            scenario = {
                "scenario_id": f"{signature}_{tier}",
                "signature": signature,
                "difficulty_tier": tier,
                "skill_id": tier_def["skill_id"],
                "signature_set": sig_def["set"],
                "description": sig_def["description"],
                "problems": tier_def["problems"],
                "scripted_moves": sig_def["moves"],
            }
            path = OUT_DIR / f"{signature}_{tier}.json"
            path.write_text(json.dumps(scenario, indent=2) + "\n", encoding="utf-8")
            count += 1
    print(f"wrote {count} scenarios to {OUT_DIR}")


if __name__ == "__main__":
    main()
