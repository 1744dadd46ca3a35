"""Per-learner pedagogical feature state: rolling accuracy, hint usage, struggle signals.

Feature vectors are immutable snapshots; `update_features` folds one
interaction event into the previous snapshot. The CSV ingest path parses raw
interaction logs into ordered event streams with per-learner timestamp checks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, TextIO

#: Rolling-accuracy window, in attempts.
DEFAULT_WINDOW = 5
#: Unassisted-unsuccessful attempts on a skill before flagging wheel-spinning.
DEFAULT_WHEEL_SPIN_THRESHOLD = 10
#: Rolling accuracy reported before any attempt has been observed.
EMPTY_WINDOW_ACCURACY = 0.5

CANONICAL_COLUMNS = (
    "learner_id",
    "skill_id",
    "problem_id",
    "timestamp_ms",
    "correct",
    "hint",
    "response_ms",
    "attempt_index",
    "confidence",
)


@dataclass(frozen=True)
class InteractionEvent:
    """One attempt row from an interaction log."""

    learner_id: str
    skill_id: str
    problem_id: str
    timestamp_ms: int
    correct: bool
    hint_requested: bool
    response_ms: int
    attempt_index: int
    confidence: int | None = None

    def __post_init__(self) -> None:
        if self.response_ms < 0:
            raise ValueError("response_ms must be >= 0")
        if self.attempt_index < 1:
            raise ValueError("attempt_index is 1-based")
        if self.confidence is not None and self.confidence not in (1, 2, 3, 4, 5):
            raise ValueError(f"confidence must be in 1..5, got {self.confidence!r}")


@dataclass(frozen=True)
class FeatureVector:
    """Per-learner pedagogical features, one skill stream at a time.

    The trailing fields (recent_outcomes, active_problem_id, last_hint_ts_ms,
    unassisted_failures) are carried state for the update step and are not
    part of the exported snapshot record.
    """

    rolling_accuracy: float = EMPTY_WINDOW_ACCURACY
    hints_problem: int = 0
    hints_skill: int = 0
    time_since_last_hint_ms: int | None = None
    time_on_task_ms: int = 0
    opportunity_count: int = 0
    error_streak: int = 0
    wheel_spinning: bool = False
    recent_outcomes: tuple[bool, ...] = ()
    active_problem_id: str | None = None
    last_hint_ts_ms: int | None = None
    unassisted_failures: int = 0

    def record(self) -> dict:
        """Exported snapshot: exactly the named feature fields."""
        return {
            "rolling_accuracy": self.rolling_accuracy,
            "hints_problem": self.hints_problem,
            "hints_skill": self.hints_skill,
            "time_since_last_hint_ms": self.time_since_last_hint_ms,
            "time_on_task_ms": self.time_on_task_ms,
            "opportunity_count": self.opportunity_count,
            "error_streak": self.error_streak,
            "wheel_spinning": self.wheel_spinning,
        }


def rolling_accuracy(window: Iterable[bool]) -> float:
    """Fraction of successes in the window; neutral 0.5 when empty."""
    outcomes = list(window)
    if not outcomes:
        return EMPTY_WINDOW_ACCURACY
    return sum(1 for o in outcomes if o) / len(outcomes)


def detect_wheel_spinning(attempts_without_success: int, mastered: bool, threshold: int = DEFAULT_WHEEL_SPIN_THRESHOLD) -> bool:
    """Many attempts without success, and the learner has not mastered the skill."""
    if attempts_without_success < 0:
        raise ValueError("attempts_without_success must be >= 0")
    return attempts_without_success >= threshold and not mastered


def update_features(
    fv: FeatureVector,
    event: InteractionEvent,
    *,
    window: int = DEFAULT_WINDOW,
    wheel_threshold: int = DEFAULT_WHEEL_SPIN_THRESHOLD,
    mastered: bool = False,
) -> FeatureVector:
    """Fold one attempt event into the feature state.

    Per-problem counters reset when the event's problem differs from the
    active one. The unassisted-failure streak feeding wheel-spinning counts
    hint-free incorrect attempts and resets on any correct attempt.
    """
    problem_changed = fv.active_problem_id is not None and event.problem_id != fv.active_problem_id
    hints_problem = 0 if problem_changed else fv.hints_problem

    outcomes = (fv.recent_outcomes + (event.correct,))[-window:]
    error_streak = 0 if event.correct else fv.error_streak + 1

    if event.correct:
        unassisted_failures = 0
    elif not event.hint_requested:
        unassisted_failures = fv.unassisted_failures + 1
    else:
        unassisted_failures = fv.unassisted_failures

    hints_skill = fv.hints_skill
    last_hint_ts = fv.last_hint_ts_ms
    if event.hint_requested:
        hints_problem += 1
        hints_skill += 1
        last_hint_ts = event.timestamp_ms

    return FeatureVector(
        rolling_accuracy=rolling_accuracy(outcomes),
        hints_problem=hints_problem,
        hints_skill=hints_skill,
        time_since_last_hint_ms=(
            None if last_hint_ts is None else max(0, event.timestamp_ms - last_hint_ts)
        ),
        time_on_task_ms=fv.time_on_task_ms + event.response_ms,
        opportunity_count=fv.opportunity_count + 1,
        error_streak=error_streak,
        wheel_spinning=detect_wheel_spinning(unassisted_failures, mastered, wheel_threshold),
        recent_outcomes=outcomes,
        active_problem_id=event.problem_id,
        last_hint_ts_ms=last_hint_ts,
        unassisted_failures=unassisted_failures,
    )


def note_hint_delivery(fv: FeatureVector, timestamp_ms: int) -> FeatureVector:
    """Bump hint counters for a tutor-delivered hint outside an attempt event."""
    return replace(
        fv,
        hints_problem=fv.hints_problem + 1,
        hints_skill=fv.hints_skill + 1,
        time_since_last_hint_ms=0,
        last_hint_ts_ms=timestamp_ms,
    )


def reset_problem_counters(fv: FeatureVector, problem_id: str | None) -> FeatureVector:
    """Start a new problem: per-problem hint count drops to zero."""
    return replace(fv, hints_problem=0, active_problem_id=problem_id)


class IngestError(ValueError):
    """Malformed log input, carrying the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass
class IngestResult:
    events: list[InteractionEvent]
    skipped: list[tuple[int, str]] = field(default_factory=list)


def _parse_flag(raw: str, column: str, line: int) -> bool:
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise IngestError(f"column {column!r} must be 0 or 1, got {raw!r}", line)


def _parse_int(raw: str, column: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise IngestError(f"column {column!r} must be an integer, got {raw!r}", line) from None


def ingest_log(
    stream: TextIO | str | Path,
    *,
    column_map: dict[str, str] | None = None,
    on_error: str = "abort",
) -> IngestResult:
    """Parse a CSV interaction log into an ordered event sequence.

    `column_map` maps canonical column names to the file's header names, for
    logs with a foreign schema. `on_error` is "abort" (raise on first bad
    row) or "skip" (collect bad rows as (line, reason) and continue).
    Timestamp regressions within a learner stream always abort: they mean the
    log is unusable, not merely dirty.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    if isinstance(stream, (str, Path)):
        with open(stream, encoding="utf-8", newline="") as fh:
            return ingest_log(fh, column_map=column_map, on_error=on_error)

    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise IngestError("missing header row")
    mapping = {name: (column_map or {}).get(name, name) for name in CANONICAL_COLUMNS}
    missing = [src for src in mapping.values() if src not in reader.fieldnames]
    if missing:
        raise IngestError(f"header is missing columns: {', '.join(sorted(missing))}")

    result = IngestResult(events=[])
    last_ts: dict[str, int] = {}
    for row in reader:
        line = reader.line_num
        try:
            raw = {name: (row.get(src) or "").strip() for name, src in mapping.items()}
            confidence = int(raw["confidence"]) if raw["confidence"] else None
            event = InteractionEvent(
                learner_id=raw["learner_id"],
                skill_id=raw["skill_id"],
                problem_id=raw["problem_id"],
                timestamp_ms=_parse_int(raw["timestamp_ms"], "timestamp_ms", line),
                correct=_parse_flag(raw["correct"], "correct", line),
                hint_requested=_parse_flag(raw["hint"], "hint", line),
                response_ms=_parse_int(raw["response_ms"], "response_ms", line),
                attempt_index=_parse_int(raw["attempt_index"], "attempt_index", line),
                confidence=confidence,
            )
        except IngestError as exc:
            if on_error == "abort":
                raise
            result.skipped.append((line, str(exc)))
            continue
        except ValueError as exc:
            if on_error == "abort":
                raise IngestError(str(exc), line) from exc
            result.skipped.append((line, str(exc)))
            continue

        prev = last_ts.get(event.learner_id)
        if prev is not None and event.timestamp_ms < prev:
            raise IngestError(
                f"timestamp regression for learner {event.learner_id!r}: "
                f"{event.timestamp_ms} < {prev}",
                line,
            )
        last_ts[event.learner_id] = event.timestamp_ms
        result.events.append(event)
    return result


def write_feature_snapshots(records: Iterable[dict], out: TextIO | str | Path) -> int:
    """Write one JSON object per line; returns the number of lines written."""
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            return write_feature_snapshots(records, fh)
    count = 0
    for record in records:
        out.write(json.dumps(record, sort_keys=True) + "\n")
        count += 1
    return count


def load_column_map(path: str | Path) -> dict[str, str]:
    """Load a {canonical_name: source_column} mapping from JSON."""
    mapping = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(mapping) - set(CANONICAL_COLUMNS)
    if unknown:
        raise ValueError(f"column map names unknown canonical columns: {sorted(unknown)}")
    return {str(k): str(v) for k, v in mapping.items()}
