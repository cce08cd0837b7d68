"""Domain types and JSONL dataset ingestion.

All types are immutable after construction and validate their invariants
eagerly, so loaded datasets can be shared across threads without locking.

JSONL is the single canonical on-disk format: one UTF-8 record per line.
Instance records look like::

    {"id": str, "context": str,
     "gold_answer": {"text": str, "char_start": int?},
     "reference_question": str?,
     "candidates": [{"text": str, "ppl": float?, "source": str}]?}

Annotation records look like::

    {"instance_id": str, "annotator_id": str,
     "grammaticality": int, "answerability": int, "relevance": int}

For convenience the instance loader also accepts the training-file shape
emitted by :mod:`rquge.synth` ("answer" for "gold_answer", "question" for
"reference_question", ids assigned from line numbers when absent), so
synthetic training files round-trip through :func:`load_dataset`.
"""

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetParseError, ValidationError

CANDIDATE_SOURCES = ("generated", "reference", "corrupted", "external")

_WS_RUN = re.compile(r"\s+")


def collapse_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces.

    Used for comparisons only, never for storage: character offsets recorded
    against the original text must stay valid.
    """
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True, slots=True)
class AnswerSpan:
    """An answer string, optionally anchored at a character offset in its context."""

    text: str
    char_start: int | None = None

    def __post_init__(self) -> None:
        if not self.text or self.text != self.text.strip():
            raise ValidationError(
                f"answer text must be nonempty with no surrounding whitespace, got {self.text!r}"
            )
        if self.char_start is not None and self.char_start < 0:
            raise ValidationError(f"char_start must be >= 0, got {self.char_start}")


@dataclass(frozen=True, slots=True)
class CandidateQuestion:
    """A question produced for an instance, with optional generator perplexity."""

    text: str
    ppl: float | None = None
    source: str = "generated"

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("candidate question text must be nonempty")
        if self.ppl is not None:
            if not (math.isfinite(self.ppl) and self.ppl > 0):
                raise ValidationError(f"ppl must be finite and > 0, got {self.ppl!r}")
        if self.source not in CANDIDATE_SOURCES:
            raise ValidationError(
                f"candidate source must be one of {CANDIDATE_SOURCES}, got {self.source!r}"
            )


@dataclass(frozen=True, slots=True)
class QGInstance:
    """One evaluation unit: a context passage, its gold answer span, and questions."""

    id: str
    context: str
    gold_answer: AnswerSpan
    reference_question: str | None = None
    candidates: tuple[CandidateQuestion, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.id:
            raise ValidationError("instance id must be nonempty")
        if not self.context:
            raise ValidationError(f"instance {self.id!r}: context must be nonempty")
        start = self.gold_answer.char_start
        if start is not None:
            end = start + len(self.gold_answer.text)
            if self.context[start:end] != self.gold_answer.text:
                raise ValidationError(
                    f"instance {self.id!r}: gold_answer char_start={start} does not match "
                    f"the context substring"
                )


@dataclass(frozen=True, slots=True)
class AnnotationRecord:
    """One annotator's ratings for one question.

    Grammaticality and answerability are on a 3-point scale, relevance on a
    2-point scale; higher is better on all three.
    """

    instance_id: str
    annotator_id: str
    grammaticality: int
    answerability: int
    relevance: int

    def __post_init__(self) -> None:
        if not self.instance_id or not self.annotator_id:
            raise ValidationError("instance_id and annotator_id must be nonempty")
        for field_name, bound in (("grammaticality", 3), ("answerability", 3), ("relevance", 2)):
            value = getattr(self, field_name)
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= bound:
                raise ValidationError(
                    f"annotation {self.instance_id!r}/{self.annotator_id!r}: "
                    f"{field_name} must be an integer in 1..{bound}, got {value!r}"
                )


# -- JSONL I/O --


def read_jsonl(path: str | Path) -> list[dict]:
    """Read a JSONL file into dicts, skipping blank lines.

    Raises :class:`DatasetParseError` naming the offending line on bad JSON.
    """
    rows: list[dict] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise DatasetParseError(f"{path}: line {lineno}: expected a JSON object")
            rows.append(record)
    return rows


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> Path:
    """Write dicts to ``path``, one compact JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False))
            handle.write("\n")
    return path


def _require(record: dict, key: str, kind: type, where: str):
    value = record.get(key)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ValidationError(f"{where}: field {key!r} must be {kind.__name__}, got {value!r}")
    return value


def _span_from_record(value: object, where: str) -> AnswerSpan:
    if not isinstance(value, dict):
        raise ValidationError(f"{where}: gold_answer must be an object, got {value!r}")
    text = _require(value, "text", str, where)
    char_start = value.get("char_start")
    if char_start is not None and (not isinstance(char_start, int) or isinstance(char_start, bool)):
        raise ValidationError(f"{where}: char_start must be an integer, got {char_start!r}")
    return AnswerSpan(text=text, char_start=char_start)


def _candidate_from_record(value: object, where: str) -> CandidateQuestion:
    if not isinstance(value, dict):
        raise ValidationError(f"{where}: candidate must be an object, got {value!r}")
    text = _require(value, "text", str, where)
    ppl = value.get("ppl")
    if ppl is not None and not isinstance(ppl, (int, float)):
        raise ValidationError(f"{where}: ppl must be a number, got {ppl!r}")
    return CandidateQuestion(
        text=text,
        ppl=float(ppl) if ppl is not None else None,
        source=value.get("source", "generated"),
    )


def instance_from_record(record: dict, *, default_id: str = "", where: str = "record") -> QGInstance:
    """Build a validated :class:`QGInstance` from one decoded JSONL record."""
    instance_id = record.get("id", default_id)
    if not isinstance(instance_id, str) or not instance_id:
        raise ValidationError(f"{where}: field 'id' must be a nonempty string")
    where = f"{where} (id={instance_id!r})"
    context = _require(record, "context", str, where)
    gold = record.get("gold_answer", record.get("answer"))
    if gold is None:
        raise ValidationError(f"{where}: missing 'gold_answer'")
    reference = record.get("reference_question", record.get("question"))
    if reference is not None and not isinstance(reference, str):
        raise ValidationError(f"{where}: reference_question must be a string")
    raw_candidates = record.get("candidates", [])
    if not isinstance(raw_candidates, list):
        raise ValidationError(f"{where}: candidates must be a list")
    return QGInstance(
        id=instance_id,
        context=context,
        gold_answer=_span_from_record(gold, where),
        reference_question=reference,
        candidates=tuple(_candidate_from_record(c, where) for c in raw_candidates),
    )


def instance_to_record(instance: QGInstance) -> dict:
    """Serialize an instance back to its JSONL record shape, omitting empty fields."""
    gold: dict = {"text": instance.gold_answer.text}
    if instance.gold_answer.char_start is not None:
        gold["char_start"] = instance.gold_answer.char_start
    record: dict = {"id": instance.id, "context": instance.context, "gold_answer": gold}
    if instance.reference_question is not None:
        record["reference_question"] = instance.reference_question
    if instance.candidates:
        candidates = []
        for cand in instance.candidates:
            row: dict = {"text": cand.text}
            if cand.ppl is not None:
                row["ppl"] = cand.ppl
            row["source"] = cand.source
            candidates.append(row)
        record["candidates"] = candidates
    return record


def load_dataset(path: str | Path, format: str = "jsonl") -> list[QGInstance]:
    """Load and validate a dataset; order is preserved and duplicate ids rejected."""
    if format != "jsonl":
        raise ValueError(f"unsupported dataset format {format!r}")
    instances: list[QGInstance] = []
    seen: set[str] = set()
    for lineno, record in enumerate(read_jsonl(path), start=1):
        instance = instance_from_record(
            record, default_id=f"line-{lineno:06d}", where=f"{path}: line {lineno}"
        )
        if instance.id in seen:
            raise ValidationError(f"{path}: line {lineno}: duplicate instance id {instance.id!r}")
        seen.add(instance.id)
        instances.append(instance)
    return instances


def save_dataset(instances: Sequence[QGInstance], path: str | Path) -> Path:
    """Write instances as JSONL; ``load_dataset`` round-trips the result exactly."""
    return write_jsonl(path, (instance_to_record(inst) for inst in instances))


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Load annotation records, checking rating bounds and (instance, annotator) uniqueness."""
    records: list[AnnotationRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, record in enumerate(read_jsonl(path), start=1):
        where = f"{path}: line {lineno}"
        annotation = AnnotationRecord(
            instance_id=_require(record, "instance_id", str, where),
            annotator_id=_require(record, "annotator_id", str, where),
            grammaticality=_require(record, "grammaticality", int, where),
            answerability=_require(record, "answerability", int, where),
            relevance=_require(record, "relevance", int, where),
        )
        key = (annotation.instance_id, annotation.annotator_id)
        if key in seen:
            raise ValidationError(f"{where}: duplicate annotation for {key!r}")
        seen.add(key)
        records.append(annotation)
    return records


def save_annotations(records: Sequence[AnnotationRecord], path: str | Path) -> Path:
    """Write annotation records as JSONL."""
    return write_jsonl(
        path,
        (
            {
                "instance_id": r.instance_id,
                "annotator_id": r.annotator_id,
                "grammaticality": r.grammaticality,
                "answerability": r.answerability,
                "relevance": r.relevance,
            }
            for r in records
        ),
    )


def annotations_by_instance(records: Iterable[AnnotationRecord]) -> dict[str, list[AnnotationRecord]]:
    """Group annotation records by instance id, preserving record order."""
    grouped: dict[str, list[AnnotationRecord]] = {}
    for record in records:
        grouped.setdefault(record.instance_id, []).append(record)
    return grouped
