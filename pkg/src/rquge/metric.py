"""The acceptability metric: a QA prediction composed with a span rating.

Given a candidate question and an instance's context and gold answer span,
the metric asks the QA runner to answer the candidate against the context,
then asks the span scorer to rate the predicted answer against the gold
answer. The rating is the acceptability score kappa in [1, 5]; questions the
context cannot answer (or that fetch the wrong span) land low, well-posed
ones land high. No reference question is consulted at any point.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

from .cache import DiskCache
from .core import QGInstance
from .errors import RqugeError, RunnerError, ValidationError
from .runtime import QARunnerHandle, SpanScorerHandle, assemble_qa_input, qa_answer, span_score


@dataclass(frozen=True, slots=True)
class RqugeScore:
    """One scored candidate: kappa, the predicted answer behind it, and flags."""

    kappa: float
    predicted_answer: str
    normalized: float | None = None
    truncated: bool = False

    def __post_init__(self) -> None:
        if not 1.0 <= self.kappa <= 5.0:
            raise ValidationError(f"kappa must lie in [1, 5], got {self.kappa}")
        if self.normalized is not None:
            expected = (self.kappa - 1.0) / 4.0
            if abs(self.normalized - expected) > 1e-9:
                raise ValidationError(
                    f"normalized={self.normalized} inconsistent with kappa={self.kappa}"
                )


def normalize(score: RqugeScore) -> float:
    """Map kappa from [1, 5] onto [0, 1] linearly; raw kappa stays canonical."""
    return (score.kappa - 1.0) / 4.0


def rquge_score(
    instance: QGInstance,
    candidate: str,
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    *,
    cache: DiskCache | None = None,
    include_normalized: bool = False,
) -> RqugeScore:
    """Score one candidate question against one instance.

    Deterministic given fixed runners and cache state. Runner failures are
    re-raised tagged with the instance id.
    """
    if not candidate or not candidate.strip():
        raise ValueError("candidate question must be nonempty")
    try:
        _, truncated = assemble_qa_input(qa, candidate, instance.context)
        predicted = qa_answer(qa, candidate, instance.context, cache=cache)
        kappa = span_score(
            scorer,
            candidate,
            instance.gold_answer.text,
            predicted.text,
            instance.context,
            cache=cache,
        )
    except RunnerError as exc:
        raise RunnerError(f"instance {instance.id!r}: {exc}") from exc
    normalized = (kappa - 1.0) / 4.0 if include_normalized else None
    return RqugeScore(
        kappa=kappa,
        predicted_answer=predicted.text,
        normalized=normalized,
        truncated=truncated,
    )


def first_candidate_selector(instance: QGInstance) -> str | None:
    """Default batch selector: first candidate, else the reference question."""
    if instance.candidates:
        return instance.candidates[0].text
    return instance.reference_question


@dataclass(frozen=True, slots=True)
class ScoredCandidate:
    """Per-instance batch outcome; exactly one of score or error is set."""

    instance_id: str
    candidate: str | None
    score: RqugeScore | None
    error: str | None = None


def rquge_batch(
    instances: Sequence[QGInstance],
    candidate_selector: Callable[[QGInstance], str | None],
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    *,
    batch_size: int = 8,
    cache: DiskCache | None = None,
    include_normalized: bool = False,
) -> list[ScoredCandidate]:
    """Score many instances, preserving input order.

    Equivalent to mapping :func:`rquge_score` element-wise; one failed
    instance is reported in its slot instead of aborting the batch, so large
    evaluation runs survive malformed records.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    results: list[ScoredCandidate] = []
    for start in range(0, len(instances), batch_size):
        for instance in instances[start : start + batch_size]:
            candidate = None
            try:
                candidate = candidate_selector(instance)
                if not candidate:
                    raise ValueError("no candidate question to score")
                score = rquge_score(
                    instance,
                    candidate,
                    qa,
                    scorer,
                    cache=cache,
                    include_normalized=include_normalized,
                )
            except (RqugeError, ValueError) as exc:
                results.append(
                    ScoredCandidate(
                        instance_id=instance.id, candidate=candidate, score=None, error=str(exc)
                    )
                )
            else:
                results.append(
                    ScoredCandidate(instance_id=instance.id, candidate=candidate, score=score)
                )
    return results
