"""Inference-runner contracts for the external models the pipeline consumes.

Each operation takes an immutable handle binding a named backend to a fixed
call discipline: input assembly, truncation, score clamping, optional
response caching, and serialized access for backends that are not safe to
call concurrently. Backends are plain objects satisfying the protocols
below; deterministic offline implementations live in :mod:`rquge.stubs`.

The reference checkpoints that back a production deployment are configured
by name, never hardcoded; see :data:`REFERENCE_CHECKPOINTS`.
"""

import math
import threading
import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Protocol, Sequence, runtime_checkable

from .cache import DiskCache
from .core import AnswerSpan, CandidateQuestion
from .errors import ConfigurationError, RunnerError, ValidationError

#: Documented default checkpoints for a model-backed deployment. These are
#: config-file values, not downloads: register a backend factory for them.
REFERENCE_CHECKPOINTS = {
    "qa": "unifiedqa-v2-t5-large",
    "scorer": "roberta-mocha-span-scorer",
}

SPAN_SCORER_TEMPLATE = "[CLS] {question} [q] {gold} [r] {predicted} [c] {context}"


class TruncationWarning(UserWarning):
    """Emitted when an over-long context is tail-truncated to fit the input window."""


@dataclass(frozen=True, slots=True)
class SamplingConfig:
    """Nucleus-sampling settings for candidate generation.

    Defaults follow the standard recipe for diverse question bags:
    temperature 1.0 and top summation probability 0.94.
    """

    temperature: float = 1.0
    top_p: float = 0.94
    num_candidates: int = 1

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ValidationError(f"temperature must be > 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ValidationError(f"top_p must be in (0, 1], got {self.top_p}")
        if not isinstance(self.num_candidates, int) or self.num_candidates < 1:
            raise ValidationError(f"num_candidates must be a positive integer, got {self.num_candidates}")


class Entity(NamedTuple):
    surface: str
    type: str
    char_start: int


# -- backend protocols --


@runtime_checkable
class QABackend(Protocol):
    def token_count(self, text: str) -> int: ...

    def truncate_to(self, text: str, max_tokens: int) -> str: ...

    def answer(self, input_text: str) -> str: ...


@runtime_checkable
class SpanScorerBackend(Protocol):
    def score(self, input_text: str) -> float: ...


@runtime_checkable
class GeneratorBackend(Protocol):
    def generate(
        self, answer: str, context: str, sampling: SamplingConfig
    ) -> Sequence[tuple[str, float]]: ...


@runtime_checkable
class NerBackend(Protocol):
    def entities(self, text: str) -> Sequence[tuple[str, str, int]]: ...


@runtime_checkable
class TranslateBackend(Protocol):
    def translate(self, text: str, src: str, tgt: str) -> str: ...


@runtime_checkable
class ParaphraseBackend(Protocol):
    def paraphrase(self, question: str) -> str: ...


# -- runner handles --


def _new_lock() -> threading.Lock:
    return threading.Lock()


@dataclass(frozen=True, slots=True)
class QARunnerHandle:
    """Generative question-answering runner: question + context -> answer text."""

    name: str
    backend: QABackend
    max_input_length: int = 1024
    concurrency_safe: bool = False
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("runner name must be nonempty")
        if self.max_input_length < 1:
            raise ValidationError("max_input_length must be positive")


@dataclass(frozen=True, slots=True)
class SpanScorerHandle:
    """Answer-span rating runner; raw regression output is clamped to [score_min, score_max]."""

    name: str
    backend: SpanScorerBackend
    score_min: float = 1.0
    score_max: float = 5.0
    concurrency_safe: bool = False
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("runner name must be nonempty")
        if not self.score_min < self.score_max:
            raise ValidationError(
                f"score_min must be < score_max, got {self.score_min} >= {self.score_max}"
            )


@dataclass(frozen=True, slots=True)
class GeneratorHandle:
    """Question-generation runner producing a perplexity-annotated candidate bag."""

    name: str
    backend: GeneratorBackend
    sampling: SamplingConfig = SamplingConfig()
    concurrency_safe: bool = False
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("runner name must be nonempty")


@dataclass(frozen=True, slots=True)
class NerRunnerHandle:
    name: str
    backend: NerBackend
    concurrency_safe: bool = True
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class TranslatorHandle:
    name: str
    backend: TranslateBackend
    concurrency_safe: bool = True
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class ParaphraserHandle:
    name: str
    backend: ParaphraseBackend
    concurrency_safe: bool = True
    _lock: threading.Lock = field(default_factory=_new_lock, compare=False, repr=False)


def _guard(handle):
    """Serialize backend calls unless the backend declared itself concurrency safe."""
    return nullcontext() if handle.concurrency_safe else handle._lock


def cached(
    cache: DiskCache | None,
    runner_name: str,
    operation: str,
    parts: Sequence[object],
    compute: Callable[[], object],
):
    """Serve ``compute()`` through the cache when one is configured.

    A second call with identical inputs returns the stored value without
    touching the backend; changing any character of any input is a miss.
    """
    if cache is None:
        return compute()
    key = cache.key(runner_name, operation, parts)
    hit = cache.get(key)
    if hit is not None:
        return hit
    value = compute()
    cache.put(key, value)
    return value


def _call_backend(handle, fn: Callable[[], object], what: str):
    try:
        with _guard(handle):
            return fn()
    except RunnerError:
        raise
    except Exception as exc:
        raise RunnerError(f"{what} backend {handle.name!r} failed: {exc}") from exc


# -- operations --


def assemble_qa_input(runner: QARunnerHandle, question: str, context: str) -> tuple[str, bool]:
    """Assemble the QA input as question, separator, context.

    The separator is backend-defined (default newline). When the combined
    token count exceeds the runner's window, the context tail is truncated;
    the question is never cut, since it drives answer extraction. Returns
    the assembled input and whether truncation occurred.
    """
    backend = runner.backend
    separator = getattr(backend, "separator", "\n")
    budget = runner.max_input_length - backend.token_count(question)
    truncated = backend.token_count(context) > max(budget, 0)
    if truncated:
        context = backend.truncate_to(context, max(budget, 0))
    return f"{question}{separator}{context}", truncated


def qa_answer(
    runner: QARunnerHandle, question: str, context: str, *, cache: DiskCache | None = None
) -> AnswerSpan:
    """Predict the answer span for ``question`` against ``context``.

    Emits a :class:`TruncationWarning` (never a silent failure) when the
    context had to be cut to fit the runner's input window.
    """
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    if not context or not context.strip():
        raise ValueError("context must be nonempty")
    input_text, truncated = assemble_qa_input(runner, question, context)
    if truncated:
        warnings.warn(
            f"runner {runner.name!r}: context truncated to fit {runner.max_input_length} tokens",
            TruncationWarning,
            stacklevel=2,
        )
    raw = cached(
        cache,
        runner.name,
        "qa_answer",
        (question, context, runner.max_input_length, getattr(runner.backend, "separator", "\n")),
        lambda: _call_backend(runner, lambda: runner.backend.answer(input_text), "qa"),
    )
    text = str(raw).strip()
    if not text:
        raise RunnerError(f"qa backend {runner.name!r} returned an empty answer")
    return AnswerSpan(text=text)


def assemble_scorer_input(question: str, gold: str, predicted: str, context: str) -> str:
    """Build the exact marker-delimited input string the span scorer consumes."""
    return SPAN_SCORER_TEMPLATE.format(
        question=question, gold=gold, predicted=predicted, context=context
    )


def span_score(
    runner: SpanScorerHandle,
    question: str,
    gold: str,
    predicted: str,
    context: str,
    *,
    cache: DiskCache | None = None,
) -> float:
    """Rate the predicted answer against the gold answer, clamped to the runner's range.

    The regression head is unbounded, so out-of-range raw outputs are clamped
    rather than rejected; downstream consumers rely on a bounded score.
    """
    for name, value in (
        ("question", question),
        ("gold", gold),
        ("predicted", predicted),
        ("context", context),
    ):
        if not value or not value.strip():
            raise ValueError(f"{name} must be nonempty")
    input_text = assemble_scorer_input(question, gold, predicted, context)
    raw = cached(
        cache,
        runner.name,
        "span_score",
        (question, gold, predicted, context),
        lambda: float(_call_backend(runner, lambda: runner.backend.score(input_text), "span scorer")),
    )
    raw = float(raw)
    if math.isnan(raw):
        raise RunnerError(f"span scorer backend {runner.name!r} returned NaN")
    return min(max(raw, runner.score_min), runner.score_max)


def generate_candidates(
    runner: GeneratorHandle,
    answer: AnswerSpan,
    context: str,
    *,
    cache: DiskCache | None = None,
) -> list[CandidateQuestion]:
    """Sample a candidate-question bag for an answer span, each with finite perplexity."""
    if not context or not context.strip():
        raise ValueError("context must be nonempty")
    sampling = runner.sampling
    raw = cached(
        cache,
        runner.name,
        "generate",
        (answer.text, answer.char_start, context, sampling.temperature, sampling.top_p, sampling.num_candidates),
        lambda: [
            [str(text), float(ppl)]
            for text, ppl in _call_backend(
                runner,
                lambda: runner.backend.generate(answer.text, context, sampling),
                "generator",
            )
        ],
    )
    if len(raw) != sampling.num_candidates:
        raise RunnerError(
            f"generator backend {runner.name!r} returned {len(raw)} candidates, "
            f"expected {sampling.num_candidates}"
        )
    return [CandidateQuestion(text=text, ppl=ppl, source="generated") for text, ppl in raw]


def ner_entities(
    runner: NerRunnerHandle, text: str, *, cache: DiskCache | None = None
) -> list[Entity]:
    """Extract (surface, type, char_start) entities from ``text``."""
    if not text or not text.strip():
        raise ValueError("text must be nonempty")
    raw = cached(
        cache,
        runner.name,
        "ner",
        (text,),
        lambda: [
            [str(surface), str(etype), int(start)]
            for surface, etype, start in _call_backend(
                runner, lambda: runner.backend.entities(text), "ner"
            )
        ],
    )
    return [Entity(surface, etype, start) for surface, etype, start in raw]


def paraphrase(
    runner: ParaphraserHandle, question: str, *, cache: DiskCache | None = None
) -> str:
    """Produce a meaning-preserving rewrite of ``question``."""
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    return str(
        cached(
            cache,
            runner.name,
            "paraphrase",
            (question,),
            lambda: _call_backend(runner, lambda: runner.backend.paraphrase(question), "paraphraser"),
        )
    )


def translate(
    runner: TranslatorHandle, text: str, src: str, tgt: str, *, cache: DiskCache | None = None
) -> str:
    """Translate ``text`` from ``src`` to ``tgt``."""
    if not text or not text.strip():
        raise ValueError("text must be nonempty")
    return str(
        cached(
            cache,
            runner.name,
            "translate",
            (text, src, tgt),
            lambda: _call_backend(runner, lambda: runner.backend.translate(text, src, tgt), "translator"),
        )
    )


# -- backend factory registry --

_FACTORIES: dict[tuple[str, str], Callable] = {}

RUNNER_KINDS = ("qa", "scorer", "generator", "ner", "translator", "paraphraser")


def register_backend(kind: str, name: str, factory: Callable) -> None:
    """Register ``factory(options, env) -> handle`` for a backend name.

    ``options`` is the backend's config-file section; ``env`` carries
    run-scoped context such as the loaded dataset and command seed.
    """
    if kind not in RUNNER_KINDS:
        raise ConfigurationError(f"unknown runner kind {kind!r}, expected one of {RUNNER_KINDS}")
    _FACTORIES[(kind, name)] = factory


def registered_backends(kind: str | None = None) -> list[tuple[str, str]]:
    keys = sorted(_FACTORIES)
    return [k for k in keys if kind is None or k[0] == kind]


def create_runner(kind: str, options: dict, env: dict | None = None):
    """Instantiate a runner handle from a config section like ``{"backend": name, ...}``."""
    name = options.get("backend")
    if not name:
        raise ConfigurationError(f"runner config for {kind!r} must name a 'backend'")
    factory = _FACTORIES.get((kind, name))
    if factory is None:
        available = ", ".join(n for k, n in registered_backends(kind)) or "none"
        raise ConfigurationError(
            f"no {kind} backend registered under {name!r} (available: {available})"
        )
    return factory(dict(options), dict(env or {}))
