"""Synthetic QA data factory for domain adaptation.

Pipeline per context: extract short candidate answer spans with NER, pick
one at random (seeded), sample a candidate-question bag for it, re-rank the
bag with the acceptability metric, and keep the winning question. The
emitted training file pairs each context with the chosen question and its
answer span, ready for QA fine-tuning through an external trainer; the
trainer itself is out of scope here and is described only by a config file.
"""

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .baselines import external_metric
from .cache import DiskCache
from .core import AnswerSpan, QGInstance, write_jsonl
from .errors import ValidationError
from .metric import rquge_score
from .rerank import rerank
from .runtime import (
    GeneratorHandle,
    NerRunnerHandle,
    QARunnerHandle,
    SpanScorerHandle,
    generate_candidates,
    ner_entities,
)
from .util import derive_seed

logger = logging.getLogger(__name__)

SELECTION_STRATEGIES = ("rquge", "ppl", "beam", "external_adapter")

#: Documented knobs for the out-of-scope fine-tuning step: a T5-small-class
#: model trained 2K steps at lr 3e-5 with batch size 32.
TRAINER_DEFAULTS = {
    "model": "t5-small",
    "train_steps": 2000,
    "learning_rate": 3e-5,
    "batch_size": 32,
    "dropout": 0.1,
}


@dataclass(frozen=True, slots=True)
class SynthExample:
    """One synthetic training pair: context, anchored answer span, chosen question."""

    context: str
    answer: AnswerSpan
    question: str
    kappa: float
    selection: str

    def __post_init__(self) -> None:
        if self.selection not in SELECTION_STRATEGIES:
            raise ValidationError(
                f"selection must be one of {SELECTION_STRATEGIES}, got {self.selection!r}"
            )
        if not self.question:
            raise ValidationError("question must be nonempty")
        start = self.answer.char_start
        if start is not None:
            end = start + len(self.answer.text)
            if self.context[start:end] != self.answer.text:
                raise ValidationError("answer span does not match the context at its offset")
        elif self.answer.text not in self.context:
            raise ValidationError("answer text does not appear in the context")


def extract_answer_spans(
    context: str,
    ner: NerRunnerHandle,
    max_tokens: int = 4,
    *,
    cache: DiskCache | None = None,
) -> list[AnswerSpan]:
    """Entity surfaces shorter than ``max_tokens`` tokens, deduplicated by (surface, offset)."""
    if not context or not context.strip():
        raise ValueError("context must be nonempty")
    spans: list[AnswerSpan] = []
    seen: set[tuple[str, int]] = set()
    for entity in ner_entities(ner, context, cache=cache):
        if len(entity.surface.split()) >= max_tokens:
            continue
        key = (entity.surface, entity.char_start)
        if key in seen:
            continue
        seen.add(key)
        spans.append(AnswerSpan(text=entity.surface, char_start=entity.char_start))
    return spans


def _select_question(
    instance: QGInstance,
    k: int,
    selection: str,
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    adapter_name: str | None,
    cache: DiskCache | None,
) -> tuple[str, float]:
    bag = list(instance.candidates)
    k = min(k, len(bag))
    if selection == "rquge":
        result = rerank(instance, k, qa, scorer, cache=cache)
        return result.chosen.text, result.chosen_score.kappa
    if selection == "ppl":
        result = rerank(instance, 1, qa, scorer, cache=cache)
        return result.chosen.text, result.chosen_score.kappa
    if selection == "beam":
        # generation order stands in for beam rank: no re-ranking at all
        chosen = bag[0]
    else:
        if adapter_name is None:
            raise ValueError("selection 'external_adapter' needs an adapter_name")
        ordered = sorted(bag, key=lambda c: c.ppl)[:k]
        chosen = max(
            ordered,
            key=lambda c: external_metric(
                adapter_name, c.text, context=instance.context, answer=instance.gold_answer.text
            ).value,
        )
    score = rquge_score(instance, chosen.text, qa, scorer, cache=cache)
    return chosen.text, score.kappa


def synthesize(
    contexts: Sequence[str],
    ner: NerRunnerHandle,
    generator: GeneratorHandle,
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    *,
    k: int = 1,
    seed: int = 0,
    selection: str = "rquge",
    adapter_name: str | None = None,
    max_answer_tokens: int = 4,
    all_spans: bool = False,
    cache: DiskCache | None = None,
) -> list[SynthExample]:
    """Build synthetic QA pairs from raw contexts; deterministic under ``seed``.

    One random answer span is drawn per context (``all_spans=True`` keeps
    every extracted span instead). Contexts with no usable span are skipped
    with a logged reason. The recorded kappa is always the acceptability
    score of the emitted question, whatever the selection strategy.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if selection not in SELECTION_STRATEGIES:
        raise ValueError(f"selection must be one of {SELECTION_STRATEGIES}, got {selection!r}")
    examples: list[SynthExample] = []
    for index, context in enumerate(contexts):
        spans = extract_answer_spans(context, ner, max_answer_tokens, cache=cache)
        if not spans:
            logger.info("context %d skipped: no answer span shorter than %d tokens", index, max_answer_tokens)
            continue
        if all_spans:
            chosen_spans = spans
        else:
            rng = random.Random(derive_seed(seed, index))
            chosen_spans = [spans[rng.randrange(len(spans))]]
        for span_index, span in enumerate(chosen_spans):
            candidates = generate_candidates(generator, span, context, cache=cache)
            instance = QGInstance(
                id=f"synth-{index:05d}-{span_index}",
                context=context,
                gold_answer=span,
                candidates=tuple(candidates),
            )
            question, kappa = _select_question(
                instance, k, selection, qa, scorer, adapter_name, cache
            )
            examples.append(
                SynthExample(
                    context=context,
                    answer=span,
                    question=question,
                    kappa=kappa,
                    selection=selection,
                )
            )
    return examples


def emit_training_file(
    examples: Sequence[SynthExample], path: str | Path, format: str = "squad_style_jsonl"
) -> Path:
    """Write one {"context", "question", "answer"} record per example.

    The records carry no ids, so :func:`rquge.core.load_dataset` assigns
    line-number ids when reading the file back.
    """
    if format != "squad_style_jsonl":
        raise ValueError(f"unsupported training file format {format!r}")
    if not examples:
        raise ValueError("examples must be nonempty")

    def rows():
        for example in examples:
            answer: dict = {"text": example.answer.text}
            if example.answer.char_start is not None:
                answer["char_start"] = example.answer.char_start
            yield {"context": example.context, "question": example.question, "answer": answer}

    return write_jsonl(path, rows())


def write_trainer_config(path: str | Path, overrides: dict | None = None) -> Path:
    """Emit the trainer-adapter config documenting the fine-tuning defaults."""
    config = dict(TRAINER_DEFAULTS)
    if overrides:
        config.update(overrides)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path
