"""Reference-based baseline metrics and QA accuracy scoring.

Self-contained implementations of BLEU-4, ROUGE-1, ROUGE-L, and SQuAD-style
token F1 / exact match. Heavy neural metrics are comparison points, not
contributions, so they plug in through a named adapter registry instead of
being reimplemented here.

Tokenization for the n-gram metrics is deliberately simple and documented:
lowercase, separate punctuation, split on whitespace. Published absolute
numbers from other toolkits will differ when their tokenizers do.
"""

import re
import string
import warnings
from collections import Counter
from dataclasses import dataclass
from math import exp, log
from typing import Callable

from .errors import ConfigurationError, ReferenceRequiredError, ValidationError

BASELINE_METRICS = ("bleu4", "rouge1", "rougeL")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")

#: Smoothing for zero n-gram matches; keeps the geometric mean defined.
BLEU_EPSILON = 1e-9


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace after separating punctuation."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True, slots=True)
class MetricValue:
    metric_name: str
    value: float
    higher_is_better: bool = True


def _require_reference(reference: str | None) -> str:
    if reference is None:
        raise ReferenceRequiredError("this metric compares against a reference question")
    return reference


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, reference: str | None) -> float:
    """BLEU with modified n-gram precisions up to 4-grams and brevity penalty.

    Zero clipped counts (and orders with no candidate n-grams at all) fall
    back to :data:`BLEU_EPSILON` instead of zeroing the whole score.
    """
    reference = _require_reference(reference)
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        warnings.warn("bleu4: empty candidate scores 0.0", stacklevel=2)
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand_ngrams = _ngrams(cand, n)
        ref_ngrams = _ngrams(ref, n)
        clipped = sum(min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items())
        total = sum(cand_ngrams.values())
        precision = clipped / total if total and clipped else BLEU_EPSILON
        log_sum += log(precision)
    brevity = 1.0 if len(cand) >= len(ref) else exp(1.0 - len(ref) / len(cand))
    return brevity * exp(log_sum / 4.0)


def _f1(overlap: float, cand_len: int, ref_len: int) -> float:
    if overlap == 0 or not cand_len or not ref_len:
        return 0.0
    precision = overlap / cand_len
    recall = overlap / ref_len
    return 2 * precision * recall / (precision + recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    # single-row dynamic program over the shorter second dimension
    if len(b) > len(a):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge(candidate: str, reference: str | None, variant: str = "rouge1") -> float:
    """ROUGE F1: unigram overlap for rouge1, longest common subsequence for rougeL."""
    reference = _require_reference(reference)
    if variant not in ("rouge1", "rougeL"):
        raise ValueError(f"variant must be 'rouge1' or 'rougeL', got {variant!r}")
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        warnings.warn(f"{variant}: empty candidate scores 0.0", stacklevel=2)
        return 0.0
    if variant == "rouge1":
        overlap = sum((Counter(cand) & Counter(ref)).values())
    else:
        overlap = _lcs_length(cand, ref)
    return _f1(overlap, len(cand), len(ref))


def normalize_answer(text: str) -> str:
    """SQuAD-style normalization: lowercase, drop punctuation and articles, fix spaces."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in string.punctuation)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def qa_f1_em(predicted: str, gold: str) -> tuple[float, int]:
    """Token-overlap F1 and exact match after answer normalization."""
    pred_tokens = normalize_answer(predicted).split()
    gold_tokens = normalize_answer(gold).split()
    em = int(pred_tokens == gold_tokens)
    if not pred_tokens or not gold_tokens:
        return (float(pred_tokens == gold_tokens), em)
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    return (_f1(overlap, len(pred_tokens), len(gold_tokens)), em)


def compute_baseline(name: str, candidate: str, reference: str | None) -> float:
    """Dispatch one of the built-in reference-based metrics by name."""
    if name == "bleu4":
        return bleu4(candidate, reference)
    if name in ("rouge1", "rougeL"):
        return rouge(candidate, reference, variant=name)
    raise ValueError(f"unknown baseline metric {name!r}, expected one of {BASELINE_METRICS}")


# -- external metric adapters --

AdapterFn = Callable[..., float]

_ADAPTERS: dict[str, tuple[AdapterFn, bool]] = {}


def register_external_metric(name: str, fn: AdapterFn, *, higher_is_better: bool = True) -> None:
    """Register an external scorer called as fn(candidate, reference, context, answer)."""
    if not name:
        raise ValidationError("adapter name must be nonempty")
    _ADAPTERS[name] = (fn, higher_is_better)


def unregister_external_metric(name: str) -> None:
    _ADAPTERS.pop(name, None)


def registered_external_metrics() -> list[str]:
    return sorted(_ADAPTERS)


def external_metric(
    adapter_name: str,
    candidate: str,
    reference: str | None = None,
    context: str | None = None,
    answer: str | None = None,
) -> MetricValue:
    """Run a registered adapter; its value passes through untouched."""
    entry = _ADAPTERS.get(adapter_name)
    if entry is None:
        available = ", ".join(registered_external_metrics()) or "none"
        raise ConfigurationError(
            f"no external metric registered under {adapter_name!r} (available: {available})"
        )
    fn, higher_is_better = entry
    value = float(fn(candidate, reference=reference, context=context, answer=answer))
    return MetricValue(metric_name=adapter_name, value=value, higher_is_better=higher_is_better)
