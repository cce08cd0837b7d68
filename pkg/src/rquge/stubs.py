"""Deterministic offline backends implementing the runner contracts.

Every stub is a pure function of its inputs and its construction-time seed:
no state, no network, no model weights. Pipelines built on them reproduce
byte-identically across runs and machines, which is what the offline test
suite and the golden-file checks rely on.

All stubs register themselves in the backend factory registry on import
under ``stub-*`` names.
"""

import string
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .core import QGInstance
from .runtime import (
    GeneratorHandle,
    NerRunnerHandle,
    ParaphraserHandle,
    QARunnerHandle,
    SamplingConfig,
    SpanScorerHandle,
    TranslatorHandle,
    register_backend,
)
from .util import derive_seed, match_case, split_token

_PUNCT = string.punctuation


def token_f1(gold: str, predicted: str) -> float:
    """Whitespace-token multiset F1 between two strings."""
    gold_tokens = gold.split()
    pred_tokens = predicted.split()
    if not gold_tokens or not pred_tokens:
        return 0.0
    overlap = sum((Counter(gold_tokens) & Counter(pred_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


class WhitespaceTokens:
    """Token accounting for stubs: whitespace tokens, space-joined truncation."""

    separator = "\n"

    def token_count(self, text: str) -> int:
        return len(text.split())

    def truncate_to(self, text: str, max_tokens: int) -> str:
        return " ".join(text.split()[:max_tokens])


def _split_qa_input(input_text: str, separator: str) -> tuple[str, str]:
    question, _, context = input_text.partition(separator)
    return question, context


# -- QA backends --


class MappedQABackend(WhitespaceTokens):
    """Answers from a fixed (question, context) -> answer map."""

    def __init__(self, mapping: Mapping[tuple[str, str], str], default: str | None = None):
        self.mapping = dict(mapping)
        self.default = default

    def answer(self, input_text: str) -> str:
        key = _split_qa_input(input_text, self.separator)
        if key in self.mapping:
            return self.mapping[key]
        if self.default is not None:
            return self.default
        raise LookupError(f"no stub answer configured for question {key[0]!r}")


class GoldEchoQABackend(WhitespaceTokens):
    """Echoes the gold answer of whichever instance owns the context.

    The map is keyed on the exact context string, so keep contexts inside
    the runner's input window or the truncated lookup will fail.
    """

    def __init__(self, instances: Sequence[QGInstance]):
        self.by_context = {inst.context: inst.gold_answer.text for inst in instances}

    def answer(self, input_text: str) -> str:
        _, context = _split_qa_input(input_text, self.separator)
        if context not in self.by_context:
            raise LookupError("context not found in gold-echo map (was it truncated?)")
        return self.by_context[context]


class HashedSpanQABackend(WhitespaceTokens):
    """Returns a context window chosen by a stable hash of the full input.

    The predicted answer varies with the question text, which gives the
    composed metric a meaningful spread on synthetic data while staying a
    pure function of (inputs, seed).
    """

    def __init__(self, window: int = 3, seed: int = 0):
        self.window = max(1, window)
        self.seed = seed

    def answer(self, input_text: str) -> str:
        question, context = _split_qa_input(input_text, self.separator)
        tokens = context.split()
        if not tokens:
            return ""
        positions = max(1, len(tokens) - self.window + 1)
        start = derive_seed(self.seed, question, context) % positions
        return " ".join(tokens[start : start + self.window])


# -- span scorer backends --


class LexicalOverlapScorerBackend:
    """Raw score = 1 + 4 * tokenF1(gold, predicted), a hand-checkable oracle.

    Parses the marker-delimited input the runtime assembles, so it also
    exercises the exact template wiring.
    """

    def score(self, input_text: str) -> float:
        body = input_text.removeprefix("[CLS] ")
        _, _, rest = body.partition(" [q] ")
        gold, _, rest = rest.partition(" [r] ")
        predicted, _, _ = rest.partition(" [c] ")
        return 1.0 + 4.0 * token_f1(gold, predicted)


class ConstantScorerBackend:
    """Returns a fixed raw value; used to exercise clamping."""

    def __init__(self, raw: float):
        self.raw = raw

    def score(self, input_text: str) -> float:
        return self.raw


# -- generator backend --

_QUESTION_TEMPLATES = (
    "what is {}?",
    "who mentioned {}?",
    "where does {} appear?",
    "why is {} important?",
    "how does {} relate to the passage?",
    "when was {} involved?",
)


class StubGeneratorBackend:
    """Seeded synthetic question bags with pseudo-random perplexities.

    Output is a pure function of (answer, context, sampling, seed); two
    different seeds give different bags for the same inputs.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def generate(
        self, answer: str, context: str, sampling: SamplingConfig
    ) -> list[tuple[str, float]]:
        rng = np.random.default_rng(
            derive_seed(
                self.seed,
                answer,
                context,
                sampling.temperature,
                sampling.top_p,
                sampling.num_candidates,
            )
        )
        words = [w.strip(_PUNCT).lower() for w in context.split()]
        words = [w for w in words if len(w) >= 4] or [w.strip(_PUNCT).lower() for w in answer.split()] or ["this"]
        bag = []
        for _ in range(sampling.num_candidates):
            template = _QUESTION_TEMPLATES[rng.integers(len(_QUESTION_TEMPLATES))]
            topic = words[rng.integers(len(words))]
            ppl = round(float(rng.uniform(1.5, 80.0)), 4)
            bag.append((template.format(topic), ppl))
        return bag


# -- NER backend --

DEFAULT_NER_LEXICON = {
    "France": "GPE",
    "Germany": "GPE",
    "Italy": "GPE",
    "Prussia": "GPE",
    "Sweden": "GPE",
    "Norway": "GPE",
    "Paris": "GPE",
    "Berlin": "GPE",
    "Orange County": "GPE",
    "Amazon River": "LOC",
    "Joseph Haas": "PERSON",
    "Ondemar Dias": "PERSON",
    "Alceu Ranzi": "PERSON",
    "Marie Curie": "PERSON",
    "Isaac Newton": "PERSON",
    "1929": "DATE",
    "1977": "DATE",
}


class LexiconNerBackend:
    """Marks every lexicon surface found in the text, longest surface first."""

    def __init__(self, lexicon: Mapping[str, str] | None = None):
        self.lexicon = dict(lexicon) if lexicon is not None else dict(DEFAULT_NER_LEXICON)

    def entities(self, text: str) -> list[tuple[str, str, int]]:
        taken: list[tuple[int, int]] = []
        found: list[tuple[str, str, int]] = []
        for surface in sorted(self.lexicon, key=len, reverse=True):
            etype = self.lexicon[surface]
            start = 0
            while True:
                idx = text.find(surface, start)
                if idx < 0:
                    break
                end = idx + len(surface)
                boundary_ok = (idx == 0 or not text[idx - 1].isalnum()) and (
                    end == len(text) or not text[end].isalnum()
                )
                overlaps = any(idx < t_end and end > t_start for t_start, t_end in taken)
                if boundary_ok and not overlaps:
                    taken.append((idx, end))
                    found.append((surface, etype, idx))
                start = idx + 1
        found.sort(key=lambda ent: ent[2])
        return found


# -- translation and paraphrase backends --

DEFAULT_SYNONYMS = {
    "developing": "expanding",
    "develop": "expand",
    "big": "large",
    "small": "little",
    "fast": "quick",
    "buy": "purchase",
    "bought": "purchased",
    "begin": "start",
    "began": "started",
    "help": "assist",
    "helped": "assisted",
    "show": "display",
    "showed": "displayed",
    "choose": "select",
    "chose": "selected",
    "build": "construct",
    "built": "constructed",
    "famous": "renowned",
    "important": "significant",
    "discover": "uncover",
}


def _substitute_tokens(text: str, table: Mapping[str, str]) -> str:
    out = []
    for token in text.split():
        lead, core, trail = split_token(token)
        replacement = table.get(core.lower())
        if replacement is not None:
            core = match_case(core, replacement)
        out.append(f"{lead}{core}{trail}")
    return " ".join(out)


class IdentityTranslateBackend:
    """Returns the input unchanged in every direction; exercises skip paths."""

    def translate(self, text: str, src: str, tgt: str) -> str:
        return text


class SynonymTranslateBackend:
    """Mock round-trip translation: the pass back into English substitutes synonyms."""

    def __init__(self, table: Mapping[str, str] | None = None):
        self.table = dict(table) if table is not None else dict(DEFAULT_SYNONYMS)

    def translate(self, text: str, src: str, tgt: str) -> str:
        if tgt == "en":
            return _substitute_tokens(text, self.table)
        return text


class SynonymParaphraseBackend:
    """Table-driven paraphraser; identity when no table entry applies."""

    def __init__(self, table: Mapping[str, str] | None = None):
        self.table = dict(table) if table is not None else dict(DEFAULT_SYNONYMS)

    def paraphrase(self, question: str) -> str:
        return _substitute_tokens(question, self.table)


# -- factory registrations --


def _seed_of(options: dict, env: dict) -> int:
    value = options.get("seed", env.get("seed"))
    return int(value) if value is not None else 0


def _qa_handle(name: str, backend, options: dict) -> QARunnerHandle:
    return QARunnerHandle(
        name=name,
        backend=backend,
        max_input_length=int(options.get("max_input_length", 1024)),
        concurrency_safe=True,
    )


def _make_gold_echo(options: dict, env: dict) -> QARunnerHandle:
    instances = env.get("instances") or options.get("instances") or ()
    return _qa_handle("stub-gold-echo-v1", GoldEchoQABackend(instances), options)


def _make_mapped_qa(options: dict, env: dict) -> QARunnerHandle:
    mapping = {(q, c): a for q, c, a in options.get("mapping", ())}
    return _qa_handle("stub-mapped-v1", MappedQABackend(mapping, options.get("default")), options)


def _make_hashed_span(options: dict, env: dict) -> QARunnerHandle:
    backend = HashedSpanQABackend(
        window=int(options.get("window", 3)), seed=_seed_of(options, env)
    )
    return _qa_handle(f"stub-hashed-span-v1-s{backend.seed}", backend, options)


def _make_overlap_scorer(options: dict, env: dict) -> SpanScorerHandle:
    return SpanScorerHandle(
        name="stub-lexical-overlap-v1", backend=LexicalOverlapScorerBackend(), concurrency_safe=True
    )


def _make_constant_scorer(options: dict, env: dict) -> SpanScorerHandle:
    return SpanScorerHandle(
        name="stub-constant-v1",
        backend=ConstantScorerBackend(float(options.get("raw", 3.0))),
        concurrency_safe=True,
    )


def _make_generator(options: dict, env: dict) -> GeneratorHandle:
    seed = _seed_of(options, env)
    sampling = SamplingConfig(
        temperature=float(options.get("temperature", 1.0)),
        top_p=float(options.get("top_p", 0.94)),
        num_candidates=int(options.get("num_candidates", 1)),
    )
    return GeneratorHandle(
        name=f"stub-generator-v1-s{seed}",
        backend=StubGeneratorBackend(seed=seed),
        sampling=sampling,
        concurrency_safe=True,
    )


def _make_lexicon_ner(options: dict, env: dict) -> NerRunnerHandle:
    return NerRunnerHandle(
        name="stub-lexicon-ner-v1", backend=LexiconNerBackend(options.get("lexicon"))
    )


def _make_identity_translate(options: dict, env: dict) -> TranslatorHandle:
    return TranslatorHandle(name="stub-identity-translate-v1", backend=IdentityTranslateBackend())


def _make_synonym_translate(options: dict, env: dict) -> TranslatorHandle:
    return TranslatorHandle(
        name="stub-synonym-translate-v1", backend=SynonymTranslateBackend(options.get("table"))
    )


def _make_synonym_paraphrase(options: dict, env: dict) -> ParaphraserHandle:
    return ParaphraserHandle(
        name="stub-synonym-paraphrase-v1", backend=SynonymParaphraseBackend(options.get("table"))
    )


register_backend("qa", "stub-gold-echo", _make_gold_echo)
register_backend("qa", "stub-mapped", _make_mapped_qa)
register_backend("qa", "stub-hashed-span", _make_hashed_span)
register_backend("scorer", "stub-lexical-overlap", _make_overlap_scorer)
register_backend("scorer", "stub-constant", _make_constant_scorer)
register_backend("generator", "stub-generator", _make_generator)
register_backend("ner", "stub-lexicon-ner", _make_lexicon_ner)
register_backend("translator", "stub-identity-translate", _make_identity_translate)
register_backend("translator", "stub-synonym-translate", _make_synonym_translate)
register_backend("paraphraser", "stub-synonym-paraphrase", _make_synonym_paraphrase)
