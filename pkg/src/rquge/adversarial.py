"""Adversarial corruption of reference questions and robustness scoring.

Positives are paraphrases of the reference (round-trip translation or a
paraphrase model); negatives are meaning-breaking edits: negation, gender
reversal on pronouns, and entity swaps against the context. Every corrupter
touches only the tokens it targets and reports an audit of the edit, and an
inapplicable corruption yields a first-class skip with a reason rather than
an error, so per-kind yield stays auditable.

A metric's robustness is the ROC-AUC of its scores as a positive/negative
classifier over the built subset, computed by the pairwise Mann-Whitney
formulation with half credit for ties.
"""

import random
from dataclasses import dataclass
from typing import Iterator, Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .cache import DiskCache
from .core import QGInstance
from .errors import ConfigurationError, UndefinedStatisticError, ValidationError
from .metaeval import average_ranks
from .runtime import NerRunnerHandle, ParaphraserHandle, TranslatorHandle, ner_entities
from .runtime import paraphrase as run_paraphrase
from .runtime import translate as run_translate
from .util import derive_seed, match_case, split_token

CORRUPTION_KINDS = (
    "paraphrase_backtranslate",
    "paraphrase_model",
    "negation",
    "gender_reverse",
    "entity_swap",
)
POSITIVE_KINDS = ("paraphrase_backtranslate", "paraphrase_model")
NEGATIVE_KINDS = ("negation", "gender_reverse", "entity_swap")

#: Default per-kind targets: 1000/150/100 negatives plus an equal number of
#: positives split evenly between the two paraphrase routes.
DEFAULT_MIX = {
    "paraphrase_backtranslate": 625,
    "paraphrase_model": 625,
    "negation": 1000,
    "gender_reverse": 150,
    "entity_swap": 100,
}

INTERMEDIATE_LANGUAGES = ("zh", "fr")

AUXILIARIES = frozenset(
    "am is are was were be been being do does did has have had "
    "can could may might must shall should will would".split()
)

#: Involutive pronoun map; applied in both directions.
GENDER_PRONOUN_MAP = {
    "he": "she",
    "she": "he",
    "him": "her",
    "her": "him",
    "his": "hers",
    "hers": "his",
    "himself": "herself",
    "herself": "himself",
}

#: Fixed verb antonym table used when no richer lexicon is plugged in.
DEFAULT_ANTONYMS = {
    "given": "taken",
    "give": "take",
    "increase": "decrease",
    "increases": "decreases",
    "increased": "decreased",
    "rise": "fall",
    "rises": "falls",
    "won": "lost",
    "win": "lose",
    "open": "close",
    "opened": "closed",
    "start": "stop",
    "started": "stopped",
    "accept": "reject",
    "accepted": "rejected",
    "include": "exclude",
    "included": "excluded",
    "improve": "worsen",
    "improved": "worsened",
    "expand": "contract",
}


@runtime_checkable
class AntonymLexicon(Protocol):
    def antonyms(self, word: str) -> Sequence[str]: ...


def _lookup_antonyms(lexicon, word: str) -> list[str]:
    if lexicon is None:
        lexicon = DEFAULT_ANTONYMS
    if isinstance(lexicon, AntonymLexicon):
        return list(lexicon.antonyms(word))
    value = lexicon.get(word)
    if value is None:
        return []
    return [value] if isinstance(value, str) else list(value)


@dataclass(frozen=True, slots=True)
class CorruptionRecord:
    """One corrupted question with its binary acceptability label and edit audit."""

    instance_id: str
    original: str
    corrupted: str
    kind: str
    label: int
    edit_audit: str

    def __post_init__(self) -> None:
        if self.kind not in CORRUPTION_KINDS:
            raise ValidationError(f"kind must be one of {CORRUPTION_KINDS}, got {self.kind!r}")
        expected_label = 1 if self.kind in POSITIVE_KINDS else 0
        if self.label != expected_label:
            raise ValidationError(f"kind {self.kind!r} requires label {expected_label}")
        if self.corrupted == self.original:
            raise ValidationError("corrupted question must differ from the original")


@dataclass(frozen=True, slots=True)
class CorruptionSkip:
    """A corruption that could not be applied, with the reason why."""

    instance_id: str
    kind: str
    reason: str


def _core(token: str) -> str:
    return split_token(token)[1].lower()


def corrupt_negate(
    question: str,
    rng_seed: int,
    *,
    antonyms: Mapping[str, str] | AntonymLexicon | None = None,
    instance_id: str = "",
) -> CorruptionRecord | CorruptionSkip:
    """Negate a question by inserting "not" after its auxiliary or swapping in an antonym.

    A seeded coin picks between the two edits when both apply. The insertion
    site is the first auxiliary or modal verb; the antonym edit replaces the
    first non-auxiliary token the lexicon knows. Skips when neither applies.
    """
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    tokens = question.split()
    cores = [_core(t) for t in tokens]

    aux_index = None
    for i, core in enumerate(cores):
        if core in AUXILIARIES:
            if i + 1 < len(cores) and cores[i + 1] == "not":
                continue  # already negated here
            aux_index = i
            break

    antonym_site = None
    for i, core in enumerate(cores):
        if core in AUXILIARIES or not core:
            continue
        options = _lookup_antonyms(antonyms, core)
        if options:
            antonym_site = (i, options)
            break

    if aux_index is None and antonym_site is None:
        return CorruptionSkip(instance_id, "negation", "no auxiliary verb and no antonym available")

    rng = random.Random(rng_seed)
    use_insertion = rng.random() < 0.5
    if use_insertion and aux_index is None:
        use_insertion = False
    elif not use_insertion and antonym_site is None:
        use_insertion = True

    if use_insertion:
        out = tokens[: aux_index + 1] + ["not"] + tokens[aux_index + 1 :]
        audit = f"inserted 'not' after token {aux_index} ({tokens[aux_index]!r})"
    else:
        index, options = antonym_site
        replacement = options[rng.randrange(len(options))]
        lead, core, trail = split_token(tokens[index])
        out = list(tokens)
        out[index] = f"{lead}{match_case(core, replacement)}{trail}"
        audit = f"replaced token {index} ({tokens[index]!r}) with antonym {replacement!r}"
    return CorruptionRecord(
        instance_id=instance_id,
        original=question,
        corrupted=" ".join(out),
        kind="negation",
        label=0,
        edit_audit=audit,
    )


def corrupt_gender(
    question: str, rng_seed: int = 0, *, instance_id: str = ""
) -> CorruptionRecord | CorruptionSkip:
    """Replace every gendered pronoun with its opposite via the fixed involutive map.

    Only pronoun tokens change; the seed is accepted for interface
    uniformity but the edit itself is deterministic.
    """
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    tokens = question.split()
    out = []
    swaps = []
    for i, token in enumerate(tokens):
        lead, core, trail = split_token(token)
        mapped = GENDER_PRONOUN_MAP.get(core.lower())
        if mapped is None:
            out.append(token)
            continue
        replacement = match_case(core, mapped)
        out.append(f"{lead}{replacement}{trail}")
        swaps.append(f"{core}->{replacement}@{i}")
    if not swaps:
        return CorruptionSkip(instance_id, "gender_reverse", "no gendered pronoun found")
    return CorruptionRecord(
        instance_id=instance_id,
        original=question,
        corrupted=" ".join(out),
        kind="gender_reverse",
        label=0,
        edit_audit="swapped pronouns: " + ", ".join(swaps),
    )


def corrupt_entity_swap(
    question: str,
    context: str,
    ner: NerRunnerHandle,
    rng_seed: int,
    *,
    instance_id: str = "",
    cache: DiskCache | None = None,
) -> CorruptionRecord | CorruptionSkip:
    """Swap a random question entity for a same-typed, different-surfaced context entity."""
    if not context or not context.strip():
        raise ValueError("context must be nonempty")
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    question_entities = ner_entities(ner, question, cache=cache)
    context_entities = ner_entities(ner, context, cache=cache)
    swappable = []
    for q_ent in question_entities:
        partners = [
            c_ent
            for c_ent in context_entities
            if c_ent.type == q_ent.type and c_ent.surface != q_ent.surface
        ]
        if partners:
            swappable.append((q_ent, partners))
    if not swappable:
        return CorruptionSkip(
            instance_id, "entity_swap", "no same-typed replacement entity in the context"
        )
    rng = random.Random(rng_seed)
    q_ent, partners = swappable[rng.randrange(len(swappable))]
    replacement = partners[rng.randrange(len(partners))]
    corrupted = (
        question[: q_ent.char_start]
        + replacement.surface
        + question[q_ent.char_start + len(q_ent.surface) :]
    )
    return CorruptionRecord(
        instance_id=instance_id,
        original=question,
        corrupted=corrupted,
        kind="entity_swap",
        label=0,
        edit_audit=(
            f"replaced entity {q_ent.surface!r} [{q_ent.type}] with context entity "
            f"{replacement.surface!r}"
        ),
    )


def paraphrase_positive(
    question: str,
    method: str,
    *,
    translator: TranslatorHandle | None = None,
    paraphraser: ParaphraserHandle | None = None,
    rng_seed: int = 0,
    instance_id: str = "",
    intermediate_languages: Sequence[str] = INTERMEDIATE_LANGUAGES,
    cache: DiskCache | None = None,
) -> CorruptionRecord | CorruptionSkip:
    """Produce a positive (label 1) paraphrase of the reference question.

    ``backtranslate`` routes through a seeded choice of intermediate language
    and back; ``paraphraser`` calls the paraphrase runner directly. An output
    identical to the input is retried once (the other language, or a second
    model call), then skipped.
    """
    if not question or not question.strip():
        raise ValueError("question must be nonempty")
    rng = random.Random(rng_seed)
    if method == "backtranslate":
        if translator is None:
            raise ConfigurationError("backtranslate paraphrasing needs a translator runner")
        languages = list(intermediate_languages)
        first = languages[rng.randrange(len(languages))]
        attempts = [first] + [lang for lang in languages if lang != first][:1]
        kind = "paraphrase_backtranslate"
        rewritten = question
        used = first
        for lang in attempts:
            intermediate = run_translate(translator, question, "en", lang, cache=cache)
            rewritten = run_translate(translator, intermediate, lang, "en", cache=cache)
            used = lang
            if rewritten != question:
                break
        audit = f"round-trip translated via {used!r}"
    elif method == "paraphraser":
        if paraphraser is None:
            raise ConfigurationError("model paraphrasing needs a paraphraser runner")
        kind = "paraphrase_model"
        rewritten = run_paraphrase(paraphraser, question, cache=cache)
        if rewritten == question:
            rewritten = run_paraphrase(paraphraser, question, cache=cache)
        audit = "paraphrase model rewrite"
    else:
        raise ValueError(f"method must be 'backtranslate' or 'paraphraser', got {method!r}")
    if rewritten == question:
        return CorruptionSkip(instance_id, kind, "paraphrase identical to original after retry")
    return CorruptionRecord(
        instance_id=instance_id,
        original=question,
        corrupted=rewritten,
        kind=kind,
        label=1,
        edit_audit=audit,
    )


@dataclass(frozen=True, slots=True)
class AdversarialSet:
    """Built corruption records plus the skip report; iterates as the records."""

    records: tuple[CorruptionRecord, ...]
    skips: tuple[CorruptionSkip, ...]
    requested: dict[str, int]
    produced: dict[str, int]

    def __iter__(self) -> Iterator[CorruptionRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index):
        return self.records[index]


def build_adversarial_set(
    instances: Sequence[QGInstance],
    target_counts: Mapping[str, int] | None = None,
    seed: int = 0,
    *,
    ner: NerRunnerHandle | None = None,
    translator: TranslatorHandle | None = None,
    paraphraser: ParaphraserHandle | None = None,
    antonyms: Mapping[str, str] | AntonymLexicon | None = None,
    cache: DiskCache | None = None,
) -> AdversarialSet:
    """Corrupt reference questions until each kind reaches its target count.

    A pure function of (instances, counts, seed): instances are visited in a
    per-kind seeded order with per-record derived seeds. When skips exhaust
    the pool before a target is met the set is returned partial, with every
    skip on the report.
    """
    counts = dict(target_counts) if target_counts is not None else dict(DEFAULT_MIX)
    for kind, count in counts.items():
        if kind not in CORRUPTION_KINDS:
            raise ValueError(f"unknown corruption kind {kind!r}")
        if count < 0:
            raise ValueError(f"target count for {kind!r} must be >= 0")
    if counts.get("entity_swap") and ner is None:
        raise ConfigurationError("entity_swap corruption needs a ner runner")
    if counts.get("paraphrase_backtranslate") and translator is None:
        raise ConfigurationError("backtranslate corruption needs a translator runner")
    if counts.get("paraphrase_model") and paraphraser is None:
        raise ConfigurationError("model paraphrase corruption needs a paraphraser runner")

    records: list[CorruptionRecord] = []
    skips: list[CorruptionSkip] = []
    produced: dict[str, int] = {kind: 0 for kind in counts}
    for kind in sorted(counts):
        target = counts[kind]
        if target == 0:
            continue
        order = list(instances)
        random.Random(derive_seed(seed, kind)).shuffle(order)
        for instance in order:
            if produced[kind] >= target:
                break
            if instance.reference_question is None:
                skips.append(CorruptionSkip(instance.id, kind, "instance has no reference question"))
                continue
            question = instance.reference_question
            record_seed = derive_seed(seed, kind, instance.id)
            if kind == "negation":
                outcome = corrupt_negate(
                    question, record_seed, antonyms=antonyms, instance_id=instance.id
                )
            elif kind == "gender_reverse":
                outcome = corrupt_gender(question, record_seed, instance_id=instance.id)
            elif kind == "entity_swap":
                outcome = corrupt_entity_swap(
                    question,
                    instance.context,
                    ner,
                    record_seed,
                    instance_id=instance.id,
                    cache=cache,
                )
            else:
                outcome = paraphrase_positive(
                    question,
                    "backtranslate" if kind == "paraphrase_backtranslate" else "paraphraser",
                    translator=translator,
                    paraphraser=paraphraser,
                    rng_seed=record_seed,
                    instance_id=instance.id,
                    cache=cache,
                )
            if isinstance(outcome, CorruptionSkip):
                skips.append(outcome)
            else:
                records.append(outcome)
                produced[kind] += 1
    return AdversarialSet(
        records=tuple(records),
        skips=tuple(skips),
        requested=counts,
        produced=produced,
    )


# -- robustness AUC --


def mann_whitney_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """P(random positive outscores random negative), half credit for ties.

    Computed from average ranks, which is algebraically the pairwise
    formulation without the quadratic loop.
    """
    score_arr = np.asarray(scores, dtype=float)
    label_arr = np.asarray(labels)
    if score_arr.size != label_arr.size or score_arr.size == 0:
        raise ValueError("scores and labels must be nonempty and of equal length")
    positive = label_arr == 1
    n_pos = int(positive.sum())
    n_neg = int(score_arr.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedStatisticError("AUC is undefined with only one class present")
    ranks = average_ranks(score_arr)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def robustness_auc(
    records: Sequence[CorruptionRecord], metric_scores: Mapping[CorruptionRecord, float]
) -> float:
    """Total ROC-AUC of a metric's scores over the adversarial subset."""
    missing = [r for r in records if r not in metric_scores]
    if missing:
        raise ValueError(
            f"{len(missing)} records have no metric score (first: {missing[0].instance_id!r})"
        )
    scores = [metric_scores[r] for r in records]
    labels = [r.label for r in records]
    return mann_whitney_auc(scores, labels)


def auc_report(
    records: Sequence[CorruptionRecord], metric_scores: Mapping[CorruptionRecord, float]
) -> dict:
    """Total AUC plus one column per negative kind.

    Per-kind columns share the full positive pool and restrict only the
    negatives, as noted in the report itself.
    """
    report: dict = {
        "total": robustness_auc(records, metric_scores),
        "per_kind": {},
        "positive_pool": "shared across kinds",
    }
    positives = [r for r in records if r.label == 1]
    for kind in NEGATIVE_KINDS:
        negatives = [r for r in records if r.kind == kind]
        if not negatives or not positives:
            continue
        subset = positives + negatives
        report["per_kind"][kind] = robustness_auc(subset, metric_scores)
    return report
