import math
import random

import pytest

from rquge.baselines import (
    BLEU_EPSILON,
    MetricValue,
    bleu4,
    compute_baseline,
    external_metric,
    qa_f1_em,
    register_external_metric,
    rouge,
    tokenize,
    unregister_external_metric,
)
from rquge.errors import ConfigurationError, ReferenceRequiredError


# -- independent brute-force oracles, written from the stated definitions --


def oracle_tokenize(text: str) -> list[str]:
    # separate punctuation with spaces, then lowercase whitespace split
    out = []
    for ch in text:
        if not (ch.isalnum() or ch == "_" or ch.isspace()):
            out.append(f" {ch} ")
        else:
            out.append(ch)
    return "".join(out).lower().split()


def oracle_bleu4(candidate: str, reference: str) -> float:
    cand = oracle_tokenize(candidate)
    ref = oracle_tokenize(reference)
    if not cand:
        return 0.0
    precisions = []
    for n in range(1, 5):
        cand_ngrams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        ref_ngrams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
        clipped = 0
        for gram in set(cand_ngrams):
            clipped += min(cand_ngrams.count(gram), ref_ngrams.count(gram))
        if cand_ngrams and clipped:
            precisions.append(clipped / len(cand_ngrams))
        else:
            precisions.append(BLEU_EPSILON)
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return brevity * math.exp(sum(math.log(p) for p in precisions) / 4)


def oracle_lcs(a: list[str], b: list[str]) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def oracle_rouge_l(candidate: str, reference: str) -> float:
    cand = oracle_tokenize(candidate)
    ref = oracle_tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = oracle_lcs(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def random_sentence(rng: random.Random, vocab: list[str]) -> str:
    words = [rng.choice(vocab) for _ in range(rng.randrange(1, 13))]
    if rng.random() < 0.4:
        words[-1] += rng.choice(".?!,")
    return " ".join(words)


# -- bleu4 --


def test_bleu4_identity_is_one():
    for text in ("the cat sat on the mat", "one two three four", "a b c d e f g"):
        assert bleu4(text, text) == pytest.approx(1.0, abs=1e-12)


def test_bleu4_disjoint_is_near_zero():
    value = bleu4("alpha beta gamma delta", "one two three four")
    assert value < 1e-6


def test_bleu4_derived_example_matches_oracle():
    candidate = "the cat sat on the mat"
    reference = "the cat is on the mat"
    assert bleu4(candidate, reference) == pytest.approx(oracle_bleu4(candidate, reference), abs=1e-12)


def test_bleu4_requires_reference():
    with pytest.raises(ReferenceRequiredError):
        bleu4("something", None)


def test_bleu4_empty_candidate_warns_and_scores_zero():
    with pytest.warns(UserWarning):
        assert bleu4("", "a reference") == 0.0


def test_bleu4_oracle_equivalence_on_random_pairs():
    rng = random.Random(101)
    vocab = ["the", "cat", "sat", "on", "mat", "dog", "ran", "fast", "big", "red"]
    for _ in range(200):
        candidate = random_sentence(rng, vocab)
        reference = random_sentence(rng, vocab)
        assert bleu4(candidate, reference) == pytest.approx(
            oracle_bleu4(candidate, reference), abs=1e-12
        )


# -- rouge --


def test_rouge_identity_and_disjoint():
    assert rouge("a b c", "a b c", "rouge1") == 1.0
    assert rouge("a b c", "a b c", "rougeL") == 1.0
    assert rouge("a b c", "x y z", "rouge1") == 0.0
    assert rouge("a b c", "x y z", "rougeL") == 0.0


def test_rouge_l_hand_case():
    # LCS("a b c d", "a c b d") = 3 -> precision = recall = 3/4 -> F1 = 0.75
    assert rouge("a b c d", "a c b d", "rougeL") == pytest.approx(0.75, abs=1e-12)


def test_rouge_oracle_equivalence_on_random_pairs():
    rng = random.Random(55)
    vocab = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"]
    for _ in range(200):
        candidate = random_sentence(rng, vocab)
        reference = random_sentence(rng, vocab)
        assert rouge(candidate, reference, "rougeL") == pytest.approx(
            oracle_rouge_l(candidate, reference), abs=1e-12
        )


def test_rouge1_symmetric_for_equal_length_multisets():
    rng = random.Random(77)
    vocab = ["a", "b", "c", "d"]
    for _ in range(100):
        length = rng.randrange(1, 8)
        x = " ".join(rng.choice(vocab) for _ in range(length))
        y = " ".join(rng.choice(vocab) for _ in range(length))
        assert rouge(x, y, "rouge1") == pytest.approx(rouge(y, x, "rouge1"), abs=1e-12)


def test_rouge_unknown_variant():
    with pytest.raises(ValueError):
        rouge("a", "a", "rouge2")


def test_baseline_values_in_unit_interval():
    rng = random.Random(13)
    vocab = ["the", "red", "fox", "ran", "far"]
    for _ in range(100):
        candidate = random_sentence(rng, vocab)
        reference = random_sentence(rng, vocab)
        for name in ("bleu4", "rouge1", "rougeL"):
            assert 0.0 <= compute_baseline(name, candidate, reference) <= 1.0


# -- qa_f1_em --


def test_qa_f1_em_exact():
    assert qa_f1_em("France", "France") == (1.0, 1)


def test_qa_f1_em_article_stripping():
    assert qa_f1_em("the cat", "cat") == (1.0, 1)


def test_qa_f1_em_disjoint():
    assert qa_f1_em("dog", "cat") == (0.0, 0)


def test_qa_f1_em_punctuation_and_case():
    assert qa_f1_em("The Cat!", "cat") == (1.0, 1)


def test_em_one_implies_f1_one():
    rng = random.Random(3)
    vocab = ["a", "an", "the", "cat", "dog", "ran", "sat"]
    for _ in range(200):
        predicted = random_sentence(rng, vocab)
        gold = random_sentence(rng, vocab)
        f1, em = qa_f1_em(predicted, gold)
        assert 0.0 <= f1 <= 1.0
        if em == 1:
            assert f1 == 1.0


# -- external adapters --


def test_external_adapter_round_trip():
    register_external_metric("stub-half", lambda candidate, **kw: 0.5)
    try:
        value = external_metric("stub-half", "anything")
        assert value == MetricValue(metric_name="stub-half", value=0.5, higher_is_better=True)
    finally:
        unregister_external_metric("stub-half")


def test_external_adapter_receives_fields():
    def lens(candidate, reference=None, context=None, answer=None):
        return len(candidate) / 100

    register_external_metric("length", lens)
    try:
        assert external_metric("length", "abcde").value == pytest.approx(0.05)
    finally:
        unregister_external_metric("length")


def test_unregistered_adapter_is_configuration_error():
    with pytest.raises(ConfigurationError):
        external_metric("definitely-not-registered", "x")


def test_tokenize_separates_punctuation():
    assert tokenize("Who is Paris' mayor?") == ["who", "is", "paris", "'", "mayor", "?"]
