"""Build an adversarial subset and measure a metric's robustness with ROC-AUC.

Positives are paraphrases of reference questions (round-trip translation or
a paraphrase model); negatives corrupt the meaning by inserting a negation,
reversing pronoun gender, or swapping an entity for a same-typed one from
the context. A robust metric scores positives above negatives; the AUC is
the probability that it does so for a random positive/negative pair.
"""

from rquge.adversarial import auc_report, build_adversarial_set
from rquge.core import AnswerSpan, QGInstance
from rquge.metric import rquge_score
from rquge.runtime import (
    NerRunnerHandle,
    ParaphraserHandle,
    QARunnerHandle,
    SpanScorerHandle,
    TranslatorHandle,
)
from rquge.stubs import (
    GoldEchoQABackend,
    LexicalOverlapScorerBackend,
    LexiconNerBackend,
    SynonymParaphraseBackend,
    SynonymTranslateBackend,
)

contexts = [
    ("France", "The congress of 1929 was developing plans while France and Prussia negotiated."),
    ("Prussia", "Reports say the plague was accepted as given in Prussia before Italy and Sweden."),
    ("Italy", "Joseph Haas is given credit for the famous census of Italy and Sweden."),
]
references = [
    "Which country is developing its famous plans under his rule?",
    "Where was the plague given its name in her records?",
    "Who is given credit for the famous census in Italy?",
]

instances = []
for i, ((gold, context), reference) in enumerate(zip(contexts * 4, references * 4)):
    instances.append(
        QGInstance(
            id=f"adv-{i:02d}",
            context=context,
            gold_answer=AnswerSpan(text=gold, char_start=context.find(gold)),
            reference_question=reference,
        )
    )

built = build_adversarial_set(
    instances,
    {"paraphrase_model": 6, "negation": 4, "gender_reverse": 1, "entity_swap": 1},
    seed=3,
    ner=NerRunnerHandle(name="ner", backend=LexiconNerBackend()),
    translator=TranslatorHandle(name="translate", backend=SynonymTranslateBackend()),
    paraphraser=ParaphraserHandle(name="para", backend=SynonymParaphraseBackend()),
)
print(f"built {len(built)} records ({len(built.skips)} skips)")
for record in list(built)[:4]:
    print(f"  [{record.kind}:{record.label}] {record.corrupted!r}  ({record.edit_audit})")

# Score every corrupted question with the metric itself, then ask how well
# those scores separate positives from negatives.
qa = QARunnerHandle(name="qa", backend=GoldEchoQABackend(instances), concurrency_safe=True)
scorer = SpanScorerHandle(name="scorer", backend=LexicalOverlapScorerBackend(), concurrency_safe=True)
by_id = {inst.id: inst for inst in instances}
scores = {
    record: rquge_score(by_id[record.instance_id], record.corrupted, qa, scorer).kappa
    for record in built.records
}

report = auc_report(built.records, scores)
print(f"\ntotal AUC: {report['total']:.3f}")
for kind, value in report["per_kind"].items():
    print(f"  vs {kind}: {value:.3f}")
print(f"(positive pool: {report['positive_pool']})")
print("\nNote: the gold-echo stub answers every question with the gold span,")
print("so corrupted questions still fetch good answers and the AUC sits near")
print("chance. Plug in real backends to see genuine separation.")
