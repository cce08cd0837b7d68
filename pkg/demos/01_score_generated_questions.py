"""Score candidate questions without a reference question.

A candidate question is rated by answering it against its context with a QA
runner and scoring the predicted answer against the gold answer span on a
1-5 scale. Everything below runs on the deterministic offline stubs, so the
numbers are reproducible; swap in registered model backends for real scores.
"""

from rquge.core import AnswerSpan, QGInstance
from rquge.metric import normalize, rquge_score
from rquge.runtime import QARunnerHandle, SpanScorerHandle
from rquge.stubs import LexicalOverlapScorerBackend, MappedQABackend

context = (
    "Ondemar Dias is accredited with first discovering the geoglyphs in 1977 "
    "and Alceu Ranzi with furthering their discovery after flying over Acre."
)
instance = QGInstance(
    id="demo-1",
    context=context,
    gold_answer=AnswerSpan(text="Ondemar Dias", char_start=0),
)

# Three candidates of very different quality. The mapped QA stub plays the
# role of the QA model: a good question retrieves the right span, a vague or
# corrupted one does not.
candidates = {
    "Who first discovered the geoglyphs?": "Ondemar Dias",
    "Who flew over Acre?": "Alceu Ranzi",
    "Who is not given credit for discovering geoglyphs?": "Alceu Ranzi",
}

qa = QARunnerHandle(
    name="demo-qa",
    backend=MappedQABackend({(q, context): a for q, a in candidates.items()}),
    concurrency_safe=True,
)
scorer = SpanScorerHandle(
    name="demo-scorer", backend=LexicalOverlapScorerBackend(), concurrency_safe=True
)

print(f"context: {context[:60]}...")
print(f"gold answer: {instance.gold_answer.text}\n")
for question in candidates:
    score = rquge_score(instance, question, qa, scorer)
    print(
        f"kappa={score.kappa:.2f}  normalized={normalize(score):.3f}  "
        f"predicted={score.predicted_answer!r}  <- {question!r}"
    )

# The score never looks at a reference question: deleting it changes nothing.
print("\nreference-free: the instance above carries no reference question at all.")
