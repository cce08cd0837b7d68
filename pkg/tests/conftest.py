import pytest

from rquge.core import AnswerSpan, CandidateQuestion, QGInstance
from rquge.runtime import QARunnerHandle, SpanScorerHandle
from rquge.stubs import GoldEchoQABackend, HashedSpanQABackend, LexicalOverlapScorerBackend


def make_instance(
    idx: int,
    context: str = "Paris is the capital of France and sits on the Seine river.",
    gold: str = "France",
    reference: str | None = "Which country is Paris the capital of?",
    candidates: tuple = (),
) -> QGInstance:
    start = context.find(gold)
    return QGInstance(
        id=f"inst-{idx:03d}",
        context=context,
        gold_answer=AnswerSpan(text=gold, char_start=start if start >= 0 else None),
        reference_question=reference,
        candidates=candidates,
    )


@pytest.fixture
def tiny_instances() -> list[QGInstance]:
    return [
        make_instance(0),
        make_instance(
            1,
            context="The plague killed about 300,000 in Prussia and many more in Italy.",
            gold="Prussia",
            reference="Where did the plague kill about 300,000?",
            candidates=(
                CandidateQuestion("Where did the plague kill about 300,000 people?", ppl=3.0),
                CandidateQuestion("What is a plague?", ppl=9.5),
            ),
        ),
        make_instance(
            2,
            context="Marie Curie discovered polonium in 1898 while working in Paris.",
            gold="polonium",
            reference="What did Marie Curie discover in 1898?",
        ),
    ]


@pytest.fixture
def gold_echo_qa(tiny_instances) -> QARunnerHandle:
    return QARunnerHandle(
        name="test-gold-echo", backend=GoldEchoQABackend(tiny_instances), concurrency_safe=True
    )


@pytest.fixture
def overlap_scorer() -> SpanScorerHandle:
    return SpanScorerHandle(
        name="test-overlap-scorer", backend=LexicalOverlapScorerBackend(), concurrency_safe=True
    )


@pytest.fixture
def hashed_qa() -> QARunnerHandle:
    return QARunnerHandle(
        name="test-hashed-qa", backend=HashedSpanQABackend(window=3, seed=5), concurrency_safe=True
    )
