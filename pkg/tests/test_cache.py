import random


from rquge.cache import DiskCache
from rquge.core import AnswerSpan
from rquge.runtime import (
    GeneratorHandle,
    QARunnerHandle,
    SamplingConfig,
    SpanScorerHandle,
    cached,
    generate_candidates,
    qa_answer,
    span_score,
)
from rquge.stubs import HashedSpanQABackend, LexicalOverlapScorerBackend, StubGeneratorBackend


class CountingQA(HashedSpanQABackend):
    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.calls = 0

    def answer(self, input_text):
        self.calls += 1
        return super().answer(input_text)


class CountingScorer(LexicalOverlapScorerBackend):
    def __init__(self):
        self.calls = 0

    def score(self, input_text):
        self.calls += 1
        return super().score(input_text)


def test_second_identical_call_hits_cache(tmp_path):
    cache = DiskCache(tmp_path)
    backend = CountingQA(seed=1)
    handle = QARunnerHandle(name="qa-v1", backend=backend, concurrency_safe=True)
    first = qa_answer(handle, "who?", "alpha beta gamma delta", cache=cache)
    second = qa_answer(handle, "who?", "alpha beta gamma delta", cache=cache)
    assert backend.calls == 1
    assert first == second


def test_one_character_change_is_a_miss(tmp_path):
    cache = DiskCache(tmp_path)
    backend = CountingQA(seed=1)
    handle = QARunnerHandle(name="qa-v1", backend=backend, concurrency_safe=True)
    qa_answer(handle, "who?", "alpha beta gamma delta", cache=cache)
    qa_answer(handle, "who?", "alpha beta gamma delt", cache=cache)
    assert backend.calls == 2


def test_runner_name_partitions_the_cache(tmp_path):
    cache = DiskCache(tmp_path)
    b1, b2 = CountingQA(seed=1), CountingQA(seed=1)
    h1 = QARunnerHandle(name="qa-v1", backend=b1, concurrency_safe=True)
    h2 = QARunnerHandle(name="qa-v2", backend=b2, concurrency_safe=True)
    qa_answer(h1, "who?", "alpha beta gamma", cache=cache)
    qa_answer(h2, "who?", "alpha beta gamma", cache=cache)
    assert b1.calls == 1 and b2.calls == 1


def test_hundred_random_replays_hit_zero_backends(tmp_path):
    cache = DiskCache(tmp_path)
    rng = random.Random(5)
    qa_backend = CountingQA(seed=2)
    scorer_backend = CountingScorer()
    qa = QARunnerHandle(name="qa-v1", backend=qa_backend, concurrency_safe=True)
    scorer = SpanScorerHandle(name="sc-v1", backend=scorer_backend, concurrency_safe=True)

    calls = []
    for i in range(100):
        if rng.random() < 0.5:
            calls.append(("qa", f"question {rng.randrange(30)}?", f"context {rng.randrange(30)} words here"))
        else:
            calls.append(("score", f"q{rng.randrange(30)}?", f"gold {rng.randrange(9)}", f"pred {rng.randrange(9)}"))
    first_pass = []
    for call in calls:
        if call[0] == "qa":
            first_pass.append(qa_answer(qa, call[1], call[2], cache=cache).text)
        else:
            first_pass.append(span_score(scorer, call[1], call[2], call[3], "ctx", cache=cache))
    counts = (qa_backend.calls, scorer_backend.calls)

    second_pass = []
    for call in calls:
        if call[0] == "qa":
            second_pass.append(qa_answer(qa, call[1], call[2], cache=cache).text)
        else:
            second_pass.append(span_score(scorer, call[1], call[2], call[3], "ctx", cache=cache))
    assert (qa_backend.calls, scorer_backend.calls) == counts
    assert second_pass == first_pass


def test_cached_equals_uncached(tmp_path):
    cache = DiskCache(tmp_path)
    rng = random.Random(11)
    handle = QARunnerHandle(name="qa-v1", backend=HashedSpanQABackend(seed=3), concurrency_safe=True)
    scorer = SpanScorerHandle(name="sc-v1", backend=LexicalOverlapScorerBackend(), concurrency_safe=True)
    generator = GeneratorHandle(
        name="gen-v1", backend=StubGeneratorBackend(seed=3), sampling=SamplingConfig(num_candidates=3)
    )
    for _ in range(30):
        question = f"what about {rng.randrange(100)}?"
        context = " ".join(f"tok{rng.randrange(50)}" for _ in range(12))
        assert qa_answer(handle, question, context, cache=cache) == qa_answer(handle, question, context)
        assert span_score(scorer, question, "gold span", "gold span here", context, cache=cache) == span_score(
            scorer, question, "gold span", "gold span here", context
        )
        span = AnswerSpan(text="tok1")
        assert generate_candidates(generator, span, context, cache=cache) == generate_candidates(
            generator, span, context
        )


def test_corrupt_entry_is_discarded_and_recomputed(tmp_path, caplog):
    cache = DiskCache(tmp_path)
    backend = CountingQA(seed=1)
    handle = QARunnerHandle(name="qa-v1", backend=backend, concurrency_safe=True)
    qa_answer(handle, "who?", "alpha beta gamma delta", cache=cache)
    (entry,) = list(tmp_path.glob("*.json"))
    entry.write_text("{ this is not json")
    with caplog.at_level("WARNING"):
        result = qa_answer(handle, "who?", "alpha beta gamma delta", cache=cache)
    assert backend.calls == 2
    assert result.text
    assert any("corrupt cache entry" in message for message in caplog.messages)


def test_cached_helper_without_cache_computes():
    assert cached(None, "r", "op", ("a",), lambda: 42) == 42


def test_concurrent_readers_and_writers(tmp_path):
    import threading

    cache = DiskCache(tmp_path)
    handle = QARunnerHandle(name="qa-v1", backend=HashedSpanQABackend(seed=9), concurrency_safe=True)
    results: list[str] = []
    errors: list[Exception] = []

    def worker(idx: int):
        try:
            for _ in range(20):
                # half the threads share one key, the rest write fresh keys
                question = "shared?" if idx % 2 == 0 else f"q{idx}?"
                answer = qa_answer(handle, question, "alpha beta gamma delta", cache=cache)
                results.append((question, answer.text))
        except Exception as exc:  # pragma: no cover - failure path
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert not errors
    # every read of a given key observed the same (uncorrupted) value
    uncached = qa_answer(handle, "shared?", "alpha beta gamma delta").text
    for question, text in results:
        if question == "shared?":
            assert text == uncached


def test_env_var_selects_directory(tmp_path, monkeypatch):
    monkeypatch.setenv("RQUGE_CACHE_DIR", str(tmp_path / "envcache"))
    cache = DiskCache()
    assert cache.directory == tmp_path / "envcache"
    assert cache.directory.is_dir()
