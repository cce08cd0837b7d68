"""Re-rank a generator's candidate bag by acceptability.

The generator emits a bag of candidate questions with perplexities. Sorting
by perplexity and taking the single best (K=1) is the plain decoding
baseline; scoring the K lowest-perplexity candidates and keeping the kappa
argmax consistently lifts the mean score, because the chosen kappa is a
prefix maximum in K.
"""

import random

from rquge.core import AnswerSpan, QGInstance
from rquge.rerank import rerank, rerank_sweep
from rquge.runtime import GeneratorHandle, QARunnerHandle, SamplingConfig, SpanScorerHandle, generate_candidates
from rquge.stubs import HashedSpanQABackend, LexicalOverlapScorerBackend, StubGeneratorBackend

rng = random.Random(2)
generator = GeneratorHandle(
    name="demo-generator",
    backend=StubGeneratorBackend(seed=2),
    sampling=SamplingConfig(temperature=1.0, top_p=0.94, num_candidates=30),
)
qa = QARunnerHandle(name="demo-qa", backend=HashedSpanQABackend(window=2, seed=4), concurrency_safe=True)
scorer = SpanScorerHandle(name="demo-scorer", backend=LexicalOverlapScorerBackend(), concurrency_safe=True)

# Build 40 instances, each with a 30-candidate bag from the stub generator.
instances = []
for i in range(40):
    words = [f"topic{rng.randrange(25)}" for _ in range(12)]
    context = " ".join(words)
    gold = words[rng.randrange(12)]
    span = AnswerSpan(text=gold, char_start=context.find(gold))
    bag = generate_candidates(generator, span, context)
    instances.append(
        QGInstance(id=f"demo-{i:02d}", context=context, gold_answer=span, candidates=tuple(bag))
    )

one = rerank(instances[0], 5, qa, scorer)
print(f"instance {one.instance_id}: ppl-best {one.ppl_best.text!r}")
print(f"  chosen at K=5: {one.chosen.text!r} with kappa={one.chosen_score.kappa:.2f}\n")

report = rerank_sweep(instances, [1, 2, 5, 10, 30], qa, scorer)
print(" K   mean kappa   gain over K=1")
for row in report.rows:
    print(f"{row.k:2d}   {row.mean_kappa:10.3f}   {row.relative_kappa:+13.3f}")
print(f"\nredundant instances (same choice at every K): {len(report.redundant_ids)}")
