"""Generate re-ranked synthetic QA training data from raw contexts.

Pipeline per context: NER proposes short answer spans, one span is drawn at
random (seeded), the generator samples a bag of candidate questions for it,
and the acceptability metric picks the best of the K lowest-perplexity
candidates. The emitted JSONL file pairs contexts with questions and
anchored answer spans, ready for QA fine-tuning through an external trainer.
"""

from rquge.core import load_dataset
from rquge.runtime import (
    GeneratorHandle,
    NerRunnerHandle,
    QARunnerHandle,
    SamplingConfig,
    SpanScorerHandle,
)
from rquge.stubs import (
    HashedSpanQABackend,
    LexicalOverlapScorerBackend,
    LexiconNerBackend,
    StubGeneratorBackend,
)
from rquge.synth import emit_training_file, extract_answer_spans, synthesize, write_trainer_config

contexts = [
    "Marie Curie announced the discovery in 1898 while working in Paris.",
    "Trade routes through Germany reached Berlin by the spring of 1929.",
    "The treaty was signed in France after long talks led by Joseph Haas.",
    "Copper exports made Sweden wealthy while Norway debated the tariffs.",
]

ner = NerRunnerHandle(name="ner", backend=LexiconNerBackend())
generator = GeneratorHandle(
    name="generator",
    backend=StubGeneratorBackend(seed=6),
    sampling=SamplingConfig(num_candidates=12),
)
qa = QARunnerHandle(name="qa", backend=HashedSpanQABackend(window=2, seed=6), concurrency_safe=True)
scorer = SpanScorerHandle(name="scorer", backend=LexicalOverlapScorerBackend(), concurrency_safe=True)

print("candidate answer spans per context (entities under 4 tokens):")
for context in contexts:
    spans = extract_answer_spans(context, ner)
    print(f"  {context[:46]:<48} -> {[s.text for s in spans]}")

examples = synthesize(contexts, ner, generator, qa, scorer, k=5, seed=6, selection="rquge")
print(f"\nsynthesized {len(examples)} training pairs (K=5 re-ranking):")
for example in examples:
    print(f"  kappa={example.kappa:.2f}  answer={example.answer.text!r}  question={example.question!r}")

training_path = emit_training_file(examples, "synthetic_qa.jsonl")
trainer_path = write_trainer_config("synthetic_qa.trainer-config.json")
print(f"\ntraining file: {training_path}  (trainer defaults: {trainer_path})")

# The emitted file loads straight back as a dataset; spans stay anchored.
reloaded = load_dataset(training_path)
assert len(reloaded) == len(examples)
print(f"reloaded {len(reloaded)} instances; every answer span verified against its context.")
