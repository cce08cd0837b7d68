"""Reference-free evaluation toolkit for automatically generated questions.

The acceptability score of a candidate question is computed by answering it
with a QA runner against the context and rating the predicted answer against
the gold span on a 1-5 scale. Around that metric the package provides
perplexity-based candidate re-ranking, adversarial robustness evaluation via
ROC-AUC, correlation statistics against human judgment, and a synthetic
QA-data pipeline for domain adaptation.
"""

from . import stubs  # noqa: F401  (registers the offline backend factories)
from .adversarial import (
    AdversarialSet,
    CorruptionRecord,
    CorruptionSkip,
    build_adversarial_set,
    corrupt_entity_swap,
    corrupt_gender,
    corrupt_negate,
    mann_whitney_auc,
    paraphrase_positive,
    robustness_auc,
)
from .baselines import (
    MetricValue,
    bleu4,
    external_metric,
    qa_f1_em,
    register_external_metric,
    rouge,
)
from .cache import CacheKey, DiskCache
from .core import (
    AnnotationRecord,
    AnswerSpan,
    CandidateQuestion,
    QGInstance,
    load_annotations,
    load_dataset,
    save_annotations,
    save_dataset,
)
from .errors import (
    ConfigurationError,
    DatasetParseError,
    ReferenceRequiredError,
    RqugeError,
    RunnerError,
    UndefinedStatisticError,
    ValidationError,
)
from .metaeval import (
    CorrelationReport,
    cohens_kappa,
    correlate_with_human,
    kendall,
    pearson,
    spearman,
)
from .metric import RqugeScore, normalize, rquge_batch, rquge_score
from .rerank import RerankResult, rerank, rerank_sweep
from .runtime import (
    GeneratorHandle,
    NerRunnerHandle,
    ParaphraserHandle,
    QARunnerHandle,
    SamplingConfig,
    SpanScorerHandle,
    TranslatorHandle,
    generate_candidates,
    ner_entities,
    paraphrase,
    qa_answer,
    register_backend,
    span_score,
    translate,
)
from .synth import SynthExample, emit_training_file, extract_answer_spans, synthesize

__version__ = "0.1.0"
