"""Relate metric scores to human judgment.

Annotators rate each question for grammaticality and answerability on a
3-point scale and relevance on a 2-point scale; per-instance human scores
are the mean over annotators. The meta-evaluation reports Pearson r,
Spearman rho, and Kendall tau-b per criterion, plus pairwise Cohen's kappa
between annotators on the rating sums.
"""

import random

from rquge.core import AnnotationRecord
from rquge.metaeval import (
    correlate_with_human,
    pairwise_annotator_kappa,
    write_correlation_csv,
)

rng = random.Random(8)

# Simulate 60 instances: a latent quality drives both the human ratings and
# a noisy "metric-a" score, while "metric-b" is pure noise.
instance_ids = [f"q{i:02d}" for i in range(60)]
latent = {iid: rng.uniform(0, 1) for iid in instance_ids}

annotations = []
for iid in instance_ids:
    for annotator in ("ann-1", "ann-2", "ann-3"):
        wobble = rng.uniform(-0.15, 0.15)
        quality = min(1.0, max(0.0, latent[iid] + wobble))
        annotations.append(
            AnnotationRecord(
                instance_id=iid,
                annotator_id=annotator,
                grammaticality=1 + round(2 * quality),
                answerability=1 + round(2 * quality),
                relevance=1 + round(quality),
            )
        )

metric_a = {iid: 1 + 4 * min(1.0, max(0.0, latent[iid] + rng.uniform(-0.1, 0.1))) for iid in instance_ids}
metric_b = {iid: rng.uniform(1, 5) for iid in instance_ids}

print("metric     criterion        pearson  spearman  kendall")
reports = []
for name, scores in (("metric-a", metric_a), ("metric-b", metric_b)):
    for criterion in ("grammaticality", "answerability", "relevance"):
        report = correlate_with_human(scores, annotations, criterion, metric_name=name)
        reports.append(report)
        print(
            f"{name:<10} {criterion:<15} {report.pearson:8.3f} {report.spearman:9.3f} "
            f"{report.kendall:8.3f}"
        )

print("\npairwise annotator agreement (Cohen's kappa on rating sums):")
for (first, second), value in pairwise_annotator_kappa(annotations).items():
    print(f"  {first} vs {second}: {value:.3f}")

path = write_correlation_csv(reports, "correlation_demo.csv")
print(f"\ntable written to {path}")
