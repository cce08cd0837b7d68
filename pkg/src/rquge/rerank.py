"""Decoding-time re-ranking of candidate question bags.

Candidates are sorted stably by generator perplexity, the first K are scored
with the acceptability metric, and the argmax wins. Because the chosen score
is a prefix maximum, the mean chosen kappa can only go up as K grows; the
sweep report expresses every score relative to the smallest K so that drift
of reference-based metrics under re-ranking is visible at a glance.

Tie-breaking is fixed for determinism: equal kappa falls back to lower
perplexity, then to original bag order.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

from .baselines import compute_baseline
from .cache import DiskCache
from .core import CandidateQuestion, QGInstance
from .errors import ValidationError
from .metric import RqugeScore, rquge_score
from .runtime import QARunnerHandle, SpanScorerHandle


@dataclass(frozen=True, slots=True)
class RerankResult:
    """Outcome of re-ranking one instance's bag at one K."""

    instance_id: str
    k: int
    chosen: CandidateQuestion
    chosen_score: RqugeScore
    ppl_best: CandidateQuestion
    all_scored: tuple[tuple[CandidateQuestion, RqugeScore], ...]

    def __post_init__(self) -> None:
        best = max(score.kappa for _, score in self.all_scored)
        if self.chosen_score.kappa != best:
            raise ValidationError("chosen_score must be the maximum kappa over the scored prefix")


def _ppl_sorted(instance: QGInstance) -> list[CandidateQuestion]:
    if not instance.candidates:
        raise ValidationError(f"instance {instance.id!r}: candidate bag is empty")
    for cand in instance.candidates:
        if cand.ppl is None:
            raise ValidationError(
                f"instance {instance.id!r}: candidate {cand.text!r} is missing ppl"
            )
    return sorted(instance.candidates, key=lambda c: c.ppl)


def _score_prefix(
    instance: QGInstance,
    prefix: Sequence[CandidateQuestion],
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    cache: DiskCache | None,
) -> list[tuple[CandidateQuestion, RqugeScore]]:
    return [
        (cand, rquge_score(instance, cand.text, qa, scorer, cache=cache)) for cand in prefix
    ]


def _argmax(scored: Sequence[tuple[CandidateQuestion, RqugeScore]]) -> tuple[CandidateQuestion, RqugeScore]:
    # first strict maximum in ppl order implements the documented tie-breaking
    best = scored[0]
    for entry in scored[1:]:
        if entry[1].kappa > best[1].kappa:
            best = entry
    return best


def rerank(
    instance: QGInstance,
    k: int,
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    *,
    cache: DiskCache | None = None,
) -> RerankResult:
    """Score the K lowest-perplexity candidates and return the kappa argmax.

    With k=1 this is the plain perplexity-best selection.
    """
    ordered = _ppl_sorted(instance)
    if not 1 <= k <= len(ordered):
        raise ValueError(f"k must be in 1..{len(ordered)}, got {k}")
    scored = _score_prefix(instance, ordered[:k], qa, scorer, cache)
    chosen, chosen_score = _argmax(scored)
    return RerankResult(
        instance_id=instance.id,
        k=k,
        chosen=chosen,
        chosen_score=chosen_score,
        ppl_best=ordered[0],
        all_scored=tuple(scored),
    )


@dataclass(frozen=True, slots=True)
class SweepRow:
    k: int
    mean_kappa: float
    relative_kappa: float
    baseline_means: dict[str, float]
    baseline_relative: dict[str, float]


@dataclass(frozen=True, slots=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    redundant_ids: tuple[str, ...]


def redundant_instance_ids(chosen_by_k: Mapping[int, Mapping[str, str]]) -> set[str]:
    """Instances whose chosen question is the same exact string at every K."""
    if not chosen_by_k:
        return set()
    per_k = list(chosen_by_k.values())
    shared = set(per_k[0])
    for chosen in per_k[1:]:
        shared &= set(chosen)
    return {
        iid for iid in shared if len({chosen[iid] for chosen in per_k}) == 1
    }


def rerank_sweep(
    instances: Sequence[QGInstance],
    ks: Sequence[int],
    qa: QARunnerHandle,
    scorer: SpanScorerHandle,
    *,
    metrics: Sequence[str] = (),
    cache: DiskCache | None = None,
) -> SweepReport:
    """Mean chosen kappa and baseline means per K, relative to the smallest K.

    Baseline metrics compare the chosen candidate to the reference question,
    so instances must carry references when ``metrics`` is nonempty. Each
    bag is scored once up to max(ks); per-K selections are prefix argmaxes
    of that single pass, which is exactly element-wise re-ranking.
    """
    ks = list(ks)
    if not ks:
        raise ValueError("ks must be nonempty")
    if ks != sorted(ks) or len(set(ks)) != len(ks):
        raise ValueError(f"ks must be strictly ascending, got {ks}")
    if not instances:
        raise ValueError("instances must be nonempty")

    per_instance: list[list[tuple[CandidateQuestion, RqugeScore]]] = []
    for instance in instances:
        ordered = _ppl_sorted(instance)
        depth = min(max(ks), len(ordered))
        per_instance.append(_score_prefix(instance, ordered[:depth], qa, scorer, cache))

    rows: list[SweepRow] = []
    chosen_by_k: dict[int, dict[str, str]] = {}
    base_kappa: float | None = None
    base_means: dict[str, float] = {}
    for k in ks:
        kappas: list[float] = []
        metric_sums = {name: 0.0 for name in metrics}
        chosen_texts: dict[str, str] = {}
        for instance, scored in zip(instances, per_instance):
            prefix = scored[: min(k, len(scored))]
            chosen, chosen_score = _argmax(prefix)
            kappas.append(chosen_score.kappa)
            chosen_texts[instance.id] = chosen.text
            for name in metrics:
                metric_sums[name] += compute_baseline(
                    name, chosen.text, instance.reference_question
                )
        mean_kappa = sum(kappas) / len(kappas)
        means = {name: metric_sums[name] / len(instances) for name in metrics}
        if base_kappa is None:
            base_kappa = mean_kappa
            base_means = dict(means)
        rows.append(
            SweepRow(
                k=k,
                mean_kappa=mean_kappa,
                relative_kappa=mean_kappa - base_kappa,
                baseline_means=means,
                baseline_relative={name: means[name] - base_means[name] for name in metrics},
            )
        )
        chosen_by_k[k] = chosen_texts
    return SweepReport(
        rows=tuple(rows), redundant_ids=tuple(sorted(redundant_instance_ids(chosen_by_k)))
    )
