"""Command-line entry point wiring all modules.

One binary, subcommand style: score, rerank, corrupt, metaeval, synth,
baseline. Configuration resolves as flags over environment over config file
over built-in defaults; the built-in defaults use the deterministic stub
backends so every command runs offline. Each output artifact is written
next to a run manifest recording the command, config snapshot, seed, runner
names, paths, and per-instance failure ids, so any result can be audited.

Exit codes: 0 full success, 2 partial per-instance failures, 1 fatal error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import stubs  # noqa: F401  (registers the stub backend factories)
from .adversarial import DEFAULT_MIX, auc_report, build_adversarial_set
from .baselines import BASELINE_METRICS, compute_baseline, external_metric, registered_external_metrics
from .cache import DiskCache
from .core import load_annotations, load_dataset, read_jsonl, write_jsonl
from .errors import ReferenceRequiredError, RqugeError
from .metaeval import CRITERIA, correlate_with_human, correlation_table, pairwise_annotator_kappa, write_correlation_csv
from .metric import ScoredCandidate, first_candidate_selector, rquge_batch, rquge_score
from .rerank import rerank_sweep
from .runtime import create_runner
from .synth import emit_training_file, synthesize, write_trainer_config

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2

DEFAULT_CONFIG: dict = {
    "qa": {"backend": "stub-hashed-span", "checkpoint": "unifiedqa-v2-t5-large"},
    "scorer": {"backend": "stub-lexical-overlap", "checkpoint": "roberta-mocha-span-scorer"},
    "generator": {"backend": "stub-generator", "num_candidates": 20, "temperature": 1.0, "top_p": 0.94},
    "ner": {"backend": "stub-lexicon-ner"},
    "translator": {"backend": "stub-synonym-translate"},
    "paraphraser": {"backend": "stub-synonym-paraphrase"},
    "cache_dir": None,
    "seed": 0,
}


@dataclass(frozen=True)
class RunManifest:
    """Audit record emitted alongside every output artifact."""

    command: str
    config: dict
    seed: int
    runners: dict
    inputs: dict
    outputs: dict
    timestamp: str
    failures: tuple = ()
    notes: dict = field(default_factory=dict)

    def write(self, anchor: str | Path) -> Path:
        path = Path(f"{anchor}.manifest.json")
        payload = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "runners": self.runners,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timestamp": self.timestamp,
            "failures": list(self.failures),
            "notes": self.notes,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def merge_config(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_config(path: str | None) -> dict:
    """Resolve the effective config: defaults <- file (flag or RQUGE_CONFIG)."""
    config = dict(DEFAULT_CONFIG)
    resolved = path or os.environ.get("RQUGE_CONFIG")
    if resolved:
        raw = Path(resolved).read_bytes()
        if str(resolved).endswith(".toml"):
            try:
                import tomllib  # py311+
            except ModuleNotFoundError:
                import tomli as tomllib
            loaded = tomllib.loads(raw.decode("utf-8"))
        else:
            loaded = json.loads(raw.decode("utf-8"))
        if not isinstance(loaded, dict):
            raise RqugeError(f"config file {resolved} must hold a JSON/TOML object")
        config = merge_config(config, loaded)
    return config


def _cache_from(config: dict) -> DiskCache | None:
    directory = os.environ.get("RQUGE_CACHE_DIR") or config.get("cache_dir")
    return DiskCache(directory) if directory else None


def _seed_from(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(config.get("seed", 0))


def _runners(config: dict, env: dict, roles: list[str]) -> dict:
    return {role: create_runner(role, config[role], env) for role in roles}


def _parse_counts(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        kind, _, value = part.partition("=")
        counts[kind.strip()] = int(value)
    return counts


def _comma_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _score_row(result: ScoredCandidate) -> dict:
    score = result.score
    return {
        "id": result.instance_id,
        "candidate": result.candidate,
        "kappa": score.kappa,
        "predicted_answer": score.predicted_answer,
        "normalized": score.normalized,
        "truncated": score.truncated,
    }


# -- subcommand implementations --


def cmd_score(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    cache = _cache_from(config)
    instances = load_dataset(args.dataset)
    runners = _runners(config, {"instances": instances, "seed": seed}, ["qa", "scorer"])
    qa, scorer = runners["qa"], runners["scorer"]

    jobs = max(1, args.jobs)
    if jobs > 1 and qa.concurrency_safe and scorer.concurrency_safe:
        def score_one(instance) -> ScoredCandidate:
            candidate = None
            try:
                candidate = first_candidate_selector(instance)
                if not candidate:
                    raise ValueError("no candidate question to score")
                score = rquge_score(
                    instance, candidate, qa, scorer, cache=cache, include_normalized=True
                )
            except (RqugeError, ValueError) as exc:
                return ScoredCandidate(instance.id, candidate, None, str(exc))
            return ScoredCandidate(instance.id, candidate, score)

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(score_one, instances))
    else:
        results = rquge_batch(
            instances,
            first_candidate_selector,
            qa,
            scorer,
            cache=cache,
            include_normalized=True,
        )

    failures = tuple(r.instance_id for r in results if r.error is not None)
    write_jsonl(args.out, (_score_row(r) for r in results if r.score is not None))
    RunManifest(
        command="score",
        config=config,
        seed=seed,
        runners={"qa": qa.name, "scorer": scorer.name},
        inputs={"dataset": str(args.dataset)},
        outputs={"scores": str(args.out)},
        timestamp=_timestamp(),
        failures=failures,
        notes={"errors": {r.instance_id: r.error for r in results if r.error is not None}},
    ).write(args.out)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_rerank(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    cache = _cache_from(config)
    instances = load_dataset(args.dataset)
    ks = sorted(set(int(k) for k in _comma_list(args.k)))
    metrics = _comma_list(args.metric) if args.metric else []
    runners = _runners(config, {"instances": instances, "seed": seed}, ["qa", "scorer"])

    usable, failures = [], []
    for instance in instances:
        if instance.candidates and all(c.ppl is not None for c in instance.candidates):
            usable.append(instance)
        else:
            failures.append(instance.id)
    if not usable:
        raise RqugeError("no instance carries a perplexity-annotated candidate bag")

    report = rerank_sweep(usable, ks, runners["qa"], runners["scorer"], metrics=metrics, cache=cache)
    write_jsonl(
        args.out,
        (
            {
                "k": row.k,
                "mean_kappa": row.mean_kappa,
                "relative_kappa": row.relative_kappa,
                "baseline_means": row.baseline_means,
                "baseline_relative": row.baseline_relative,
            }
            for row in report.rows
        ),
    )
    RunManifest(
        command="rerank",
        config=config,
        seed=seed,
        runners={"qa": runners["qa"].name, "scorer": runners["scorer"].name},
        inputs={"dataset": str(args.dataset)},
        outputs={"sweep": str(args.out)},
        timestamp=_timestamp(),
        failures=tuple(failures),
        notes={"ks": ks, "redundant_ids": list(report.redundant_ids)},
    ).write(args.out)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_corrupt(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    cache = _cache_from(config)
    instances = load_dataset(args.dataset)
    counts = _parse_counts(args.counts) if args.counts else dict(DEFAULT_MIX)
    env = {"instances": instances, "seed": seed}
    runners = _runners(config, env, ["ner", "translator", "paraphraser"])

    built = build_adversarial_set(
        instances,
        counts,
        seed,
        ner=runners["ner"],
        translator=runners["translator"],
        paraphraser=runners["paraphraser"],
        cache=cache,
    )
    write_jsonl(
        args.out,
        (
            {
                "instance_id": r.instance_id,
                "original": r.original,
                "corrupted": r.corrupted,
                "kind": r.kind,
                "label": r.label,
                "edit_audit": r.edit_audit,
            }
            for r in built.records
        ),
    )
    outputs = {"records": str(args.out)}
    runner_names = {role: runners[role].name for role in runners}

    if args.with_auc:
        scoring = _runners(config, env, ["qa", "scorer"])
        by_id = {inst.id: inst for inst in instances}
        metric_scores = {}
        for record in built.records:
            instance = by_id[record.instance_id]
            metric_scores[record] = rquge_score(
                instance, record.corrupted, scoring["qa"], scoring["scorer"], cache=cache
            ).kappa
        auc_path = Path(args.out).with_suffix(".auc.json")
        auc_path.write_text(
            json.dumps(auc_report(built.records, metric_scores), indent=2) + "\n", encoding="utf-8"
        )
        outputs["auc_report"] = str(auc_path)
        runner_names.update({role: scoring[role].name for role in scoring})

    shortfall = {
        kind: built.requested[kind] - built.produced.get(kind, 0)
        for kind in built.requested
        if built.produced.get(kind, 0) < built.requested[kind]
    }
    RunManifest(
        command="corrupt",
        config=config,
        seed=seed,
        runners=runner_names,
        inputs={"dataset": str(args.dataset)},
        outputs=outputs,
        timestamp=_timestamp(),
        failures=tuple(f"{s.instance_id}:{s.kind}" for s in built.skips),
        notes={"requested": built.requested, "produced": built.produced, "shortfall": shortfall},
    ).write(args.out)
    return EXIT_PARTIAL if shortfall else EXIT_OK


def cmd_metaeval(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    annotations = load_annotations(args.annotations)
    criteria = list(CRITERIA) if args.criterion == "all" else [args.criterion]

    by_metric: dict[str, dict[str, float]] = {}
    for row in read_jsonl(args.scores):
        if "id" not in row:
            raise RqugeError(f"score row {row!r} has no 'id'")
        if "kappa" in row:
            name, value = args.metric or "rquge", float(row["kappa"])
        elif "value" in row:
            name, value = str(row.get("metric_name", args.metric or "metric")), float(row["value"])
        else:
            raise RqugeError(f"score row for id {row.get('id')!r} has neither 'kappa' nor 'value'")
        by_metric.setdefault(name, {})[str(row["id"])] = value

    reports = [
        correlate_with_human(scores, annotations, criterion, metric_name=name)
        for name, scores in sorted(by_metric.items())
        for criterion in criteria
    ]
    excluded = sorted({iid for r in reports for iid in r.excluded_ids})
    agreement = {f"{a}|{b}": kappa for (a, b), kappa in pairwise_annotator_kappa(annotations).items()}

    json_path = Path(f"{args.out}.json")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(
        json.dumps(
            {
                "table": correlation_table(reports),
                "excluded_ids": excluded,
                "annotator_kappa": agreement,
                "annotator_kappa_labels": "sum of the three criteria, treated as nominal",
            },
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    csv_path = write_correlation_csv(reports, f"{args.out}.csv")
    RunManifest(
        command="metaeval",
        config=config,
        seed=seed,
        runners={},
        inputs={"scores": str(args.scores), "annotations": str(args.annotations)},
        outputs={"json": str(json_path), "csv": str(csv_path)},
        timestamp=_timestamp(),
        failures=tuple(excluded),
        notes={"criteria": criteria},
    ).write(args.out)
    return EXIT_PARTIAL if excluded else EXIT_OK


def _read_contexts(path: str) -> list[str]:
    contexts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        value = json.loads(line)
        if isinstance(value, str):
            contexts.append(value)
        elif isinstance(value, dict) and isinstance(value.get("context"), str):
            contexts.append(value["context"])
        else:
            raise RqugeError(f"{path}: line {lineno}: expected a string or an object with 'context'")
    return contexts


def cmd_synth(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    cache = _cache_from(config)
    contexts = _read_contexts(args.contexts)
    runners = _runners(config, {"seed": seed}, ["ner", "generator", "qa", "scorer"])

    examples = synthesize(
        contexts,
        runners["ner"],
        runners["generator"],
        runners["qa"],
        runners["scorer"],
        k=args.k,
        seed=seed,
        selection=args.select,
        adapter_name=args.adapter,
        cache=cache,
    )
    if not examples:
        raise RqugeError("no context yielded a usable answer span")
    emit_training_file(examples, args.out)
    trainer_path = write_trainer_config(Path(args.out).with_suffix(".trainer-config.json"))

    emitted = {example.context for example in examples}
    skipped = tuple(str(i) for i, context in enumerate(contexts) if context not in emitted)
    RunManifest(
        command="synth",
        config=config,
        seed=seed,
        runners={role: runners[role].name for role in runners},
        inputs={"contexts": str(args.contexts)},
        outputs={"training_file": str(args.out), "trainer_config": str(trainer_path)},
        timestamp=_timestamp(),
        failures=skipped,
        notes={"k": args.k, "selection": args.select, "examples": len(examples)},
    ).write(args.out)
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_baseline(args) -> int:
    config = load_config(args.config)
    seed = _seed_from(args, config)
    instances = load_dataset(args.dataset)
    metrics = _comma_list(args.metric)
    if not metrics:
        raise RqugeError("--metric must name at least one metric")

    rows, failures, errors = [], [], {}
    for instance in instances:
        try:
            if not instance.candidates:
                raise ReferenceRequiredError("instance has no candidate question")
            candidate = instance.candidates[0].text
            for name in metrics:
                if name in BASELINE_METRICS:
                    value = compute_baseline(name, candidate, instance.reference_question)
                elif name in registered_external_metrics():
                    value = external_metric(
                        name,
                        candidate,
                        reference=instance.reference_question,
                        context=instance.context,
                        answer=instance.gold_answer.text,
                    ).value
                else:
                    raise RqugeError(f"unknown metric {name!r}")
                rows.append({"id": instance.id, "metric_name": name, "value": value})
        except RqugeError as exc:
            failures.append(instance.id)
            errors[instance.id] = str(exc)
    write_jsonl(args.out, rows)
    RunManifest(
        command="baseline",
        config=config,
        seed=seed,
        runners={},
        inputs={"dataset": str(args.dataset)},
        outputs={"metrics": str(args.out)},
        timestamp=_timestamp(),
        failures=tuple(failures),
        notes={"metrics": metrics, "errors": errors},
    ).write(args.out)
    return EXIT_PARTIAL if failures else EXIT_OK


# -- parser --


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rquge",
        description="Reference-free evaluation toolkit for automatically generated questions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, dataset: bool = True) -> None:
        if dataset:
            p.add_argument("--dataset", required=True, help="instance JSONL file")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--config", default=None, help="JSON/TOML config file (or RQUGE_CONFIG)")
        p.add_argument("--seed", type=int, default=None, help="run seed (default from config)")

    p = sub.add_parser("score", help="score each instance's candidate question")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel instances when backends allow")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("rerank", help="perplexity-sort candidate bags and sweep K")
    common(p)
    p.add_argument("--k", required=True, help="comma list of K values, e.g. 1,5,10")
    p.add_argument("--metric", default="", help="comma list of baseline metrics to track")
    p.set_defaults(handler=cmd_rerank)

    p = sub.add_parser("corrupt", help="build the adversarial robustness subset")
    common(p)
    p.add_argument("--counts", default="", help="per-kind targets, e.g. negation=10,entity_swap=2")
    p.add_argument("--with-auc", action="store_true", help="also score records and emit the AUC report")
    p.set_defaults(handler=cmd_corrupt)

    p = sub.add_parser("metaeval", help="correlate metric scores with human annotations")
    common(p, dataset=False)
    p.add_argument("--scores", required=True, help="score JSONL from 'score' or 'baseline'")
    p.add_argument("--annotations", required=True, help="annotation JSONL file")
    p.add_argument("--criterion", default="all", choices=list(CRITERIA) + ["all"])
    p.add_argument("--metric", default="", help="metric name label for kappa score rows")
    p.set_defaults(handler=cmd_metaeval)

    p = sub.add_parser("synth", help="generate synthetic QA training data from contexts")
    common(p, dataset=False)
    p.add_argument("--contexts", required=True, help="JSONL of contexts (strings or {'context': ...})")
    p.add_argument("--k", type=int, default=1, help="re-ranking depth")
    p.add_argument("--select", default="rquge", choices=["rquge", "ppl", "beam", "external_adapter"])
    p.add_argument("--adapter", default=None, help="external metric name for --select external_adapter")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("baseline", help="compute reference-based baseline metrics")
    common(p)
    p.add_argument("--metric", default="bleu4,rouge1,rougeL", help="comma list of metrics")
    p.set_defaults(handler=cmd_baseline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (RqugeError, OSError, ValueError) as exc:
        print(f"rquge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
