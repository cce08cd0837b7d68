import json
from pathlib import Path


from rquge.cli import main
from rquge.core import (
    AnnotationRecord,
    AnswerSpan,
    CandidateQuestion,
    QGInstance,
    read_jsonl,
    save_annotations,
    save_dataset,
)

DATA_DIR = Path(__file__).parent / "data"
DATASET_20 = DATA_DIR / "dataset_20.jsonl"
CONTEXTS_12 = DATA_DIR / "contexts_12.jsonl"


def small_dataset(tmp_path, with_failures=False):
    instances = [
        QGInstance(
            id=f"s{i}",
            context=f"Entry {i}: the archive in France mentions Prussia and the 1929 records.",
            gold_answer=AnswerSpan(text="France"),
            reference_question="Which country is named in his archive?",
            candidates=(CandidateQuestion(f"which archive {i}?", ppl=2.0 + i),),
        )
        for i in range(3)
    ]
    if with_failures:
        instances.append(
            QGInstance(
                id="bare",
                context="No candidates and no reference live here.",
                gold_answer=AnswerSpan(text="candidates"),
            )
        )
    path = tmp_path / "dataset.jsonl"
    save_dataset(instances, path)
    return path


def manifest_of(out_path):
    return json.loads(Path(f"{out_path}.manifest.json").read_text())


# -- score --


def test_score_three_instances_exit_zero(tmp_path):
    dataset = small_dataset(tmp_path)
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(dataset), "--out", str(out), "--seed", "1"]) == 0
    rows = read_jsonl(out)
    assert len(rows) == 3
    for row in rows:
        assert set(row) == {"id", "candidate", "kappa", "predicted_answer", "normalized", "truncated"}
        assert 1.0 <= row["kappa"] <= 5.0
    manifest = manifest_of(out)
    assert manifest["command"] == "score"
    assert manifest["seed"] == 1
    assert manifest["failures"] == []
    assert "qa" in manifest["runners"] and "scorer" in manifest["runners"]


def test_score_missing_file_exits_one(tmp_path, capsys):
    out = tmp_path / "scores.jsonl"
    code = main(["score", "--dataset", str(tmp_path / "nope.jsonl"), "--out", str(out)])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_score_partial_failure_exits_two(tmp_path):
    dataset = small_dataset(tmp_path, with_failures=True)
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(dataset), "--out", str(out), "--seed", "1"]) == 2
    rows = read_jsonl(out)
    assert len(rows) == 3
    manifest = manifest_of(out)
    assert manifest["failures"] == ["bare"]
    assert "bare" in manifest["notes"]["errors"]


def test_score_golden_bytes(tmp_path):
    golden = (DATA_DIR / "golden_score.jsonl").read_bytes()
    for run in range(2):
        out = tmp_path / f"scores-{run}.jsonl"
        assert main(["score", "--dataset", str(DATASET_20), "--out", str(out), "--seed", "7"]) == 0
        assert out.read_bytes() == golden


def test_score_jobs_flag_preserves_output(tmp_path):
    out_serial = tmp_path / "serial.jsonl"
    out_parallel = tmp_path / "parallel.jsonl"
    assert main(["score", "--dataset", str(DATASET_20), "--out", str(out_serial), "--seed", "7"]) == 0
    assert (
        main(
            [
                "score",
                "--dataset",
                str(DATASET_20),
                "--out",
                str(out_parallel),
                "--seed",
                "7",
                "--jobs",
                "4",
            ]
        )
        == 0
    )
    assert out_parallel.read_bytes() == out_serial.read_bytes()


def test_score_config_file_and_env(tmp_path, monkeypatch):
    dataset = small_dataset(tmp_path)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"qa": {"backend": "stub-gold-echo"}}))
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(dataset), "--out", str(out), "--config", str(config)]) == 0
    rows = read_jsonl(out)
    # gold-echo answers are the gold spans, so the overlap scorer returns 5.0
    assert all(row["kappa"] == 5.0 for row in rows)

    monkeypatch.setenv("RQUGE_CONFIG", str(config))
    out_env = tmp_path / "scores-env.jsonl"
    assert main(["score", "--dataset", str(dataset), "--out", str(out_env)]) == 0
    assert read_jsonl(out_env) == rows


def test_score_toml_config(tmp_path):
    dataset = small_dataset(tmp_path)
    config = tmp_path / "config.toml"
    config.write_text('[qa]\nbackend = "stub-gold-echo"\n')
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(dataset), "--out", str(out), "--config", str(config)]) == 0
    assert all(row["kappa"] == 5.0 for row in read_jsonl(out))


def test_unreadable_config_exits_one(tmp_path, capsys):
    dataset = small_dataset(tmp_path)
    config = tmp_path / "config.json"
    config.write_text("{broken")
    code = main(
        ["score", "--dataset", str(dataset), "--out", str(tmp_path / "o.jsonl"), "--config", str(config)]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


# -- rerank --


def test_rerank_sweep_rows(tmp_path):
    out = tmp_path / "sweep.jsonl"
    code = main(
        [
            "rerank",
            "--dataset",
            str(DATASET_20),
            "--out",
            str(out),
            "--k",
            "1,3,5",
            "--seed",
            "7",
            "--metric",
            "bleu4,rougeL",
        ]
    )
    assert code == 0
    rows = read_jsonl(out)
    assert [row["k"] for row in rows] == [1, 3, 5]
    assert rows[0]["relative_kappa"] == 0.0
    kappas = [row["mean_kappa"] for row in rows]
    assert kappas == sorted(kappas)
    assert set(rows[0]["baseline_means"]) == {"bleu4", "rougeL"}
    manifest = manifest_of(out)
    assert manifest["notes"]["ks"] == [1, 3, 5]


def test_rerank_reproducible_bytes(tmp_path):
    args = ["--dataset", str(DATASET_20), "--k", "1,5", "--seed", "7", "--metric", "bleu4"]
    out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["rerank", *args, "--out", str(out_a)]) == 0
    assert main(["rerank", *args, "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_default_config_documents_reference_checkpoints():
    from rquge.cli import DEFAULT_CONFIG
    from rquge.runtime import REFERENCE_CHECKPOINTS

    assert DEFAULT_CONFIG["qa"]["checkpoint"] == REFERENCE_CHECKPOINTS["qa"]
    assert DEFAULT_CONFIG["scorer"]["checkpoint"] == REFERENCE_CHECKPOINTS["scorer"]
    assert DEFAULT_CONFIG["generator"]["top_p"] == 0.94
    assert DEFAULT_CONFIG["generator"]["temperature"] == 1.0


def test_rerank_partial_on_missing_bags(tmp_path):
    instances = [
        QGInstance(
            id="with-bag",
            context="The archive in France mentions Prussia.",
            gold_answer=AnswerSpan(text="France"),
            candidates=(CandidateQuestion("which archive?", ppl=2.0),),
        ),
        QGInstance(
            id="no-bag",
            context="Nothing else lives here.",
            gold_answer=AnswerSpan(text="Nothing"),
        ),
    ]
    dataset = tmp_path / "d.jsonl"
    save_dataset(instances, dataset)
    out = tmp_path / "sweep.jsonl"
    assert main(["rerank", "--dataset", str(dataset), "--out", str(out), "--k", "1"]) == 2
    assert manifest_of(out)["failures"] == ["no-bag"]


# -- corrupt --


def test_corrupt_records_and_auc(tmp_path):
    out = tmp_path / "adversarial.jsonl"
    code = main(
        [
            "corrupt",
            "--dataset",
            str(DATASET_20),
            "--out",
            str(out),
            "--seed",
            "3",
            "--counts",
            "negation=4,gender_reverse=2,paraphrase_model=6,entity_swap=2",
            "--with-auc",
        ]
    )
    assert code == 0
    rows = read_jsonl(out)
    assert len(rows) == 14
    for row in rows:
        assert set(row) == {"instance_id", "original", "corrupted", "kind", "label", "edit_audit"}
    by_kind = {}
    for row in rows:
        by_kind[row["kind"]] = by_kind.get(row["kind"], 0) + 1
    assert by_kind == {"negation": 4, "gender_reverse": 2, "paraphrase_model": 6, "entity_swap": 2}

    report = json.loads(out.with_suffix(".auc.json").read_text())
    assert set(report) == {"total", "per_kind", "positive_pool"}
    assert 0.0 <= report["total"] <= 1.0
    assert set(report["per_kind"]) == {"negation", "gender_reverse", "entity_swap"}


def test_corrupt_default_mix_shortfall_is_partial(tmp_path):
    out = tmp_path / "adversarial.jsonl"
    code = main(["corrupt", "--dataset", str(DATASET_20), "--out", str(out), "--seed", "3"])
    assert code == 2
    manifest = manifest_of(out)
    assert manifest["notes"]["requested"]["negation"] == 1000
    assert manifest["notes"]["shortfall"]


def test_corrupt_deterministic(tmp_path):
    args = ["--dataset", str(DATASET_20), "--seed", "9", "--counts", "negation=5"]
    out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["corrupt", *args, "--out", str(out_a)]) == 0
    assert main(["corrupt", *args, "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


# -- metaeval --


def annotations_file(tmp_path, ids):
    import random

    rng = random.Random(42)
    records = []
    for instance_id in ids:
        for annotator in ("a", "b", "c"):
            records.append(
                AnnotationRecord(
                    instance_id=instance_id,
                    annotator_id=annotator,
                    grammaticality=rng.randint(1, 3),
                    answerability=rng.randint(1, 3),
                    relevance=rng.randint(1, 2),
                )
            )
    path = tmp_path / "annotations.jsonl"
    save_annotations(records, path)
    return path


def test_metaeval_reports(tmp_path):
    scores = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(DATASET_20), "--out", str(scores), "--seed", "7"]) == 0
    ids = [row["id"] for row in read_jsonl(scores)]
    annotations = annotations_file(tmp_path, ids)
    out = tmp_path / "correlation"
    code = main(
        [
            "metaeval",
            "--scores",
            str(scores),
            "--annotations",
            str(annotations),
            "--criterion",
            "all",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    payload = json.loads(Path(f"{out}.json").read_text())
    assert set(payload["table"]["rquge"]) == {"grammaticality", "answerability", "relevance"}
    for cell in payload["table"]["rquge"].values():
        for key in ("pearson", "spearman", "kendall"):
            assert -1.0 <= cell[key] <= 1.0
        assert cell["n"] == 20
    assert set(payload["annotator_kappa"]) == {"a|b", "a|c", "b|c"}
    header = Path(f"{out}.csv").read_text().splitlines()[0]
    assert header.startswith("metric,grammaticality_pearson")


def test_metaeval_excluded_ids_partial(tmp_path):
    scores = tmp_path / "scores.jsonl"
    assert main(["score", "--dataset", str(DATASET_20), "--out", str(scores), "--seed", "7"]) == 0
    ids = [row["id"] for row in read_jsonl(scores)]
    annotations = annotations_file(tmp_path, ids[:-1])  # one instance unannotated
    out = tmp_path / "correlation"
    code = main(
        [
            "metaeval",
            "--scores",
            str(scores),
            "--annotations",
            str(annotations),
            "--criterion",
            "answerability",
            "--out",
            str(out),
        ]
    )
    assert code == 2
    payload = json.loads(Path(f"{out}.json").read_text())
    assert payload["excluded_ids"] == [ids[-1]]


def test_metaeval_on_baseline_rows(tmp_path):
    base_out = tmp_path / "baseline.jsonl"
    assert main(["baseline", "--dataset", str(DATASET_20), "--out", str(base_out), "--metric", "bleu4"]) == 0
    ids = sorted({row["id"] for row in read_jsonl(base_out)})
    annotations = annotations_file(tmp_path, ids)
    out = tmp_path / "corr"
    code = main(
        [
            "metaeval",
            "--scores",
            str(base_out),
            "--annotations",
            str(annotations),
            "--criterion",
            "relevance",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    payload = json.loads(Path(f"{out}.json").read_text())
    assert "bleu4" in payload["table"]


# -- synth --


def test_synth_golden_bytes(tmp_path):
    golden = (DATA_DIR / "golden_synth.jsonl").read_bytes()
    for run in range(2):
        out = tmp_path / f"synth-{run}.jsonl"
        code = main(
            [
                "synth",
                "--contexts",
                str(CONTEXTS_12),
                "--out",
                str(out),
                "--seed",
                "7",
                "--k",
                "3",
                "--select",
                "rquge",
            ]
        )
        assert code == 0
        assert out.read_bytes() == golden
        trainer = json.loads(out.with_suffix(".trainer-config.json").read_text())
        assert trainer["model"] == "t5-small"


def test_synth_training_file_loads_back(tmp_path):
    from rquge.core import load_dataset

    out = tmp_path / "train.jsonl"
    assert main(["synth", "--contexts", str(CONTEXTS_12), "--out", str(out), "--seed", "2"]) == 0
    instances = load_dataset(out)
    assert len(instances) == 12
    for instance in instances:
        start = instance.gold_answer.char_start
        assert instance.context[start : start + len(instance.gold_answer.text)] == instance.gold_answer.text


def test_synth_skipped_contexts_partial(tmp_path):
    contexts = tmp_path / "contexts.jsonl"
    contexts.write_text(
        json.dumps({"context": "Nothing recognizable lives in this text."})
        + "\n"
        + json.dumps({"context": "The archive in France mentions Prussia."})
        + "\n"
    )
    out = tmp_path / "train.jsonl"
    code = main(["synth", "--contexts", str(contexts), "--out", str(out), "--seed", "2"])
    assert code == 2
    manifest = manifest_of(out)
    assert manifest["failures"] == ["0"]


# -- baseline --


def test_baseline_rows(tmp_path):
    out = tmp_path / "baseline.jsonl"
    code = main(
        ["baseline", "--dataset", str(DATASET_20), "--out", str(out), "--metric", "bleu4,rouge1,rougeL"]
    )
    assert code == 0
    rows = read_jsonl(out)
    assert len(rows) == 60
    for row in rows:
        assert set(row) == {"id", "metric_name", "value"}
        assert 0.0 <= row["value"] <= 1.0


def test_baseline_requires_reference(tmp_path):
    instances = [
        QGInstance(
            id="no-ref",
            context="A context in France without reference.",
            gold_answer=AnswerSpan(text="France"),
            candidates=(CandidateQuestion("which place?", ppl=2.0),),
        )
    ]
    dataset = tmp_path / "d.jsonl"
    save_dataset(instances, dataset)
    out = tmp_path / "baseline.jsonl"
    assert main(["baseline", "--dataset", str(dataset), "--out", str(out), "--metric", "bleu4"]) == 2
    assert manifest_of(out)["failures"] == ["no-ref"]


def test_baseline_unknown_metric_is_per_instance_failure(tmp_path):
    dataset = small_dataset(tmp_path)
    out = tmp_path / "baseline.jsonl"
    assert main(["baseline", "--dataset", str(dataset), "--out", str(out), "--metric", "nope"]) == 2
    assert len(manifest_of(out)["failures"]) == 3
