"""Pipeline stages: ingest -> train -> attack -> defend -> evaluate -> report.

Each stage reads the previous stage's files from the work directory and
writes its own, so running the stages one by one produces the same files as
``run_experiment``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from advnet.attacks import AttackSpec, craft_examples, read_examples, rescore, success_rate, write_examples
from advnet.dataset import (
    MOORE_CLASS_MAP,
    MOORE_CLASSES,
    NSLKDD_SCHEMA,
    REFERENCE_IDS_WIDTH,
    Dataset,
    filter_binary,
    load_dataset,
    norm_fingerprint,
    parse_moore,
    parse_nslkdd,
    prepare,
    save_dataset,
)
from advnet.defenses import DefenseKind, SqueezedModel, adversarial_training, squeeze_dataset
from advnet.harness.config import ExperimentConfig
from advnet.metrics import (
    EvaluationReport,
    accuracy_variance,
    chart_csv,
    classification_report,
    confusion_csv,
    inference_stability,
    inference_stability_by_class,
    misclassification_ratio,
)
from advnet.models import load_model, predict_proba, save_model, train_model

logger = logging.getLogger(__name__)

IDS_CLASSES = ("Normal", "DoS")
DATA_DIR = "data"
MODEL_FILE = "model.json"
TRANSFER_MODEL_FILE = "transfer_model.json"
EXAMPLES_FILE = "adversarial.csv"
DEFENSE_FILE = "defense.json"
DEFENDED_MODEL_FILE = "defended_model.json"
REPORT_FILE = "report.json"
MANIFEST_FILE = "manifest.json"

# Defense-evaluation checklist (docs/defense-checklist.md); the report marks
# which items a run exercises.
CHECKLIST = {
    "threat_model_stated": "The adversary's knowledge of the model is stated (threat model recorded)",
    "adaptive_adversary": "Examples are crafted against the defended model itself",
    "gradient_attack": "The defense faces a gradient-based attack (FGSM, BIM or JSMA)",
    "multiple_metrics": "Robustness is reported under more than one metric",
    "strong_attack": "The defense faces an iterative or optimization-based attack",
    "out_of_distribution": "Examples outside the training distribution are evaluated",
    "transferability_checked": "Examples are re-scored against a second model family",
    "clean_accuracy_reported": "Clean accuracy is reported next to attacked accuracy",
    "defense_evaluated": "A defense was applied and re-evaluated on the same examples",
}


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing upstream artifact: {path}")
    return path


def _read_lines(paths) -> str:
    return "".join(Path(p).read_text() for p in paths)


def ingest_records(fmt: str, train_paths, test_paths=(), ) -> tuple:
    """Parse source files into (schema, class_names, train_records, test_records or None)."""
    if fmt == "nslkdd":
        train = filter_binary(parse_nslkdd(_read_lines(train_paths)))
        test = filter_binary(parse_nslkdd(_read_lines(test_paths))) if test_paths else None
        return NSLKDD_SCHEMA, IDS_CLASSES, train, test
    if fmt == "moore-arff":
        schema, train = None, []
        for p in train_paths:
            s, recs = parse_moore(Path(p).read_text(), MOORE_CLASS_MAP)
            if schema is not None and s.names != schema.names:
                raise ValueError(f"{p}: attribute declarations differ from {train_paths[0]}")
            schema = schema or s
            train.extend(recs)
        test = None
        if test_paths:
            test = []
            for p in test_paths:
                s, recs = parse_moore(Path(p).read_text(), MOORE_CLASS_MAP)
                if s.names != schema.names:
                    raise ValueError(f"{p}: attribute declarations differ from the training files")
                test.extend(recs)
        present = {r.label for r in train}
        classes = tuple(c for c in MOORE_CLASSES if c in present)
        return schema, classes, train, test
    raise ValueError(f"unknown data format {fmt!r}")


def stage_ingest(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    schema, classes, train_recs, test_recs = ingest_records(cfg.data_format, cfg.train_paths, cfg.test_paths)
    warn = REFERENCE_IDS_WIDTH if cfg.scenario == "ids-binary" else None
    train, test, fitted = prepare(train_recs, schema, cfg.split, classes, warn_width=warn,
                                  test_records=test_recs, max_train=cfg.max_train, max_test=cfg.max_test)
    out = cfg.output / DATA_DIR
    save_dataset(train, out, "train")
    save_dataset(test, out, "test")
    (out / "schema.json").write_text(json.dumps(fitted.to_dict(), indent=2, sort_keys=True) + "\n")
    logger.info("ingested %d train / %d test rows, d=%d", len(train), len(test), train.n_features)
    return train, test


def _load_splits(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    d = cfg.output / DATA_DIR
    return load_dataset(d, "train"), load_dataset(d, "test")


def stage_train(cfg: ExperimentConfig):
    train, _ = _load_splits(cfg)
    fp = norm_fingerprint(train.norm_params)
    model = train_model(cfg.model_kind, train.matrix, train.labels, train.n_classes, cfg.train_config)
    save_model(cfg.output / MODEL_FILE, model, cfg.train_config, fp)
    if cfg.transfer:
        other = "svm" if cfg.model_kind == "mlp" else "mlp"
        twin = train_model(other, train.matrix, train.labels, train.n_classes, cfg.train_config)
        save_model(cfg.output / TRANSFER_MODEL_FILE, twin, cfg.train_config, fp)
    return model


def resolve_attack(cfg: ExperimentConfig, dataset: Dataset) -> tuple[AttackSpec, int]:
    source = dataset.class_index(cfg.source_class)
    target = dataset.class_index(cfg.target_class) if cfg.target_class else None
    return replace(cfg.attack, target_class=target), source


def stage_attack(cfg: ExperimentConfig, model_path: Path | None = None):
    if cfg.attack is None:
        raise ValueError("config has no [attack] section")
    train, test = _load_splits(cfg)
    model = load_model(_require(model_path or cfg.output / MODEL_FILE), train.n_features,
                       norm_fingerprint(train.norm_params))
    spec, source = resolve_attack(cfg, train)
    indices = np.flatnonzero(test.labels == source)
    if cfg.max_examples:
        indices = indices[:cfg.max_examples]
    examples = craft_examples(model, test, spec, source, train=train, indices=indices, workers=cfg.workers)
    extra = {"source_class": cfg.source_class, "target_class": cfg.target_class, "model": model.kind}
    transfer_path = cfg.output / TRANSFER_MODEL_FILE
    if cfg.transfer and transfer_path.exists():
        twin = load_model(transfer_path, train.n_features)
        extra["transfer"] = {"model": twin.kind, "success_rate": success_rate(rescore(examples, twin, spec))}
    extra["success_rate"] = success_rate(examples)
    write_examples(examples, spec, cfg.output / EXAMPLES_FILE, test.feature_names, extra)
    return examples


def stage_defend(cfg: ExperimentConfig):
    spec = cfg.defense
    record = {"defense": spec.to_dict() if spec else None}
    (cfg.output / DEFENDED_MODEL_FILE).unlink(missing_ok=True)
    if spec is not None:
        train, _ = _load_splits(cfg)
        fp = norm_fingerprint(train.norm_params)
        if spec.kind is DefenseKind.ADVERSARIAL_TRAINING:
            if cfg.attack is None:
                raise ValueError("adversarial training needs an [attack] section")
            base = load_model(_require(cfg.output / MODEL_FILE), train.n_features, fp)
            attack, _ = resolve_attack(cfg, train)
            defended = adversarial_training(train, attack, cfg.model_kind, cfg.train_config, spec,
                                            base_model=base, workers=cfg.workers)
            save_model(cfg.output / DEFENDED_MODEL_FILE, defended, cfg.train_config, fp)
        elif spec.squeeze_training:
            squeezed = squeeze_dataset(train, spec.bits)
            defended = train_model(cfg.model_kind, squeezed.matrix, squeezed.labels,
                                   squeezed.n_classes, cfg.train_config)
            save_model(cfg.output / DEFENDED_MODEL_FILE, defended, cfg.train_config, fp)
    (cfg.output / DEFENSE_FILE).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return record


def _defended_model(cfg: ExperimentConfig, base, n_features: int):
    record = json.loads((cfg.output / DEFENSE_FILE).read_text())
    spec = record["defense"]
    if spec is None:
        return None, None
    model = base
    if (cfg.output / DEFENDED_MODEL_FILE).exists():
        model = load_model(cfg.output / DEFENDED_MODEL_FILE, n_features)
    if spec["kind"] == DefenseKind.FEATURE_SQUEEZING.value:
        model = SqueezedModel(model, spec["bits"])
    return model, spec


def _attacked_matrix(test: Dataset, examples) -> np.ndarray:
    X = test.matrix.copy()
    for ex in examples:
        X[ex.source_index] = ex.perturbed
    return X


def stage_evaluate(cfg: ExperimentConfig) -> dict:
    """Clean metrics always; attack and defense sections when their artifacts exist."""
    train, test = _load_splits(cfg)
    model = load_model(_require(cfg.output / MODEL_FILE), train.n_features, norm_fingerprint(train.norm_params))
    C = test.n_classes
    clean_pred = model.predict(test.matrix)
    report = EvaluationReport(test.class_names, classification_report(clean_pred, test.labels, C))
    report.metadata = {
        "scenario": cfg.scenario,
        "model": cfg.model_kind,
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "n_train": len(train),
        "n_test": len(test),
        "n_features": test.n_features,
        "attack": None,
        "defense": cfg.defense.to_dict() if cfg.defense else None,
    }
    exercised = {"clean_accuracy_reported"}

    examples_path = cfg.output / EXAMPLES_FILE
    if examples_path.exists():
        examples, spec, meta = read_examples(examples_path, test)
        report.metadata["attack"] = spec.to_dict()
        exercised |= {"threat_model_stated", "multiple_metrics"}
        if spec.kind.value in ("fgsm", "bim", "jsma"):
            exercised.add("gradient_attack")
        if spec.kind.value in ("bim", "jsma", "mi-l1"):
            exercised.add("strong_attack")
        X_adv = _attacked_matrix(test, examples)
        report.after = classification_report(model.predict(X_adv), test.labels, C)
        report.accuracy_variance = accuracy_variance([report.before.accuracy], [report.after.accuracy])
        if examples:
            idx = np.array([ex.source_index for ex in examples])
            p_before = predict_proba(model, test.matrix[idx])
            p_after = predict_proba(model, X_adv[idx])
            report.inference_stability = inference_stability(p_before, p_after)
            report.misclassification_ratio = misclassification_ratio(examples)
            source = examples[0].source_class
            report.attack_summary = {
                "attempted": len(examples),
                "succeeded": int(sum(ex.succeeded for ex in examples)),
                "source_class": test.class_names[source],
                "source_recall_clean": float(np.mean([ex.predicted_before == source for ex in examples])),
                "source_recall_attacked": float(np.mean([ex.predicted_after == source for ex in examples])),
                "mean_features_perturbed": float(np.mean([ex.support.size for ex in examples])),
            }
            if "transfer" in meta:
                report.attack_summary["transfer"] = meta["transfer"]
                exercised.add("transferability_checked")
        else:
            report.attack_summary = {"attempted": 0, "succeeded": 0}
        report.inference_stability_by_class = inference_stability_by_class(
            predict_proba(model, test.matrix), predict_proba(model, X_adv), test.labels, C)

    defense_path = cfg.output / DEFENSE_FILE
    if defense_path.exists():
        defended, spec = _defended_model(cfg, model, train.n_features)
        if defended is not None:
            exercised.add("defense_evaluated")
            section = {"spec": spec,
                       "clean": classification_report(defended.predict(test.matrix), test.labels, C)
                       .to_dict(test.class_names)}
            if examples_path.exists() and examples:
                attacked_pred = defended.predict(X_adv)
                section["attacked"] = classification_report(attacked_pred, test.labels, C).to_dict(test.class_names)
                after = attacked_pred[idx]
                section["misclassification_ratio"] = float(np.mean(after != source))
                section["source_recall_attacked"] = float(np.mean(after == source))
                section["inference_stability_bits"] = inference_stability(
                    predict_proba(defended, test.matrix[idx]), predict_proba(defended, X_adv[idx]))
            report.defense = section

    out = report.to_dict()
    out["checklist"] = {key: {"item": text, "exercised": key in exercised} for key, text in CHECKLIST.items()}
    (cfg.output / REPORT_FILE).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return out


def stage_report(workdir: Path) -> list[Path]:
    """Regenerate CSV chart data and confusion matrices from an existing report.json."""
    report = json.loads(_require(Path(workdir) / REPORT_FILE).read_text())
    written = []
    for phase in ("before", "after"):
        if report.get(phase) is not None:
            p = Path(workdir) / f"confusion_{phase}.csv"
            p.write_text(confusion_csv(report, phase))
            written.append(p)
    p = Path(workdir) / "chart.csv"
    p.write_text(chart_csv(report))
    written.append(p)
    return written


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: ExperimentConfig) -> Path:
    artifacts = {}
    for p in sorted(cfg.output.rglob("*")):
        if p.is_file() and p.name != MANIFEST_FILE:
            artifacts[p.relative_to(cfg.output).as_posix()] = _sha256(p)
    manifest = {
        "config_digest": cfg.digest(),
        "config": cfg.canonical(),
        "seeds": {"global": cfg.seed, "split": cfg.split.seed, "model": cfg.train_config.seed},
        "artifacts": artifacts,
    }
    path = cfg.output / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig) -> dict:
    cfg.output.mkdir(parents=True, exist_ok=True)
    stage_ingest(cfg)
    stage_train(cfg)
    if cfg.attack is not None:
        stage_attack(cfg)
    else:
        # a rerun without an attack must not pick up examples from an earlier run
        for name in (EXAMPLES_FILE, Path(EXAMPLES_FILE).with_suffix(".json").name):
            (cfg.output / name).unlink(missing_ok=True)
    stage_defend(cfg)
    report = stage_evaluate(cfg)
    stage_report(cfg.output)
    write_manifest(cfg)
    return report
