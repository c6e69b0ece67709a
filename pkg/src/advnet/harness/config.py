"""Experiment configuration: an INI file with [experiment], [data], [model], [attack], [defense]."""

from __future__ import annotations

import configparser
import glob
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from advnet.attacks import AttackSpec
from advnet.dataset import SplitSpec
from advnet.defenses import DefenseSpec
from advnet.models import TrainConfig

OUTPUT_ROOT_ENV = "ADVNET_OUTPUT_ROOT"

SCENARIOS = {"ids-binary": "nslkdd", "traffic-10class": "moore-arff"}
DEFAULT_CLASSES = {
    "ids-binary": {"source_class": "DoS", "target_class": "Normal", "specificity": "targeted"},
    "traffic-10class": {"source_class": "MAIL", "target_class": "", "specificity": "non-targeted"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending section.option."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# section -> option -> (type, default). Documented in docs/config-reference.md.
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "experiment": {
        "scenario": (str, "ids-binary"),
        "seed": (int, 0),
        "output": (str, ""),
        "workers": (int, 1),
        "transfer": (bool, False),
    },
    "data": {
        "train": (str, ""),
        "test": (str, ""),
        "train_fraction": (float, 0.8),
        "max_train": (int, 0),
        "max_test": (int, 0),
    },
    "model": {
        "kind": (str, "mlp"),
        "epochs": (int, 30),
        "batch_size": (int, 64),
        "learning_rate": (float, 0.01),
        "hidden": (str, "100,100,100,100"),
        "C": (float, 1.0),
        "gamma": (str, "auto"),
        "tol": (float, 1e-3),
        "max_iter": (int, 10_000_000),
        "cache_mb": (int, 256),
    },
    "attack": {
        "kind": (str, "mi-l1"),
        "epsilon": (float, 1e-2),
        "max_features": (int, 2),
        "source_class": (str, ""),
        "target_class": (str, ""),
        "specificity": (str, ""),
        "iterations": (int, 10),
        "alpha": (str, "auto"),
        "theta": (str, "auto"),
        "bins": (int, 10),
        "knowledge": (str, "white-box"),
        "phase": (str, "evasion"),
        "max_examples": (int, 0),
    },
    "defense": {
        "kind": (str, "feature-squeezing"),
        "mix_ratio": (float, 0.3),
        "bits": (int, 5),
        "squeeze_training": (bool, False),
    },
}


HELP = {
    "experiment.scenario": "`ids-binary` (NSL-KDD, Normal vs DoS) or `traffic-10class` (Moore ARFF)",
    "experiment.seed": "global seed: split, initialization, batch order, adversarial-training draw",
    "experiment.output": "work directory for all artifacts, relative to the config file",
    "experiment.workers": "crafting threads; artifacts do not depend on it",
    "experiment.transfer": "also train the other model family and re-score the examples against it",
    "data.train": "training file(s), comma-separated; a directory means every file in it",
    "data.test": "separate test file(s); when empty the training files are split",
    "data.train_fraction": "training share of the stratified split (ignored with `test`)",
    "data.max_train": "stratified cap on training rows, 0 for no cap",
    "data.max_test": "stratified cap on test rows, 0 for no cap",
    "model.kind": "`svm` (RBF kernel, one-vs-rest) or `mlp`",
    "model.epochs": "MLP passes over the training set",
    "model.batch_size": "MLP mini-batch size",
    "model.learning_rate": "MLP SGD step size",
    "model.hidden": "MLP hidden layer widths",
    "model.C": "SVM box constraint",
    "model.gamma": "RBF width; `auto` means 1/d",
    "model.tol": "SVM stopping tolerance on the KKT gap",
    "model.max_iter": "SVM iteration cap per binary machine",
    "model.cache_mb": "SVM kernel cache size",
    "attack.kind": "`mi-l1`, `fgsm`, `bim` or `jsma`",
    "attack.epsilon": "max-norm budget per feature, in normalized units",
    "attack.max_features": "feature budget for `mi-l1` and `jsma`",
    "attack.source_class": "class whose test rows are attacked; scenario default when empty",
    "attack.target_class": "class to reach; empty for non-targeted",
    "attack.specificity": "`targeted` or `non-targeted`; follows `target_class` when empty",
    "attack.iterations": "BIM steps",
    "attack.alpha": "BIM step size; `auto` means epsilon / iterations",
    "attack.theta": "JSMA step size; `auto` means epsilon",
    "attack.bins": "equal-width bins for the mutual-information ranking",
    "attack.knowledge": "`white-box` (the only executable value), `black-box-query`, `black-box-zero-query`",
    "attack.phase": "`evasion` (the only executable value) or `poisoning`",
    "attack.max_examples": "attack only the first N source rows, 0 for all",
    "defense.kind": "`feature-squeezing` or `adversarial-training`",
    "defense.mix_ratio": "adversarial share of the augmented training set",
    "defense.bits": "squeezing precision; 2**bits levels per feature",
    "defense.squeeze_training": "also retrain the model on squeezed inputs",
}


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    output: Path
    workers: int
    transfer: bool
    train_paths: list[Path]
    test_paths: list[Path]
    split: SplitSpec
    max_train: int
    max_test: int
    model_kind: str
    train_config: TrainConfig
    attack: AttackSpec | None
    source_class: str
    target_class: str | None
    max_examples: int
    defense: DefenseSpec | None
    raw: dict = field(default_factory=dict)

    @property
    def data_format(self) -> str:
        return SCENARIOS[self.scenario]

    def canonical(self) -> dict:
        """Everything that affects results; output location and worker count excluded."""
        raw = json.loads(json.dumps(self.raw))
        raw.get("experiment", {}).pop("output", None)
        raw.get("experiment", {}).pop("workers", None)
        return raw

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()


def _convert(key: str, kind: type, text: str):
    try:
        if kind is bool:
            lowered = text.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind.__name__}") from None


def _expand_paths(key: str, text: str, base: Path) -> list[Path]:
    paths = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        p = Path(part)
        if not p.is_absolute():
            p = base / p
        if p.is_dir():
            found = sorted(Path(f) for f in glob.glob(str(p / "*")) if Path(f).is_file())
            if not found:
                raise ConfigError(key, f"directory {p} holds no files")
            paths.extend(found)
        elif any(ch in part for ch in "*?["):
            found = sorted(Path(f) for f in glob.glob(str(p)))
            if not found:
                raise ConfigError(key, f"pattern {part!r} matches nothing")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise ConfigError(key, f"path {p} does not exist")
    return paths


def _key_for(section: str, message: str) -> str:
    """Best guess at the option a validation message is about."""
    for option in sorted(SCHEMA[section], key=len, reverse=True):
        if message.startswith(option) or f" {option} " in f" {message} ":
            return f"{section}.{option}"
    return section


def read_ini(path: str | Path) -> dict[str, dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read(path)
    return {s: dict(parser.items(s)) for s in parser.sections()}


def parse_config(
    sections: dict[str, dict[str, str]],
    base_dir: str | Path = ".",
    require_data: bool = True,
) -> ExperimentConfig:
    """Validate raw INI sections into an ``ExperimentConfig``.

    Unknown sections or options, unparsable values and inconsistent settings
    raise ``ConfigError`` naming the key.
    """
    base = Path(base_dir)
    values: dict[str, dict[str, object]] = {}
    for section, options in sections.items():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for option in options:
            if option not in SCHEMA[section]:
                raise ConfigError(f"{section}.{option}", "unknown option")
    for section, options in SCHEMA.items():
        given = sections.get(section, {})
        values[section] = {
            opt: _convert(f"{section}.{opt}", kind, given[opt]) if opt in given else default
            for opt, (kind, default) in options.items()
        }

    exp, data, mdl, atk = values["experiment"], values["data"], values["model"], values["attack"]
    scenario = exp["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("experiment.scenario", f"{scenario!r} is not one of {', '.join(SCENARIOS)}")
    seed = exp["seed"]
    if seed < 0:
        raise ConfigError("experiment.seed", "must be non-negative")
    if exp["workers"] < 1:
        raise ConfigError("experiment.workers", "must be >= 1")

    output = exp["output"] or os.environ.get(OUTPUT_ROOT_ENV, "") or "advnet-runs"
    output = Path(output)
    if not output.is_absolute():
        output = base / output

    train_paths = _expand_paths("data.train", data["train"], base) if data["train"] else []
    test_paths = _expand_paths("data.test", data["test"], base) if data["test"] else []
    if require_data and not train_paths:
        raise ConfigError("data.train", "no training data given")
    try:
        split = SplitSpec(data["train_fraction"], seed)
    except ValueError as exc:
        raise ConfigError("data.train_fraction", str(exc)) from None
    for key in ("max_train", "max_test"):
        if data[key] < 0:
            raise ConfigError(f"data.{key}", "must be >= 0 (0 means no limit)")

    if mdl["kind"] not in ("svm", "mlp"):
        raise ConfigError("model.kind", f"{mdl['kind']!r} is not one of svm, mlp")
    try:
        hidden = tuple(int(h) for h in str(mdl["hidden"]).split(",") if h.strip())
    except ValueError:
        raise ConfigError("model.hidden", "expected comma-separated integers") from None
    gamma = None if str(mdl["gamma"]).lower() == "auto" else _convert("model.gamma", float, mdl["gamma"])
    try:
        train_config = TrainConfig(
            epochs=mdl["epochs"], batch_size=mdl["batch_size"], learning_rate=mdl["learning_rate"],
            seed=seed, hidden=hidden, C=mdl["C"], gamma=gamma, tol=mdl["tol"],
            max_iter=mdl["max_iter"], cache_mb=mdl["cache_mb"],
        )
    except ValueError as exc:
        raise ConfigError(_key_for("model", str(exc)), str(exc)) from None

    defaults = DEFAULT_CLASSES[scenario]
    source_class = atk["source_class"] or defaults["source_class"]
    target_class = atk["target_class"] if "target_class" in sections.get("attack", {}) else defaults["target_class"]
    target_class = target_class or None
    specificity = atk["specificity"] or ("targeted" if target_class else "non-targeted")
    attack = None
    if "attack" in sections:
        alpha = None if str(atk["alpha"]).lower() == "auto" else _convert("attack.alpha", float, atk["alpha"])
        theta = None if str(atk["theta"]).lower() == "auto" else _convert("attack.theta", float, atk["theta"])
        try:
            # class names resolve to indices once the dataset is known; 0 is a placeholder
            attack = AttackSpec(
                kind=atk["kind"], epsilon=atk["epsilon"], max_features=atk["max_features"],
                target_class=0 if target_class else None, iterations=atk["iterations"],
                alpha=alpha, theta=theta, bins=atk["bins"], knowledge=atk["knowledge"],
                phase=atk["phase"], specificity=specificity,
            )
        except ValueError as exc:
            raise ConfigError(_key_for("attack", str(exc)), str(exc)) from None
    if atk["max_examples"] < 0:
        raise ConfigError("attack.max_examples", "must be >= 0 (0 means all)")

    defense = None
    if "defense" in sections:
        d = values["defense"]
        try:
            defense = DefenseSpec(d["kind"], d["mix_ratio"], d["bits"], d["squeeze_training"])
        except ValueError as exc:
            raise ConfigError(_key_for("defense", str(exc)), str(exc)) from None

    raw = {s: {k: str(v) for k, v in sorted(opts.items())} for s, opts in sorted(sections.items())}
    return ExperimentConfig(
        scenario=scenario, seed=seed, output=output, workers=exp["workers"], transfer=exp["transfer"],
        train_paths=train_paths, test_paths=test_paths, split=split,
        max_train=data["max_train"], max_test=data["max_test"],
        model_kind=mdl["kind"], train_config=train_config, attack=attack,
        source_class=source_class, target_class=target_class, max_examples=atk["max_examples"],
        defense=defense, raw=raw,
    )


def load_config(path: str | Path, require_data: bool = True) -> ExperimentConfig:
    path = Path(path)
    return parse_config(read_ini(path), base_dir=path.parent, require_data=require_data)


def reference_markdown() -> str:
    """Generated option reference (written to docs/config-reference.md)."""
    lines = ["# Experiment config reference", "",
             "INI file; every option is optional and falls back to the default shown.", ""]
    for section, options in SCHEMA.items():
        lines += [f"## [{section}]", "", "| option | type | default | meaning |", "|---|---|---|---|"]
        for opt, (kind, default) in options.items():
            shown = f"`{default}`" if default != "" else "(empty)"
            lines.append(f"| `{opt}` | {kind.__name__} | {shown} | {HELP[f'{section}.{opt}']} |")
        lines.append("")
    lines += ["Sections `[attack]` and `[defense]` are optional; without them the run stops at clean",
              "evaluation or skips the defense.", "",
              f"The output directory falls back to `${OUTPUT_ROOT_ENV}`, then `./advnet-runs`.", "",
              "Scenario defaults: `ids-binary` attacks DoS rows toward Normal (targeted);",
              "`traffic-10class` attacks MAIL rows toward any other class (non-targeted).", ""]
    return "\n".join(lines)
