"""Metrics and the experiment runner behind the accuracy-vs-seed-size curves.

A run is fully described by a RunConfig (corpus, models, augmentation
scheme, seed schedule, eval composition, rng seed): the same config and
seed always reproduce byte-identical results. One CSV row is written per
(model, schedule step), with a majority-class baseline alongside.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spellnorm import corpus as corpus_mod
from spellnorm.labels import Label
from spellnorm.lstm import LstmClassifier, default_schedule, train_stepwise
from spellnorm.misspell import build_confusion_set, load_patterns
from spellnorm.trigram import TrigramModel
from spellnorm.util import atomic_write_text, derive_seed

CSV_HEADER = "model,n_seed,accuracy,precision_m,recall_m,f1_m,macro_f1,tp,fp,tn,fn,seed"

KNOWN_MODELS = ("chartrilm", "lstm")


@dataclass
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision_m: float
    recall_m: float
    f1_m: float
    macro_f1: float


@dataclass
class CurvePoint:
    model_id: str
    n_seed: int
    metrics: MetricsReport


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2 * precision * recall, precision + recall)


def score(predictions, golds) -> MetricsReport:
    """Confusion counts and derived metrics, misspelled as positive class.

    macro_f1 averages the misspelled-positive and correct-positive F1s;
    both are reported because single-number F1 conventions differ.
    """
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds differ in length")
    if not golds:
        raise ValueError("cannot score an empty set")
    tp = fp = tn = fn = 0
    for pred, gold in zip(predictions, golds):
        if gold is Label.MISSPELLED:
            if pred is Label.MISSPELLED:
                tp += 1
            else:
                fn += 1
        else:
            if pred is Label.MISSPELLED:
                fp += 1
            else:
                tn += 1
    precision_m = _safe_div(tp, tp + fp)
    recall_m = _safe_div(tp, tp + fn)
    precision_c = _safe_div(tn, tn + fn)
    recall_c = _safe_div(tn, tn + fp)
    f1_m = _f1(precision_m, recall_m)
    f1_c = _f1(precision_c, recall_c)
    return MetricsReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / len(golds),
        precision_m=precision_m,
        recall_m=recall_m,
        f1_m=f1_m,
        macro_f1=(f1_m + f1_c) / 2,
    )


@dataclass
class RunConfig:
    """Everything needed to reproduce an experiment."""

    corpus: str = "bundled:english"
    models: list = field(default_factory=lambda: ["chartrilm", "lstm"])
    scheme: str = "logFreq"
    schedule: list | None = None
    n_seed_max: int = 500
    eval_fraction: float = 0.5
    eval_size: int = 200
    dev_exclude: int = 500
    test_exclude: int = 1000
    eval_set: str = "synthetic"  # or a labelled-TSV path
    patterns: str | None = None
    seed: int = 0
    out_dir: str = "results"

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"{path}: unknown config keys {sorted(extra)}")
        return cls(**raw)

    def merged(self, **overrides) -> "RunConfig":
        data = dataclasses.asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**data)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, ensure_ascii=False)

    def resolved_schedule(self) -> list[int]:
        return list(self.schedule) if self.schedule else default_schedule(self.n_seed_max)


def load_config_table(config: RunConfig):
    name = config.corpus
    if name.startswith("bundled:"):
        return corpus_mod.bundled_table(name.split(":", 1)[1])
    path = Path(name)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    return corpus_mod.load_corpus(path)


def _majority_predictions(golds) -> list[Label]:
    n_mis = sum(1 for g in golds if g is Label.MISSPELLED)
    majority = Label.MISSPELLED if n_mis > len(golds) - n_mis else Label.CORRECT
    return [majority] * len(golds)


def _trigram_curve(table, schedule, eval_set, config: RunConfig, patterns) -> list[CurvePoint]:
    """Stepwise trigram run.

    Each new seed tranche contributes one confusion set per word: the
    correct copies update the counts (the same augmented data the neural
    route trains on, table scheme) and the full entries extend the running
    labelled pool the threshold recalibrates against.
    """
    model = TrigramModel()
    pool: list = []
    seeds = table.top(schedule[-1])
    alphabet = table.alphabet()
    tokens = eval_set.tokens()
    golds = eval_set.golds()
    points = []
    previous = 0
    for step, n_seed in enumerate(schedule):
        tranche = seeds[previous:n_seed]
        rng = random.Random(derive_seed(config.seed, "trigram-calib", str(step)))
        for word in tranche:
            cset = build_confusion_set(
                word, rng, alphabet=alphabet, forbidden=set(seeds[:n_seed]), patterns=patterns
            )
            model.update(tok for tok, lab in cset.entries if lab is Label.CORRECT)
            pool.extend(cset.entries)
        model.calibrate_threshold(pool)
        predictions = [model.predict(tok) for tok in tokens]
        points.append(CurvePoint("chartrilm", n_seed, score(predictions, golds)))
        previous = n_seed
    return points


def _lstm_curve(table, schedule, eval_set, config: RunConfig, patterns) -> list[CurvePoint]:
    model = LstmClassifier(table.alphabet(), init_seed=derive_seed(config.seed, "lstm-init"))
    snapshots = train_stepwise(
        model, table, schedule, config.scheme, derive_seed(config.seed, "lstm"), patterns=patterns
    )
    tokens = eval_set.tokens()
    golds = eval_set.golds()
    model_id = f"lstm-{config.scheme}"
    return [
        CurvePoint(model_id, n_seed, score(snap.predict(tokens), golds))
        for n_seed, snap in snapshots
    ]


def build_eval_set(config: RunConfig, table) -> corpus_mod.EvalSet:
    if config.eval_set != "synthetic":
        path = Path(config.eval_set)
        if not path.exists():
            raise FileNotFoundError(f"eval set file not found: {path}")
        return corpus_mod.read_eval_tsv(path)
    split_rng = random.Random(derive_seed(config.seed, "splits"))
    _, test = corpus_mod.make_splits(
        table,
        split_rng,
        dev_size=config.eval_size,
        test_size=config.eval_size,
        dev_exclude=config.dev_exclude,
        test_exclude=config.test_exclude,
    )
    patterns = load_patterns(config.patterns) if config.patterns else None
    synth_rng = random.Random(derive_seed(config.seed, "synth"))
    return corpus_mod.synthesize_eval_set(
        test.tokens(),
        synth_rng,
        misspell_fraction=config.eval_fraction,
        alphabet=table.alphabet(),
        forbidden=set(table.entries),
        patterns=patterns,
    )


def run_experiment(config: RunConfig, csv_path=None) -> list[CurvePoint]:
    """Train every configured model over the schedule and score each step
    on a fixed test set; optionally write the results CSV."""
    for model_id in config.models:
        if model_id not in KNOWN_MODELS:
            raise ValueError(f"unknown model {model_id!r}; known: {KNOWN_MODELS}")
    table = load_config_table(config)
    patterns = load_patterns(config.patterns) if config.patterns else None
    schedule = config.resolved_schedule()
    if schedule[-1] > len(table):
        raise ValueError(
            f"schedule needs {schedule[-1]} seed words but the corpus has {len(table)}"
        )
    eval_set = build_eval_set(config, table)

    points: list[CurvePoint] = []
    if "chartrilm" in config.models:
        points.extend(_trigram_curve(table, schedule, eval_set, config, patterns))
    if "lstm" in config.models:
        points.extend(_lstm_curve(table, schedule, eval_set, config, patterns))
    golds = eval_set.golds()
    baseline = score(_majority_predictions(golds), golds)
    points.extend(CurvePoint("majority", n, baseline) for n in schedule)

    points.sort(key=lambda p: (p.model_id, p.n_seed))
    if csv_path is not None:
        write_results_csv(csv_path, points, config)
    return points


def write_results_csv(path, points, config: RunConfig) -> None:
    """CSV with the config embedded as a comment so any curve can be
    regenerated from the artifact alone."""
    lines = [f"# config: {config.to_json()}", f"# seed: {config.seed}", CSV_HEADER]
    for p in points:
        m = p.metrics
        lines.append(
            f"{p.model_id},{p.n_seed},{m.accuracy:.6f},{m.precision_m:.6f},"
            f"{m.recall_m:.6f},{m.f1_m:.6f},{m.macro_f1:.6f},"
            f"{m.tp},{m.fp},{m.tn},{m.fn},{config.seed}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
