"""Command-line entry points: train, eval, synth, serve, suggest.

Every command validates its inputs eagerly, writes only inside the
output directory, prints a machine-parseable JSON summary as its last
line, and exits 0/1/2 for ok / user error / internal error. Flags mirror
the config-file keys one-to-one and win over the file.
"""

from __future__ import annotations

import json
import random
import sys
import traceback
from pathlib import Path

import click

from spellnorm import corpus as corpus_mod
from spellnorm import evaluate
from spellnorm.kb import KnowledgeBase
from spellnorm.lstm import LstmClassifier, train_stepwise
from spellnorm.misspell import build_confusion_set, load_patterns
from spellnorm.trigram import TrigramModel
from spellnorm.util import derive_seed

from spellnorm.labels import Label


class UserError(Exception):
    """Bad input or environment; exits with status 1."""


def _summary(**kv) -> None:
    click.echo(json.dumps(kv, sort_keys=True, ensure_ascii=False))


def _base_config(ctx) -> evaluate.RunConfig:
    path = ctx.obj.get("config")
    if path is None:
        config = evaluate.RunConfig()
    else:
        if not Path(path).exists():
            raise UserError(f"config file not found: {path}")
        try:
            config = evaluate.RunConfig.from_file(path)
        except (ValueError, json.JSONDecodeError) as exc:
            raise UserError(f"bad config file {path}: {exc}")
    overrides = {}
    if ctx.obj.get("seed") is not None:
        overrides["seed"] = ctx.obj["seed"]
    if ctx.obj.get("out") is not None:
        overrides["out_dir"] = ctx.obj["out"]
    return config.merged(**overrides)


def _ensure_out(config: evaluate.RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_table(config: evaluate.RunConfig):
    try:
        return evaluate.load_config_table(config)
    except FileNotFoundError as exc:
        raise UserError(str(exc))


@click.group()
@click.option("--config", type=click.Path(), default=None, help="JSON run-config file.")
@click.option("--seed", type=int, default=None, help="Root random seed (wins over config).")
@click.option("--out", type=click.Path(), default=None, help="Output directory (wins over config).")
@click.pass_context
def cli(ctx, config, seed, out):
    """Spelling-normalization toolkit for low-resource languages."""
    ctx.obj = {"config": config, "seed": seed, "out": out}


@cli.command()
@click.option("--corpus", default=None, help="Corpus path or bundled:<name>.")
@click.option("--model", "models", multiple=True, type=click.Choice(["chartrilm", "lstm"]))
@click.option("--scheme", default=None, type=click.Choice(["table", "freq", "logFreq"]))
@click.option("--schedule", default=None, help="Comma-separated cumulative seed counts.")
@click.option("--n-seed-max", type=int, default=None)
@click.option("--patterns", default=None, help="Language pattern config file.")
@click.pass_context
def train(ctx, corpus, models, scheme, schedule, n_seed_max, patterns):
    """Train model snapshots over the seed schedule."""
    config = _base_config(ctx).merged(
        corpus=corpus,
        models=list(models) or None,
        scheme=scheme,
        schedule=[int(x) for x in schedule.split(",")] if schedule else None,
        n_seed_max=n_seed_max,
        patterns=patterns,
    )
    table = _load_table(config)
    steps = config.resolved_schedule()
    if steps[-1] > len(table):
        raise UserError(f"schedule needs {steps[-1]} seeds, corpus has {len(table)}")
    pattern_set = load_patterns(config.patterns) if config.patterns else None
    out = _ensure_out(config)
    written = []
    if "chartrilm" in config.models:
        model = TrigramModel()
        pool = []
        seeds = table.top(steps[-1])
        rng = random.Random(derive_seed(config.seed, "trigram-calib-cli"))
        previous = 0
        for n in steps:
            tranche = seeds[previous:n]
            for word in tranche:
                cset = build_confusion_set(
                    word, rng, alphabet=table.alphabet(),
                    forbidden=set(seeds[:n]), patterns=pattern_set,
                )
                model.update(t for t, lab in cset.entries if lab is Label.CORRECT)
                pool.extend(cset.entries)
            model.calibrate_threshold(pool)
            path = out / f"chartrilm_{n}.model"
            model.save(path)
            written.append(str(path))
            previous = n
    if "lstm" in config.models:
        model = LstmClassifier(table.alphabet(), init_seed=derive_seed(config.seed, "lstm-init"))
        snapshots = train_stepwise(
            model, table, steps, config.scheme, derive_seed(config.seed, "lstm"),
            patterns=pattern_set,
        )
        for n, snap in snapshots:
            path = out / f"lstm_{config.scheme}_{n}.npz"
            snap.save(path)
            written.append(str(path))
    _summary(status="ok", command="train", snapshots=written, seed=config.seed)


@cli.command(name="eval")
@click.option("--corpus", default=None)
@click.option("--model", "models", multiple=True, type=click.Choice(["chartrilm", "lstm"]))
@click.option("--scheme", default=None, type=click.Choice(["table", "freq", "logFreq"]))
@click.option("--schedule", default=None)
@click.option("--n-seed-max", type=int, default=None)
@click.option("--eval-fraction", type=float, default=None)
@click.option("--eval-size", type=int, default=None)
@click.option("--eval-set", default=None, help='"synthetic" or a labelled TSV path.')
@click.option("--patterns", default=None)
@click.option("--csv-name", default="results.csv")
@click.pass_context
def eval_cmd(ctx, corpus, models, scheme, schedule, n_seed_max, eval_fraction, eval_size,
             eval_set, patterns, csv_name):
    """Run the experiment grid and write the results CSV."""
    config = _base_config(ctx).merged(
        corpus=corpus,
        models=list(models) or None,
        scheme=scheme,
        schedule=[int(x) for x in schedule.split(",")] if schedule else None,
        n_seed_max=n_seed_max,
        eval_fraction=eval_fraction,
        eval_size=eval_size,
        eval_set=eval_set,
        patterns=patterns,
    )
    _load_table(config)  # eager validation before any training
    if config.eval_set != "synthetic" and not Path(config.eval_set).exists():
        raise UserError(f"eval set file not found: {config.eval_set}")
    out = _ensure_out(config)
    csv_path = out / csv_name
    try:
        points = evaluate.run_experiment(config, csv_path=csv_path)
    except (ValueError, FileNotFoundError) as exc:
        raise UserError(str(exc))
    _summary(status="ok", command="eval", csv=str(csv_path), rows=len(points), seed=config.seed)


@cli.command()
@click.option("--corpus", default=None)
@click.option("--eval-fraction", type=float, default=None)
@click.option("--eval-size", type=int, default=None)
@click.option("--patterns", default=None)
@click.option("--tsv-name", default="eval.tsv")
@click.pass_context
def synth(ctx, corpus, eval_fraction, eval_size, patterns, tsv_name):
    """Synthesize a labelled evaluation set from the corpus."""
    config = _base_config(ctx).merged(
        corpus=corpus, eval_fraction=eval_fraction, eval_size=eval_size, patterns=patterns
    )
    table = _load_table(config)
    try:
        eval_set = evaluate.build_eval_set(config, table)
    except ValueError as exc:
        raise UserError(str(exc))
    out = _ensure_out(config)
    path = out / tsv_name
    corpus_mod.write_eval_tsv(path, eval_set)
    n_miss = sum(1 for _, lab, _ in eval_set.items if lab is Label.MISSPELLED)
    _summary(status="ok", command="synth", tsv=str(path), items=len(eval_set.items),
             misspelled=n_miss, seed=config.seed)


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8040)
@click.option("--data-dir", default=None)
@click.option("--service-config", default=None, help="JSON service-config file.")
@click.option("--ui-dir", default=None, help="Serve a built frontend from /ui.")
@click.pass_context
def serve(ctx, host, port, data_dir, service_config, ui_dir):
    """Run the interactive HTTP service."""
    import uvicorn

    from spellnorm.service import ServiceConfig, create_app

    try:
        config = ServiceConfig.load(
            service_config,
            data_dir=data_dir,
            seed=ctx.obj.get("seed"),
            ui_dir=ui_dir,
        )
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise UserError(f"bad service config: {exc}")
    app = create_app(config)
    _summary(status="ok", command="serve", host=host, port=port, data_dir=config.data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.argument("word")
@click.option("--kb", "kb_path", required=True, type=click.Path(), help="Knowledge-base TSV.")
@click.option("--max-distance", type=int, default=5)
@click.option("--top-k", type=int, default=10)
def suggest(word, kb_path, max_distance, top_k):
    """Print correction candidates for WORD from a persisted knowledge base."""
    if not Path(kb_path).exists():
        raise UserError(f"knowledge base not found: {kb_path}")
    try:
        kb = KnowledgeBase.load(kb_path)
    except ValueError as exc:
        raise UserError(str(exc))
    candidates = kb.suggest(word, max_distance=max_distance, top_k=top_k)
    for cand in candidates:
        click.echo(f"{cand.word}\t{cand.distance}")
    _summary(status="ok", command="suggest", word=word, candidates=len(candidates))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except (click.Abort, KeyboardInterrupt):
        click.echo("aborted", err=True)
        return 1
    except UserError as exc:
        click.echo(f"error: {exc}", err=True)
        _summary(status="error", message=str(exc))
        return 1
    except Exception as exc:  # internal error
        traceback.print_exc()
        _summary(status="internal-error", message=str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
