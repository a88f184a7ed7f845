import json
import subprocess
import sys

import pytest

from spellnorm import cli
from spellnorm.corpus import read_eval_tsv
from spellnorm.kb import KnowledgeBase
from spellnorm.labels import Label
from spellnorm.trigram import TrigramModel


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def last_json(out):
    return json.loads(out.strip().splitlines()[-1])


class TestSuggest:
    def test_prints_candidates(self, tmp_path, capsys):
        kb = KnowledgeBase()
        for w in ("address", "adapt"):
            kb.add_correct(w)
        kb_path = tmp_path / "kb.tsv"
        kb.save(kb_path)
        code, out, _ = run_main(capsys, "suggest", "adress", "--kb", str(kb_path))
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "address\t1"
        assert last_json(out)["candidates"] == 2

    def test_missing_kb_is_user_error(self, tmp_path, capsys):
        code, out, err = run_main(capsys, "suggest", "word", "--kb", str(tmp_path / "no.tsv"))
        assert code == 1
        assert "not found" in err


class TestSynth:
    def test_writes_tsv(self, tmp_path, capsys):
        code, out, _ = run_main(
            capsys,
            "--seed", "5", "--out", str(tmp_path),
            "synth", "--corpus", "bundled:english", "--eval-size", "50",
        )
        assert code == 0
        summary = last_json(out)
        assert summary["status"] == "ok"
        assert summary["items"] == 50
        eval_set = read_eval_tsv(summary["tsv"])
        assert len(eval_set.items) == 50
        assert sum(1 for _, lab, _ in eval_set.items if lab is Label.MISSPELLED) == 25


class TestTrain:
    def test_writes_snapshots(self, tmp_path, capsys):
        code, out, _ = run_main(
            capsys,
            "--seed", "2", "--out", str(tmp_path),
            "train", "--corpus", "bundled:english", "--model", "chartrilm",
            "--schedule", "50,100",
        )
        assert code == 0
        snapshots = last_json(out)["snapshots"]
        assert len(snapshots) == 2
        model = TrigramModel.load(snapshots[-1])
        assert model.threshold is not None

    def test_schedule_too_large(self, tmp_path, capsys):
        code, _, err = run_main(
            capsys,
            "--out", str(tmp_path),
            "train", "--corpus", "bundled:english", "--model", "chartrilm",
            "--schedule", "99999",
        )
        assert code == 1


class TestEval:
    def test_csv_rows(self, tmp_path, capsys):
        code, out, _ = run_main(
            capsys,
            "--seed", "4", "--out", str(tmp_path),
            "eval", "--corpus", "bundled:english", "--model", "chartrilm",
            "--schedule", "50,100", "--eval-size", "60",
        )
        assert code == 0
        summary = last_json(out)
        assert summary["rows"] == 4  # chartrilm x2 + majority x2
        csv_lines = open(summary["csv"], encoding="utf-8").read().splitlines()
        assert len([l for l in csv_lines if not l.startswith("#")]) == 5

    def test_missing_corpus_no_partial_outputs(self, tmp_path, capsys):
        out_dir = tmp_path / "results"
        code, _, err = run_main(
            capsys,
            "--out", str(out_dir),
            "eval", "--corpus", str(tmp_path / "ghost.freq.tsv"),
        )
        assert code == 1
        assert not out_dir.exists() or not list(out_dir.iterdir())

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        config = {
            "corpus": "bundled:english",
            "models": ["chartrilm"],
            "schedule": [50],
            "eval_size": 40,
            "seed": 9,
            "out_dir": str(tmp_path / "from-file"),
        }
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps(config), encoding="utf-8")
        override_out = tmp_path / "override"
        code, out, _ = run_main(
            capsys, "--config", str(config_path), "--out", str(override_out), "eval"
        )
        assert code == 0
        assert last_json(out)["csv"].startswith(str(override_out))

    def test_bad_config_file(self, tmp_path, capsys):
        config_path = tmp_path / "bad.json"
        config_path.write_text("{not json", encoding="utf-8")
        code, _, err = run_main(capsys, "--config", str(config_path), "eval")
        assert code == 1


class TestExitCodes:
    def test_unknown_flag_is_user_error(self, capsys):
        code, _, err = run_main(capsys, "eval", "--warp-speed")
        assert code == 1

    def test_unknown_command(self, capsys):
        code, _, err = run_main(capsys, "transmogrify")
        assert code == 1

    def test_help_exits_zero(self, capsys):
        code, out, _ = run_main(capsys, "--help")
        assert code == 0
        assert "train" in out and "serve" in out

    def test_internal_error_exits_two(self, tmp_path, capsys, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("simulated internal failure")

        monkeypatch.setattr("spellnorm.evaluate.run_experiment", boom)
        code, out, err = run_main(
            capsys,
            "--out", str(tmp_path),
            "eval", "--corpus", "bundled:english", "--schedule", "50",
        )
        assert code == 2


def test_determinism_across_processes(tmp_path):
    """Same config + seed twice in separate interpreters: identical bytes."""
    outputs = []
    for run in ("a", "b"):
        out_dir = tmp_path / run
        result = subprocess.run(
            [sys.executable, "-m", "spellnorm.cli",
             "--seed", "11", "--out", str(out_dir),
             "eval", "--corpus", "bundled:english", "--model", "chartrilm",
             "--schedule", "50", "--eval-size", "40"],
            capture_output=True, text=True, timeout=120,
        )
        assert result.returncode == 0, result.stderr
        outputs.append((out_dir / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]
