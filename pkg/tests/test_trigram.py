import math
import random

import pytest

from oracles import best_f1_on_grid, best_f1_over_midpoints, f1_at_threshold, grid_points
from spellnorm.labels import Label
from spellnorm.trigram import END, START, TrigramModel


def random_corpus(rng, n_words=40, alphabet="abcde"):
    return [
        "".join(rng.choices(alphabet, k=rng.randrange(1, 9))) for _ in range(n_words)
    ]


class TestCounts:
    def test_fit_single_word(self):
        model = TrigramModel.fit(["ab"])
        assert model.counts == {
            (START, START, "a"): 1,
            (START, "a", "b"): 1,
            ("a", "b", END): 1,
        }
        assert model.alphabet == {"a", "b", END}

    def test_fit_empty(self):
        model = TrigramModel.fit([])
        assert not model.counts and not model.alphabet

    def test_update_additive(self):
        model = TrigramModel.fit(["ab"])
        model.update(["ab"])
        assert all(count == 2 for count in model.counts.values())

    def test_fit_update_equivalence(self):
        rng = random.Random(31)
        a = random_corpus(rng)
        b = random_corpus(rng)
        incremental = TrigramModel.fit(a).update(b)
        oneshot = TrigramModel.fit(a + b)
        assert incremental.counts == oneshot.counts
        assert incremental.alphabet == oneshot.alphabet
        for word in random_corpus(rng, 20):
            assert incremental.log_likelihood(word) == oneshot.log_likelihood(word)

    def test_context_counts_consistent(self):
        rng = random.Random(32)
        model = TrigramModel.fit(random_corpus(rng))
        model.update(random_corpus(rng))
        for context, total in model.context_counts.items():
            assert total == sum(
                c for key, c in model.counts.items() if key[:2] == context
            )

    def test_empty_word_skipped(self):
        model = TrigramModel.fit(["", "ab", ""])
        assert sum(model.counts.values()) == 3


class TestCondProb:
    def test_hand_values(self):
        model = TrigramModel.fit(["ab"])
        assert model.cond_prob((START, START), "a") == pytest.approx(0.5)
        assert model.cond_prob(("b", "a"), "x") == pytest.approx(1 / 3)

    def test_unseen_char_does_not_grow_alphabet(self):
        model = TrigramModel.fit(["ab"])
        model.cond_prob(("a", "b"), "z")
        assert model.alphabet == {"a", "b", END}

    def test_normalization(self):
        rng = random.Random(33)
        for _ in range(20):
            model = TrigramModel.fit(random_corpus(rng))
            for context in model.context_counts:
                total = sum(model.cond_prob(context, c) for c in model.alphabet)
                assert abs(total - 1.0) < 1e-12

    def test_untrained_model_raises(self):
        with pytest.raises(ValueError):
            TrigramModel().cond_prob(("a", "b"), "c")


class TestLogLikelihood:
    def test_hand_values(self):
        model = TrigramModel.fit(["ab"])
        assert model.log_likelihood("ab") == pytest.approx(0.5 * math.log(0.125), abs=1e-12)
        assert model.log_likelihood("ba") == pytest.approx(0.5 * math.log(1 / 36), abs=1e-12)
        assert model.log_likelihood("ab") > model.log_likelihood("ba")

    def test_uniform_model_scores_by_length_only(self):
        model = TrigramModel(alphabet="abcd")
        scores = {w: model.log_likelihood(w) for w in ("ab", "cd", "da", "abc", "bcd")}
        assert scores["ab"] == scores["cd"] == scores["da"]
        assert scores["abc"] == scores["bcd"]

    def test_empty_word_rejected(self):
        with pytest.raises(ValueError):
            TrigramModel.fit(["ab"]).log_likelihood("")

    def test_transpositions_never_beat_the_trained_word(self):
        word = "salt"
        model = TrigramModel.fit([word] * 50)
        base = model.log_likelihood(word)
        for i in range(len(word) - 1):
            variant = word[:i] + word[i + 1] + word[i] + word[i + 2 :]
            assert model.log_likelihood(variant) <= base


class TestCalibration:
    def build_fixture(self):
        # model whose scores we control via simple words
        return TrigramModel.fit(["ab"] * 4)

    def test_spec_example_grid(self):
        # scores -1.0, -1.5 correct; -2.0 misspelled -> smallest grid tau
        # with F1=1 is min + 0.05 = -1.95
        scores = [-1.0, -1.5, -2.0]
        labels = [Label.CORRECT, Label.CORRECT, Label.MISSPELLED]
        taus = grid_points(scores)
        f1s = [f1_at_threshold(scores, labels, t) for t in taus]
        assert max(f1s) == 1.0
        assert taus[f1s.index(1.0)] == pytest.approx(-1.95)

    def test_calibrate_matches_brute_force(self):
        rng = random.Random(34)
        for _ in range(40):
            model = TrigramModel.fit(random_corpus(rng, 30))
            labelled = []
            for _ in range(rng.randrange(4, 30)):
                word = "".join(rng.choices("abcde", k=rng.randrange(1, 8)))
                labelled.append((word, rng.choice((Label.CORRECT, Label.MISSPELLED))))
            labels = [lab for _, lab in labelled]
            if len(set(labels)) < 2:
                labelled.append(("aa", Label.CORRECT))
                labelled.append(("zz", Label.MISSPELLED))
            tau = model.calibrate_threshold(labelled)
            scores = [model.log_likelihood(w) for w, _ in labelled]
            labels = [lab for _, lab in labelled]
            achieved = f1_at_threshold(scores, labels, tau)
            assert achieved == pytest.approx(best_f1_on_grid(scores, labels))
            assert achieved <= best_f1_over_midpoints(scores, labels) + 1e-12

    def test_single_class_rejected(self):
        model = self.build_fixture()
        with pytest.raises(ValueError):
            model.calibrate_threshold([("ab", Label.CORRECT)])

    def test_ties_broken_by_smallest_tau(self):
        model = self.build_fixture()
        # both classes at the same score: every tau gives the same F1 curve;
        # the returned tau must be the smallest grid point with max F1
        labelled = [("ab", Label.CORRECT), ("ba", Label.MISSPELLED)]
        tau = model.calibrate_threshold(labelled)
        scores = [model.log_likelihood(w) for w, _ in labelled]
        labels = [lab for _, lab in labelled]
        best = f1_at_threshold(scores, labels, tau)
        for candidate in grid_points(scores):
            if candidate >= tau:
                break
            assert f1_at_threshold(scores, labels, candidate) < best


class TestPredict:
    def test_strict_inequality_at_threshold(self):
        model = TrigramModel.fit(["ab"])
        model.threshold = model.log_likelihood("ab")
        assert model.predict("ab") is Label.CORRECT  # equal is not below

    def test_below_threshold_is_misspelled(self):
        model = TrigramModel.fit(["ab"])
        model.threshold = model.log_likelihood("ab") + 0.01
        assert model.predict("ab") is Label.MISSPELLED

    def test_calibrated_model_accepts_its_word(self):
        model = TrigramModel.fit(["ab"] * 100)
        labelled = [("ab", Label.CORRECT)] + [
            (w, Label.MISSPELLED) for w in ("aa", "bb", "ba", "b", "a", "abb")
        ]
        model.calibrate_threshold(labelled)
        assert model.predict("ab") is Label.CORRECT

    def test_uncalibrated_predict_raises(self):
        with pytest.raises(ValueError):
            TrigramModel.fit(["ab"]).predict("ab")


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        rng = random.Random(35)
        model = TrigramModel.fit(random_corpus(rng))
        model.calibrate_threshold(
            [("abc", Label.CORRECT), ("zqz", Label.MISSPELLED), ("ab", Label.CORRECT)]
        )
        path = tmp_path / "model.tsv"
        model.save(path)
        loaded = TrigramModel.load(path)
        assert loaded.same_distribution(model)
        assert loaded.context_counts == model.context_counts
        for word in random_corpus(rng, 10):
            assert loaded.log_likelihood(word) == model.log_likelihood(word)

    def test_snapshot_bytes_deterministic(self, tmp_path):
        rng = random.Random(36)
        corpus = random_corpus(rng)
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        TrigramModel.fit(corpus).save(a)
        TrigramModel.fit(list(corpus)).save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("something else\n", encoding="utf-8")
        with pytest.raises(ValueError):
            TrigramModel.load(path)
