import math
import random

import numpy as np
import pytest

from oracles import finite_difference_grads, recursive_damerau
from spellnorm.corpus import FrequencyTable
from spellnorm.labels import Label
from spellnorm.lstm import (
    EOS,
    PAD,
    SOS,
    UNK,
    AdamState,
    LstmClassifier,
    default_schedule,
    feedback_update,
    train_stepwise,
)
from spellnorm.misspell import TrainingSet

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def tiny_model(**kw):
    defaults = dict(embed_dim=8, hidden_size=4, num_layers=3, max_chars=4, init_seed=7)
    defaults.update(kw)
    return LstmClassifier("abcde", **defaults)


def toy_q_set(n=300, seed=0):
    """Linearly separable toy task: misspelled iff the word contains q."""
    rng = random.Random(seed)
    letters = [c for c in ALPHABET if c != "q"]
    examples = []
    for i in range(n):
        chars = [rng.choice(letters) for _ in range(rng.randrange(3, 9))]
        if i % 2:
            chars[rng.randrange(len(chars))] = "q"
        examples.append(("".join(chars), Label.MISSPELLED if i % 2 else Label.CORRECT))
    return TrainingSet(examples, "toy")


class TestEncoding:
    def test_short_word(self):
        m = LstmClassifier("ab", max_chars=16)
        enc = m.encode("ab")
        v = m.vocab
        expected = [v[SOS], v["a"], v["b"]] + [v[PAD]] * 14 + [v[EOS]]
        assert enc.indices.tolist() == expected
        assert enc.true_length == 2

    def test_truncation(self):
        m = LstmClassifier("ab", max_chars=16)
        enc = m.encode("ab" * 10)
        assert len(enc.indices) == 18
        assert enc.true_length == 16
        assert enc.indices[-1] == m.vocab[EOS]
        assert m.vocab[PAD] not in enc.indices.tolist()

    def test_unknown_char(self):
        m = LstmClassifier("ab", max_chars=4)
        enc = m.encode("axb")
        assert enc.indices[2] == m.vocab[UNK]

    def test_batch_shape(self):
        m = tiny_model()
        batch = m.encode_batch(["ab", "cde"])
        assert batch.shape == (2, m.seq_len)


class TestForward:
    def test_softmax_sums_to_one(self):
        m = tiny_model()
        probs = m.forward(m.encode_batch(["ab", "ced", "a"]))
        assert probs.shape == (3, 2)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9
        assert (probs >= 0).all()

    def test_zero_head_gives_half_half(self):
        m = tiny_model()
        m.params["head_w"][:] = 0.0
        m.params["head_b"][:] = 0.0
        probs = m.forward(m.encode_batch(["ab", "eee"]))
        assert np.allclose(probs, 0.5)

    def test_identical_words_identical_rows(self):
        m = tiny_model()
        probs = m.forward(m.encode_batch(["abc", "abc"]))
        assert (probs[0] == probs[1]).all()

    def test_inference_deterministic(self):
        m = tiny_model()
        batch = m.encode_batch(["abc", "de"])
        assert (m.forward(batch) == m.forward(batch)).all()

    def test_mismatched_length_rejected(self):
        m = tiny_model()
        with pytest.raises(ValueError):
            m.forward(np.zeros((2, 5), dtype=np.int64))

    def test_training_forward_needs_rng(self):
        m = tiny_model()
        with pytest.raises(ValueError):
            m.forward(m.encode_batch(["ab"]), training=True)

    def test_fuzz_normalization(self):
        rng = random.Random(41)
        init = np.random.default_rng(42)
        for trial in range(30):
            m = tiny_model(init_seed=trial)
            # random parameter perturbations
            for p in m.params.values():
                p += init.normal(0, 0.5, size=p.shape)
            words = ["".join(rng.choices("abcde", k=rng.randrange(1, 7))) for _ in range(8)]
            probs = m.forward(m.encode_batch(words))
            assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9


class TestLossAndGrads:
    def test_uniform_prediction_loss_is_ln2(self):
        m = tiny_model()
        m.params["head_w"][:] = 0.0
        m.params["head_b"][:] = 0.0
        batch = m.encode_batch(["ab", "cd", "e"])
        loss, _ = m.loss_and_grads(batch, np.array([0, 1, 0]))
        assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_confident_correct_prediction_near_zero_loss(self):
        m = tiny_model()
        m.params["head_w"][:] = 0.0
        m.params["head_b"][:] = np.array([50.0, -50.0])  # always class 0
        loss, _ = m.loss_and_grads(m.encode_batch(["ab"]), np.array([0]))
        assert loss < 1e-12

    def test_bad_labels_rejected(self):
        m = tiny_model()
        with pytest.raises(ValueError):
            m.loss_and_grads(m.encode_batch(["ab"]), np.array([2]))

    def test_gradients_match_finite_differences(self):
        m = tiny_model()
        batch = m.encode_batch(["ab", "cde", "ea"])
        y = np.array([0, 1, 1])
        mask = m._dropout_mask(np.random.default_rng(5), 3)
        _, grads = m.loss_and_grads(batch, y, dropout_mask=mask)
        numeric = finite_difference_grads(m, batch, y, mask)
        for key in m.params:
            a, n = grads[key], numeric[key]
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-4)
            assert (np.abs(a - n) / denom).max() < 1e-4, key


class TestAdam:
    def test_zero_gradient_is_noop(self):
        m = tiny_model()
        before = {k: p.copy() for k, p in m.params.items()}
        m.adam_step({k: np.zeros_like(p) for k, p in m.params.items()})
        for k in before:
            assert (m.params[k] == before[k]).all()
        assert m.adam.t == 1

    def test_constant_gradient_moves_against_sign(self):
        state = AdamState({"x": (1,)}, lr=1e-2)
        x = np.array([0.0])
        g = np.array([3.0])
        history = [x[0]]
        for _ in range(50):
            state.t += 1
            state.m["x"] = state.beta1 * state.m["x"] + (1 - state.beta1) * g
            state.v["x"] = state.beta2 * state.v["x"] + (1 - state.beta2) * g * g
            mhat = state.m["x"] / (1 - state.beta1**state.t)
            vhat = state.v["x"] / (1 - state.beta2**state.t)
            x = x - state.lr * mhat / (np.sqrt(vhat) + state.eps)
            history.append(x[0])
        assert all(b < a for a, b in zip(history, history[1:]))  # monotone down

    def test_quadratic_convergence(self):
        # minimize f(x) = x^2 from x=1 with the model's own adam_step
        m = tiny_model()
        m.params = {"x": np.array([1.0])}
        m.adam = AdamState({"x": (1,)}, lr=1e-2)
        for _ in range(10_000):
            m.adam_step({"x": 2.0 * m.params["x"]})
            if abs(m.params["x"][0]) < 1e-2:
                break
        assert abs(m.params["x"][0]) < 1e-2

    def test_small_lr_never_increases_batch_loss(self):
        batch_words = ["abc", "de", "ace", "bad"]
        y = np.array([0, 1, 0, 1])
        for trial in range(25):
            m = tiny_model(init_seed=trial, lr=1e-5, dropout=0.0)
            batch = m.encode_batch(batch_words)
            loss_before, grads = m.loss_and_grads(batch, y)
            m.adam_step(grads)
            loss_after, _ = m.loss_and_grads(batch, y)
            assert loss_after <= loss_before + 1e-12


class TestTraining:
    def test_step_count(self):
        m = tiny_model()
        examples = [("ab", Label.CORRECT)] * 45
        m.train(TrainingSet(examples, "toy"), rng=np.random.default_rng(0))
        assert m.adam.t == 3  # 45 examples / batch 15

    def test_short_final_batch_kept(self):
        m = tiny_model()
        examples = [("ab", Label.CORRECT)] * 17
        m.train(TrainingSet(examples, "toy"), rng=np.random.default_rng(0))
        assert m.adam.t == 2

    def test_deterministic_for_seed(self):
        tset = toy_q_set(60)
        runs = []
        for _ in range(2):
            m = LstmClassifier(ALPHABET, hidden_size=8, num_layers=2, init_seed=3)
            m.train(tset, rng=np.random.default_rng(9))
            runs.append({k: p.copy() for k, p in m.params.items()})
        for key in runs[0]:
            assert (runs[0][key] == runs[1][key]).all()

    def test_learns_contains_q(self):
        tset = toy_q_set(300)
        m = LstmClassifier(ALPHABET, lr=1e-3, init_seed=1)
        m.train(tset, epochs=5, rng=np.random.default_rng(2))
        preds = m.predict([tok for tok, _ in tset.examples])
        acc = sum(p is lab for p, (_, lab) in zip(preds, tset.examples)) / len(tset)
        assert acc >= 0.95


class TestStepwise:
    def table(self, n=320):
        rng = random.Random(17)
        words = {}
        while len(words) < n:
            w = "".join(rng.choices("abcdefgh", k=rng.randrange(3, 8)))
            words.setdefault(w, max(1, 4000 // (len(words) + 1)))
        return FrequencyTable(words, "toy")

    def test_default_schedule(self):
        assert default_schedule(300) == [50, 100, 200, 300]
        assert default_schedule(50) == [50]
        assert default_schedule(30) == [30]
        assert default_schedule(500) == [50, 100, 200, 300, 400, 500]

    def test_snapshots_per_step(self):
        m = LstmClassifier("abcdefgh", hidden_size=6, num_layers=2, embed_dim=8, init_seed=5)
        snapshots = train_stepwise(m, self.table(), [50, 100, 200, 300], "table", seed=11)
        assert [n for n, _ in snapshots] == [50, 100, 200, 300]
        # snapshots are independent copies
        a, b = snapshots[0][1], snapshots[-1][1]
        assert (a.params["embed"] != b.params["embed"]).any()

    def test_reproducible(self):
        results = []
        for _ in range(2):
            m = LstmClassifier("abcdefgh", hidden_size=6, num_layers=2, embed_dim=8, init_seed=5)
            snapshots = train_stepwise(m, self.table(), [50, 100], "logFreq", seed=13)
            results.append(snapshots[-1][1].params["embed"].copy())
        assert (results[0] == results[1]).all()

    def test_bad_schedule(self):
        m = tiny_model()
        with pytest.raises(ValueError):
            train_stepwise(m, self.table(), [100, 50], "table", seed=0)


class TestFeedback:
    def test_correct_feedback_single_step(self):
        m = LstmClassifier(ALPHABET, hidden_size=8, num_layers=2, init_seed=2)
        before = m.adam.t
        feedback_update(m, "house", Label.CORRECT, seed=3, alphabet=tuple(ALPHABET))
        assert m.adam.t == before + 1

    def test_misspelled_without_correction_trains_on_single_example(self):
        m = LstmClassifier(ALPHABET, hidden_size=8, num_layers=2, init_seed=2)
        feedback_update(m, "hqqse", Label.MISSPELLED, seed=4, alphabet=tuple(ALPHABET))
        assert m.adam.t == 1

    def test_repeated_correct_feedback_raises_probability(self):
        m = LstmClassifier(ALPHABET, hidden_size=8, num_layers=2, init_seed=6, lr=1e-3)
        word = "garden"
        probs = []
        for i in range(20):
            feedback_update(m, word, Label.CORRECT, seed=100 + i, alphabet=tuple(ALPHABET))
            probs.append(m.predict_proba([word])[0, 0])
        assert probs[-1] > probs[0]
        drops = sum(1 for a, b in zip(probs, probs[1:]) if b < a - 1e-9)
        assert drops == 0  # monotone within tolerance


class TestSnapshot:
    def test_exact_round_trip(self, tmp_path):
        m = LstmClassifier("abc", hidden_size=5, num_layers=2, embed_dim=6, init_seed=4)
        m.train(TrainingSet([("ab", Label.CORRECT), ("ca", Label.MISSPELLED)] * 10, "t"),
                rng=np.random.default_rng(1))
        path = tmp_path / "model.npz"
        m.save(path)
        loaded = LstmClassifier.load(path)
        assert loaded.vocab == m.vocab
        for key in m.params:
            assert (loaded.params[key] == m.params[key]).all()
            assert (loaded.adam.m[key] == m.adam.m[key]).all()
        assert loaded.adam.t == m.adam.t
        words = ["ab", "bc", "ca"]
        assert (loaded.predict_proba(words) == m.predict_proba(words)).all()

    def test_clone_is_detached(self):
        m = tiny_model()
        c = m.clone()
        m.params["embed"][0, 0] += 1.0
        assert c.params["embed"][0, 0] != m.params["embed"][0, 0]
