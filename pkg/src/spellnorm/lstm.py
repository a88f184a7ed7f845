"""Character LSTM correct/misspelled classifier, implemented on numpy.

Architecture: character embedding (size 50) -> 3 stacked LSTM layers
(hidden size 30) -> dropout (0.1, training only) -> linear head ->
softmax over {correct, misspelled}. Words are encoded to a fixed length
of 18: a start symbol, up to 16 characters padded with a pad symbol, and
an end symbol; the recurrence runs over the full padded sequence and the
hidden state at the final position feeds the head. Training is mean
cross-entropy with full backpropagation through time and a hand-rolled
Adam optimizer, so the package carries no deep-learning dependency and
every gradient can be checked against finite differences.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from spellnorm.labels import Label
from spellnorm.misspell import LanguagePatternSet, TrainingSet, augment_words, build_confusion_set
from spellnorm.util import derive_seed

PAD, SOS, EOS, UNK = "<PAD>", "<SOS>", "<EOS>", "<UNK>"

CLASS_OF_LABEL = {Label.CORRECT: 0, Label.MISSPELLED: 1}
LABEL_OF_CLASS = {0: Label.CORRECT, 1: Label.MISSPELLED}

SNAPSHOT_VERSION = 1


@dataclass
class EncodedWord:
    indices: np.ndarray  # fixed-length int64 vector
    true_length: int


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    def __init__(self, shapes, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}


class LstmClassifier:
    def __init__(
        self,
        alphabet,
        *,
        embed_dim: int = 50,
        hidden_size: int = 30,
        num_layers: int = 3,
        dropout: float = 0.1,
        max_chars: int = 16,
        lr: float = 1e-4,
        init_seed: int = 0,
    ):
        self.embed_dim = embed_dim
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.dropout = dropout
        self.max_chars = max_chars
        self.init_seed = init_seed
        chars = sorted(set(alphabet))
        self.vocab = {PAD: 0, SOS: 1, EOS: 2, UNK: 3}
        for ch in chars:
            self.vocab.setdefault(ch, len(self.vocab))
        rng = np.random.default_rng(init_seed)
        h = hidden_size
        self.params: dict[str, np.ndarray] = {}

        def uniform(shape, fan_in):
            bound = math.sqrt(1.0 / fan_in)
            return rng.uniform(-bound, bound, size=shape)

        self.params["embed"] = uniform((len(self.vocab), embed_dim), embed_dim)
        for layer in range(num_layers):
            in_dim = embed_dim if layer == 0 else h
            self.params[f"l{layer}_wx"] = uniform((in_dim, 4 * h), in_dim)
            self.params[f"l{layer}_wh"] = uniform((h, 4 * h), h)
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0  # forget gate starts open
            self.params[f"l{layer}_b"] = bias
        self.params["head_w"] = uniform((h, 2), h)
        self.params["head_b"] = np.zeros(2)
        self.adam = AdamState({k: p.shape for k, p in self.params.items()}, lr=lr)

    # -- encoding ------------------------------------------------------

    @property
    def seq_len(self) -> int:
        return self.max_chars + 2

    def encode(self, word: str) -> EncodedWord:
        """Fixed-length index vector: SOS, chars (truncated/padded), EOS."""
        chars = list(word[: self.max_chars])
        unk = self.vocab[UNK]
        indices = [self.vocab[SOS]]
        indices.extend(self.vocab.get(ch, unk) for ch in chars)
        indices.extend([self.vocab[PAD]] * (self.max_chars - len(chars)))
        indices.append(self.vocab[EOS])
        return EncodedWord(np.array(indices, dtype=np.int64), true_length=len(chars))

    def encode_batch(self, words) -> np.ndarray:
        return np.stack([self.encode(w).indices for w in words])

    # -- forward / backward --------------------------------------------

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim != 2 or batch.shape[1] != self.seq_len:
            raise ValueError(f"batch rows must have length {self.seq_len}, got {batch.shape}")
        return batch

    def _run(self, batch: np.ndarray, dropout_mask=None):
        """Full forward pass; returns (log_probs, probs, cache for BPTT)."""
        h_size = self.hidden_size
        n, t_len = batch.shape
        xs = self.params["embed"][batch]  # (n, T, embed)
        hs = [np.zeros((n, h_size)) for _ in range(self.num_layers)]
        cs = [np.zeros((n, h_size)) for _ in range(self.num_layers)]
        steps = []
        for t in range(t_len):
            inp = xs[:, t]
            layer_cache = []
            for layer in range(self.num_layers):
                z = (
                    inp @ self.params[f"l{layer}_wx"]
                    + hs[layer] @ self.params[f"l{layer}_wh"]
                    + self.params[f"l{layer}_b"]
                )
                i = _sigmoid(z[:, :h_size])
                f = _sigmoid(z[:, h_size : 2 * h_size])
                g = np.tanh(z[:, 2 * h_size : 3 * h_size])
                o = _sigmoid(z[:, 3 * h_size :])
                c_new = f * cs[layer] + i * g
                tanh_c = np.tanh(c_new)
                h_new = o * tanh_c
                layer_cache.append((inp, hs[layer], cs[layer], i, f, g, o, tanh_c))
                hs[layer], cs[layer] = h_new, c_new
                inp = h_new
            steps.append(layer_cache)
        h_final = hs[-1]
        h_drop = h_final if dropout_mask is None else h_final * dropout_mask
        logits = h_drop @ self.params["head_w"] + self.params["head_b"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_z
        cache = (batch, steps, h_drop, dropout_mask)
        return log_probs, np.exp(log_probs), cache

    def forward(self, batch, training: bool = False, rng: np.random.Generator | None = None):
        """Class probabilities for a batch of encoded words.

        Deterministic when training is False; with training=True a dropout
        mask is sampled from rng for the hidden state entering the head.
        """
        batch = self._check_batch(batch)
        mask = None
        if training and self.dropout > 0.0:
            if rng is None:
                raise ValueError("training forward needs an rng for dropout")
            mask = self._dropout_mask(rng, batch.shape[0])
        _, probs, _ = self._run(batch, dropout_mask=mask)
        return probs

    def _dropout_mask(self, rng: np.random.Generator, n: int) -> np.ndarray:
        keep = rng.random((n, self.hidden_size)) >= self.dropout
        return keep / (1.0 - self.dropout)  # inverted dropout

    def loss_and_grads(self, batch, labels, dropout_mask=None):
        """Mean cross-entropy and gradients for every parameter tensor.

        The dropout mask is passed explicitly so the same mask can be
        reused when validating gradients with finite differences.
        """
        batch = self._check_batch(batch)
        y = np.asarray(labels)
        if y.shape != (batch.shape[0],) or not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 (correct) or 1 (misspelled), one per row")
        h_size = self.hidden_size
        n, t_len = batch.shape
        log_probs, probs, cache = self._run(batch, dropout_mask=dropout_mask)
        _, steps, h_drop, mask = cache
        loss = -log_probs[np.arange(n), y].mean()

        grads = {k: np.zeros_like(p) for k, p in self.params.items()}
        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        grads["head_w"] = h_drop.T @ dlogits
        grads["head_b"] = dlogits.sum(axis=0)
        dh_final = dlogits @ self.params["head_w"].T
        if mask is not None:
            dh_final = dh_final * mask

        dh_rec = [np.zeros((n, h_size)) for _ in range(self.num_layers)]
        dc_rec = [np.zeros((n, h_size)) for _ in range(self.num_layers)]
        dxs = np.zeros((n, t_len, self.embed_dim))
        for t in reversed(range(t_len)):
            d_from_above = None
            for layer in reversed(range(self.num_layers)):
                inp, h_prev, c_prev, i, f, g, o, tanh_c = steps[t][layer]
                dh = dh_rec[layer].copy()
                if layer == self.num_layers - 1 and t == t_len - 1:
                    dh += dh_final
                if d_from_above is not None:
                    dh += d_from_above
                dc = dc_rec[layer] + dh * o * (1.0 - tanh_c * tanh_c)
                do = dh * tanh_c
                di = dc * g
                dg = dc * i
                df = dc * c_prev
                dz = np.concatenate(
                    [
                        di * i * (1.0 - i),
                        df * f * (1.0 - f),
                        dg * (1.0 - g * g),
                        do * o * (1.0 - o),
                    ],
                    axis=1,
                )
                grads[f"l{layer}_wx"] += inp.T @ dz
                grads[f"l{layer}_wh"] += h_prev.T @ dz
                grads[f"l{layer}_b"] += dz.sum(axis=0)
                dinp = dz @ self.params[f"l{layer}_wx"].T
                dh_rec[layer] = dz @ self.params[f"l{layer}_wh"].T
                dc_rec[layer] = dc * f
                if layer > 0:
                    d_from_above = dinp
                else:
                    dxs[:, t] = dinp
        np.add.at(grads["embed"], batch.reshape(-1), dxs.reshape(-1, self.embed_dim))
        return loss, grads

    def adam_step(self, grads) -> None:
        """Standard Adam update with bias correction."""
        state = self.adam
        state.t += 1
        bc1 = 1.0 - state.beta1**state.t
        bc2 = 1.0 - state.beta2**state.t
        for key, grad in grads.items():
            m = state.m[key]
            v = state.v[key]
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad * grad
            self.params[key] -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)

    # -- training loops -------------------------------------------------

    def train(self, training_set: TrainingSet, *, batch_size: int = 15, epochs: int = 1,
              rng: np.random.Generator) -> "LstmClassifier":
        """Mini-batch training; one shuffle per epoch, short final batch kept."""
        examples = training_set.examples
        if not examples:
            return self
        batch = self.encode_batch([tok for tok, _ in examples])
        y = np.array([CLASS_OF_LABEL[label] for _, label in examples])
        n = len(examples)
        for _ in range(epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch_size):
                pick = order[start : start + batch_size]
                mask = None
                if self.dropout > 0.0:
                    mask = self._dropout_mask(rng, len(pick))
                _, grads = self.loss_and_grads(batch[pick], y[pick], dropout_mask=mask)
                self.adam_step(grads)
        return self

    def predict_proba(self, words) -> np.ndarray:
        return self.forward(self.encode_batch(words), training=False)

    def predict(self, words) -> list[Label]:
        probs = self.predict_proba(words)
        return [LABEL_OF_CLASS[int(k)] for k in probs.argmax(axis=1)]

    def clone(self) -> "LstmClassifier":
        import copy

        return copy.deepcopy(self)

    # -- persistence -----------------------------------------------------

    def save(self, path) -> None:
        """Exact-round-trip snapshot of parameters, vocab and Adam state."""
        chars = [ch for ch, _ in sorted(self.vocab.items(), key=lambda kv: kv[1])][4:]
        payload = {
            "version": np.array(SNAPSHOT_VERSION),
            "config": np.array(
                [self.embed_dim, self.hidden_size, self.num_layers, self.max_chars,
                 self.init_seed, self.adam.t], dtype=np.int64),
            "floats": np.array(
                [self.dropout, self.adam.lr, self.adam.beta1, self.adam.beta2, self.adam.eps]),
            "chars": np.array(chars, dtype="U1") if chars else np.array([], dtype="U1"),
        }
        for key, value in self.params.items():
            payload[f"param_{key}"] = value
        for key in self.params:
            payload[f"adam_m_{key}"] = self.adam.m[key]
            payload[f"adam_v_{key}"] = self.adam.v[key]
        with open(path, "wb") as handle:
            np.savez(handle, **payload)

    @classmethod
    def load(cls, path) -> "LstmClassifier":
        with np.load(path, allow_pickle=False) as data:
            if int(data["version"]) != SNAPSHOT_VERSION:
                raise ValueError(f"{path}: unsupported snapshot version")
            embed_dim, hidden, layers, max_chars, init_seed, adam_t = (
                int(x) for x in data["config"]
            )
            dropout, lr, beta1, beta2, eps = (float(x) for x in data["floats"])
            model = cls(
                data["chars"].tolist(),
                embed_dim=embed_dim,
                hidden_size=hidden,
                num_layers=layers,
                dropout=dropout,
                max_chars=max_chars,
                lr=lr,
                init_seed=init_seed,
            )
            model.adam.beta1 = beta1
            model.adam.beta2 = beta2
            model.adam.eps = eps
            model.adam.t = adam_t
            for key in model.params:
                model.params[key] = data[f"param_{key}"]
                model.adam.m[key] = data[f"adam_m_{key}"]
                model.adam.v[key] = data[f"adam_v_{key}"]
        return model


def default_schedule(n_max: int) -> list[int]:
    """Cumulative seed tranches: 50, 100, then +100 per step up to n_max."""
    if n_max < 1:
        raise ValueError("schedule needs at least one seed token")
    schedule = []
    for point in (50, 100):
        if point < n_max:
            schedule.append(point)
    point = 200
    while point < n_max:
        schedule.append(point)
        point += 100
    schedule.append(n_max)
    return schedule


def train_stepwise(
    model: LstmClassifier,
    table,
    schedule,
    scheme: str,
    seed: int,
    *,
    patterns: LanguagePatternSet | None = None,
    epochs: int = 1,
) -> list[tuple[int, LstmClassifier]]:
    """Incremental most-frequent-first training.

    Seeds are processed in cumulative tranches (e.g. 50, 100, 200, ...);
    each step augments only the newly added tokens and trains for one
    epoch on that increment. Returns a snapshot per step.
    """
    schedule = list(schedule)
    if schedule != sorted(schedule) or len(set(schedule)) != len(schedule):
        raise ValueError("schedule must be strictly increasing")
    seeds = table.top(schedule[-1])
    alphabet = table.alphabet()
    snapshots = []
    previous = 0
    for step, n_seed in enumerate(schedule):
        tranche = seeds[previous:n_seed]
        gen_rng = random.Random(derive_seed(seed, "augment", str(step)))
        training_set = augment_words(
            tranche,
            table.entries,
            scheme,
            gen_rng,
            alphabet=alphabet,
            forbidden=set(seeds[:n_seed]),
            patterns=patterns,
        )
        train_rng = np.random.default_rng(derive_seed(seed, "train", str(step)))
        model.train(training_set, epochs=epochs, rng=train_rng)
        snapshots.append((n_seed, model.clone()))
        previous = n_seed
    return snapshots


def feedback_update(
    model: LstmClassifier,
    word: str,
    label: Label,
    seed: int,
    *,
    correction: str | None = None,
    alphabet=None,
    forbidden=frozenset(),
    patterns: LanguagePatternSet | None = None,
) -> LstmClassifier:
    """One incremental update from a user-labelled example.

    Builds a confusion set around the confirmed-correct form (the word
    itself when labelled correct, else the provided correction) and runs
    a single optimizer step on the labelled word plus that set.
    """
    examples = [(word, label)]
    confirmed = word if label is Label.CORRECT else correction
    if confirmed:
        if alphabet is None:
            alphabet = tuple(sorted(set(confirmed)))
        gen_rng = random.Random(derive_seed(seed, "feedback", word))
        cset = build_confusion_set(
            confirmed, gen_rng, alphabet=alphabet, forbidden=forbidden, patterns=patterns
        )
        examples.extend(cset.entries)
    batch = model.encode_batch([tok for tok, _ in examples])
    y = np.array([CLASS_OF_LABEL[lab] for _, lab in examples])
    mask_rng = np.random.default_rng(derive_seed(seed, "feedback-dropout", word))
    mask = model._dropout_mask(mask_rng, len(examples)) if model.dropout > 0 else None
    _, grads = model.loss_and_grads(batch, y, dropout_mask=mask)
    model.adam_step(grads)
    return model
