"""Character-trigram language model for misspelling detection.

Words are padded with two start symbols and one end symbol, trigram
counts are add-one smoothed into conditional probabilities, and a word's
score is its average per-character natural-log likelihood (length
normalization keeps short tokens from dominating). A word is classified
as misspelled when its score falls strictly below a threshold calibrated
by F1-maximizing grid search over training scores.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter

from spellnorm.labels import Label
from spellnorm.util import atomic_write_text

START = "<S>"
END = "<E>"

GRID_STEP = 0.05

SNAPSHOT_HEADER = "spellnorm-trigram\tv1\tf1-positive=misspelled"


class TrigramModel:
    """Counts, smoothing alphabet and decision threshold in one snapshot.

    The smoothing alphabet is every character observed in training plus
    the end symbol; the start symbol is never predicted. Updates are
    additive: updating a fitted model with more words yields the same
    counts as fitting on the concatenation.
    """

    def __init__(self, alphabet=()):
        self.counts: Counter = Counter()
        self.context_counts: Counter = Counter()
        self.alphabet: set[str] = set(alphabet)
        if self.alphabet:
            self.alphabet.add(END)
        self.threshold: float | None = None

    @classmethod
    def fit(cls, words) -> "TrigramModel":
        model = cls()
        model.update(words)
        return model

    def update(self, words) -> "TrigramModel":
        for word in words:
            if not word:
                continue
            padded = (START, START, *word, END)
            for i in range(2, len(padded)):
                context = (padded[i - 2], padded[i - 1])
                self.counts[(context[0], context[1], padded[i])] += 1
                self.context_counts[context] += 1
            self.alphabet.update(word)
            self.alphabet.add(END)
        return self

    def cond_prob(self, context: tuple[str, str], char: str) -> float:
        """Add-one smoothed P(char | context).

        Unseen characters keep the raw +1 numerator but never enlarge
        the stored alphabet, so the denominator stays bounded.
        """
        if not self.alphabet:
            raise ValueError("model has no alphabet; train it or pass one explicitly")
        numerator = self.counts.get((context[0], context[1], char), 0) + 1
        denominator = self.context_counts.get(context, 0) + len(self.alphabet)
        return numerator / denominator

    def log_likelihood(self, word: str) -> float:
        """Average natural-log probability over the padded trigram chain,
        divided by the raw word length (padding symbols excluded)."""
        if not word:
            raise ValueError("cannot score an empty token")
        padded = (START, START, *word, END)
        total = 0.0
        for i in range(2, len(padded)):
            total += math.log(self.cond_prob((padded[i - 2], padded[i - 1]), padded[i]))
        return total / len(word)

    def calibrate_threshold(self, labelled) -> float:
        """Grid-search the F1-maximizing threshold over training scores.

        Candidates run from the minimum observed score upward in steps of
        0.05 through the largest grid point not above the maximum. The
        classification rule is: misspelled iff score < threshold, with the
        misspelled class as F1-positive. Ties go to the smallest threshold.
        """
        scored: list[tuple[float, Label]] = []
        for word, label in labelled:
            scored.append((self.log_likelihood(word), label))
        mis_scores = sorted(s for s, lab in scored if lab is Label.MISSPELLED)
        cor_scores = sorted(s for s, lab in scored if lab is Label.CORRECT)
        if not mis_scores or not cor_scores:
            raise ValueError("calibration needs at least one example of each class")
        lo = min(mis_scores[0], cor_scores[0])
        hi = max(mis_scores[-1], cor_scores[-1])
        n_mis = len(mis_scores)
        steps = int(math.floor((hi - lo) / GRID_STEP + 1e-9))
        best_tau = lo
        best_f1 = -1.0
        for k in range(steps + 1):
            tau = lo + k * GRID_STEP
            tp = bisect_left(mis_scores, tau)
            fp = bisect_left(cor_scores, tau)
            fn = n_mis - tp
            denom = 2 * tp + fp + fn
            f1 = (2 * tp / denom) if denom else 0.0
            if f1 > best_f1:
                best_f1 = f1
                best_tau = tau
        self.threshold = best_tau
        return best_tau

    def predict(self, word: str) -> Label:
        """Misspelled iff the score is strictly below the threshold."""
        if self.threshold is None:
            raise ValueError("threshold not calibrated")
        return Label.MISSPELLED if self.log_likelihood(word) < self.threshold else Label.CORRECT

    # -- persistence --------------------------------------------------

    def save(self, path) -> None:
        """Deterministic, diff-able text snapshot (atomic write)."""
        lines = [SNAPSHOT_HEADER]
        if self.alphabet:
            lines.append("alphabet\t" + "".join(sorted(self.alphabet - {END})))
        if self.threshold is not None:
            lines.append(f"threshold\t{self.threshold:.17g}")
        for key in sorted(self.counts):
            a, b, c = key
            lines.append(f"trigram\t{a}\t{b}\t{c}\t{self.counts[key]}")
        atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "TrigramModel":
        model = cls()
        with open(path, encoding="utf-8") as handle:
            header = handle.readline().rstrip("\n")
            if header != SNAPSHOT_HEADER:
                raise ValueError(f"{path}: unrecognized snapshot header {header!r}")
            for lineno, raw in enumerate(handle, 2):
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if fields[0] == "alphabet" and len(fields) == 2:
                    model.alphabet = set(fields[1]) | {END}
                elif fields[0] == "threshold" and len(fields) == 2:
                    model.threshold = float(fields[1])
                elif fields[0] == "trigram" and len(fields) == 5:
                    a, b, c, count = fields[1:]
                    key = (a, b, c)
                    model.counts[key] += int(count)
                    model.context_counts[(a, b)] += int(count)
                else:
                    raise ValueError(f"{path}:{lineno}: malformed line {line!r}")
        return model

    def same_distribution(self, other: "TrigramModel") -> bool:
        return (
            self.counts == other.counts
            and self.alphabet == other.alphabet
            and self.threshold == other.threshold
        )
