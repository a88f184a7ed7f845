"""Frequency tables, seed selection, dev/test splits and synthetic
evaluation sets.

Corpora enter as raw UTF-8 text (tokenized here) or as pre-counted
`word<TAB>count` lists; labelled evaluation sets are TSV rows of
`token<TAB>label[<TAB>correction]` with labels C/M. Two small frequency
lists (English, Russian) ship with the package so everything runs
offline.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from spellnorm.labels import Label
from spellnorm.misspell import LanguagePatternSet, corrupt, load_patterns
from spellnorm.textcore import tokenize
from spellnorm.util import atomic_write_text

BUNDLED = ("english", "russian")


@dataclass
class FrequencyTable:
    """word -> count map with a deterministic ranking.

    Ranking is by count descending then word ascending, so ties never
    depend on dict iteration order.
    """

    entries: dict[str, int] = field(default_factory=dict)
    language_id: str = "und"

    @property
    def total_tokens(self) -> int:
        return sum(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def ranked(self) -> list[str]:
        return sorted(self.entries, key=lambda w: (-self.entries[w], w))

    def ranks(self) -> dict[str, int]:
        """1-based rank per word (lower = more frequent)."""
        return {w: i for i, w in enumerate(self.ranked(), 1)}

    def top(self, n: int) -> list[str]:
        if n < 0:
            raise ValueError("n must be >= 0")
        if n > len(self.entries):
            raise ValueError(f"asked for {n} seed words but the table has {len(self.entries)}")
        return self.ranked()[:n]

    def alphabet(self) -> tuple[str, ...]:
        chars = set()
        for word in self.entries:
            chars.update(word)
        return tuple(sorted(chars))

    def add_tokens(self, tokens) -> None:
        for token in tokens:
            self.entries[token] = self.entries.get(token, 0) + 1


def build_frequency_table(tokens, language_id: str = "und") -> FrequencyTable:
    return FrequencyTable(entries=dict(Counter(tokens)), language_id=language_id)


def select_seed(table: FrequencyTable, n: int) -> list[str]:
    """The n most frequent words under the deterministic ranking."""
    return table.top(n)


@dataclass
class EvalSet:
    """Labelled evaluation items: (token, gold label, correct form or None)."""

    items: list
    name: str = "test"

    def tokens(self) -> list[str]:
        return [token for token, _, _ in self.items]

    def golds(self) -> list[Label]:
        return [label for _, label, _ in self.items]


def make_splits(
    table: FrequencyTable,
    rng: random.Random,
    *,
    dev_size: int = 200,
    test_size: int = 200,
    dev_exclude: int = 500,
    test_exclude: int = 1000,
) -> tuple[EvalSet, EvalSet]:
    """Disjoint dev/test word samples that avoid the frequent seed ranks.

    Dev words come from ranks above dev_exclude, test words from ranks
    above test_exclude, sampled without replacement. Raises when the
    vocabulary cannot supply full-size splits; it never shrinks them
    silently.
    """
    ranked = table.ranked()
    test_pool = ranked[test_exclude:]
    if len(test_pool) < test_size:
        raise ValueError(
            f"vocabulary too small: need {test_exclude + test_size} words for the "
            f"test split, have {len(ranked)}"
        )
    test_words = rng.sample(test_pool, test_size)
    taken = set(test_words)
    dev_pool = [w for w in ranked[dev_exclude:] if w not in taken]
    if len(dev_pool) < dev_size:
        raise ValueError(
            f"vocabulary too small: need {dev_size} dev words above rank "
            f"{dev_exclude} after removing the test split, have {len(dev_pool)}"
        )
    dev_words = rng.sample(dev_pool, dev_size)
    dev = EvalSet([(w, Label.CORRECT, None) for w in dev_words], name="dev")
    test = EvalSet([(w, Label.CORRECT, None) for w in test_words], name="test")
    return dev, test


def synthesize_eval_set(
    words,
    rng: random.Random,
    *,
    misspell_fraction: float = 0.5,
    alphabet=None,
    forbidden=frozenset(),
    patterns: LanguagePatternSet | None = None,
    name: str = "synthetic",
) -> EvalSet:
    """Corrupt a fraction of the words into labelled misspellings.

    Corrupted items store the original word as their correct form and are
    exactly one edit away from it; the rest are labelled correct.
    """
    words = list(words)
    if not 0.0 <= misspell_fraction <= 1.0:
        raise ValueError("misspell_fraction must be in [0, 1]")
    if alphabet is None:
        chars = set()
        for w in words:
            chars.update(w)
        alphabet = tuple(sorted(chars))
    n_miss = round(misspell_fraction * len(words))
    corrupt_at = set(rng.sample(range(len(words)), n_miss))
    items = []
    for i, word in enumerate(words):
        if i in corrupt_at:
            bad = corrupt(word, rng, alphabet=alphabet, forbidden=forbidden, patterns=patterns)
            items.append((bad, Label.MISSPELLED, word))
        else:
            items.append((word, Label.CORRECT, None))
    return EvalSet(items, name=name)


# ---------------------------------------------------------------------------
# file formats


def read_frequency_tsv(path, language_id: str = "und") -> FrequencyTable:
    entries: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected word<TAB>count")
            word, count = fields
            entries[word] = entries.get(word, 0) + int(count)
    return FrequencyTable(entries=entries, language_id=language_id)


def write_frequency_tsv(path, table: FrequencyTable) -> None:
    lines = [f"{w}\t{table.entries[w]}" for w in table.ranked()]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_corpus(path, language_id: str = "und") -> FrequencyTable:
    """Raw `.txt` (tokenized here) or pre-counted `.freq.tsv`."""
    text = str(path)
    if text.endswith(".tsv"):
        return read_frequency_tsv(path, language_id)
    with open(path, encoding="utf-8") as handle:
        return build_frequency_table(tokenize(handle.read()), language_id)


def read_eval_tsv(path, name: str = "test") -> EvalSet:
    items = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected token<TAB>label[<TAB>correction]")
            label = Label.parse(fields[1])
            correction = fields[2] if len(fields) == 3 else None
            items.append((fields[0], label, correction))
    return EvalSet(items, name=name)


def write_eval_tsv(path, eval_set: EvalSet) -> None:
    lines = []
    for token, label, correction in eval_set.items:
        if correction is None:
            lines.append(f"{token}\t{label.value}")
        else:
            lines.append(f"{token}\t{label.value}\t{correction}")
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# bundled data


def bundled_table(name: str) -> FrequencyTable:
    """One of the frequency lists shipped with the package."""
    if name not in BUNDLED:
        raise ValueError(f"no bundled corpus named {name!r}; have {BUNDLED}")
    ref = resources.files("spellnorm.data") / f"{name}.freq.tsv"
    with resources.as_file(ref) as path:
        return read_frequency_tsv(path, language_id=name)


def bundled_pattern_set(name: str) -> LanguagePatternSet:
    ref = resources.files("spellnorm.data") / f"{name}.patterns"
    with resources.as_file(ref) as path:
        return load_patterns(path)
