"""Synthetic misspelling generation.

Builds single-edit corruptions of known-correct words, fixed-ratio
confusion sets, and augmented training sets. Every generated misspelling
is exactly one edit action away from its source (replace, transpose,
insert or delete, i.e. distance 1 under the transposition-aware metric),
never equal to the source, and never a word from the known-correct
vocabulary handed in as `forbidden`.

All sampling goes through an explicit `random.Random` so runs replay
exactly from a seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from spellnorm.labels import Label

ACTIONS = ("replace", "transpose", "insert", "delete")

EPSILON = 1e-5  # frequency smoothing for the `freq` scheme


class GenerationError(RuntimeError):
    """Raised when no acceptable corruption can be sampled."""


@dataclass(frozen=True)
class EditAction:
    kind: str
    position: int
    character: str | None = None


@dataclass(frozen=True)
class LanguagePatternSet:
    """Language-specific corruption patterns (vowel swaps, consonant
    doubling, confusable pairs) mixed into random edits with probability
    `pattern_probability`."""

    vowels: frozenset = frozenset()
    doubling: frozenset = frozenset()
    pairs: tuple = ()
    pattern_probability: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 <= self.pattern_probability <= 1.0:
            raise ValueError("pattern_probability must be in [0, 1]")


@dataclass
class ConfusionSet:
    source: str
    entries: list = field(default_factory=list)  # (token, Label) pairs

    def misspelled(self) -> list[str]:
        return [tok for tok, label in self.entries if label is Label.MISSPELLED]


@dataclass
class TrainingSet:
    examples: list  # (token, Label) pairs
    provenance: str = "table"

    def __len__(self) -> int:
        return len(self.examples)


def load_patterns(path) -> LanguagePatternSet:
    """Parse a pattern config: sections [vowels], [doubling], [pairs]
    (one `x y` pair per line) and [prob] with `p=<float>`."""
    vowels: set[str] = set()
    doubling: set[str] = set()
    pairs: list[tuple[str, str]] = []
    prob = 0.3
    section = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                if section not in ("vowels", "doubling", "pairs", "prob"):
                    raise ValueError(f"{path}:{lineno}: unknown section [{section}]")
                continue
            if section in ("vowels", "doubling"):
                chars = line.split()
                if any(len(c) != 1 for c in chars):
                    raise ValueError(f"{path}:{lineno}: expected single characters")
                (vowels if section == "vowels" else doubling).update(chars)
            elif section == "pairs":
                parts = line.split()
                if len(parts) != 2 or any(len(p) != 1 for p in parts):
                    raise ValueError(f"{path}:{lineno}: expected a pair like `x y`")
                pairs.append((min(parts), max(parts)))
            elif section == "prob":
                key, _, value = line.partition("=")
                if key.strip() != "p":
                    raise ValueError(f"{path}:{lineno}: expected p=<float>")
                prob = float(value)
            else:
                raise ValueError(f"{path}:{lineno}: content before any section")
    return LanguagePatternSet(
        vowels=frozenset(vowels),
        doubling=frozenset(doubling),
        pairs=tuple(sorted(set(pairs))),
        pattern_probability=prob,
    )


def sample_action(word: str, rng: random.Random, alphabet) -> EditAction:
    """One uniformly chosen edit action valid for this word.

    Actions that cannot apply (transpose/delete on a single character)
    are resampled. Insert/replace characters come uniformly from the
    given alphabet.
    """
    if not word:
        raise ValueError("cannot edit an empty token")
    alphabet = list(alphabet)
    if not alphabet:
        raise ValueError("empty alphabet")
    while True:
        kind = rng.choice(ACTIONS)
        if kind == "replace":
            return EditAction(kind, rng.randrange(len(word)), rng.choice(alphabet))
        if kind == "insert":
            return EditAction(kind, rng.randrange(len(word) + 1), rng.choice(alphabet))
        if kind == "transpose":
            if len(word) < 2:
                continue
            return EditAction(kind, rng.randrange(len(word) - 1))
        if len(word) < 2:  # delete would empty the token
            continue
        return EditAction(kind, rng.randrange(len(word)))


def apply_action(word: str, action: EditAction) -> str:
    pos = action.position
    if action.kind == "replace":
        if not 0 <= pos < len(word):
            raise ValueError("replace position out of range")
        return word[:pos] + action.character + word[pos + 1 :]
    if action.kind == "transpose":
        if not 0 <= pos < len(word) - 1:
            raise ValueError("transpose position out of range")
        return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
    if action.kind == "insert":
        if not 0 <= pos <= len(word):
            raise ValueError("insert position out of range")
        return word[:pos] + action.character + word[pos:]
    if action.kind == "delete":
        if not 0 <= pos < len(word):
            raise ValueError("delete position out of range")
        return word[:pos] + word[pos + 1 :]
    raise ValueError(f"unknown action kind {action.kind!r}")


def _pattern_moves(word: str, patterns: LanguagePatternSet) -> dict[str, list[str]]:
    moves: dict[str, list[str]] = {}
    vowel = [
        word[:i] + v + word[i + 1 :]
        for i, ch in enumerate(word)
        if ch in patterns.vowels
        for v in sorted(patterns.vowels)
        if v != ch
    ]
    if vowel:
        moves["vowel"] = vowel
    double = [
        word[: i + 1] + ch + word[i + 1 :]
        for i, ch in enumerate(word)
        if ch in patterns.doubling
    ]
    if double:
        moves["double"] = double
    paired = []
    for x, y in patterns.pairs:
        for i, ch in enumerate(word):
            if ch == x:
                paired.append(word[:i] + y + word[i + 1 :])
            elif ch == y:
                paired.append(word[:i] + x + word[i + 1 :])
    if paired:
        moves["pair"] = paired
    return moves


def corrupt(
    word: str,
    rng: random.Random,
    *,
    alphabet,
    forbidden=frozenset(),
    patterns: LanguagePatternSet | None = None,
    max_attempts: int = 1000,
) -> str:
    """One synthetic misspelling of `word`: a single edit, different from
    the source, and outside the known-correct vocabulary."""
    alphabet = list(alphabet)
    for _ in range(max_attempts):
        candidate = None
        if patterns is not None and rng.random() < patterns.pattern_probability:
            moves = _pattern_moves(word, patterns)
            if moves:
                kind = rng.choice(sorted(moves))
                candidate = rng.choice(moves[kind])
        if candidate is None:
            candidate = apply_action(word, sample_action(word, rng, alphabet))
        if candidate != word and candidate not in forbidden:
            return candidate
    raise GenerationError(f"no valid corruption of {word!r} after {max_attempts} attempts")


def build_confusion_set(
    word: str,
    rng: random.Random,
    *,
    alphabet,
    size: int = 15,
    misspelling_rate: float = 0.5,
    forbidden=frozenset(),
    patterns: LanguagePatternSet | None = None,
) -> ConfusionSet:
    """Fixed-size multiset of correct copies and single-edit corruptions.

    floor(size * rate) entries are misspellings (7 of 15 at the defaults,
    biasing toward the correct class); the rest are copies of the word.
    Duplicate misspellings are allowed. Order is shuffled.
    """
    if size < 1:
        raise ValueError("confusion set size must be >= 1")
    if not 0.0 <= misspelling_rate <= 1.0:
        raise ValueError("misspelling_rate must be in [0, 1]")
    n_miss = math.floor(size * misspelling_rate)
    entries = [(word, Label.CORRECT)] * (size - n_miss)
    for _ in range(n_miss):
        bad = corrupt(word, rng, alphabet=alphabet, forbidden=forbidden, patterns=patterns)
        entries.append((bad, Label.MISSPELLED))
    rng.shuffle(entries)
    return ConfusionSet(source=word, entries=entries)


def copy_counts(frequencies: dict[str, int], scheme: str) -> dict[str, int]:
    """How many confusion sets each seed word contributes.

    table: one each. freq: proportional to frequency, normalized so the
    least frequent selected seed appears once (epsilon-smoothed before the
    division). logFreq: natural log of the frequency, rounded, floored at 1.
    """
    if scheme == "table":
        return {w: 1 for w in frequencies}
    if scheme == "freq":
        f_min = min(frequencies.values())
        return {w: max(1, round((f + EPSILON) / f_min)) for w, f in frequencies.items()}
    if scheme == "logFreq":
        return {w: max(1, round(math.log(f))) for w, f in frequencies.items()}
    raise ValueError(f"unknown augmentation scheme {scheme!r}")


def augment_words(
    words,
    frequencies: dict[str, int],
    scheme: str,
    rng: random.Random,
    *,
    alphabet,
    forbidden=frozenset(),
    patterns: LanguagePatternSet | None = None,
    size: int = 15,
    misspelling_rate: float = 0.5,
) -> TrainingSet:
    """Confusion sets for the given seed words, weighted per the scheme,
    concatenated and shuffled into one labelled training set."""
    words = list(words)
    missing = [w for w in words if w not in frequencies]
    if missing:
        raise ValueError(f"no frequency for seed words: {missing[:3]}")
    counts = copy_counts({w: frequencies[w] for w in words}, scheme)
    examples = []
    for word in words:
        for _ in range(counts[word]):
            cset = build_confusion_set(
                word,
                rng,
                alphabet=alphabet,
                size=size,
                misspelling_rate=misspelling_rate,
                forbidden=forbidden,
                patterns=patterns,
            )
            examples.extend(cset.entries)
    rng.shuffle(examples)
    return TrainingSet(examples=examples, provenance=scheme)


def augment(table, n_seed: int, scheme: str, rng: random.Random, patterns=None) -> TrainingSet:
    """Augmented training set from the n_seed most frequent table words.

    The insert/replace character pool is the alphabet observed across the
    whole table; corruption outputs are rejected if they collide with any
    selected seed word.
    """
    seeds = table.top(n_seed)
    return augment_words(
        seeds,
        table.entries,
        scheme,
        rng,
        alphabet=table.alphabet(),
        forbidden=set(seeds),
        patterns=patterns,
    )
