"""Persistent word -> spelling-status store with edit-distance suggestions.

The knowledge base is the first authority consulted for any known word;
models only ever see out-of-vocabulary tokens. User-provided labels always
overwrite older ones (last write wins). Storage is a line-oriented UTF-8
file: `C\\t<word>` for correct entries, `M\\t<word>\\t<correction>` for
misspellings, `#` for comments; words are stored post-normalization.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from spellnorm.labels import Label
from spellnorm.textcore import levenshtein
from spellnorm.util import atomic_write_text

FILE_HEADER = "# spellnorm knowledge base v1"


@dataclass
class KbEntry:
    word: str
    status: Label
    correction: str | None = None
    updated_at: float = 0.0


@dataclass(frozen=True)
class Candidate:
    """Correction candidate: a known-correct word near the query."""

    word: str
    distance: int
    frequency_rank: int | None = None


def _check_token(word: str) -> str:
    if not word or any(ch.isspace() for ch in word):
        raise ValueError(f"not a normalized token: {word!r}")
    return word


@dataclass
class KnowledgeBase:
    _entries: dict[str, KbEntry] = field(default_factory=dict)
    _ranks: dict[str, int] = field(default_factory=dict)
    mutations: int = 0

    def __post_init__(self) -> None:
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        # Entry-for-entry equality; timestamps are not part of identity.
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        mine = {w: (e.status, e.correction) for w, e in self._entries.items()}
        theirs = {w: (e.status, e.correction) for w, e in other._entries.items()}
        return mine == theirs

    def lookup(self, word: str) -> KbEntry | None:
        """Exact-match lookup; None means the word is unknown."""
        with self._lock:
            return self._entries.get(word)

    def add_correct(self, word: str) -> None:
        """Upsert a word as correct; overrides a prior misspelling status."""
        word = _check_token(word)
        with self._lock:
            self._entries[word] = KbEntry(word, Label.CORRECT, None, time.time())
            self.mutations += 1

    def add_misspelling(self, word: str, correction: str) -> None:
        """Record word as a misspelling of correction.

        The correction is upserted as a correct entry in the same step so
        every misspelling always resolves to a correct word.
        """
        word = _check_token(word)
        correction = _check_token(correction)
        if word == correction:
            raise ValueError("a word cannot be its own correction")
        now = time.time()
        with self._lock:
            self._entries[word] = KbEntry(word, Label.MISSPELLED, correction, now)
            self._entries[correction] = KbEntry(correction, Label.CORRECT, None, now)
            # Entries that pointed at `word` as their correction would now
            # resolve to a misspelling; re-point them at the new correction.
            for entry in self._entries.values():
                if entry.status is Label.MISSPELLED and entry.correction == word:
                    entry.correction = correction
                    entry.updated_at = now
            self.mutations += 1

    def set_ranks(self, ranks: dict[str, int]) -> None:
        """Install frequency ranks (lower = more frequent) for tie-breaking."""
        with self._lock:
            self._ranks = dict(ranks)

    def correct_words(self) -> set[str]:
        with self._lock:
            return {w for w, e in self._entries.items() if e.status is Label.CORRECT}

    def entries(self) -> list[KbEntry]:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: e.word)

    def suggest(self, word: str, max_distance: int = 5, top_k: int = 10) -> list[Candidate]:
        """Correct entries within the distance bound, best first.

        Sorted by (distance, frequency rank, word) and truncated to top_k;
        the query word itself is never suggested. Brute-force scan with a
        length-difference early reject; fine for stores up to the tens of
        thousands of entries this tool targets.
        """
        with self._lock:
            correct = [w for w, e in self._entries.items() if e.status is Label.CORRECT]
            ranks = self._ranks
        wlen = len(word)
        found: list[Candidate] = []
        for entry in correct:
            if abs(len(entry) - wlen) > max_distance:
                continue
            distance = levenshtein(word, entry)
            if 1 <= distance <= max_distance:
                found.append(Candidate(entry, distance, ranks.get(entry)))
        found.sort(key=lambda c: (c.distance, c.frequency_rank if c.frequency_rank is not None else float("inf"), c.word))
        return found[:top_k]

    def save(self, path) -> None:
        """Atomic snapshot write: a crash mid-save leaves the old file intact."""
        with self._lock:
            lines = [FILE_HEADER]
            for entry in self.entries():
                if entry.status is Label.CORRECT:
                    lines.append(f"C\t{entry.word}")
                else:
                    lines.append(f"M\t{entry.word}\t{entry.correction}")
        atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        kb = cls()
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, 1):
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if fields[0] == "C" and len(fields) == 2:
                    kb._entries[fields[1]] = KbEntry(fields[1], Label.CORRECT)
                elif fields[0] == "M" and len(fields) == 3:
                    kb._entries[fields[1]] = KbEntry(fields[1], Label.MISSPELLED, fields[2])
                else:
                    raise ValueError(f"{path}:{lineno}: malformed record {line!r}")
        # Referential integrity: every correction must itself be correct.
        for entry in list(kb._entries.values()):
            if entry.status is Label.MISSPELLED and (
                entry.correction not in kb._entries
                or kb._entries[entry.correction].status is not Label.CORRECT
            ):
                kb._entries[entry.correction] = KbEntry(entry.correction, Label.CORRECT)
        return kb
