"""Spelling labels shared by the models, corpora and evaluation code."""

from __future__ import annotations

import enum


class Label(enum.Enum):
    """Verdict for a single token; values match the on-disk TSV letters."""

    CORRECT = "C"
    MISSPELLED = "M"

    @classmethod
    def parse(cls, text: str) -> "Label":
        key = text.strip().upper()
        if key in ("C", "CORRECT"):
            return cls.CORRECT
        if key in ("M", "MISSPELLED"):
            return cls.MISSPELLED
        raise ValueError(f"unknown label: {text!r}")

    def __str__(self) -> str:
        return self.value
