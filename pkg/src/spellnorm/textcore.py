"""Tokenization and edit-distance primitives shared by all other modules.

Tokens are sequences of Unicode scalar values: length, indexing and edits
all operate on code points, not bytes (combining marks are not merged,
which is a known limitation for scripts that rely on them).

The edit-distance functions dispatch to the compiled kernel when the
extension built from ``_editdist.pyx`` is importable, and to the pure
Python fallback otherwise. ``EDITDIST_BACKEND`` names the active one.
"""

from __future__ import annotations

import unicodedata

try:
    from spellnorm import _editdist as _impl

    EDITDIST_BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    from spellnorm import _editdist_py as _impl

    EDITDIST_BACKEND = "python"


def _is_punctuation(char: str) -> bool:
    return unicodedata.category(char).startswith("P")


def normalize_token(raw: str) -> str:
    """Strip edge punctuation and case-fold one whitespace-free chunk.

    Returns "" when nothing survives. Interior punctuation (apostrophes,
    hyphens) is kept; only the token edges are trimmed.
    """
    start, end = 0, len(raw)
    while start < end and _is_punctuation(raw[start]):
        start += 1
    while end > start and _is_punctuation(raw[end - 1]):
        end -= 1
    return raw[start:end].casefold()


def tokenize(text: str) -> list[str]:
    """Split text on whitespace into normalized, non-empty tokens."""
    tokens = []
    for chunk in text.split():
        token = normalize_token(chunk)
        if token:
            tokens.append(token)
    return tokens


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance."""
    return _impl.levenshtein(a, b)


def damerau_levenshtein(a: str, b: str) -> int:
    """Unit-cost distance that also counts one adjacent transposition.

    Restricted variant (optimal string alignment): a single transposition
    is distance 1, but no substring is edited twice.
    """
    return _impl.damerau_levenshtein(a, b)
