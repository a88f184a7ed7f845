"""Pure-Python edit-distance kernels.

Fallback used when the compiled extension (spellnorm._editdist) is not
available; both backends must return identical values.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Classic unit-cost edit distance (insert / delete / substitute)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la < lb:  # keep the inner row short
        a, b, la, lb = b, a, lb, la
    prev = list(range(lb + 1))
    curr = [0] * (lb + 1)
    for i in range(1, la + 1):
        curr[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev, curr = curr, prev
    return prev[lb]


def damerau_levenshtein(a: str, b: str) -> int:
    """Edit distance with adjacent transposition as a unit operation.

    This is the restricted (optimal string alignment) variant: no
    substring is edited more than once, so e.g. ("ca", "abc") costs 3.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2 = [0] * (lb + 1)
    prev = list(range(lb + 1))
    curr = [0] * (lb + 1)
    for i in range(1, la + 1):
        curr[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            d = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ai == b[j - 2] and a[i - 2] == b[j - 1]:
                d = min(d, prev2[j - 2] + 1)
            curr[j] = d
        prev2, prev, curr = prev, curr, prev2
    return prev[lb]
