"""Small shared helpers: seed derivation and atomic file writes."""

from __future__ import annotations

import hashlib
import os
import tempfile


def derive_seed(root: int, *names: str) -> int:
    """Stable child seed for a named random stream.

    Uses sha256 so results do not depend on PYTHONHASHSEED or platform;
    the same (root, names) always yields the same child seed.
    """
    digest = hashlib.sha256()
    digest.update(str(int(root)).encode("utf-8"))
    for name in names:
        digest.update(b"/")
        digest.update(name.encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write a file via temp-then-rename so readers never see a torn write."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
