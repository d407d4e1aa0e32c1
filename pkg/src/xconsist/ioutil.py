"""Small file-output helpers: atomic writes and fixed number formatting."""
from __future__ import annotations

import os
from pathlib import Path


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write UTF-8 text via a temp file + rename so readers never see a torn file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def fmt_full(value: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(value))


def fmt3(value: float) -> str:
    """Fixed 3-decimal formatting with '.' separator; negative zero collapses to 0.000."""
    rounded = round(float(value), 3) + 0.0
    return f"{rounded:.3f}"
