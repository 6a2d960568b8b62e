"""Shipped filterbank tap files and a loader for user-supplied ones."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..core import FilterbankPair
from ..errors import ConfigError, FormatError

SHIPPED = ("haar", "db4", "bior53")


def _read_json(text: str, source: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: invalid JSON ({exc})") from exc
    required = {"g0", "g1", "h0", "h1"}
    if not isinstance(data, dict) or not required <= set(data):
        raise FormatError(f"{source}: filterbank JSON needs keys {sorted(required)}")
    unknown = set(data) - required - {"name", "normalization"}
    if unknown:
        raise FormatError(f"{source}: unknown keys {sorted(unknown)}")
    return data


def load_filterbank(source: str = "haar", normalization: str | None = None, validate: bool = True) -> FilterbankPair:
    """Load a shipped filterbank by name or a JSON file by path.

    ``normalization`` converts the result ("gain2" or "unitary") if given.
    """
    if source in SHIPPED:
        text = resources.files(__name__).joinpath(f"{source}.json").read_text()
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"filterbank {source!r} is neither a shipped name {SHIPPED} nor a file")
        text = path.read_text()
    data = _read_json(text, source)
    try:
        fb = FilterbankPair.from_dict(data, validate=validate)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{source}: malformed filter entry ({exc})") from exc
    return fb.with_normalization(normalization) if normalization else fb


def shipped_filterbanks(normalization: str | None = None) -> dict:
    return {name: load_filterbank(name, normalization) for name in SHIPPED}
