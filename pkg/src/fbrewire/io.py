"""File formats: text signals, binary PGM, filterbank/schedule/model JSON.

Every writer goes through a temporary file in the target directory and an
atomic rename, so readers never observe partial output.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .core import FilterbankPair
from .errors import ConfigError, FormatError
from .filterbanks import load_filterbank
from .likelihood import FAMILIES, PriorModel
from .scs import CarrierSchedule


def atomic_write(path, data: bytes | str):
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such file") from exc


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# 1-D signals
# ---------------------------------------------------------------------------


def read_signal(path) -> np.ndarray:
    """One decimal value per line; blank lines and ``#`` comments ignored."""
    values = []
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        line = line.split("#", 1)[0].strip().rstrip(",")
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from exc
    if not values:
        raise FormatError(f"{path}: empty signal")
    return np.array(values)


def format_signal(x) -> str:
    return "".join(f"{v:.17g}\n" for v in np.asarray(x, dtype=np.float64).ravel())


def write_signal(path, x):
    atomic_write(path, format_signal(x))


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(data: bytes, source: str):
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise FormatError(f"{source}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise FormatError(f"{source}: not a binary PGM (magic {fields[0]!r})")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise FormatError(f"{source}: malformed PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FormatError(f"{source}: bad PGM dimensions or maxval")
    return width, height, maxval, pos + 1  # single whitespace byte after maxval


def decode_pgm(data: bytes, source="<bytes>") -> np.ndarray:
    """Binary PGM (P5), 8-bit or 16-bit big-endian, as float64 without rescaling."""
    width, height, maxval, pos = _pgm_header(data, source)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    raw = data[pos:pos + count * dtype.itemsize]
    if len(raw) < count * dtype.itemsize:
        raise FormatError(f"{source}: PGM raster truncated")
    return np.frombuffer(raw, dtype=dtype).reshape(height, width).astype(np.float64)


def pgm_maxval(path) -> int:
    try:
        data = Path(path).read_bytes()[:512]
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such file") from exc
    return _pgm_header(data, str(path))[2]


def encode_pgm(im, maxval: int | None = None) -> bytes:
    """Quantize (round half to even, clamp) and encode as P5."""
    im = np.asarray(im, dtype=np.float64)
    if im.ndim != 2:
        raise FormatError("PGM images are 2-D")
    if maxval is None:
        maxval = 255 if np.nanmax(im) <= 255.5 else 65535
    if not 0 < maxval < 65536:
        raise FormatError("maxval must be in 1..65535")
    q = np.clip(np.rint(np.nan_to_num(im)), 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{im.shape[1]} {im.shape[0]}\n{maxval}\n".encode()
    return header + q.astype(dtype).tobytes()


def read_pgm(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such file") from exc
    return decode_pgm(data, str(path))


def write_pgm(path, im, maxval: int | None = None):
    atomic_write(path, encode_pgm(im, maxval))


def read_array(path) -> np.ndarray:
    """PGM by magic number, otherwise a text signal."""
    try:
        head = Path(path).read_bytes()[:2]
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such file") from exc
    return read_pgm(path) if head == b"P5" else read_signal(path)


# ---------------------------------------------------------------------------
# Filterbanks and carrier schedules
# ---------------------------------------------------------------------------


def write_filterbank(path, fb: FilterbankPair):
    write_json(path, fb.to_dict())


def read_filterbank(source: str, normalization: str | None = None, validate: bool = True) -> FilterbankPair:
    return load_filterbank(source, normalization, validate)


def schedules_to_dict(scheds) -> dict:
    depths = {s.depth for s in scheds}
    if len(depths) != 1:
        raise FormatError("all channels of a schedule file share one depth")
    return {
        "depth": depths.pop(),
        "channels": [{"name": s.name, "indices": [int(i) for i in s.indices]} for s in scheds],
    }


def schedules_from_dict(d) -> list:
    if not isinstance(d, dict) or set(d) != {"depth", "channels"}:
        raise FormatError("schedule JSON needs exactly the keys 'depth' and 'channels'")
    out = []
    for ch in d["channels"]:
        if not isinstance(ch, dict) or not {"indices"} <= set(ch) <= {"name", "indices"}:
            raise FormatError("each channel needs 'indices' and optionally 'name'")
        out.append(CarrierSchedule(int(d["depth"]), ch["indices"], ch.get("name", "")))
    return out


def write_schedules(path, scheds):
    write_json(path, schedules_to_dict(scheds))


def read_schedules(path) -> list:
    return schedules_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# Model / prior configuration
# ---------------------------------------------------------------------------

MODEL_KEYS = {"model", "sigma", "depth", "filterbank", "prior"}
PRIOR_KEYS = {"family", "shape", "scales"}
MODELS = ("subsampled_noisy", "multiplicative")


def parse_model_config(d) -> dict:
    """Strict parse of ``{model, sigma, depth, filterbank, prior}``; all keys optional.

    ``prior.scales`` is ``"fit"`` or a nested list over the 2-D subband grid.
    Returns a dict with the prior turned into a PriorModel or ``None`` (fit).
    """
    if not isinstance(d, dict):
        raise FormatError("model config must be a JSON object")
    unknown = set(d) - MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    out = dict(d)
    if "model" in d and d["model"] not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}")
    if "sigma" in d and not (isinstance(d["sigma"], (int, float)) and d["sigma"] >= 0):
        raise ConfigError("sigma must be a non-negative number")
    if "depth" in d and not (isinstance(d["depth"], int) and d["depth"] >= 1):
        raise ConfigError("depth must be an integer >= 1")
    prior = d.get("prior")
    out["prior_family"] = "laplacian"
    out["prior"] = None
    if prior is not None:
        if not isinstance(prior, dict):
            raise FormatError("prior must be a JSON object")
        unknown = set(prior) - PRIOR_KEYS
        if unknown:
            raise ConfigError(f"unknown prior keys {sorted(unknown)}")
        family = prior.get("family", "laplacian")
        if family not in FAMILIES:
            raise ConfigError(f"prior family must be one of {FAMILIES}")
        out["prior_family"] = family
        scales = prior.get("scales", "fit")
        if scales != "fit":
            shape = prior.get("shape", 1.0)
            try:
                arr = np.asarray(scales, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise FormatError("prior scales must be 'fit' or a numeric array") from exc
            flat = np.zeros(arr.shape, dtype=bool)
            if arr.ndim == 2:
                flat[0, 0] = True
            try:
                out["prior"] = PriorModel(family, arr, shape, flat)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
    return out


def read_model_config(path) -> dict:
    return parse_model_config(read_json(path))
