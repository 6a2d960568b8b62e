"""Periodic two-channel filterbanks: filters, PR pairs, multi-level analysis/synthesis.

All signals are treated as one period of a periodic sequence, so every
convolution here is cyclic.  Subband tables are stored as arrays whose
subband axis is indexed by the integer ``sum(i_k << k)``: bit ``k`` of the
index selects the lowpass (0) or highpass (1) analysis filter applied at
decomposition level ``k``.  Level 0 is the first filter applied to the input.
"""
from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DepthError,
    FilterbankError,
    IncompleteSubbandSetError,
    LengthMismatchError,
    OddLengthError,
    PerfectReconstructionError,
)

NORMALIZATIONS = ("gain2", "unitary")
PR_TOL = 1e-10


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------


def as_signal(x, name="x") -> np.ndarray:
    """Return ``x`` as a finite, non-empty float64 vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise FilterbankError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise FilterbankError(f"{name} contains non-finite samples")
    return arr


def as_image(im, name="image") -> np.ndarray:
    arr = np.asarray(im, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FilterbankError(f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise FilterbankError(f"{name} contains non-finite pixels")
    return arr


def check_depth(n: int, depth: int, what="signal length"):
    if depth < 0:
        raise DepthError(f"depth must be >= 0, got {depth}")
    if n % (1 << depth):
        raise DepthError(f"{what} {n} is not divisible by 2**{depth}")


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Filter:
    """FIR filter: tap ``k`` sits at time index ``offset + k``."""

    taps: tuple
    offset: int = 0

    def __post_init__(self):
        taps = tuple(float(t) for t in np.ravel(np.asarray(self.taps, dtype=np.float64)))
        if not taps:
            raise FilterbankError("filter needs at least one tap")
        if not all(math.isfinite(t) for t in taps):
            raise FilterbankError("filter taps must be finite")
        if not any(taps):
            raise FilterbankError("filter must have a nonzero tap")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def delta(cls, at=0) -> "Filter":
        return cls((1.0,), at)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.taps)

    @property
    def indices(self) -> np.ndarray:
        return self.offset + np.arange(len(self.taps))

    @property
    def last(self) -> int:
        return self.offset + len(self.taps) - 1

    def __len__(self):
        return len(self.taps)

    def tap(self, n: int) -> float:
        """Coefficient at time index ``n`` (zero outside the support)."""
        k = n - self.offset
        return self.taps[k] if 0 <= k < len(self.taps) else 0.0

    def scaled(self, c: float) -> "Filter":
        return Filter(tuple(c * t for t in self.taps), self.offset)

    def shifted(self, k: int) -> "Filter":
        """Delay by ``k`` samples: result[n] = self[n - k]."""
        return Filter(self.taps, self.offset + k)

    def modulated(self) -> "Filter":
        """Multiply tap at index n by (-1)**n."""
        return Filter(tuple(t * (-1) ** (n % 2) for n, t in zip(self.indices, self.taps)), self.offset)

    def dtft(self, omega):
        """Evaluate ``sum_n f[n] exp(-j omega n)`` (vectorised over omega)."""
        w = np.asarray(omega, dtype=np.float64)
        return np.exp(-1j * np.multiply.outer(w, self.indices)) @ self.array

    def to_dict(self) -> dict:
        return {"offset": self.offset, "taps": list(self.taps)}

    @classmethod
    def from_dict(cls, d) -> "Filter":
        return cls(tuple(d["taps"]), int(d["offset"]))


@dataclass(frozen=True)
class SpectrumEval:
    frequency: float
    value: complex


def dtft_eval(f: Filter, omega: float) -> SpectrumEval:
    if not (-math.pi < omega <= math.pi):
        raise FilterbankError(f"omega must lie in (-pi, pi], got {omega}")
    value = complex(f.dtft(omega))
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise FilterbankError("non-finite spectrum value")
    return SpectrumEval(float(omega), value)


def frequency_grid(points=1024) -> np.ndarray:
    """``points`` equispaced frequencies in (-pi, pi]."""
    return -np.pi + 2 * np.pi * np.arange(1, points + 1) / points


# ---------------------------------------------------------------------------
# Cyclic primitives (last axis, arbitrary leading batch dims)
# ---------------------------------------------------------------------------


def _conv(x: np.ndarray, f: Filter) -> np.ndarray:
    out = np.zeros_like(x)
    for k, t in enumerate(f.taps):
        if t:
            out += t * np.roll(x, f.offset + k, axis=-1)
    return out


def _upsample(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (2 * v.shape[-1],))
    out[..., ::2] = v
    return out


def cyclic_convolve(x, f: Filter) -> np.ndarray:
    """Periodic convolution: ``out[n] = sum_k taps[k] x[(n - offset - k) mod N]``."""
    return _conv(as_signal(x), f)


def modulate(x) -> np.ndarray:
    """Return ``(-1)**n x[n]``; needs even length to be consistent under periodicity."""
    x = as_signal(x)
    if x.size % 2:
        raise OddLengthError("modulation by (-1)^n needs an even period")
    out = x.copy()
    out[1::2] *= -1
    return out


def subsample(x) -> np.ndarray:
    """Zero the odd-indexed samples (length is preserved)."""
    out = as_signal(x).copy()
    out[1::2] = 0.0
    return out


# ---------------------------------------------------------------------------
# Filterbank pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PRReport:
    passed: bool
    max_time_error: float
    max_freq_error: float
    tol: float

    @property
    def time_ok(self) -> bool:
        return self.max_time_error <= self.tol

    @property
    def freq_ok(self) -> bool:
        return self.max_freq_error <= self.tol

    @property
    def consistent(self) -> bool:
        """Do the time-domain probe and the frequency check agree?"""
        return self.time_ok == self.freq_ok


@dataclass(frozen=True)
class FilterbankPair:
    """Two-channel analysis filters ``g0, g1`` and synthesis filters ``h0, h1``.

    ``normalization`` is ``"gain2"`` (lowpass DC analysis gain 2 per level) or
    ``"unitary"`` (gain sqrt(2)).  Construction runs :func:`verify_pr` unless
    ``validate=False``.
    """

    g0: Filter
    g1: Filter
    h0: Filter
    h1: Filter
    normalization: str = "gain2"
    name: str = "custom"
    validate: InitVar[bool] = True
    tol: InitVar[float] = PR_TOL

    def __post_init__(self, validate, tol):
        if self.normalization not in NORMALIZATIONS:
            raise FilterbankError(f"unknown normalization {self.normalization!r}")
        if validate:
            report = verify_pr(self, tol=tol)
            if not report.passed:
                raise PerfectReconstructionError(
                    f"filterbank {self.name!r} is not perfect-reconstruction "
                    f"(time error {report.max_time_error:.3g}, frequency error {report.max_freq_error:.3g})"
                )

    @property
    def analysis(self) -> tuple:
        return (self.g0, self.g1)

    @property
    def synthesis(self) -> tuple:
        return (self.h0, self.h1)

    @property
    def max_length(self) -> int:
        return max(len(f) for f in (self.g0, self.g1, self.h0, self.h1))

    def with_normalization(self, mode: str) -> "FilterbankPair":
        """Rescale analysis by c and synthesis by 1/c to switch normalization."""
        if mode not in NORMALIZATIONS:
            raise FilterbankError(f"unknown normalization {mode!r}")
        if mode == self.normalization:
            return self
        c = 1 / math.sqrt(2) if mode == "unitary" else math.sqrt(2)
        return FilterbankPair(
            self.g0.scaled(c), self.g1.scaled(c), self.h0.scaled(1 / c), self.h1.scaled(1 / c),
            normalization=mode, name=self.name, validate=False,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "normalization": self.normalization,
            "g0": self.g0.to_dict(),
            "g1": self.g1.to_dict(),
            "h0": self.h0.to_dict(),
            "h1": self.h1.to_dict(),
        }

    @classmethod
    def from_dict(cls, d, validate=True) -> "FilterbankPair":
        return cls(
            Filter.from_dict(d["g0"]), Filter.from_dict(d["g1"]),
            Filter.from_dict(d["h0"]), Filter.from_dict(d["h1"]),
            normalization=d.get("normalization", "gain2"), name=d.get("name", "custom"),
            validate=validate,
        )


def verify_pr(fb: FilterbankPair, tol: float = PR_TOL, trials: int = 16, seed: int = 0) -> PRReport:
    """Check perfect reconstruction two ways.

    The time-domain probe runs a one-level round trip on ``trials`` random
    signals; the frequency check evaluates the distortion identity
    ``g0 h0 + g1 h1 = 2`` and the alias identity
    ``g0(w) h0(w - pi) + g1(w) h1(w - pi) = 0`` on a 1024-point grid.
    """
    if tol <= 0:
        raise FilterbankError("tol must be positive")
    n = 64
    while n < 4 * fb.max_length:
        n *= 2
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((trials, n))
    v0, v1 = _analyze_level(x, fb.g0, fb.g1)
    xr = _synthesize_level(v0, v1, fb.h0, fb.h1)
    time_err = float(np.max(np.abs(xr - x))) if trials else 0.0

    w = frequency_grid()
    g0, g1 = fb.g0.dtft(w), fb.g1.dtft(w)
    distortion = g0 * fb.h0.dtft(w) + g1 * fb.h1.dtft(w) - 2
    alias = g0 * fb.h0.dtft(w - np.pi) + g1 * fb.h1.dtft(w - np.pi)
    freq_err = float(max(np.max(np.abs(distortion)), np.max(np.abs(alias))))
    return PRReport(time_err <= tol and freq_err <= tol, time_err, freq_err, tol)


# ---------------------------------------------------------------------------
# Subband indices and tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SubbandIndex:
    """Bit vector (i_{I-1}, ..., i_0) stored as ``value = sum(i_k << k)``."""

    value: int
    depth: int

    def __post_init__(self):
        if self.depth < 0 or not (0 <= self.value < (1 << self.depth)):
            raise FilterbankError(f"index {self.value} out of range for depth {self.depth}")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "SubbandIndex":
        """Build from ``(i_{I-1}, ..., i_1, i_0)``, most significant first."""
        value = 0
        for b in bits:
            if b not in (0, 1):
                raise FilterbankError("index bits must be 0 or 1")
            value = (value << 1) | int(b)
        return cls(value, len(bits))

    @property
    def bits(self) -> tuple:
        return tuple((self.value >> k) & 1 for k in reversed(range(self.depth)))

    def bit(self, level: int) -> int:
        return (self.value >> level) & 1

    def complement(self) -> "SubbandIndex":
        """Flip the level-0 bit only."""
        return SubbandIndex(self.value ^ 1, self.depth)

    def __add__(self, other: "SubbandIndex") -> "SubbandIndex":
        if other.depth != self.depth:
            raise FilterbankError("cannot add indices of different depth")
        return SubbandIndex(self.value ^ other.value, self.depth)

    def __int__(self):
        return self.value


def _index_value(idx, depth: int) -> int:
    if isinstance(idx, SubbandIndex):
        if idx.depth != depth:
            raise FilterbankError(f"index depth {idx.depth} != table depth {depth}")
        return idx.value
    if isinstance(idx, tuple):
        return SubbandIndex.from_bits(idx).value
    return SubbandIndex(int(idx), depth).value


@dataclass
class SubbandSet:
    """Complete table ``{v_i[n]}`` of a depth-I decomposition.

    ``coeffs[i, n]`` holds subband ``i`` (integer encoding, bit 0 = level 0).
    """

    coeffs: np.ndarray
    depth: int
    filterbank: str = "custom"
    normalization: str = "gain2"
    complementary: bool = False
    signal_length: int = field(init=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != (1 << self.depth):
            raise IncompleteSubbandSetError(
                f"expected {1 << self.depth} subbands, got array of shape {self.coeffs.shape}"
            )
        self.signal_length = self.coeffs.shape[1] << self.depth

    def __getitem__(self, idx) -> np.ndarray:
        return self.coeffs[_index_value(idx, self.depth)]

    @property
    def n_subbands(self) -> int:
        return self.coeffs.shape[0]

    @property
    def length(self) -> int:
        return self.coeffs.shape[1]

    def indices(self) -> list:
        return [SubbandIndex(i, self.depth) for i in range(self.n_subbands)]

    def with_coeffs(self, coeffs, **changes) -> "SubbandSet":
        params = dict(depth=self.depth, filterbank=self.filterbank,
                      normalization=self.normalization, complementary=self.complementary)
        params.update(changes)
        return SubbandSet(coeffs, **params)

    @classmethod
    def from_mapping(cls, table: dict, depth: int, **kw) -> "SubbandSet":
        """Build from ``{index: vector}``; every index must be present."""
        values = {_index_value(k, depth): np.asarray(v, dtype=np.float64) for k, v in table.items()}
        missing = sorted(set(range(1 << depth)) - set(values))
        if missing:
            raise IncompleteSubbandSetError(f"missing subbands {missing}")
        lengths = {v.shape for v in values.values()}
        if len(lengths) != 1:
            raise IncompleteSubbandSetError("subband vectors differ in length")
        return cls(np.stack([values[i] for i in range(1 << depth)]), depth, **kw)


@dataclass
class Subbands2D:
    """Separable 2-D table: ``coeffs[i, k]`` is the (H/2^I, W/2^I) subband with
    axis-0 index ``i`` and axis-1 index ``k``."""

    coeffs: np.ndarray
    depth: int
    filterbank: str = "custom"
    normalization: str = "gain2"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        m = 1 << self.depth
        if self.coeffs.ndim != 4 or self.coeffs.shape[:2] != (m, m):
            raise IncompleteSubbandSetError(f"expected ({m}, {m}, h, w) table, got {self.coeffs.shape}")

    @property
    def shape(self) -> tuple:
        return (self.coeffs.shape[2] << self.depth, self.coeffs.shape[3] << self.depth)

    def __getitem__(self, key) -> np.ndarray:
        i, k = key
        return self.coeffs[_index_value(i, self.depth), _index_value(k, self.depth)]

    def with_coeffs(self, coeffs) -> "Subbands2D":
        return Subbands2D(coeffs, self.depth, self.filterbank, self.normalization)


# ---------------------------------------------------------------------------
# Analysis / synthesis
# ---------------------------------------------------------------------------


def _analyze_level(x, g0: Filter, g1: Filter):
    return _conv(x, g0)[..., ::2], _conv(x, g1)[..., ::2]


def _synthesize_level(v0, v1, h0: Filter, h1: Filter):
    return _conv(_upsample(v0), h0) + _conv(_upsample(v1), h1)


def _analyze_tree(x, first: tuple, rest: tuple, depth: int) -> np.ndarray:
    """Full binary tree on the last axis; returns (..., 2**depth, N / 2**depth).

    ``first`` are the analysis filters used at level 0, ``rest`` at all
    deeper levels.
    """
    coeffs = x[..., None, :]
    for level in range(depth):
        g0, g1 = first if level == 0 else rest
        lo, hi = _analyze_level(coeffs, g0, g1)
        # the new bit lands at position `level`, i.e. above all existing bits
        coeffs = np.concatenate([lo, hi], axis=-2)
    return coeffs


def _synthesize_tree(coeffs: np.ndarray, synth: tuple, depth: int) -> np.ndarray:
    h0, h1 = synth
    for level in reversed(range(depth)):
        half = 1 << level
        coeffs = _synthesize_level(coeffs[..., :half, :], coeffs[..., half:, :], h0, h1)
    return coeffs[..., 0, :]


def analyze_one_level(x, fb: FilterbankPair):
    """Return ``(v0, v1)`` with ``v_i[n] = (g_i * x)[2n]``."""
    x = as_signal(x)
    if x.size % 2:
        raise OddLengthError("one-level analysis needs an even length")
    return _analyze_level(x, fb.g0, fb.g1)


def synthesize_one_level(v0, v1, fb: FilterbankPair) -> np.ndarray:
    v0 = np.asarray(v0, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    if v0.shape != v1.shape or v0.ndim != 1:
        raise LengthMismatchError(f"subband shapes differ: {v0.shape} vs {v1.shape}")
    return _synthesize_level(v0, v1, fb.h0, fb.h1)


def analyze_multi(x, fb: FilterbankPair, depth: int, wavelet: bool = False):
    """Depth-``depth`` full-tree analysis.

    With ``wavelet=True`` only the lowpass branch is split further and a
    :class:`WaveletCoeffs` is returned instead of a :class:`SubbandSet`.
    """
    x = as_signal(x)
    check_depth(x.size, depth)
    if wavelet:
        return analyze_wavelet(x, fb, depth)
    coeffs = _analyze_tree(x, fb.analysis, fb.analysis, depth)
    return SubbandSet(coeffs, depth, fb.name, fb.normalization)


def synthesize_multi(S: SubbandSet, fb: FilterbankPair) -> np.ndarray:
    if not isinstance(S, SubbandSet):
        raise IncompleteSubbandSetError("expected a SubbandSet")
    return _synthesize_tree(S.coeffs, fb.synthesis, S.depth)


@dataclass
class WaveletCoeffs:
    """Octave-band decomposition: ``details[k]`` is the highpass output of
    level ``k``; ``approx`` the final lowpass."""

    details: list
    approx: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.details)


def analyze_wavelet(x, fb: FilterbankPair, depth: int) -> WaveletCoeffs:
    x = as_signal(x)
    check_depth(x.size, depth)
    details = []
    lo = x
    for _ in range(depth):
        lo, hi = _analyze_level(lo, fb.g0, fb.g1)
        details.append(hi)
    return WaveletCoeffs(details, lo)


def synthesize_wavelet(c: WaveletCoeffs, fb: FilterbankPair) -> np.ndarray:
    lo = c.approx
    for hi in reversed(c.details):
        lo = _synthesize_level(lo, hi, fb.h0, fb.h1)
    return lo


# ---------------------------------------------------------------------------
# Separable 2-D
# ---------------------------------------------------------------------------


def _analyze_2d_tree(im, rows_first, cols_first, rest, depth):
    # axis 1 first (along each row), then axis 0
    a = _analyze_tree(im, cols_first, rest, depth)           # (H, 2^I, W')
    a = np.moveaxis(a, 0, -1)                                # (2^I, W', H)
    a = _analyze_tree(a, rows_first, rest, depth)            # (2^I_k, W', 2^I_i, H')
    return np.transpose(a, (2, 0, 3, 1))                     # (i, k, H', W')


def analyze_2d(im, fb: FilterbankPair, depth: int) -> Subbands2D:
    im = as_image(im)
    check_depth(im.shape[0], depth, "image height")
    check_depth(im.shape[1], depth, "image width")
    coeffs = _analyze_2d_tree(im, fb.analysis, fb.analysis, fb.analysis, depth)
    return Subbands2D(coeffs, depth, fb.name, fb.normalization)


def synthesize_2d(S: Subbands2D, fb: FilterbankPair) -> np.ndarray:
    a = np.transpose(S.coeffs, (1, 3, 0, 2))                 # (k, W', i, H')
    a = _synthesize_tree(a, fb.synthesis, S.depth)           # (k, W', H)
    a = np.moveaxis(a, -1, 0)                                # (H, k, W')
    return _synthesize_tree(a, fb.synthesis, S.depth)        # (H, W)


def parseval_energy(S) -> float:
    return float(np.sum(np.square(S.coeffs)))


def max_abs(a: Iterable) -> float:
    arr = np.asarray(a)
    return float(np.max(np.abs(arr))) if arr.size else 0.0
