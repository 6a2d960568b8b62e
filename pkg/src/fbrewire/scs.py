"""Haar subband convolution structure (SCS) and localized modulation.

For the gain-2 Haar filterbank, the depth-I coefficients of a pointwise
product are an XOR ("logical") convolution over subband indices, taken
independently at every coarse position n:

    v^{xy}_i[n] = 2^{-I} sum_j v^x_{i XOR j}[n] v^y_j[n]

Multi-level Haar analysis is the natural-order Walsh-Hadamard transform of
consecutive blocks of 2^I samples, which is used here as a brute-force oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .complement import SUPPORT_EPS, support
from .core import (
    SubbandSet,
    analyze_multi,
    as_signal,
    check_depth,
    synthesize_multi,
)
from .errors import (
    DepthError,
    DepthMismatchError,
    FilterbankError,
    LengthError,
    LengthMismatchError,
    NormalizationError,
    SupportConflictError,
)
from .filterbanks import load_filterbank


@lru_cache(maxsize=None)
def haar() -> "FilterbankPair":  # noqa: F821
    return load_filterbank("haar", "gain2")


@lru_cache(maxsize=16)
def _walsh_matrix(depth: int) -> np.ndarray:
    m = 1 << depth
    i = np.arange(m)
    parity = np.array([bin(v).count("1") & 1 for v in (i[:, None] & i[None, :]).ravel()])
    return (1 - 2 * parity).reshape(m, m)


@dataclass(frozen=True)
class WalshBlock:
    """Order-2^I Walsh sequences; row ``i`` is ``phi_i[t] = (-1)^popcount(i & t)``."""

    depth: int
    rows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", _walsh_matrix(self.depth))

    @property
    def order(self) -> int:
        return 1 << self.depth

    def phi(self, i) -> np.ndarray:
        return self.rows[int(i)]

    def group_law_holds(self) -> bool:
        """diag(phi_i) phi_j == phi_{i XOR j} for every pair (exact integer check)."""
        r = self.rows
        idx = np.arange(self.order)
        return bool(np.array_equal(r[:, None, :] * r[None, :, :], r[idx[:, None] ^ idx[None, :]]))


def haar_block_transform(x, depth: int) -> SubbandSet:
    """Blockwise Walsh-Hadamard coefficients, ordered like the Haar filterbank tree."""
    x = as_signal(x)
    check_depth(x.size, depth)
    blocks = x.reshape(-1, 1 << depth)
    coeffs = _walsh_matrix(depth) @ blocks.T
    return SubbandSet(coeffs, depth, "haar", "gain2")


def _check_haar(S: SubbandSet):
    if S.normalization != "gain2":
        raise NormalizationError("subband convolution needs gain2-normalized Haar coefficients")
    if S.filterbank != "haar" or S.complementary:
        raise FilterbankError(f"subband convolution is specific to Haar, got {S.filterbank!r}")


def _xor_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``out[i] = 2^{-I} sum_j a[i ^ j] b[j]`` along axis 0 (length 2^I)."""
    m = a.shape[0]
    idx = np.arange(m)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for j in range(m):
        out += a[idx ^ j] * b[j]
    return out / m


def subband_convolve(A: SubbandSet, B: SubbandSet) -> SubbandSet:
    if A.depth != B.depth:
        raise DepthMismatchError(f"depths differ: {A.depth} vs {B.depth}")
    if A.length != B.length:
        raise LengthMismatchError(f"lengths differ: {A.length} vs {B.length}")
    _check_haar(A)
    _check_haar(B)
    return A.with_coeffs(_xor_convolve(A.coeffs, B.coeffs))


def logical_convolve(u, v) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    m = u.shape[0]
    if u.shape != v.shape or u.ndim != 1:
        raise LengthError("logical convolution needs equal-length vectors")
    if m < 1 or m & (m - 1):
        raise LengthError(f"length {m} is not a power of two")
    return _xor_convolve(u, v)


# ---------------------------------------------------------------------------
# Localized amplitude modulation
# ---------------------------------------------------------------------------


@dataclass
class CarrierSchedule:
    """Subband index ``j[n]`` per coarse position (bit 0 = level-0 bit)."""

    depth: int
    indices: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.ndim != 1:
            raise FilterbankError("carrier indices must be 1-D")
        if self.depth < 0 or np.any((self.indices < 0) | (self.indices >= 1 << self.depth)):
            raise DepthError(f"carrier indices out of range for depth {self.depth}")

    @classmethod
    def constant(cls, depth: int, index: int, length: int, name: str = "") -> "CarrierSchedule":
        return cls(depth, np.full(length, index), name)

    def __len__(self):
        return self.indices.size


def envelope_from_carrier(sched: CarrierSchedule, N: int) -> np.ndarray:
    """Synthesize Haar coefficients ``2^I delta(i, j[n])``: block n becomes phi_{j[n]}."""
    check_depth(N, sched.depth)
    L = N >> sched.depth
    if len(sched) != L:
        raise LengthMismatchError(f"schedule has {len(sched)} entries, expected {L}")
    coeffs = np.zeros((1 << sched.depth, L))
    coeffs[sched.indices, np.arange(L)] = 1 << sched.depth
    return synthesize_multi(SubbandSet(coeffs, sched.depth, "haar", "gain2"), haar())


def multiplex(signals, scheds) -> np.ndarray:
    """z[n] = sum_k x_k[n] y_k[n] with y_k the carrier envelopes."""
    xs = [as_signal(x) for x in signals]
    if len(xs) != len(scheds) or not xs:
        raise LengthMismatchError("need one schedule per signal")
    N = xs[0].size
    if any(x.size != N for x in xs):
        raise LengthMismatchError("signals differ in length")
    if len({s.depth for s in scheds}) != 1:
        raise DepthMismatchError("schedules differ in depth")
    return sum(x * envelope_from_carrier(s, N) for x, s in zip(xs, scheds))


@dataclass
class DisjointCheck:
    ok: bool
    conflicts: list

    def __bool__(self):
        return self.ok


def _support_masks(items, rel_eps):
    return [np.asarray(it, dtype=bool) if np.asarray(getattr(it, "coeffs", it)).dtype == bool
            else support(it, rel_eps) for it in items]


def check_disjoint_supports(coeff_sets, scheds, rel_eps: float = SUPPORT_EPS) -> DisjointCheck:
    """Are the shifted supports ``{(i XOR j_k[n], n)}`` pairwise disjoint across channels?

    ``coeff_sets`` may hold SubbandSets (support taken at ``rel_eps``) or
    boolean masks.  Conflicts are ``(n, slot_index, channels)`` tuples.
    """
    masks = _support_masks(coeff_sets, rel_eps)
    if len(masks) != len(scheds):
        raise LengthMismatchError("need one schedule per channel")
    if len({s.depth for s in scheds}) > 1:
        raise DepthMismatchError("schedules differ in depth")
    if not masks:
        return DisjointCheck(True, [])
    m, L = masks[0].shape
    claims = np.zeros((len(masks), m, L), dtype=bool)
    idx = np.arange(m)[:, None]
    cols = np.arange(L)[None, :]
    for k, (mask, s) in enumerate(zip(masks, scheds)):
        if mask.shape != (m, L) or (1 << s.depth) != m or len(s) != L:
            raise DepthMismatchError(f"channel {k}: support {mask.shape} and schedule disagree")
        slot = idx ^ s.indices[None, :]
        claims[k][slot[mask], np.broadcast_to(cols, mask.shape)[mask]] = True
    clash = claims.sum(axis=0) >= 2
    conflicts = [
        (int(n), int(i), [int(k) for k in np.flatnonzero(claims[:, i, n])])
        for i, n in zip(*np.nonzero(clash))
    ]
    conflicts.sort()
    return DisjointCheck(not conflicts, conflicts)


def demultiplex(z, scheds, supports, rel_eps: float = SUPPORT_EPS) -> list:
    """Recover each channel's Haar coefficients on its claimed support."""
    z = as_signal(z)
    masks = _support_masks(supports, rel_eps)
    check = check_disjoint_supports(masks, scheds)
    if not check.ok:
        raise SupportConflictError(f"{len(check.conflicts)} overlapping slots, e.g. {check.conflicts[:3]}")
    depth = scheds[0].depth
    vz = analyze_multi(z, haar(), depth)
    idx = np.arange(vz.n_subbands)[:, None]
    cols = np.arange(vz.length)[None, :]
    out = []
    for mask, s in zip(masks, scheds):
        gathered = vz.coeffs[idx ^ s.indices[None, :], cols]
        out.append(vz.with_coeffs(np.where(mask, gathered, 0.0)))
    return out


@dataclass
class MaskAliasReport:
    """``terms[i, n]`` counts nonzero products feeding output coefficient (i, n)."""

    terms: np.ndarray

    @property
    def aliased(self) -> np.ndarray:
        return self.terms >= 2

    @property
    def aliased_positions(self) -> np.ndarray:
        return np.flatnonzero(self.aliased.any(axis=0))

    def summary(self) -> dict:
        return {
            "subbands": int(self.terms.shape[0]),
            "positions": int(self.terms.shape[1]),
            "aliased": int(self.aliased.sum()),
            "aliased_positions": int(self.aliased_positions.size),
        }

    def to_dict(self) -> dict:
        return {"summary": self.summary(), "aliased": self.aliased.astype(int).tolist()}


def mask_alias_report(vx: SubbandSet, vy: SubbandSet, rel_eps: float = SUPPORT_EPS) -> MaskAliasReport:
    """Where is x recoverable from the product x*y?  Flags outputs fed by 2+ terms."""
    if vx.depth != vy.depth or vx.length != vy.length:
        raise DepthMismatchError("coefficient sets disagree in depth or length")
    sx = support(vx, rel_eps).astype(np.int64)
    sy = support(vy, rel_eps).astype(np.int64)
    idx = np.arange(vx.n_subbands)
    terms = np.zeros_like(sx)
    for j in range(vx.n_subbands):
        terms += sx[idx ^ j] * sy[j]
    return MaskAliasReport(terms)
