"""Complementary filterbanks and reverse-order subband structure (ROSS).

For a PR pair there is a unique ``(a, b)`` with

    g_i[m] = (-1)**i * a * (-1)**m * h_{1-i}[m + 2b + 1]      (i = 0, 1)

and the complementary analysis filters are ``g~_i[n] = a h_i[n + 2b + 1]``.
Modulating the input by (-1)^n then reorders subbands:
``v^{x_m}_i = (-1)^{i_0} w^x_{i'}`` where ``w`` uses ``g~`` at level 0 only and
``i'`` flips the level-0 bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Filter,
    FilterbankPair,
    SubbandSet,
    _analyze_2d_tree,
    _analyze_level,
    _analyze_tree,
    as_image,
    as_signal,
    check_depth,
    frequency_grid,
    synthesize_one_level,
)
from .errors import (
    DepthError,
    IncompleteSubbandSetError,
    NoComplementParamsError,
    ProvenanceError,
)

SUPPORT_EPS = 1e-9


@dataclass(frozen=True)
class ComplementParams:
    a: float
    b: int
    residual: float = 0.0

    @property
    def shift(self) -> int:
        return 2 * self.b + 1


def _relation_residual(fb: FilterbankPair, s: int):
    """Least-squares ``a`` for shift ``s`` and the worst tap mismatch."""
    pairs = []
    for i, (g, h) in enumerate(((fb.g0, fb.h1), (fb.g1, fb.h0))):
        lo = min(g.offset, h.offset - s)
        hi = max(g.last, h.last - s)
        m = np.arange(lo, hi + 1)
        target = np.array([g.tap(k) for k in m])
        basis = np.array([(-1) ** i * (-1) ** (k % 2) * h.tap(k + s) for k in m])
        pairs.append((target, basis))
    target = np.concatenate([p[0] for p in pairs])
    basis = np.concatenate([p[1] for p in pairs])
    denom = basis @ basis
    if denom == 0:
        return 0.0, math.inf
    a = float(target @ basis / denom)
    return a, float(np.max(np.abs(target - a * basis)))


def derive_complement_params(fb: FilterbankPair, tol: float = 1e-10) -> ComplementParams:
    """Solve the time-domain analysis/synthesis symmetry for ``(a, b)``.

    Only shifts that make the supports of ``g_0`` and the shifted ``h_1``
    overlap are tried; ``a`` is fitted by least squares over all matched taps.
    """
    scale = max(1.0, max(abs(t) for f in fb.analysis for t in f.taps))
    lo = min(fb.h1.offset - fb.g0.last, fb.h0.offset - fb.g1.last)
    hi = max(fb.h1.last - fb.g0.offset, fb.h0.last - fb.g1.offset)
    best = None
    for s in range(lo, hi + 1):
        if s % 2 == 0:
            continue
        a, res = _relation_residual(fb, s)
        if a != 0 and res <= tol * scale and (best is None or res < best.residual):
            best = ComplementParams(a, (s - 1) // 2, res)
    if best is None:
        raise NoComplementParamsError(
            f"no (a, b) relates analysis and synthesis filters of {fb.name!r}; not a PR pair?"
        )
    return best


def build_complement(fb: FilterbankPair, p: ComplementParams | None = None) -> FilterbankPair:
    """Complementary pair: analysis from scaled/advanced synthesis filters and vice versa."""
    if p is None:
        p = derive_complement_params(fb)
    s = p.shift
    g = [Filter(tuple(p.a * t for t in h.taps), h.offset - s) for h in fb.synthesis]
    h = [Filter(tuple(t / p.a for t in f.taps), f.offset + s) for f in fb.analysis]
    return FilterbankPair(g[0], g[1], h[0], h[1], normalization=fb.normalization, name=f"{fb.name}~")


def analyze_complementary_multi(x, fb: FilterbankPair, depth: int,
                                complement: FilterbankPair | None = None) -> SubbandSet:
    """Like ``analyze_multi`` but with the complementary filters at level 0."""
    x = as_signal(x)
    check_depth(x.size, depth)
    comp = complement if complement is not None else build_complement(fb)
    coeffs = _analyze_tree(x, comp.analysis, fb.analysis, depth)
    return SubbandSet(coeffs, depth, fb.name, fb.normalization, complementary=True)


def analyze_2d_complementary(im, fb: FilterbankPair, depth: int, axes=(0, 1),
                             complement: FilterbankPair | None = None) -> np.ndarray:
    """Separable analysis with complementary level-0 filters along ``axes``.

    Returns the raw ``(2^I, 2^I, H', W')`` coefficient array.
    """
    im = as_image(im)
    check_depth(im.shape[0], depth, "image height")
    check_depth(im.shape[1], depth, "image width")
    comp = complement if complement is not None else build_complement(fb)
    rows = comp.analysis if 0 in axes else fb.analysis
    cols = comp.analysis if 1 in axes else fb.analysis
    return _analyze_2d_tree(im, rows, cols, fb.analysis, depth)


def check_self_complementary(fb: FilterbankPair, complement: FilterbankPair | None = None,
                             trials: int = 8, tol: float = 1e-10, seed: int = 0):
    """Return signs ``(s0, s1)`` with ``w_i = s_i v_i`` on random probes, else None."""
    comp = complement if complement is not None else build_complement(fb)
    x = np.random.default_rng(seed).standard_normal((trials, 64))
    v = _analyze_level(x, fb.g0, fb.g1)
    w = _analyze_level(x, comp.g0, comp.g1)
    signs = []
    for vi, wi in zip(v, w):
        for s in (1, -1):
            if np.max(np.abs(wi - s * vi)) <= tol * max(1.0, np.max(np.abs(vi))):
                signs.append(s)
                break
        else:
            return None
    return tuple(signs)


def _level0_parity(n_subbands: int) -> tuple:
    idx = np.arange(n_subbands)
    return idx ^ 1, np.where(idx & 1, -1.0, 1.0)


def ross_predict_modulated(w: SubbandSet) -> SubbandSet:
    """Predicted analysis of the modulated signal: entry i is ``(-1)^{i_0} w_{i'}``."""
    if not isinstance(w, SubbandSet):
        raise IncompleteSubbandSetError("expected a SubbandSet")
    flip, sign = _level0_parity(w.n_subbands)
    return w.with_coeffs(sign[:, None] * w.coeffs[flip], complementary=False)


def _check_provenance(v: SubbandSet, w: SubbandSet):
    if v.depth != w.depth or v.length != w.length:
        raise ProvenanceError(
            f"subband sets disagree: depth {v.depth}/{w.depth}, length {v.length}/{w.length}"
        )
    if v.filterbank != w.filterbank or v.normalization != w.normalization:
        raise ProvenanceError("subband sets come from different filterbanks")
    if v.complementary or not w.complementary:
        raise ProvenanceError("expected (regular, complementary) subband sets")


def alias_decompose(v: SubbandSet, w: SubbandSet) -> SubbandSet:
    """Predicted analysis of the subsampled signal, ``(v_i + (-1)^{i_0} w_{i'}) / 2``."""
    _check_provenance(v, w)
    return v.with_coeffs(0.5 * (v.coeffs + ross_predict_modulated(w).coeffs))


def support(S, rel_eps: float = SUPPORT_EPS) -> np.ndarray:
    """Boolean mask of coefficients above ``rel_eps * max|coefficient|``."""
    c = np.asarray(getattr(S, "coeffs", S))
    peak = float(np.max(np.abs(c))) if c.size else 0.0
    return np.abs(c) > rel_eps * peak


@dataclass
class AliasRecovery:
    values: SubbandSet
    recovered: np.ndarray

    @property
    def aliased(self) -> np.ndarray:
        return ~self.recovered


def alias_free_recover(vs: SubbandSet, w_zero) -> AliasRecovery:
    """Recover ``v^x_i[n] = 2 v^{x_s}_i[n]`` wherever ``w^x_{i'}[n]`` vanishes.

    ``w_zero[j, n]`` is True where complementary coefficient ``w_j[n]`` is
    (numerically) zero; it is indexed by ``w``'s own subband index.
    Unrecovered entries are set to 0 and flagged in the mask.
    """
    w_zero = np.asarray(w_zero, dtype=bool)
    if w_zero.shape != vs.coeffs.shape:
        raise ProvenanceError(f"support mask shape {w_zero.shape} != {vs.coeffs.shape}")
    flip, _ = _level0_parity(vs.n_subbands)
    ok = w_zero[flip]
    return AliasRecovery(vs.with_coeffs(np.where(ok, 2.0 * vs.coeffs, 0.0)), ok)


@dataclass
class AliasReport:
    """Per subband and position: is v supported, is the partner w supported,
    and are both (localized aliasing)."""

    v_supported: np.ndarray
    w_supported: np.ndarray
    aliased: np.ndarray

    @property
    def aliased_positions(self) -> np.ndarray:
        return np.flatnonzero(self.aliased.any(axis=0))

    def summary(self) -> dict:
        return {
            "subbands": int(self.aliased.shape[0]),
            "positions": int(self.aliased.shape[1]),
            "v_supported": int(self.v_supported.sum()),
            "w_supported": int(self.w_supported.sum()),
            "aliased": int(self.aliased.sum()),
            "aliased_positions": int(self.aliased_positions.size),
        }

    def to_dict(self) -> dict:
        return {
            "summary": self.summary(),
            "subbands": [
                {
                    "index": i,
                    "v_supported": self.v_supported[i].astype(int).tolist(),
                    "w_supported": self.w_supported[i].astype(int).tolist(),
                    "aliased": self.aliased[i].astype(int).tolist(),
                }
                for i in range(self.aliased.shape[0])
            ],
        }


def alias_report(v: SubbandSet, w: SubbandSet, rel_eps: float = SUPPORT_EPS) -> AliasReport:
    _check_provenance(v, w)
    flip, _ = _level0_parity(v.n_subbands)
    vs = support(v, rel_eps)
    ws = support(w, rel_eps)[flip]
    return AliasReport(vs, ws, vs & ws)


def modulate_by_rewire(w: SubbandSet, fb: FilterbankPair) -> np.ndarray:
    """Synthesize swapped, sign-corrected complementary subbands; yields the modulated input."""
    if w.depth != 1:
        raise DepthError("rewired modulation is defined for one-level decompositions")
    return synthesize_one_level(w.coeffs[1], -w.coeffs[0], fb)


def rewire_identity_errors(fb: FilterbankPair, complement: FilterbankPair | None = None) -> tuple:
    """Max deviation of the two rewiring identities on the 1024-point grid.

    ``g~1 h0 - g~0 h1 = 0`` and ``g~1(w) h0(w - pi) - g~0(w) h1(w - pi) = 2``.
    """
    comp = complement if complement is not None else build_complement(fb)
    w = frequency_grid()
    gt0, gt1 = comp.g0.dtft(w), comp.g1.dtft(w)
    e0 = gt1 * fb.h0.dtft(w) - gt0 * fb.h1.dtft(w)
    e2 = gt1 * fb.h0.dtft(w - np.pi) - gt0 * fb.h1.dtft(w - np.pi) - 2
    return float(np.max(np.abs(e0))), float(np.max(np.abs(e2)))
