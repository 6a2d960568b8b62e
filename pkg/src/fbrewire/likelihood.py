"""Filterbank-domain likelihoods, coefficient priors and posterior-mean estimation.

Two observation models are covered:

* noisy subsampling, ``y = x_s + xi_s``, analysed with a unitary filterbank:
  each coefficient is Normal with mean ``(v_i + (-1)^{i_0} w_{i'}) / 2``;
* multiplicative noise, ``y = x + x xi``, analysed with gain-2 Haar: the
  coefficients at each coarse position are jointly Normal with mean ``v`` and
  covariance ``sigma^2 (v XOR-conv v)_{i XOR j}``.

Estimation follows the usual product-of-marginals approximation: every
coefficient gets a scalar posterior mean under a zero-mean heavy-tailed prior.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from . import core
from .complement import alias_decompose
from .core import FilterbankPair, SubbandSet, Subbands2D, analyze_2d, synthesize_2d
from .errors import DegenerateSubbandError, DepthError, FilterbankError, NormalizationError
from .scs import _xor_convolve, haar

FAMILIES = ("laplacian", "generalized_gaussian")
QUAD_NODES = 64
QUAD_WIDTH = 10.0
MIN_SHAPE = 0.3
SCALE_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# Observation models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoisySubsampledModel:
    sigma2: float
    fb: FilterbankPair
    depth: int

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise FilterbankError("sigma2 must be positive")
        if self.fb.normalization != "unitary":
            raise NormalizationError("the noisy-subsampled likelihood needs a unitary filterbank")


@dataclass(frozen=True)
class MultiplicativeModel:
    sigma2: float
    depth: int
    fb: FilterbankPair = None

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise FilterbankError("sigma2 must be positive")
        if self.fb is None:
            object.__setattr__(self, "fb", haar())


@dataclass
class NormalParams:
    mean: np.ndarray
    var: np.ndarray


def even_energy_fractions(fb: FilterbankPair, depth: int) -> np.ndarray:
    """Per subband, the analysis-row energy carried by even time indices.

    Subsampled white noise of variance s2 gives coefficient variance
    ``s2 * fraction``.  For unitary Haar every entry is 1/2.
    """
    L = max(2, fb.max_length)
    N = L << depth
    rows = core._analyze_tree(np.eye(N), fb.analysis, fb.analysis, depth)  # (t, i, n)
    return np.sum(rows[0::2] ** 2, axis=0).mean(axis=1)


def subsampled_noisy_likelihood(v: SubbandSet, w: SubbandSet, m: NoisySubsampledModel,
                                exact_variance: bool = False) -> NormalParams:
    """Per-coefficient Normal parameters of the analysis of ``x_s + xi_s``.

    The variance is ``sigma2 / 2``; ``exact_variance=True`` uses the measured
    even-polyphase energy of each subband instead.  A warning is issued when
    the two disagree (they coincide for Haar).
    """
    if v.normalization != "unitary" or w.normalization != "unitary":
        raise NormalizationError("coefficients must come from a unitary filterbank")
    if v.depth != m.depth:
        raise DepthError(f"coefficients have depth {v.depth}, model expects {m.depth}")
    mean = alias_decompose(v, w).coeffs
    frac = even_energy_fractions(m.fb, m.depth)
    if np.max(np.abs(frac - 0.5)) > 1e-6:
        warnings.warn(
            f"{m.fb.name}: subsampled-noise variance deviates from sigma^2/2 "
            f"(per-subband factors {np.round(frac, 4).tolist()})",
            stacklevel=2,
        )
    per_band = m.sigma2 * (frac if exact_variance else np.full_like(frac, 0.5))
    return NormalParams(mean, np.broadcast_to(per_band[:, None], mean.shape).copy())


@dataclass
class MultiplicativeLikelihood:
    """``mean[i, n]`` and per-position covariance ``cov[n, i, j]``."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def var(self) -> np.ndarray:
        return np.diagonal(self.cov, axis1=1, axis2=2).T


def xor_autocorrelation(v: np.ndarray) -> np.ndarray:
    """``(v XOR-conv v)`` along axis 0."""
    return _xor_convolve(v, v)


def multiplicative_likelihood(v: SubbandSet, m: MultiplicativeModel) -> MultiplicativeLikelihood:
    if v.depth != m.depth:
        raise DepthError(f"coefficients have depth {v.depth}, model expects {m.depth}")
    if v.filterbank != "haar" or v.normalization != "gain2":
        raise NormalizationError("the multiplicative likelihood needs gain2 Haar coefficients")
    r = xor_autocorrelation(v.coeffs)                    # (2^I, L)
    idx = np.arange(v.n_subbands)
    cov = m.sigma2 * r[idx[:, None] ^ idx[None, :]]      # (i, j, L)
    cov = np.moveaxis(cov, -1, 0)
    return MultiplicativeLikelihood(v.coeffs.copy(), clip_psd(cov))


def clip_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and clip negative eigenvalues (batched over leading axes)."""
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    vals, vecs = np.linalg.eigh(cov)
    if np.all(vals >= 0):
        return cov
    vals = np.clip(vals, 0, None)
    return (vecs * vals[..., None, :]) @ np.swapaxes(vecs, -1, -2)


# ---------------------------------------------------------------------------
# Noise generation
# ---------------------------------------------------------------------------


def noise_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def lattice_mask(shape) -> np.ndarray:
    """1 on samples whose every coordinate is even, else 0."""
    mask = np.ones(shape)
    for axis, n in enumerate(shape):
        sl = [slice(None)] * len(shape)
        sl[axis] = slice(1, None, 2)
        mask[tuple(sl)] = 0.0
    return mask


def sample_observation(kind: str, x, sigma: float, seed: int = 0) -> np.ndarray:
    """Draw ``x_s + xi_s`` (kind "subsampled_noisy") or ``x + x xi`` ("multiplicative")."""
    if sigma < 0:
        raise FilterbankError("sigma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    xi = sigma * noise_stream(seed).standard_normal(x.shape)
    if kind == "subsampled_noisy":
        return lattice_mask(x.shape) * (x + xi)
    if kind == "multiplicative":
        return x + x * xi
    raise FilterbankError(f"unknown observation kind {kind!r}")


# ---------------------------------------------------------------------------
# Priors
# ---------------------------------------------------------------------------


def _gg_abs_ratio(p):
    """(E|v|)^2 / E v^2 for a generalized Gaussian of shape p."""
    return math.exp(2 * special.gammaln(2 / p) - special.gammaln(1 / p) - special.gammaln(3 / p))


def _gg_kurtosis(p):
    return math.exp(special.gammaln(5 / p) + special.gammaln(1 / p) - 2 * special.gammaln(3 / p))


def _solve_shape(func, target, increasing):
    lo_val, hi_val = func(MIN_SHAPE), func(2.0)
    if increasing:
        if target <= lo_val:
            return MIN_SHAPE
        if target >= hi_val:
            return 2.0
    else:
        if target >= lo_val:
            return MIN_SHAPE
        if target <= hi_val:
            return 2.0
    return optimize.brentq(lambda p: func(p) - target, MIN_SHAPE, 2.0, xtol=1e-12)


@dataclass
class PriorModel:
    """Zero-mean generalized Gaussian ``p(v) ∝ exp(-|v / scale|^shape)``.

    ``scales`` and ``shapes`` are arrays over the subband grid (any shape,
    including scalars); ``flat`` marks subbands given an improper flat prior.
    """

    family: str
    scales: np.ndarray
    shapes: np.ndarray = 1.0
    flat: np.ndarray = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise FilterbankError(f"unknown prior family {self.family!r}")
        self.scales = np.asarray(self.scales, dtype=np.float64)
        self.shapes = np.broadcast_to(np.asarray(self.shapes, dtype=np.float64), self.scales.shape).copy()
        self.flat = np.broadcast_to(np.asarray(self.flat, dtype=bool), self.scales.shape).copy()
        if np.any(self.scales <= 0):
            raise FilterbankError("prior scales must be positive")
        if np.any((self.shapes <= 0) | (self.shapes > 2)):
            raise FilterbankError("prior shape must lie in (0, 2]")
        if self.family == "laplacian" and np.any(self.shapes != 1):
            raise FilterbankError("laplacian prior has shape 1")

    @classmethod
    def gaussian(cls, tau2) -> "PriorModel":
        """N(0, tau2) as the shape-2 member."""
        return cls("generalized_gaussian", np.sqrt(2 * np.asarray(tau2, dtype=np.float64)), 2.0)

    def variance(self) -> np.ndarray:
        p = self.shapes
        return self.scales ** 2 * np.exp(special.gammaln(3 / p) - special.gammaln(1 / p))

    def logpdf(self, v, scale=None, shape=None):
        s = self.scales if scale is None else scale
        p = self.shapes if shape is None else shape
        return np.log(p / (2 * s)) - special.gammaln(1 / p) - np.abs(v / s) ** p

    def pdf(self, v, scale=None, shape=None):
        return np.exp(self.logpdf(v, scale, shape))

    def sample(self, rng: np.random.Generator, size, scale=None, shape=None):
        s = self.scales if scale is None else scale
        p = self.shapes if shape is None else shape
        g = rng.gamma(1 / p, 1.0, size=size)
        return s * rng.choice((-1.0, 1.0), size=size) * g ** (1 / p)

    def expand(self, ndim: int):
        """Scales/shapes/flat reshaped to broadcast against ``ndim``-D coefficients."""
        extra = (1,) * (ndim - self.scales.ndim)
        return (self.scales.reshape(self.scales.shape + extra),
                self.shapes.reshape(self.shapes.shape + extra),
                self.flat.reshape(self.flat.shape + extra))


def _subband_samples(S):
    if isinstance(S, (list, tuple)):
        parts = [_subband_samples(s) for s in S]
        return np.concatenate(parts, axis=-1)
    if isinstance(S, SubbandSet):
        return S.coeffs
    if isinstance(S, Subbands2D):
        c = S.coeffs
        return c.reshape(c.shape[:2] + (-1,))
    arr = np.asarray(S, dtype=np.float64)
    return arr[None, :] if arr.ndim == 1 else arr.reshape(arr.shape[0], -1)


def fit_prior(S, family: str = "laplacian", noise_var=0.0, floor: float | None = None,
              strict: bool = False) -> PriorModel:
    """Method-of-moments prior per subband.

    Noise-free: laplacian ``scale = mean|v|``; generalized Gaussian matches
    ``(E|v|)^2 / E v^2``.  With ``noise_var > 0`` (additive, known) the second
    and fourth moments are noise-corrected and the shape comes from kurtosis.
    Identically-zero subbands get ``floor`` (warning) or raise when ``strict``.
    """
    if family not in FAMILIES:
        raise FilterbankError(f"unknown prior family {family!r}")
    data = _subband_samples(S)
    if data.shape[-1] == 0:
        raise FilterbankError("no coefficient samples to fit")
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=np.float64), data.shape[:-1])
    m1 = np.mean(np.abs(data), axis=-1)
    m2 = np.mean(data ** 2, axis=-1)
    m4 = np.mean(data ** 4, axis=-1)
    if floor is None:
        floor = max(SCALE_FLOOR, 1e-6 * float(np.sqrt(np.max(m2))))
    scales = np.empty(data.shape[:-1])
    shapes = np.ones(data.shape[:-1])
    degenerate = []
    for idx in np.ndindex(*data.shape[:-1]):
        nv = float(noise_var[idx])
        c2 = m2[idx] - nv
        if m2[idx] == 0:
            degenerate.append(idx)
        if c2 <= floor ** 2:
            # no energy, or nothing left after removing the noise
            scales[idx] = floor
            continue
        if family == "laplacian":
            scales[idx] = m1[idx] if nv == 0 else math.sqrt(c2 / 2)
            continue
        if nv == 0:
            p = _solve_shape(_gg_abs_ratio, m1[idx] ** 2 / m2[idx], increasing=True)
            scales[idx] = m1[idx] * math.exp(special.gammaln(1 / p) - special.gammaln(2 / p))
        else:
            c4 = m4[idx] - 6 * c2 * nv - 3 * nv ** 2
            p = _solve_shape(_gg_kurtosis, max(c4, 0.0) / c2 ** 2, increasing=False)
            scales[idx] = math.sqrt(c2 * math.exp(special.gammaln(1 / p) - special.gammaln(3 / p)))
        shapes[idx] = p
    if degenerate:
        msg = f"{len(degenerate)} subband(s) are identically zero; scale floor {floor:.3g} applied"
        if strict:
            raise DegenerateSubbandError(msg)
        warnings.warn(msg, stacklevel=2)
    return PriorModel(family, np.maximum(scales, floor), shapes)


# ---------------------------------------------------------------------------
# Posterior mean
# ---------------------------------------------------------------------------


@dataclass
class CoefficientPosterior:
    observed: np.ndarray
    lik_mean: np.ndarray
    lik_var: np.ndarray
    estimate: np.ndarray
    failed: np.ndarray


def _posterior_mode(z, var, scale, shape, iters=80):
    """Stationary point of the log posterior between 0 and z (bisection)."""
    lo = np.minimum(z, 0.0)
    hi = np.maximum(z, 0.0)
    for _ in range(iters):
        mid = (lo + hi) / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = (mid - z) / var + shape / scale * np.abs(mid / scale) ** (shape - 1) * np.sign(mid)
        up = np.nan_to_num(grad, nan=0.0) < 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return (lo + hi) / 2


def _quadrature_panels(z, sd, scale, shape):
    """Panel breakpoints per coefficient, clipped to where the posterior can
    carry mass: zero, the data and +-10 sd around it, the prior cusp width,
    and the posterior mode with its curvature width."""
    var = sd ** 2
    near = QUAD_WIDTH * np.minimum(sd, scale)
    lo = np.minimum(z, 0.0) - QUAD_WIDTH * sd
    hi = np.maximum(z, 0.0) + QUAD_WIDTH * sd
    mode = _posterior_mode(z, var, scale, shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        curv = 1 / var + shape * (shape - 1) / scale ** 2 * np.abs(mode / scale) ** (shape - 2)
        width = np.where(np.isfinite(curv) & (curv > 0), 1 / np.sqrt(np.abs(curv)), sd)
    width = np.minimum(width, sd)
    pts = [lo, hi, np.zeros_like(z), z, z - QUAD_WIDTH * sd, z + QUAD_WIDTH * sd, -near, near, mode]
    pts += [mode + k * width for k in (-QUAD_WIDTH, -2.0, 2.0, QUAD_WIDTH)]
    # geometric grading toward the cusp of |v|^p at zero
    pts += [sign * near * 10.0 ** -k for k in range(1, 9) for sign in (-1, 1)]
    pts = np.stack(pts, axis=1)
    return np.sort(np.clip(pts, lo[:, None], hi[:, None]), axis=1)


def _posterior_quadrature(z, var, scale, shape, nodes):
    """Composite Gauss-Legendre; panel edges sit on the prior cusp at 0."""
    sd = np.sqrt(var)
    edges = _quadrature_panels(z, sd, scale, shape)
    x, wq = np.polynomial.legendre.leggauss(nodes)
    left, right = edges[:, :-1, None], edges[:, 1:, None]
    half = (right - left) / 2
    v = (left + half * (x + 1)).reshape(z.size, -1)
    qw = (half * wq).reshape(z.size, -1)
    logw = -0.5 * (v - z[:, None]) ** 2 / var[:, None] - np.abs(v / scale[:, None]) ** shape[:, None]
    logw -= np.max(logw, axis=1, keepdims=True)
    w = qw * np.exp(logw)
    den = w.sum(axis=1)
    num = (w * v).sum(axis=1)
    ok = np.isfinite(den) & (den > 0) & np.isfinite(num)
    return np.where(ok, num / np.where(ok, den, 1.0), 0.0), ~ok


def _posterior_monte_carlo(z, var, scale, shape, draws, seed, stream_ids):
    """Self-normalised importance sampling with the likelihood as proposal.

    Each coefficient uses its own counter-based stream, so results do not
    depend on evaluation order.
    """
    est = np.empty_like(z)
    failed = np.zeros(z.shape, dtype=bool)
    sd = np.sqrt(var)
    for k in range(z.size):
        rng = noise_stream(seed, int(stream_ids[k]))
        v = z[k] + sd[k] * rng.standard_normal(draws)
        logw = -np.abs(v / scale[k]) ** shape[k]
        w = np.exp(logw - logw.max())
        den = w.sum()
        if not np.isfinite(den) or den <= 0:
            est[k], failed[k] = 0.0, True
        else:
            est[k] = (w @ v) / den
    return est, failed


def posterior_mean(obs, lik_var, prior: PriorModel, gain=1.0, method: str = "quadrature",
                   nodes: int = QUAD_NODES, draws: int = 4096, seed: int = 0,
                   chunk: int = 8192) -> CoefficientPosterior:
    """E[v | obs] for ``obs ~ N(gain * v, lik_var)`` and the prior ``p(v)``.

    ``obs`` has the prior's subband-grid dims first, followed by any number
    of position dims; ``lik_var`` and ``gain`` broadcast against ``obs``.
    Subbands with a flat prior return the unbiased inversion ``obs / gain``.
    Zero likelihood variance also returns ``obs / gain``.
    """
    obs = np.asarray(obs, dtype=np.float64)
    scale, shape, flat = prior.expand(obs.ndim)
    gain = np.broadcast_to(np.asarray(gain, dtype=np.float64), obs.shape)
    if np.any(gain == 0):
        raise FilterbankError("likelihood gain must be nonzero")
    var = np.broadcast_to(np.asarray(lik_var, dtype=np.float64), obs.shape)
    if np.any(var < 0):
        raise FilterbankError("likelihood variance must be >= 0")
    z = obs / gain
    zvar = var / gain ** 2
    direct = np.broadcast_to(flat, obs.shape) | (zvar == 0)
    s = np.broadcast_to(scale, obs.shape)
    p = np.broadcast_to(shape, obs.shape)

    est = z.copy()
    failed = np.zeros(obs.shape, dtype=bool)
    todo = np.flatnonzero(~direct)
    zf, vf, sf, pf = z.ravel(), zvar.ravel(), s.ravel(), p.ravel()
    for start in range(0, todo.size, chunk):
        sel = todo[start:start + chunk]
        if method == "quadrature":
            e, f = _posterior_quadrature(zf[sel], vf[sel], sf[sel], pf[sel], nodes)
        elif method == "monte_carlo":
            e, f = _posterior_monte_carlo(zf[sel], vf[sel], sf[sel], pf[sel], draws, seed, sel)
        else:
            raise FilterbankError(f"unknown method {method!r}")
        est.flat[sel] = e
        failed.flat[sel] = f
    return CoefficientPosterior(obs, z, zvar, est, failed)


# ---------------------------------------------------------------------------
# Image pipelines
# ---------------------------------------------------------------------------


def _partner_table(depth: int):
    """For each 2-D subband (i, k): the 4 members of its alias group."""
    m = 1 << depth
    i = np.arange(m)[:, None]
    k = np.arange(m)[None, :]
    return [(np.broadcast_to(i ^ a, (m, m)), np.broadcast_to(k ^ b, (m, m))) for a in (0, 1) for b in (0, 1)]


def _level0_split(group_var: np.ndarray, detail_ratio) -> np.ndarray:
    """Share each alias group's signal variance among its four members.

    The member with both level-0 bits clear keeps weight 1; a member with a
    level-0 highpass bit along one axis gets ``detail_ratio``, along both
    axes ``detail_ratio**2``.
    """
    m = group_var.shape[0]
    i0 = (np.arange(m) & 1)[:, None]
    k0 = (np.arange(m) & 1)[None, :]
    weight = detail_ratio ** (i0 + k0)
    total = (1 + detail_ratio) ** 2
    return group_var * weight / total


@dataclass
class InterpolationResult:
    image: np.ndarray
    prior: PriorModel
    noise_var: np.ndarray
    detail_ratio: float


def denoise_interpolate(y, fb: FilterbankPair, depth: int, sigma: float, family: str = "laplacian",
                        prior: PriorModel | None = None, detail_ratio: float = 0.0,
                        method: str = "quadrature", seed: int = 0, details: bool = False):
    """Posterior-mean interpolation and denoising of an even-lattice observation.

    ``y`` holds noisy samples on the even/even lattice and zeros elsewhere.
    Each observed coefficient is modelled as ``v / 4 + alias + noise``: the
    gain is the two separable subsampling factors, the alias is the sum of the
    three partner coefficients that share the observation, marginalised as
    Gaussian nuisance under their prior variances.  The image lowpass
    subband gets a flat prior.
    """
    if fb.normalization != "unitary":
        raise NormalizationError("interpolation needs a unitary filterbank")
    Y = analyze_2d(y, fb, depth)
    obs = Y.coeffs
    gain = 0.25
    frac = even_energy_fractions(fb, depth)
    noise_var = sigma ** 2 * np.multiply.outer(frac, frac)                 # (i, k)

    if prior is None:
        members = _partner_table(depth)
        energy = np.mean(obs ** 2, axis=(2, 3))
        group_energy = np.mean([energy[a, b] for a, b in members], axis=0)
        group_noise = np.mean([noise_var[a, b] for a, b in members], axis=0)
        signal = np.maximum(group_energy - group_noise, 0.0) / gain ** 2
        tau2 = _level0_split(signal, detail_ratio)
        prior = _prior_from_variance(tau2, obs, noise_var, gain, family)
    else:
        tau2 = prior.variance()

    members = _partner_table(depth)
    nuisance = sum(tau2[a, b] for a, b in members) - tau2
    lik_var = noise_var + gain ** 2 * nuisance
    post = posterior_mean(obs, lik_var[:, :, None, None], prior, gain, method=method, seed=seed)
    image = synthesize_2d(Y.with_coeffs(post.estimate), fb)
    if details:
        return InterpolationResult(image, prior, noise_var, detail_ratio)
    return image


def _prior_from_variance(tau2, obs, noise_var, gain, family):
    """Turn member variances into a prior; lowpass subband flat, shapes from kurtosis."""
    tiny = SCALE_FLOOR * max(1.0, float(np.sqrt(np.max(tau2))))
    shapes = np.ones(tau2.shape)
    if family == "generalized_gaussian":
        z = obs / gain
        zvar = noise_var / gain ** 2
        m2 = np.mean(z ** 2, axis=(2, 3)) - zvar
        m4 = np.mean(z ** 4, axis=(2, 3)) - 6 * np.maximum(m2, 0) * zvar - 3 * zvar ** 2
        for idx in np.ndindex(*tau2.shape):
            if m2[idx] > 0:
                shapes[idx] = _solve_shape(_gg_kurtosis, max(m4[idx], 0.0) / m2[idx] ** 2, increasing=False)
    p = shapes
    scales = np.sqrt(np.maximum(tau2, tiny ** 2) * np.exp(special.gammaln(1 / p) - special.gammaln(3 / p)))
    flat = np.zeros(tau2.shape, dtype=bool)
    flat[0, 0] = True
    return PriorModel(family, scales, shapes, flat)


def despeckle(y, depth: int, sigma: float, family: str = "laplacian", prior: PriorModel | None = None,
              fb: FilterbankPair | None = None, method: str = "quadrature", seed: int = 0):
    """Posterior-mean removal of multiplicative noise ``y = x + x xi`` with gain-2 Haar.

    The coefficient variance at each block is ``sigma^2 (v XOR-conv v)_0``,
    i.e. sigma^2 times the clean block energy, estimated from the observed
    block energy divided by ``1 + sigma^2``.  Only the diagonal of the
    per-block covariance is used.
    """
    fb = fb if fb is not None else haar()
    if fb.name != "haar" or fb.normalization != "gain2":
        raise NormalizationError("despeckling uses the gain2 Haar filterbank")
    y = core.as_image(y)
    if sigma == 0:
        return y.copy()
    Y = analyze_2d(y, fb, depth)
    obs = Y.coeffs
    m = 1 << depth
    # block energy of y via Parseval of the gain-2 Walsh transform
    block_energy = np.sum(obs ** 2, axis=(0, 1)) / m ** 2
    lik_var = sigma ** 2 * block_energy / (1 + sigma ** 2)            # (H', W')
    if prior is None:
        mean_noise = float(np.mean(lik_var))
        prior = fit_prior(Y, family, noise_var=np.full((m, m), mean_noise))
        prior.flat[0, 0] = True
    post = posterior_mean(obs, lik_var[None, None], prior, method=method, seed=seed)
    return synthesize_2d(Y.with_coeffs(post.estimate), fb)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def snr_db(reference, estimate) -> float:
    """10 log10(sum ref^2 / sum (ref - est)^2); ``inf`` flags an exact match."""
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise FilterbankError(f"shape mismatch {ref.shape} vs {est.shape}")
    err = float(np.sum((ref - est) ** 2))
    if err == 0:
        return math.inf
    return 10 * math.log10(float(np.sum(ref ** 2)) / err)


def mse(reference, estimate) -> float:
    return float(np.mean((np.asarray(reference, dtype=np.float64) - np.asarray(estimate, dtype=np.float64)) ** 2))
