"""Acceptance checks, one function per criterion, shared by the CLI and tests.

Each check returns a :class:`CriterionResult`.  ``measured`` holds only
deterministic quantities; wall-clock time is kept separately so repeated runs
can be compared bit for bit.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import core, phantoms
from .complement import (
    alias_decompose,
    analyze_complementary_multi,
    build_complement,
    check_self_complementary,
)
from .core import FilterbankPair, analyze_multi, verify_pr
from .errors import SupportConflictError
from .filterbanks import load_filterbank, shipped_filterbanks
from .likelihood import (
    MultiplicativeModel,
    NoisySubsampledModel,
    denoise_interpolate,
    despeckle,
    lattice_mask,
    mse,
    multiplicative_likelihood,
    noise_stream,
    sample_observation,
    snr_db,
    subsampled_noisy_likelihood,
)
from .scs import (
    CarrierSchedule,
    demultiplex,
    haar,
    haar_block_transform,
    multiplex,
    subband_convolve,
)

RATIONAL = ("haar",)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    tolerance: dict
    runtime_s: float = 0.0
    notes: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] criterion {self.number:2d} {self.name}: {shown}"

    def to_dict(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "measured": _jsonable(self.measured),
            "tolerance": _jsonable(self.tolerance),
            "runtime_s": round(self.runtime_s, 3),
            "notes": self.notes,
        }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _pr_tol(fb: FilterbankPair) -> float:
    return 1e-12 if fb.name.rstrip("~") in RATIONAL else 1e-10


def _default_banks(filterbanks):
    return filterbanks if filterbanks is not None else shipped_filterbanks()


# ---------------------------------------------------------------------------
# 1-3: perfect reconstruction and Property-1 identities
# ---------------------------------------------------------------------------


def _roundtrip_errors(fb: FilterbankPair, trials=100, n=256, depths=(1, 2, 3, 4), seed=0) -> dict:
    x = noise_stream(seed, 1).standard_normal((trials, n))
    out = {}
    for depth in depths:
        c = core._analyze_tree(x, fb.analysis, fb.analysis, depth)
        xr = core._synthesize_tree(c, fb.synthesis, depth)
        out[depth] = float(np.max(np.abs(xr - x)))
    return out


def criterion_1(filterbanks=None, budget_s: float = 5.0) -> CriterionResult:
    banks = _default_banks(filterbanks)
    t0 = time.perf_counter()
    measured, tol, ok = {}, {}, True
    for name, fb in banks.items():
        err = max(_roundtrip_errors(fb).values())
        measured[f"{name}_max_err"] = err
        tol[f"{name}_max_err"] = _pr_tol(fb)
        ok &= err <= _pr_tol(fb)
    runtime = time.perf_counter() - t0
    tol["runtime_s"] = budget_s
    return CriterionResult(1, "perfect reconstruction", bool(ok and runtime < budget_s),
                           measured, tol, runtime)


def flipped_h1(fb: FilterbankPair) -> FilterbankPair:
    """The pair with h1 negated: breaks PR (adversarial probe)."""
    return FilterbankPair(fb.g0, fb.g1, fb.h0, fb.h1.scaled(-1.0), fb.normalization,
                          f"{fb.name}-flipped", validate=False)


def criterion_2(filterbanks=None) -> CriterionResult:
    banks = _default_banks(filterbanks)
    t0 = time.perf_counter()
    measured, tol, ok = {}, {}, True
    for name, fb in banks.items():
        rep = verify_pr(fb, tol=1e-10)
        measured[f"{name}_freq_err"] = rep.max_freq_error
        tol[f"{name}_freq_err"] = 1e-10
        ok &= rep.freq_ok and rep.consistent
        bad = verify_pr(flipped_h1(fb), tol=1e-10)
        measured[f"{name}_methods_agree"] = bool(rep.consistent and bad.consistent and not bad.passed)
        ok &= measured[f"{name}_methods_agree"]
    return CriterionResult(2, "frequency identities", bool(ok), measured, tol,
                           time.perf_counter() - t0)


def criterion_3(filterbanks=None) -> CriterionResult:
    banks = _default_banks(filterbanks)
    res = criterion_1({f"{name}~": build_complement(fb) for name, fb in banks.items()})
    res.number, res.name = 3, "complementary filterbank PR"
    return res


# ---------------------------------------------------------------------------
# 4-5: ROSS and aliasing
# ---------------------------------------------------------------------------


def criterion_4(filterbanks=None, trials=100, n=128) -> CriterionResult:
    banks = _default_banks(filterbanks)
    t0 = time.perf_counter()
    measured, ok = {}, True
    sign = (-1.0) ** np.arange(n)
    for name, fb in banks.items():
        comp = build_complement(fb)
        x = noise_stream(4, 1).standard_normal((trials, n))
        worst = 0.0
        for depth in (1, 2, 3):
            vm = core._analyze_tree(x * sign, fb.analysis, fb.analysis, depth)
            w = core._analyze_tree(x, comp.analysis, fb.analysis, depth)
            m = 1 << depth
            idx = np.arange(m)
            pred = np.where(idx & 1, -1.0, 1.0)[:, None] * w[:, idx ^ 1, :]
            worst = max(worst, float(np.max(np.abs(vm - pred))))
        measured[f"{name}_ross_err"] = worst
        ok &= worst <= 1e-10
    return CriterionResult(4, "ROSS", bool(ok), measured, {k: 1e-10 for k in measured},
                           time.perf_counter() - t0)


def criterion_5(filterbanks=None, trials=20, n=128) -> CriterionResult:
    banks = _default_banks(filterbanks)
    t0 = time.perf_counter()
    measured, tol, ok = {}, {}, True
    for name, fb in banks.items():
        worst = 0.0
        for t in range(trials):
            x = noise_stream(5, t).standard_normal(n)
            for depth in (1, 2, 3):
                v = analyze_multi(x, fb, depth)
                w = analyze_complementary_multi(x, fb, depth)
                direct = analyze_multi(core.subsample(x), fb, depth).coeffs
                linear = 0.5 * (v.coeffs + analyze_multi(core.modulate(x), fb, depth).coeffs)
                ross = alias_decompose(v, w).coeffs
                worst = max(worst, float(np.max(np.abs(direct - linear))), float(np.max(np.abs(direct - ross))))
        measured[f"{name}_alias_err"] = worst
        tol[f"{name}_alias_err"] = 1e-10
        ok &= worst <= 1e-10
    h = haar()
    comp = build_complement(h)
    x = noise_stream(5, 999).standard_normal((16, 64))
    v = core._analyze_level(x, h.g0, h.g1)
    w = core._analyze_level(x, comp.g0, comp.g1)
    sign_err = max(float(np.max(np.abs(w[i] - (-1.0) ** (1 - i) * v[i]))) for i in (0, 1))
    signs = check_self_complementary(h)
    measured["haar_self_complementary_err"] = sign_err
    measured["haar_signs"] = list(signs) if signs else None
    tol["haar_self_complementary_err"] = 1e-12
    ok &= sign_err <= 1e-12 and signs == (-1, 1)
    return CriterionResult(5, "aliasing identities", bool(ok), measured, tol, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 6-7: subband convolution and localized modulation
# ---------------------------------------------------------------------------


def criterion_6(trials=100) -> CriterionResult:
    t0 = time.perf_counter()
    h = haar()
    worst, wht = 0.0, 0.0
    for depth in (1, 2, 3, 4):
        n = 32 << depth
        rng = noise_stream(6, depth)
        for _ in range(trials):
            x, y = rng.standard_normal(n), rng.standard_normal(n)
            vx, vy = analyze_multi(x, h, depth), analyze_multi(y, h, depth)
            direct = analyze_multi(x * y, h, depth).coeffs
            worst = max(worst, float(np.max(np.abs(subband_convolve(vx, vy).coeffs - direct))))
        z = rng.standard_normal((n,))
        wht = max(wht, float(np.max(np.abs(haar_block_transform(z, depth).coeffs - analyze_multi(z, h, depth).coeffs))))
    measured = {"scs_err": worst, "wht_err": wht}
    tol = {"scs_err": 1e-9, "wht_err": 1e-12}
    return CriterionResult(6, "subband convolution", bool(worst <= 1e-9 and wht <= 1e-12), measured, tol,
                           time.perf_counter() - t0)


def disjoint_channels(depth=2, length=16, seed=7):
    """Two signals and schedules whose shifted Haar supports never collide."""
    rng = noise_stream(seed, 0)
    m = 1 << depth
    coeffs = [np.zeros((m, length)), np.zeros((m, length))]
    sched = [rng.integers(0, m, length), rng.integers(0, m, length)]
    for n in range(length):
        slots = rng.permutation(m)
        cut = int(rng.integers(1, m))
        for k, part in enumerate((slots[:cut], slots[cut:])):
            coeffs[k][part ^ sched[k][n], n] = rng.standard_normal(part.size)
    h = haar()
    sets = [core.SubbandSet(c, depth, "haar", "gain2") for c in coeffs]
    signals = [core.synthesize_multi(s, h) for s in sets]
    scheds = [CarrierSchedule(depth, s, f"ch{k}") for k, s in enumerate(sched)]
    return signals, sets, scheds


def criterion_7() -> CriterionResult:
    t0 = time.perf_counter()
    signals, sets, scheds = disjoint_channels()
    z = multiplex(signals, scheds)
    masks = [s.coeffs != 0 for s in sets]
    rec = demultiplex(z, scheds, masks)
    err = max(float(np.max(np.abs(r.coeffs - s.coeffs))) for r, s in zip(rec, sets))
    # same schedule for both channels with overlapping supports must be refused
    clash = [CarrierSchedule(scheds[0].depth, scheds[0].indices), CarrierSchedule(scheds[0].depth, scheds[0].indices)]
    full = [np.ones_like(masks[0]), np.ones_like(masks[0])]
    try:
        demultiplex(multiplex(signals, clash), clash, full)
        rejected = False
    except SupportConflictError:
        rejected = True
    measured = {"recovery_err": err, "conflict_rejected": rejected}
    return CriterionResult(7, "localized modulation", bool(err <= 1e-10 and rejected), measured,
                           {"recovery_err": 1e-10}, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 8: likelihood moments
# ---------------------------------------------------------------------------


def _zscores(samples, mean, cov):
    """z-scores of sample means and sample (co)variances against the formulas.

    ``samples`` is (draws, k); ``cov`` is (k, k).  Standard errors use the
    theoretical std for means and the empirical std of centred products for
    second moments.
    """
    d = samples.shape[0]
    sd = np.sqrt(np.maximum(np.diag(cov), 0))
    mean_err = samples.mean(0) - mean
    z_mean = np.where(sd > 0, np.abs(mean_err) / np.where(sd > 0, sd / math.sqrt(d), 1), np.abs(mean_err) * np.inf)
    z_mean = np.nan_to_num(z_mean, nan=0.0)
    c = samples - samples.mean(0)
    iu = np.triu_indices(samples.shape[1])
    prods = c[:, iu[0]] * c[:, iu[1]]
    emp = prods.sum(0) / (d - 1)
    se = prods.std(0) / math.sqrt(d)
    dev = np.abs(emp - cov[iu])
    z_cov = np.where(se > 0, dev / np.where(se > 0, se, 1), np.where(dev > 1e-12, np.inf, 0.0))
    return float(np.max(z_mean)), float(np.max(z_cov))


def _likelihood1_z(fb, depth, n, draws, sigma, seed):
    x = noise_stream(seed, 100 + depth).standard_normal(n)
    v = analyze_multi(x, fb, depth)
    w = analyze_complementary_multi(x, fb, depth)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = subsampled_noisy_likelihood(v, w, NoisySubsampledModel(sigma ** 2, fb, depth))
    xi = sigma * noise_stream(seed, 200 + depth).standard_normal((draws, n))
    y = lattice_mask((n,)) * (x + xi)
    c = core._analyze_tree(y, fb.analysis, fb.analysis, depth).reshape(draws, -1)
    # independent coefficients: diagonal covariance is the formula's claim for the variances
    return _zscores_diag(c, params.mean.ravel(), params.var.ravel())


def _zscores_diag(samples, mean, var):
    d = samples.shape[0]
    z_mean = np.abs(samples.mean(0) - mean) / np.sqrt(var / d)
    c = samples - samples.mean(0)
    sq = c ** 2
    z_var = np.abs(sq.sum(0) / (d - 1) - var) / (sq.std(0) / math.sqrt(d))
    return float(np.max(z_mean)), float(np.max(z_var))


def _likelihood2_z(depth, x, draws, sigma, seed):
    h = haar()
    n = x.size
    v = analyze_multi(x, h, depth)
    lik = multiplicative_likelihood(v, MultiplicativeModel(sigma ** 2, depth))
    xi = sigma * noise_stream(seed, 300 + depth + 10 * int(np.ptp(x) == 0)).standard_normal((draws, n))
    c = core._analyze_tree(x + x * xi, h.analysis, h.analysis, depth)      # (draws, m, L)
    zm, zc = 0.0, 0.0
    for pos in range(v.length):
        a, b = _zscores(c[:, :, pos], lik.mean[:, pos], lik.cov[pos])
        zm, zc = max(zm, a), max(zc, b)
    return zm, zc


def criterion_8(draws=100_000, seed=8, budget_s: float = 60.0) -> CriterionResult:
    t0 = time.perf_counter()
    fb = load_filterbank("haar", "unitary")
    sigma = 0.8
    measured = {}
    for depth in (1, 2):
        zm, zv = _likelihood1_z(fb, depth, 8, draws, sigma, seed)
        measured[f"noisy_subsampled_I{depth}_mean_z"] = zm
        measured[f"noisy_subsampled_I{depth}_var_z"] = zv
    for depth in (1, 2):
        x = 2.0 + noise_stream(seed, 400 + depth).standard_normal(8)
        zm, zc = _likelihood2_z(depth, x, draws, 0.3, seed)
        measured[f"multiplicative_I{depth}_mean_z"] = zm
        measured[f"multiplicative_I{depth}_cov_z"] = zc
    zm, zc = _likelihood2_z(1, np.full(8, 3.0), draws, 0.3, seed)
    measured["multiplicative_constant_mean_z"] = zm
    measured["multiplicative_constant_cov_z"] = zc
    runtime = time.perf_counter() - t0
    tol = {k: 3.0 for k in measured}
    tol["runtime_s"] = budget_s
    ok = all(v <= 3.0 for v in measured.values()) and runtime < budget_s
    return CriterionResult(8, "likelihood moments", bool(ok), measured, tol, runtime)


# ---------------------------------------------------------------------------
# 9-10: image pipelines
# ---------------------------------------------------------------------------

INTERP_CONFIG = {"filterbank": "haar", "normalization": "unitary", "depth": 3, "sigma": 20.0,
                 "family": "laplacian", "seed": 0, "size": 64}
DESPECKLE_CONFIG = {"depth": 1, "sigma": 0.3, "family": "laplacian", "seeds": 16, "size": 64,
                    "bias_tol": 0.02, "region_margin": 2}


def pilot_margin() -> dict:
    text = resources.files("fbrewire").joinpath("data/pilot.json").read_text()
    return json.loads(text)


def interpolation_gain(seed: int, config: dict = INTERP_CONFIG) -> dict:
    x = phantoms.piecewise_constant(config["size"])
    fb = load_filterbank(config["filterbank"], config["normalization"])
    y = sample_observation("subsampled_noisy", x, config["sigma"], seed)
    xh = denoise_interpolate(y, fb, config["depth"], config["sigma"], config["family"])
    return {"snr_in": snr_db(x, y), "snr_out": snr_db(x, xh), "mse_in": mse(x, y), "mse_out": mse(x, xh)}


def criterion_9() -> CriterionResult:
    t0 = time.perf_counter()
    margin = float(pilot_margin()["margin_db"])
    m = interpolation_gain(INTERP_CONFIG["seed"])
    gain = m["snr_out"] - m["snr_in"]
    measured = {"snr_in": m["snr_in"], "snr_out": m["snr_out"], "gain_db": gain}
    return CriterionResult(9, "interpolation gain", bool(gain >= margin), measured, {"gain_db_min": margin},
                           time.perf_counter() - t0)


def despeckle_metrics(config: dict = DESPECKLE_CONFIG) -> dict:
    x = phantoms.piecewise_constant(config["size"])
    regions = phantoms.constant_regions(config["size"], config["region_margin"])
    ratios, biases = [], []
    for seed in range(config["seeds"]):
        y = sample_observation("multiplicative", x, config["sigma"], seed)
        xh = despeckle(y, config["depth"], config["sigma"], config["family"])
        ratios.append(mse(x, xh) / mse(x, y))
        biases.append([(xh[r].mean() - x[r].mean()) / x[r].mean() for r in regions])
    bias = np.abs(np.mean(biases, axis=0))
    return {"mse_ratio_max": float(np.max(ratios)), "mse_ratio_mean": float(np.mean(ratios)),
            "region_bias": [float(b) for b in bias], "bias_max": float(np.max(bias))}


def criterion_10() -> CriterionResult:
    t0 = time.perf_counter()
    m = despeckle_metrics()
    ok = m["mse_ratio_max"] < 1.0 and m["bias_max"] <= DESPECKLE_CONFIG["bias_tol"]
    return CriterionResult(10, "despeckle", bool(ok), m,
                           {"mse_ratio_max": 1.0, "bias_max": DESPECKLE_CONFIG["bias_tol"]},
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 11: determinism
# ---------------------------------------------------------------------------


def _fingerprint(results) -> str:
    return json.dumps([_jsonable(r.measured) for r in results], sort_keys=True)


def criterion_11(draws=20_000) -> CriterionResult:
    """Rerun 8-10 sequentially and concurrently; metrics must match exactly."""
    t0 = time.perf_counter()
    jobs = (lambda: criterion_8(draws=draws), criterion_9, criterion_10)
    first = _fingerprint([j() for j in jobs])
    second = _fingerprint([j() for j in jobs])
    with ThreadPoolExecutor(max_workers=3) as pool:
        threaded = _fingerprint(list(pool.map(lambda j: j(), jobs)))
    same = first == second == threaded
    return CriterionResult(11, "determinism", bool(same), {"identical_runs": same}, {"identical_runs": True},
                           time.perf_counter() - t0)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11,
}
FILTERBANK_CRITERIA = (1, 2, 3, 4, 5)


def run(only=None, filterbanks=None) -> list:
    numbers = sorted(only) if only else sorted(CRITERIA)
    out = []
    for k in numbers:
        if k in FILTERBANK_CRITERIA:
            out.append(CRITERIA[k](filterbanks))
        else:
            out.append(CRITERIA[k]())
    return out
