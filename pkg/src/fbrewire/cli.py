"""Command-line front end.

Exit codes: 0 ok, 2 configuration error, 3 format error, 4 numerical
validation failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io, phantoms, validation
from .complement import alias_report, analyze_complementary_multi, ross_predict_modulated
from .core import (
    FilterbankPair,
    SubbandSet,
    Subbands2D,
    analyze_2d,
    analyze_multi,
    modulate,
    synthesize_2d,
    synthesize_multi,
)
from .errors import ConfigError, DepthError, FilterbankError, FormatError, NormalizationError
from .filterbanks import load_filterbank
from .likelihood import denoise_interpolate, despeckle, lattice_mask, mse, sample_observation, snr_db
from .scs import haar, mask_alias_report, subband_convolve

EXIT_OK, EXIT_CONFIG, EXIT_FORMAT, EXIT_NUMERIC = 0, 2, 3, 4


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, FormatError):
        return EXIT_FORMAT
    if isinstance(exc, (ConfigError, DepthError, NormalizationError, OSError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _config(args) -> dict:
    """Merge a --prior model config with command-line flags (flags win)."""
    cfg = io.read_model_config(args.prior) if getattr(args, "prior", None) else io.parse_model_config({})
    for key in ("sigma", "depth", "filterbank"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("filterbank", "haar")
    cfg.setdefault("depth", 1)
    if cfg["depth"] < 1:
        raise ConfigError("depth must be >= 1")
    return cfg


def _require_sigma(cfg) -> float:
    if cfg.get("sigma") is None:
        raise ConfigError("--sigma is required (noise level is not estimated)")
    return float(cfg["sigma"])


def _write_report(path, obj):
    if path:
        io.write_json(path, obj)
    else:
        print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# analyze / synthesize
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    cfg = _config(args)
    fb = load_filterbank(cfg["filterbank"])
    data = io.read_array(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    depth = cfg["depth"]
    files = []
    if data.ndim == 1:
        S = analyze_multi(data, fb, depth)
        for i in range(S.n_subbands):
            name = f"subband_{i:0{depth}b}.txt"
            io.write_signal(out / name, S.coeffs[i])
            files.append({"index": i, "file": name})
        kind, shape = "signal", [int(data.size)]
    else:
        S = analyze_2d(data, fb, depth)
        m = 1 << depth
        for i in range(m):
            for k in range(m):
                name = f"subband_{i:0{depth}b}_{k:0{depth}b}.txt"
                io.atomic_write(out / name, "".join(
                    " ".join(f"{v:.17g}" for v in row) + "\n" for row in S.coeffs[i, k]))
                files.append({"index": [i, k], "file": name})
        kind, shape = "image", list(data.shape)
    manifest = {
        "kind": kind,
        "shape": shape,
        "depth": depth,
        "order": "index bit k is the level-k filter choice (bit 0 = first level); file names print bits MSB first",
        "filterbank": fb.to_dict(),
        "subband_length": list(S.coeffs.shape[-data.ndim:]),
        "files": files,
    }
    if kind == "image":
        manifest["maxval"] = io.pgm_maxval(args.input)
    io.write_json(out / "manifest.json", manifest)
    print(f"wrote {len(files)} subbands to {out}")
    return EXIT_OK


def _read_matrix(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            try:
                rows.append([float(t) for t in line.split()])
            except ValueError as exc:
                raise FormatError(f"{path}: non-numeric entry") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: ragged or empty matrix")
    return np.array(rows)


def cmd_synthesize(args) -> int:
    manifest_path = Path(args.input)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    man = io.read_json(manifest_path)
    missing = {"kind", "depth", "filterbank", "files"} - set(man)
    if missing:
        raise FormatError(f"{manifest_path}: manifest lacks {sorted(missing)}")
    try:
        fb = FilterbankPair.from_dict(man["filterbank"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{manifest_path}: bad embedded filterbank") from exc
    depth = int(man["depth"])
    base = manifest_path.parent
    m = 1 << depth
    if len(man["files"]) != (m if man["kind"] == "signal" else m * m):
        raise FormatError(f"{manifest_path}: expected {m} subbands per axis")
    if man["kind"] == "signal":
        bands = [None] * m
        for ent in man["files"]:
            bands[ent["index"]] = io.read_signal(base / ent["file"])
        x = synthesize_multi(SubbandSet(np.array(bands), depth, fb.name, fb.normalization), fb)
        io.write_signal(args.out, x)
    else:
        L = man["subband_length"]
        coeffs = np.zeros((m, m, L[0], L[1]))
        for ent in man["files"]:
            i, k = ent["index"]
            coeffs[i, k] = _read_matrix(base / ent["file"])
        im = synthesize_2d(Subbands2D(coeffs, depth, fb.name, fb.normalization), fb)
        io.write_pgm(args.out, im, man.get("maxval"))
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# rewire-report
# ---------------------------------------------------------------------------


def rewire_report(x, fb: FilterbankPair, depth: int, rel_eps: float = 1e-9) -> dict:
    """Alias report, ROSS prediction error and SCS check for a 1-D input."""
    v = analyze_multi(x, fb, depth)
    w = analyze_complementary_multi(x, fb, depth)
    ross_err = float(np.max(np.abs(analyze_multi(modulate(x), fb, depth).coeffs - ross_predict_modulated(w).coeffs)))
    rep = alias_report(v, w, rel_eps)
    out = {
        "filterbank": fb.name,
        "depth": depth,
        "length": int(x.size),
        "alias": rep.to_dict(),
        "ross_max_error": ross_err,
    }
    h = haar()
    mask = lattice_mask(x.shape)
    vx, vy = analyze_multi(x, h, depth), analyze_multi(mask, h, depth)
    scs_err = float(np.max(np.abs(subband_convolve(vx, vy).coeffs - analyze_multi(x * mask, h, depth).coeffs)))
    out["scs"] = {"max_error": scs_err, "mask_alias": mask_alias_report(vx, vy, rel_eps).summary()}
    return out


def cmd_rewire_report(args) -> int:
    cfg = _config(args)
    fb = load_filterbank(cfg["filterbank"])
    x = io.read_array(args.input)
    if x.ndim != 1:
        raise FormatError("rewire-report takes a 1-D signal")
    report = rewire_report(x, fb, cfg["depth"], args.rel_eps)
    _write_report(args.report, report)
    s = report["alias"]["summary"]
    print(f"aliased positions: {s['aliased_positions']}, ROSS max error {report['ross_max_error']:.3g}",
          file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# interpolate / despeckle
# ---------------------------------------------------------------------------


def _metrics(truth, y, xh, seed, t0) -> dict:
    out = {"seed": seed, "runtime_ms": round(1000 * (time.perf_counter() - t0), 1)}
    if truth is not None:
        if truth.shape != y.shape:
            raise FormatError("ground truth and observation differ in shape")
        out.update(snr_in=snr_db(truth, y), snr_out=snr_db(truth, xh), mse_in=mse(truth, y), mse_out=mse(truth, xh))
    return out


def _run_pipeline(args, kind: str) -> int:
    cfg = _config(args)
    sigma = _require_sigma(cfg)
    data = io.read_array(args.input)
    if data.ndim != 2:
        raise FormatError("expected a PGM image")
    maxval = io.pgm_maxval(args.input)
    truth = io.read_pgm(args.truth) if args.truth else None
    if args.simulate:
        truth = data
        data = sample_observation(kind, truth, sigma, args.seed)
    t0 = time.perf_counter()
    method = "monte_carlo" if args.monte_carlo else "quadrature"
    if kind == "subsampled_noisy":
        fb = load_filterbank(cfg["filterbank"], "unitary")
        xh = denoise_interpolate(data, fb, cfg["depth"], sigma, cfg["prior_family"], cfg["prior"],
                                 method=method, seed=args.seed)
    else:
        fb = load_filterbank(cfg["filterbank"])
        if fb.name != "haar":
            raise ConfigError("despeckle uses the Haar filterbank")
        xh = despeckle(data, cfg["depth"], sigma, cfg["prior_family"], cfg["prior"],
                       fb.with_normalization("gain2"), method=method, seed=args.seed)
    metrics = _metrics(truth, data, xh, args.seed, t0)
    io.write_pgm(args.out, xh, maxval)
    if args.save_observation:
        io.write_pgm(args.save_observation, data, maxval)
    _write_report(args.report, metrics)
    return EXIT_OK


def cmd_interpolate(args) -> int:
    return _run_pipeline(args, "subsampled_noisy")


def cmd_despeckle(args) -> int:
    return _run_pipeline(args, "multiplicative")


def cmd_phantom(args) -> int:
    io.write_pgm(args.out, phantoms.piecewise_constant(args.size), 255)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _parse_only(text):
    if not text:
        return None
    try:
        nums = {int(t) for t in text.replace(",", " ").split()}
    except ValueError as exc:
        raise ConfigError(f"--only expects criterion numbers, got {text!r}") from exc
    bad = nums - set(validation.CRITERIA)
    if bad:
        raise ConfigError(f"unknown criteria {sorted(bad)}")
    return nums


def cmd_validate(args) -> int:
    only = _parse_only(args.only)
    banks = None
    if args.filterbank:
        fb = load_filterbank(args.filterbank, validate=False)
        banks = {fb.name: fb}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = validation.run(only, banks)
    for r in results:
        print(r.line())
    passed = all(r.passed for r in results)
    if args.report:
        io.write_json(args.report, {"passed": passed, "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if passed else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbrewire", description="Filterbank rewiring toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--filterbank", help="shipped name (haar, db4, bior53) or JSON path")
        sp.add_argument("--depth", type=int, help="decomposition depth I")
        sp.add_argument("--prior", help="model/prior config JSON")
        sp.add_argument("--out", required=out_required, help="output path")

    sp = sub.add_parser("analyze", help="write one coefficient file per subband plus a manifest")
    sp.add_argument("input", help="text signal or PGM image")
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("synthesize", help="rebuild a signal or image from an analyze manifest")
    sp.add_argument("input", help="manifest.json or its directory")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("rewire-report", help="alias/ROSS/SCS report for a 1-D signal")
    sp.add_argument("input")
    common(sp)
    sp.add_argument("--report", help="JSON report path (stdout if omitted)")
    sp.add_argument("--rel-eps", type=float, default=1e-9, help="support threshold relative to the peak")
    sp.set_defaults(func=cmd_rewire_report)

    for name, func, text in (("interpolate", cmd_interpolate, "posterior-mean interpolation and denoising"),
                             ("despeckle", cmd_despeckle, "posterior-mean removal of multiplicative noise")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("input", help="observation PGM (clean image with --simulate)")
        common(sp, out_required=True)
        sp.add_argument("--sigma", type=float, help="noise standard deviation (required)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--report", help="metrics JSON path (stdout if omitted)")
        sp.add_argument("--truth", help="ground-truth PGM for SNR/MSE metrics")
        sp.add_argument("--simulate", action="store_true", help="treat input as ground truth and draw the observation")
        sp.add_argument("--save-observation", help="also write the simulated observation")
        sp.add_argument("--monte-carlo", action="store_true", help="Monte Carlo posterior means instead of quadrature")
        sp.set_defaults(func=func)

    sp = sub.add_parser("phantom", help="write the 64x64 piecewise-constant test image")
    sp.add_argument("--out", required=True)
    sp.add_argument("--size", type=int, default=64)
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("validate", help="run the acceptance criteria")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("--filterbank", help="check this filterbank JSON in criteria 1-5 instead of the shipped ones")
    sp.add_argument("--report", help="JSON report path")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FilterbankError, OSError) as exc:
        print(f"fbrewire {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
