import json

import numpy as np
import pytest

from fbrewire import io, phantoms
from fbrewire.cli import main
from fbrewire.filterbanks import load_filterbank
from fbrewire.likelihood import lattice_mask


@pytest.fixture
def phantom(tmp_path):
    p = tmp_path / "phantom.pgm"
    assert main(["phantom", "--out", str(p)]) == 0
    return p


def test_phantom_command(phantom):
    np.testing.assert_array_equal(io.read_pgm(phantom), phantoms.piecewise_constant(64))


def test_analyze_synthesize_pgm_byte_exact(tmp_path, phantom):
    out = tmp_path / "bands"
    assert main(["analyze", str(phantom), "--filterbank", "db4", "--depth", "2", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["kind"] == "image" and len(man["files"]) == 16
    assert (out / "subband_01_10.txt").exists()
    rebuilt = tmp_path / "rebuilt.pgm"
    assert main(["synthesize", str(out), "--out", str(rebuilt)]) == 0
    assert rebuilt.read_bytes() == phantom.read_bytes()


def test_analyze_synthesize_signal(tmp_path):
    x = np.random.default_rng(0).standard_normal(32)
    src = tmp_path / "x.txt"
    io.write_signal(src, x)
    out = tmp_path / "bands"
    assert main(["analyze", str(src), "--depth", "3", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("subband_*.txt"))[:2] == ["subband_000.txt", "subband_001.txt"]
    dst = tmp_path / "y.txt"
    assert main(["synthesize", str(out / "manifest.json"), "--out", str(dst)]) == 0
    np.testing.assert_allclose(io.read_signal(dst), x, atol=1e-12)


def test_bad_depth_exit_code(tmp_path, phantom):
    assert main(["analyze", str(phantom), "--depth", "7", "--out", str(tmp_path / "o")]) == 2


def test_missing_filterbank_exit_code(tmp_path, phantom):
    code = main(["analyze", str(phantom), "--filterbank", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_broken_manifest_exit_code(tmp_path):
    (tmp_path / "manifest.json").write_text("{broken")
    assert main(["synthesize", str(tmp_path), "--out", str(tmp_path / "x.txt")]) == 3


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--bogus"])
    assert exc.value.code == 2


def _report(tmp_path, x, *extra):
    src = tmp_path / "x.txt"
    io.write_signal(src, x)
    rep = tmp_path / "rep.json"
    assert main(["rewire-report", str(src), "--report", str(rep), *extra]) == 0
    return json.loads(rep.read_text())


def test_rewire_report_constant(tmp_path):
    rep = _report(tmp_path, np.full(32, 4.0), "--depth", "2")
    assert rep["alias"]["summary"]["aliased_positions"] == 0
    assert rep["ross_max_error"] <= 1e-10
    assert rep["scs"]["max_error"] <= 1e-10


def test_rewire_report_step_edge(tmp_path):
    x = np.zeros(64)
    x[29:] = 1.0
    rep = _report(tmp_path, x, "--filterbank", "db4", "--depth", "1")
    L = load_filterbank("db4").max_length
    positions = [i for i, flag in enumerate(np.any(
        [sb["aliased"] for sb in rep["alias"]["subbands"]], axis=0)) if flag]
    assert positions
    # position n covers samples near 2n; the periodic step also jumps at 63 -> 0
    def dist(n, edge):
        d = abs(2 * n - edge) % 64
        return min(d, 64 - d)
    assert all(min(dist(n, 29), dist(n, 0)) <= 2 * L for n in positions)
    assert any(dist(n, 29) <= 2 * L for n in positions)
    assert rep["ross_max_error"] <= 1e-10


def test_interpolate_metrics(tmp_path, phantom):
    out, rep = tmp_path / "out.pgm", tmp_path / "m.json"
    args = ["interpolate", str(phantom), "--simulate", "--sigma", "20", "--depth", "3",
            "--seed", "0", "--out", str(out), "--report", str(rep)]
    assert main(args) == 0
    m = json.loads(rep.read_text())
    assert m["snr_out"] > m["snr_in"]
    assert m["seed"] == 0
    first = out.read_bytes()
    assert main(args) == 0
    again = json.loads(rep.read_text())
    again.pop("runtime_ms"), m.pop("runtime_ms")
    assert again == m and out.read_bytes() == first


def test_interpolate_sigma_zero_lattice(tmp_path):
    x = phantoms.piecewise_constant(32)
    src = tmp_path / "y.pgm"
    io.write_pgm(src, x * lattice_mask(x.shape), 255)
    out = tmp_path / "out.pgm"
    assert main(["interpolate", str(src), "--sigma", "0", "--depth", "2", "--out", str(out),
                 "--report", str(tmp_path / "m.json")]) == 0
    np.testing.assert_array_equal(io.read_pgm(out)[::2, ::2], x[::2, ::2])


def test_interpolate_requires_sigma(tmp_path, phantom):
    assert main(["interpolate", str(phantom), "--out", str(tmp_path / "o.pgm")]) == 2


def test_despeckle_with_truth(tmp_path, phantom):
    obs, out, rep = tmp_path / "obs.pgm", tmp_path / "out.pgm", tmp_path / "m.json"
    assert main(["despeckle", str(phantom), "--simulate", "--sigma", "0.3", "--save-observation", str(obs),
                 "--out", str(out), "--report", str(rep)]) == 0
    m = json.loads(rep.read_text())
    assert m["mse_out"] < m["mse_in"]
    rep2 = tmp_path / "m2.json"
    assert main(["despeckle", str(obs), "--truth", str(phantom), "--sigma", "0.3",
                 "--out", str(tmp_path / "o2.pgm"), "--report", str(rep2)]) == 0
    assert json.loads(rep2.read_text())["mse_out"] < m["mse_in"] * 1.01


def test_despeckle_rejects_other_filterbank(tmp_path, phantom):
    assert main(["despeckle", str(phantom), "--sigma", "0.3", "--filterbank", "db4",
                 "--out", str(tmp_path / "o.pgm")]) == 2


def test_prior_config_and_flags(tmp_path, phantom):
    cfg = tmp_path / "model.json"
    cfg.write_text(json.dumps({"sigma": 20, "depth": 2, "prior": {"family": "generalized_gaussian"}}))
    rep = tmp_path / "m.json"
    assert main(["interpolate", str(phantom), "--simulate", "--prior", str(cfg),
                 "--out", str(tmp_path / "o.pgm"), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["snr_out"] > json.loads(rep.read_text())["snr_in"]
    cfg.write_text(json.dumps({"sigma": 20, "typo": 1}))
    assert main(["interpolate", str(phantom), "--prior", str(cfg), "--out", str(tmp_path / "o.pgm")]) == 2


def test_validate_subset(tmp_path, capsys):
    rep = tmp_path / "v.json"
    assert main(["validate", "--only", "2,7", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["passed"] and [c["criterion"] for c in data["criteria"]] == [2, 7]
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()]
    assert len(lines) == 2 and all("PASS" in ln for ln in lines)


def test_validate_corrupted_filterbank(tmp_path):
    d = load_filterbank("haar").to_dict()
    d["h1"]["taps"][0] *= 1.5
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    assert main(["validate", "--only", "1", "--filterbank", str(p)]) == 4


def test_validate_unknown_criterion():
    assert main(["validate", "--only", "12"]) == 2
