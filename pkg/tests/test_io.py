import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fbrewire import io
from fbrewire.errors import ConfigError, FormatError
from fbrewire.filterbanks import load_filterbank
from fbrewire.likelihood import PriorModel
from fbrewire.scs import CarrierSchedule


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_signal_text_round_trip(x):
    assert np.array_equal(np.array([float(v) for v in io.format_signal(x).split()]), x)


def test_signal_file(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("# header\n1.5\n\n-2  # trailing\n3,\n")
    np.testing.assert_array_equal(io.read_signal(p), [1.5, -2, 3])
    io.write_signal(p, [0.1, 0.2])
    np.testing.assert_array_equal(io.read_signal(p), [0.1, 0.2])
    assert not list(tmp_path.glob(".*.tmp"))


def test_signal_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nabc\n")
    with pytest.raises(FormatError, match=":2:"):
        io.read_signal(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(FormatError):
        io.read_signal(empty)
    with pytest.raises(ConfigError):
        io.read_signal(tmp_path / "missing.txt")


@pytest.mark.parametrize("maxval", [255, 65535, 1000])
def test_pgm_round_trip(tmp_path, maxval):
    im = np.random.default_rng(maxval).integers(0, maxval + 1, size=(5, 7)).astype(float)
    p = tmp_path / "im.pgm"
    io.write_pgm(p, im, maxval)
    np.testing.assert_array_equal(io.read_pgm(p), im)
    assert io.pgm_maxval(p) == maxval
    np.testing.assert_array_equal(io.read_array(p), im)


def test_pgm_quantization():
    data = io.encode_pgm(np.array([[-3.0, 0.5, 1.5, 2.5, 300.0]]), 255)
    np.testing.assert_array_equal(io.decode_pgm(data), [[0, 0, 2, 2, 255]])
    assert io.encode_pgm(np.array([[0.0, 1000.0]])).startswith(b"P5\n2 1\n65535\n")


def test_pgm_header_comments():
    data = b"P5\n# made by hand\n2 1\n# depth\n255\n" + bytes([7, 9])
    np.testing.assert_array_equal(io.decode_pgm(data), [[7, 9]])


@pytest.mark.parametrize("data", [
    b"P2\n2 1\n255\n7 9",
    b"P5\n2 1\n",
    b"P5\n2 1\n255\n" + bytes([1]),
    b"P5\n0 1\n255\n",
    b"P5\nx 1\n255\n",
])
def test_pgm_rejects(data):
    with pytest.raises(FormatError):
        io.decode_pgm(data)


def test_encode_pgm_needs_2d():
    with pytest.raises(FormatError):
        io.encode_pgm(np.zeros(4))


@pytest.mark.parametrize("name", ["haar", "db4", "bior53"])
def test_filterbank_round_trip(tmp_path, name):
    fb = load_filterbank(name)
    p = tmp_path / f"{name}.json"
    io.write_filterbank(p, fb)
    back = io.read_filterbank(str(p))
    assert back.analysis == fb.analysis and back.synthesis == fb.synthesis
    assert back.normalization == fb.normalization


def test_schedule_round_trip(tmp_path):
    scheds = [CarrierSchedule(2, [0, 3, 1], "a"), CarrierSchedule(2, [2, 2, 2], "b")]
    p = tmp_path / "s.json"
    io.write_schedules(p, scheds)
    back = io.read_schedules(p)
    assert [s.name for s in back] == ["a", "b"]
    for s, b in zip(scheds, back):
        np.testing.assert_array_equal(s.indices, b.indices)
        assert s.depth == b.depth


def test_schedule_strict_keys():
    with pytest.raises(FormatError):
        io.schedules_from_dict({"depth": 1, "channels": [], "extra": 0})
    with pytest.raises(FormatError):
        io.schedules_from_dict({"depth": 1, "channels": [{"idx": [0]}]})
    with pytest.raises(FormatError):
        io.schedules_to_dict([CarrierSchedule(1, [0]), CarrierSchedule(2, [0])])


def test_read_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        io.read_json(p)
    with pytest.raises(ConfigError):
        io.read_json(tmp_path / "absent.json")


def test_model_config_defaults():
    cfg = io.parse_model_config({})
    assert cfg["prior"] is None and cfg["prior_family"] == "laplacian"


def test_model_config_full(tmp_path):
    d = {
        "model": "subsampled_noisy",
        "sigma": 20,
        "depth": 1,
        "filterbank": "haar",
        "prior": {"family": "generalized_gaussian", "shape": 0.8, "scales": [[1, 2], [3, 4]]},
    }
    p = tmp_path / "m.json"
    p.write_text(json.dumps(d))
    cfg = io.read_model_config(p)
    assert isinstance(cfg["prior"], PriorModel)
    assert cfg["prior"].flat[0, 0] and not cfg["prior"].flat[1, 1]
    np.testing.assert_allclose(cfg["prior"].shapes, 0.8)
    assert cfg["sigma"] == 20 and cfg["prior_family"] == "generalized_gaussian"


@pytest.mark.parametrize("d,exc", [
    ({"sigmaa": 1}, ConfigError),
    ({"model": "other"}, ConfigError),
    ({"sigma": -1}, ConfigError),
    ({"depth": 0}, ConfigError),
    ({"depth": 1.5}, ConfigError),
    ({"prior": {"family": "cauchy"}}, ConfigError),
    ({"prior": {"family": "laplacian", "scale": 1}}, ConfigError),
    ({"prior": {"scales": [[0, 1], [1, 1]]}}, ConfigError),
    ({"prior": {"scales": "auto"}}, FormatError),
    ({"prior": []}, FormatError),
    ([], FormatError),
])
def test_model_config_strict(d, exc):
    with pytest.raises(exc):
        io.parse_model_config(d)


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    io.atomic_write(p, "one")
    io.atomic_write(p, b"two")
    assert p.read_text() == "two"
    assert [q.name for q in p.parent.iterdir()] == ["f.txt"]
