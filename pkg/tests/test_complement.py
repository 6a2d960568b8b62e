import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbrewire.complement import (
    alias_decompose,
    alias_free_recover,
    alias_report,
    analyze_2d_complementary,
    analyze_complementary_multi,
    build_complement,
    check_self_complementary,
    derive_complement_params,
    modulate_by_rewire,
    rewire_identity_errors,
    ross_predict_modulated,
    support,
)
from fbrewire.core import (
    Filter,
    FilterbankPair,
    analyze_2d,
    analyze_multi,
    analyze_one_level,
    modulate,
    subsample,
    verify_pr,
)
from fbrewire.errors import NoComplementParamsError, ProvenanceError
from fbrewire.filterbanks import load_filterbank

NAMES = ["haar", "db4", "bior53"]


@pytest.fixture(scope="module")
def banks():
    return {n: load_filterbank(n) for n in NAMES}


def test_haar_params():
    p = derive_complement_params(load_filterbank("haar"))
    assert p.a == pytest.approx(-2.0)
    assert p.b == 0


@pytest.mark.parametrize("name", ["db4", "bior53"])
def test_params_exist(banks, name):
    p = derive_complement_params(banks[name])
    assert p.residual <= 1e-10


def test_broken_pair_has_no_params():
    fb = load_filterbank("haar")
    bad = FilterbankPair(fb.g0, Filter(tuple(3 * t for t in fb.g1.taps), fb.g1.offset),
                         fb.h0, fb.h1, validate=False)
    with pytest.raises(NoComplementParamsError):
        derive_complement_params(bad)


def test_haar_complement_filters():
    fb = load_filterbank("haar")
    c = build_complement(fb)
    assert c.g0.offset == fb.g0.offset and c.g1.offset == fb.g1.offset
    np.testing.assert_allclose(c.g0.taps, [-t for t in fb.g0.taps])
    np.testing.assert_allclose(c.g1.taps, fb.g1.taps)


@pytest.mark.parametrize("name", NAMES)
def test_complement_is_pr(banks, name):
    assert verify_pr(build_complement(banks[name]), tol=1e-10).passed


@pytest.mark.parametrize("name", NAMES)
def test_complement_of_complement(banks, name):
    fb = banks[name]
    cc = build_complement(build_complement(fb))
    assert check_self_complementary(fb, cc) == (-1, -1)


def test_self_complementary_signs(banks):
    assert check_self_complementary(banks["haar"]) == (-1, 1)
    assert check_self_complementary(banks["db4"]) is None
    for fb in banks.values():
        assert check_self_complementary(fb, fb) == (1, 1)


def test_haar_complementary_example():
    fb = load_filterbank("haar")
    w = analyze_complementary_multi([1.0, 2.0], fb, 1)
    np.testing.assert_allclose(w.coeffs[:, 0], [-3, -1])
    v = analyze_multi([1.0, 2.0], fb, 1)
    np.testing.assert_allclose(v.coeffs[:, 0], [-1 * w.coeffs[0, 0], w.coeffs[1, 0]])
    assert w.complementary and not v.complementary


def test_complementary_one_level_is_complement_pair(banks):
    fb = banks["db4"]
    x = np.random.default_rng(1).standard_normal(32)
    w = analyze_complementary_multi(x, fb, 1)
    v0, v1 = analyze_one_level(x, build_complement(fb))
    np.testing.assert_allclose(w.coeffs, np.stack([v0, v1]), atol=1e-12)


def test_zero_input():
    fb = load_filterbank("db4")
    w = analyze_complementary_multi(np.zeros(16), fb, 2)
    assert not w.coeffs.any()
    assert not ross_predict_modulated(w).coeffs.any()
    w1 = analyze_complementary_multi(np.zeros(16), fb, 1)
    assert not modulate_by_rewire(w1, fb).any()


def test_ross_haar_example():
    fb = load_filterbank("haar")
    w = analyze_complementary_multi([1.0, 2.0], fb, 1)
    pred = ross_predict_modulated(w)
    np.testing.assert_allclose(pred.coeffs[:, 0], [-1, 3])
    np.testing.assert_allclose(analyze_multi([1.0, -2.0], fb, 1).coeffs[:, 0], [-1, 3])


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("depth", [1, 2, 3])
def test_ross_matches_direct(banks, name, depth):
    fb = banks[name]
    x = np.random.default_rng(depth).standard_normal(64)
    pred = ross_predict_modulated(analyze_complementary_multi(x, fb, depth))
    direct = analyze_multi(modulate(x), fb, depth)
    np.testing.assert_allclose(pred.coeffs, direct.coeffs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(NAMES), st.integers(1, 3))
def test_alias_decompose_property(seed, name, depth):
    fb = load_filterbank(name)
    x = np.random.default_rng(seed).standard_normal(64)
    v = analyze_multi(x, fb, depth)
    w = analyze_complementary_multi(x, fb, depth)
    np.testing.assert_allclose(alias_decompose(v, w).coeffs,
                               analyze_multi(subsample(x), fb, depth).coeffs, atol=1e-10)


def test_alias_decompose_haar_example():
    fb = load_filterbank("haar")
    v = analyze_multi([1.0, 2.0], fb, 1)
    w = analyze_complementary_multi([1.0, 2.0], fb, 1)
    np.testing.assert_allclose(alias_decompose(v, w).coeffs[:, 0], [1, 1])


def test_even_supported_fixed_point():
    fb = load_filterbank("db4")
    x = subsample(np.random.default_rng(2).standard_normal(32))
    v = analyze_multi(x, fb, 2)
    w = analyze_complementary_multi(x, fb, 2)
    np.testing.assert_allclose(alias_decompose(v, w).coeffs, v.coeffs, atol=1e-12)


def test_provenance_checked():
    fb = load_filterbank("haar")
    x = np.arange(8.0)
    v = analyze_multi(x, fb, 2)
    w = analyze_complementary_multi(x, fb, 2)
    with pytest.raises(ProvenanceError):
        alias_decompose(w, v)
    with pytest.raises(ProvenanceError):
        alias_decompose(v, analyze_complementary_multi(x, fb, 1))
    with pytest.raises(ProvenanceError):
        alias_decompose(v, analyze_complementary_multi(x, load_filterbank("db4"), 2))


def _step(n=16, edge=5):
    x = np.zeros(n)
    x[edge:] = 1.0
    return x


def test_step_edge_alias_localized():
    fb = load_filterbank("haar")
    x = _step()
    v = analyze_multi(x, fb, 1)
    w = analyze_complementary_multi(x, fb, 1)
    rep = alias_report(v, w)
    # samples 4 and 5 straddle the edge
    np.testing.assert_array_equal(rep.aliased_positions, [2])
    assert rep.summary()["aliased_positions"] == 1
    assert set(rep.to_dict()) == {"summary", "subbands"}


def test_alias_free_recover_step_edge():
    fb = load_filterbank("haar")
    x = _step()
    v = analyze_multi(x, fb, 1)
    w = analyze_complementary_multi(x, fb, 1)
    vs = analyze_multi(subsample(x), fb, 1)
    rec = alias_free_recover(vs, ~support(w))
    np.testing.assert_array_equal(np.flatnonzero(rec.aliased[0]), [2])
    assert rec.aliased[:, 2].all()
    # highpass needs w_0 == 0, which only holds where the signal is zero
    np.testing.assert_array_equal(np.flatnonzero(rec.recovered[1]), [0, 1])
    np.testing.assert_allclose(rec.values.coeffs[rec.recovered], v.coeffs[rec.recovered], atol=1e-12)


def test_alias_free_recover_constant():
    fb = load_filterbank("haar")
    x = np.full(16, 3.0)
    w = analyze_complementary_multi(x, fb, 2)
    vs = analyze_multi(subsample(x), fb, 2)
    rec = alias_free_recover(vs, ~support(w))
    assert rec.recovered[0].all()
    np.testing.assert_allclose(rec.values.coeffs[0], 2 * vs.coeffs[0])
    np.testing.assert_allclose(rec.values.coeffs[0], analyze_multi(x, fb, 2).coeffs[0])


def test_alias_free_recover_nothing():
    fb = load_filterbank("haar")
    vs = analyze_multi(subsample(np.arange(8.0)), fb, 1)
    rec = alias_free_recover(vs, np.zeros_like(vs.coeffs, dtype=bool))
    assert rec.aliased.all()
    assert not rec.values.coeffs.any()


def test_rewire_haar_example():
    fb = load_filterbank("haar")
    w = analyze_complementary_multi([1.0, 2.0], fb, 1)
    np.testing.assert_allclose(modulate_by_rewire(w, fb), [1, -2])


@pytest.mark.parametrize("name", NAMES)
def test_rewire_matches_modulation(banks, name):
    fb = banks[name]
    x = np.random.default_rng(3).standard_normal(64)
    w = analyze_complementary_multi(x, fb, 1)
    np.testing.assert_allclose(modulate_by_rewire(w, fb), modulate(x), atol=1e-10)


@pytest.mark.parametrize("name", NAMES)
def test_rewire_identities(banks, name):
    e0, e2 = rewire_identity_errors(banks[name])
    assert e0 <= 1e-10 and e2 <= 1e-10


def test_2d_complementary_rows_only():
    fb = load_filterbank("haar")
    im = np.random.default_rng(4).standard_normal((8, 8))
    plain = analyze_2d_complementary(im, fb, 1, axes=())
    np.testing.assert_allclose(plain, analyze_2d(im, fb, 1).coeffs, atol=1e-12)
    rows = analyze_2d_complementary(im, fb, 1, axes=(0,))
    # haar complement negates the lowpass branch only
    np.testing.assert_allclose(rows[0], -plain[0], atol=1e-12)
    np.testing.assert_allclose(rows[1], plain[1], atol=1e-12)
