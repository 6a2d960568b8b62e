import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbrewire.complement import alias_report, analyze_complementary_multi
from fbrewire.core import SubbandSet, analyze_multi, subsample
from fbrewire.errors import (
    DepthError,
    DepthMismatchError,
    FilterbankError,
    LengthError,
    LengthMismatchError,
    NormalizationError,
    SupportConflictError,
)
from fbrewire.filterbanks import load_filterbank
from fbrewire.scs import (
    CarrierSchedule,
    WalshBlock,
    check_disjoint_supports,
    demultiplex,
    envelope_from_carrier,
    haar,
    haar_block_transform,
    logical_convolve,
    mask_alias_report,
    multiplex,
    subband_convolve,
)


def test_walsh_rows():
    w = WalshBlock(1)
    np.testing.assert_array_equal(w.rows, [[1, 1], [1, -1]])
    assert w.order == 2


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_walsh_group_law(depth):
    assert WalshBlock(depth).group_law_holds()


def test_block_transform_examples():
    np.testing.assert_array_equal(haar_block_transform([1.0, 2.0], 1).coeffs[:, 0], [3, -1])
    np.testing.assert_array_equal(haar_block_transform([1.0, 2.0, 3.0, 4.0], 2).coeffs[:, 0],
                                  [10, -2, -4, 0])


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_block_transform_equals_haar(depth):
    x = np.random.default_rng(depth).standard_normal(64)
    np.testing.assert_allclose(haar_block_transform(x, depth).coeffs,
                               analyze_multi(x, haar(), depth).coeffs, atol=1e-12)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_tiled_walsh_row_hits_one_subband(depth):
    w = WalshBlock(depth)
    for i in range(w.order):
        c = haar_block_transform(np.tile(w.phi(i), 4), depth).coeffs
        expected = np.zeros_like(c)
        expected[i] = w.order
        np.testing.assert_array_equal(c, expected)


def test_subband_convolve_example():
    A = analyze_multi([1.0, 2.0], haar(), 1)
    B = analyze_multi([3.0, 4.0], haar(), 1)
    out = subband_convolve(A, B)
    np.testing.assert_allclose(out.coeffs[:, 0], [11, -5])
    np.testing.assert_allclose(analyze_multi([3.0, 8.0], haar(), 1).coeffs[:, 0], [11, -5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_product_is_subband_convolution(seed, depth):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 64))
    got = subband_convolve(analyze_multi(x, haar(), depth), analyze_multi(y, haar(), depth))
    np.testing.assert_allclose(got.coeffs, analyze_multi(x * y, haar(), depth).coeffs, atol=1e-10)


def test_identity_and_modulation():
    x = np.random.default_rng(0).standard_normal(16)
    A = analyze_multi(x, haar(), 2)
    ones = analyze_multi(np.ones(16), haar(), 2)
    np.testing.assert_allclose(subband_convolve(A, ones).coeffs, A.coeffs)
    A1 = analyze_multi(x, haar(), 1)
    alt = analyze_multi((-1.0) ** np.arange(16), haar(), 1)
    np.testing.assert_allclose(alt.coeffs, [[0] * 8, [2] * 8])
    np.testing.assert_allclose(subband_convolve(A1, alt).coeffs, A1.coeffs[::-1])


def test_subband_convolve_rejects():
    x = np.arange(16.0)
    A = analyze_multi(x, haar(), 2)
    with pytest.raises(DepthMismatchError):
        subband_convolve(A, analyze_multi(x, haar(), 1))
    with pytest.raises(LengthMismatchError):
        subband_convolve(A, analyze_multi(np.arange(32.0), haar(), 2))
    with pytest.raises(NormalizationError):
        subband_convolve(A, analyze_multi(x, haar().with_normalization("unitary"), 2))
    with pytest.raises(FilterbankError):
        subband_convolve(A, analyze_multi(x, load_filterbank("db4", "gain2"), 2))


def test_logical_convolve():
    np.testing.assert_allclose(logical_convolve([3, -1], [7, -1]), [11, -5])
    u = np.random.default_rng(1).standard_normal(8)
    np.testing.assert_allclose(logical_convolve(u, [8, 0, 0, 0, 0, 0, 0, 0]), u)
    with pytest.raises(LengthError):
        logical_convolve([1, 2, 3], [1, 2, 3])
    with pytest.raises(LengthError):
        logical_convolve([1, 2], [1, 2, 3, 4])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 4))
def test_logical_convolve_commutes(seed, depth):
    u, v = np.random.default_rng(seed).standard_normal((2, 1 << depth))
    np.testing.assert_allclose(logical_convolve(u, v), logical_convolve(v, u), atol=1e-12)


def test_envelopes():
    np.testing.assert_array_equal(envelope_from_carrier(CarrierSchedule.constant(1, 0, 4), 8), np.ones(8))
    np.testing.assert_array_equal(envelope_from_carrier(CarrierSchedule.constant(1, 1, 4), 8),
                                  [1, -1] * 4)
    y = envelope_from_carrier(CarrierSchedule(1, [0, 0, 1, 1, 1, 1, 1, 1]), 16)
    np.testing.assert_array_equal(y[:4], np.ones(4))
    np.testing.assert_array_equal(y[4:], [1, -1] * 6)


def test_schedule_validation():
    with pytest.raises(DepthError):
        CarrierSchedule(1, [0, 2])
    with pytest.raises(LengthMismatchError):
        envelope_from_carrier(CarrierSchedule(1, [0, 1]), 8)


def _lowpass(rng, n=16):
    return np.repeat(rng.standard_normal(n // 2), 2)


def test_multiplex_examples():
    rng = np.random.default_rng(2)
    x1, x2 = rng.standard_normal((2, 16))
    dc, alt = CarrierSchedule.constant(1, 0, 8), CarrierSchedule.constant(1, 1, 8)
    np.testing.assert_allclose(multiplex([x1], [dc]), x1)
    np.testing.assert_allclose(multiplex([x1, x2], [dc, alt]), x1 + (-1.0) ** np.arange(16) * x2)
    assert not multiplex([np.zeros(16), np.zeros(16)], [dc, alt]).any()


def test_disjoint_checks():
    rng = np.random.default_rng(3)
    x1, x2 = _lowpass(rng), _lowpass(rng)
    v1, v2 = (analyze_multi(x, haar(), 1) for x in (x1, x2))
    dc, alt = CarrierSchedule.constant(1, 0, 8), CarrierSchedule.constant(1, 1, 8)
    assert check_disjoint_supports([v1], [dc])
    assert check_disjoint_supports([v1, v2], [dc, alt])
    clash = check_disjoint_supports([v1, v1], [dc, dc])
    assert not clash
    assert len(clash.conflicts) == 8
    assert all(ch == [0, 1] for _, _, ch in clash.conflicts)


def test_demultiplex_round_trip():
    rng = np.random.default_rng(4)
    x1, x2 = _lowpass(rng), _lowpass(rng)
    v1, v2 = (analyze_multi(x, haar(), 1) for x in (x1, x2))
    scheds = [CarrierSchedule.constant(1, 0, 8), CarrierSchedule.constant(1, 1, 8)]
    z = multiplex([x1, x2], scheds)
    r1, r2 = demultiplex(z, scheds, [v1, v2])
    np.testing.assert_allclose(r1.coeffs, v1.coeffs, atol=1e-10)
    np.testing.assert_allclose(r2.coeffs, v2.coeffs, atol=1e-10)
    np.testing.assert_allclose(demultiplex(x1, scheds[:1], [v1])[0].coeffs, v1.coeffs)
    zero = demultiplex(np.zeros(16), scheds, [v1, v2])
    assert not any(r.coeffs.any() for r in zero)
    with pytest.raises(SupportConflictError):
        demultiplex(z, [scheds[0], scheds[0]], [v1, v2])


def test_mask_alias_ones():
    x = np.random.default_rng(5).standard_normal(32)
    rep = mask_alias_report(analyze_multi(x, haar(), 2), analyze_multi(np.ones(32), haar(), 2))
    assert not rep.aliased.any()


def test_even_mask_matches_complement_report():
    x = np.zeros(16)
    x[5:] = 1.0
    mask = subsample(np.ones(16))
    rep = mask_alias_report(analyze_multi(x, haar(), 1), analyze_multi(mask, haar(), 1))
    v = analyze_multi(x, haar(), 1)
    w = analyze_complementary_multi(x, haar(), 1)
    np.testing.assert_array_equal(rep.aliased_positions, alias_report(v, w).aliased_positions)
    assert rep.summary()["aliased_positions"] == 1


def test_even_mask_lowpass_no_alias():
    x = _lowpass(np.random.default_rng(6))
    mask = subsample(np.ones(16))
    rep = mask_alias_report(analyze_multi(x, haar(), 1), analyze_multi(mask, haar(), 1))
    assert not rep.aliased.any()


def test_mask_alias_depth_mismatch():
    x = np.arange(16.0)
    with pytest.raises(DepthMismatchError):
        mask_alias_report(analyze_multi(x, haar(), 1), analyze_multi(x, haar(), 2))


def test_subband_set_type():
    assert isinstance(haar_block_transform(np.arange(8.0), 3), SubbandSet)
