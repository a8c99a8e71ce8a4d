import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import naive_lookup
from lutforge.curve import curve_step, derive_params, enhance
from lutforge.lut import COLOR_RANGE, PARAM_RANGE, Lut3D, constant_lut, identity_lut


def random_llut(rng, n=9):
    return Lut3D(rng.uniform(-1, 1, (3, n, n, n)), PARAM_RANGE)


def loop_enhance(table, img, n, per_step=True):
    """Scalar per-pixel reference for the n-step recurrence."""
    out = np.empty_like(img)
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            v = img[y, x].copy()
            a = naive_lookup(table, v)
            for _ in range(n):
                if per_step:
                    a = naive_lookup(table, v)
                v = v + a * v * (1.0 - v)
            out[y, x] = v
    return out


def test_zero_llut_gives_zero_params(rng):
    assert np.all(derive_params(identity_lut(9, PARAM_RANGE), rng.uniform(size=(5, 7, 3))) == 0)


def test_constant_llut_gives_constant_params(rng):
    params = derive_params(constant_lut(9, 0.5), rng.uniform(size=(5, 7, 3)))
    np.testing.assert_allclose(params, 0.5, atol=1e-15)


def test_derive_params_matches_pixel_loop(rng):
    lut = random_llut(rng, 5)
    img = rng.uniform(size=(6, 5, 3))
    params = derive_params(lut, img)
    for y in range(6):
        for x in range(5):
            np.testing.assert_allclose(params[y, x], naive_lookup(lut.table, img[y, x]), atol=1e-12)


def test_derive_params_rejects_color_lut(rng):
    with pytest.raises(ValueError):
        derive_params(identity_lut(9, COLOR_RANGE), rng.uniform(size=(2, 2, 3)))


def test_curve_step_zero_params_is_identity(rng):
    img = rng.uniform(size=(4, 4, 3))
    assert np.array_equal(curve_step(img, np.zeros_like(img)), img)


def test_curve_step_hand_value():
    assert curve_step(np.array(0.25), np.array(1.0)) == 0.4375


@pytest.mark.parametrize("v", [0.0, 1.0])
@pytest.mark.parametrize("a", [-1.0, -0.3, 0.0, 0.7, 1.0])
def test_curve_step_fixed_points(v, a):
    assert curve_step(np.array(v), np.array(a)) == v


def test_fixed_params_two_steps():
    img = np.full((1, 1, 3), 0.1)
    out, stack = enhance(constant_lut(3, 1.0), img, n=2, mode="fixed_params")
    np.testing.assert_allclose(out, 0.3439, atol=1e-15)
    assert stack.shape == (2, 1, 1, 3)
    assert np.all(stack == 1.0)


@pytest.mark.parametrize("mode", ["per_step_lookup", "fixed_params"])
def test_zero_llut_enhance_is_bit_exact_identity(rng, mode):
    img = rng.uniform(size=(9, 11, 3))
    out, stack = enhance(identity_lut(9, PARAM_RANGE), img, n=8, mode=mode)
    assert np.array_equal(out, img)
    assert np.all(stack == 0.0)


@pytest.mark.parametrize("per_step", [True, False])
def test_enhance_matches_scalar_loop(rng, per_step):
    lut = random_llut(rng, 9)
    img = rng.uniform(size=(5, 6, 3))
    mode = "per_step_lookup" if per_step else "fixed_params"
    out, _ = enhance(lut, img, n=8, mode=mode)
    np.testing.assert_allclose(out, loop_enhance(lut.table, img, 8, per_step), rtol=0, atol=1e-12)


def test_modes_agree_for_constant_lut(rng):
    img = rng.uniform(size=(6, 6, 3))
    lut = constant_lut(5, -0.4)
    a, sa = enhance(lut, img, 8, "per_step_lookup")
    b, sb = enhance(lut, img, 8, "fixed_params")
    assert np.array_equal(a, b)
    assert np.array_equal(sa, sb)


def test_per_step_params_differ_between_steps(rng):
    _, stack = enhance(random_llut(rng), rng.uniform(size=(4, 4, 3)), n=3)
    assert not np.array_equal(stack[0], stack[1])


def test_enhance_rejects_bad_arguments(rng):
    img = rng.uniform(size=(2, 2, 3))
    lut = identity_lut(3, PARAM_RANGE)
    with pytest.raises(ValueError):
        enhance(lut, img, n=0)
    with pytest.raises(ValueError):
        enhance(lut, img, mode="sometimes")
    with pytest.raises(ValueError):
        enhance(lut, img * 2.0 + 0.1)


unit = st.floats(0.0, 1.0, allow_nan=False)
param = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=300)
@given(v=unit, a=param)
def test_curve_step_range(v, a):
    out = curve_step(np.array(v), np.array(a))
    assert 0.0 <= out <= 1.0


@settings(max_examples=300)
@given(v1=unit, v2=unit, a=param)
def test_curve_step_monotone(v1, v2, a):
    lo, hi = sorted((v1, v2))
    assert curve_step(np.array(lo), np.array(a)) <= curve_step(np.array(hi), np.array(a))


@settings(max_examples=50, deadline=None)
@given(img=arrays(np.float64, (3, 4, 3), elements=unit),
       stack=arrays(np.float64, (5, 3, 4, 3), elements=param))
def test_intermediates_stay_in_range(img, stack):
    current = img
    for params in stack:
        current = curve_step(current, params)
        assert current.min() >= 0.0 and current.max() <= 1.0
