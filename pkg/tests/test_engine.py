import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from halftoning.core import SignedImage
from halftoning.diffusion import (
    FIRST_ORDER,
    H2,
    builtin_schemes,
    expand_scheme,
    rescale,
    run_floyd_steinberg_direct,
    run_scheme,
    sigma_delta_1d,
    sign,
)

SCHEMES = builtin_schemes()
FIRST = ["fs1", "shiau-fan", "jjn"]


def reference_run(p: np.ndarray, scheme, scan="raster"):
    """Recurrence driven by the extended coefficients, with explicit bounds checks."""
    coeffs = {o: float(c) for o, c in expand_scheme(scheme).items() if o != (0, 0)}
    h, w = p.shape
    v = np.zeros((h, w))
    q = np.zeros((h, w))
    for i in range(h):
        rev = scan == "serpentine" and i % 2 == 1
        for j in range(w - 1, -1, -1) if rev else range(w):
            x = p[i, j]
            for (di, dj), c in coeffs.items():
                ii, jj = i - di, j - (-dj if rev else dj)
                if 0 <= ii < h and 0 <= jj < w:
                    x -= c * v[ii, jj]
            q[i, j] = 1.0 if x > 0 else -1.0
            v[i, j] = x - q[i, j]
    return q, v


def test_sign_ties_black():
    assert sign(0.0) == -1.0
    assert sign(1e-300) == 1.0
    assert sign(-2.0) == -1.0


def test_fs_hand_stepped_row():
    res = run_scheme(SignedImage(np.full((1, 3), 0.5)), SCHEMES["fs1"])
    v0 = 0.5 - 1
    v1 = 7 / 16 * v0 + 0.5 - 1
    v2 = 7 / 16 * v1 + 0.5 - 1
    np.testing.assert_array_equal(res.q.values, [[1, 1, 1]])
    np.testing.assert_allclose(res.v_final, [[v0, v1, v2]], rtol=0, atol=1e-15)


def test_fs_hand_stepped_two_rows():
    p = np.array([[0.2, -0.4], [0.1, 0.3]])
    # pixel by pixel, with the four Floyd-Steinberg taps
    v00 = 0.2 - 1
    x01 = 7 / 16 * v00 - 0.4
    v01 = x01 + 1
    x10 = 5 / 16 * v00 + 3 / 16 * v01 + 0.1
    v10 = x10 - (1 if x10 > 0 else -1)
    x11 = 5 / 16 * v01 + 7 / 16 * v10 + 1 / 16 * v00 + 0.3
    v11 = x11 - (1 if x11 > 0 else -1)
    res = run_scheme(SignedImage(p), SCHEMES["fs1"])
    np.testing.assert_allclose(res.v_final, [[v00, v01], [v10, v11]], atol=1e-15)


def test_sigma_delta_hand_stepped():
    q, v = sigma_delta_1d([0.5, 0.5, 0.5, 0.5], H2)
    vs, qs = [], []
    for n in range(4):
        get = lambda k: vs[n - k] if n - k >= 0 else 0.0  # noqa: E731
        x = 1.5 * get(1) - 0.5 * get(3) + 0.5
        qs.append(1.0 if x > 0 else -1.0)
        vs.append(x - qs[-1])
    np.testing.assert_array_equal(q, qs)
    np.testing.assert_allclose(v, vs, atol=1e-15)


def test_sigma_delta_first_order_zero_alternates():
    q, _ = sigma_delta_1d(np.zeros(6), FIRST_ORDER)
    np.testing.assert_array_equal(q, [-1, 1, -1, 1, -1, 1])


@pytest.mark.parametrize("name", sorted(SCHEMES))
@pytest.mark.parametrize("scan", ["raster", "serpentine"])
def test_engine_matches_reference(name, scan):
    rng = np.random.default_rng([sorted(SCHEMES).index(name), len(scan)])
    p = rng.uniform(-0.9, 0.9, size=(9, 11))
    res = run_scheme(SignedImage(p), SCHEMES[name], scan)
    q, v = reference_run(p, SCHEMES[name], scan)
    np.testing.assert_array_equal(res.q.values, q)
    np.testing.assert_allclose(res.v_final, v, atol=1e-12)
    assert res.v_max_abs == pytest.approx(np.max(np.abs(v)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(-1, 1)))
def test_fs_engine_bit_exact(p):
    a = run_scheme(SignedImage(p), SCHEMES["fs1"])
    b = run_floyd_steinberg_direct(SignedImage(p))
    np.testing.assert_array_equal(a.q.values, b.q.values)
    np.testing.assert_array_equal(a.v_final, b.v_final)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 10)), elements=st.floats(-1, 1)),
    st.sampled_from(FIRST),
    st.sampled_from(["raster", "serpentine"]),
)
def test_first_order_state_bound(p, name, scan):
    assert run_scheme(SignedImage(p), SCHEMES[name], scan).v_max_abs <= 1 + 1e-12


@pytest.mark.parametrize("name", sorted(SCHEMES))
@pytest.mark.parametrize("scan", ["raster", "serpentine"])
@pytest.mark.parametrize("value", [-1.0, 1.0])
def test_saturated_fixed_points(name, scan, value):
    p = np.full((6, 7), value)
    res = run_scheme(SignedImage(p), SCHEMES[name], scan)
    np.testing.assert_array_equal(res.q.values, p)
    assert not np.any(res.v_final)


def test_rescaled_white_under_second_order():
    # the first pixel leaves v = -0.03 and the order-2 filter carries it along
    p = rescale(SignedImage(np.ones((8, 8))))
    res = run_scheme(p, SCHEMES["fs2-33"])
    assert res.v_max_abs > 0
    q, v = reference_run(p.values, SCHEMES["fs2-33"])
    np.testing.assert_array_equal(res.q.values, q)


def test_rescale_validation():
    with pytest.raises(ValueError):
        rescale(SignedImage(np.zeros((1, 1))), 0.0)
    np.testing.assert_allclose(rescale(SignedImage(np.ones((1, 2))), 0.1).values, [[0.9, 0.9]])


def test_unknown_scan():
    with pytest.raises(ValueError):
        run_scheme(SignedImage(np.zeros((2, 2))), SCHEMES["fs1"], "spiral")


@pytest.mark.parametrize("c", [-0.5, 0.0, 0.5])
def test_mean_preserved_on_constants(c):
    res = run_scheme(SignedImage(np.full((64, 64), c)), SCHEMES["fs1"])
    assert abs(res.q.values.mean() - c) <= 4 / 64
