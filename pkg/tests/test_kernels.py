import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from plasmonbem.assembly import dlp_kernel, gamma, grad_gamma

FOUR_PI = 4.0 * math.pi

coord = st.floats(-10, 10, allow_nan=False)
vec3 = st.tuples(coord, coord, coord)


def test_gamma_values():
    assert_allclose(gamma([1, 0, 0], [0, 0, 0]), 1 / FOUR_PI, rtol=1e-15)
    assert_allclose(gamma([0, 2, 0], [0, 0, 0]), 1 / (8 * math.pi), rtol=1e-15)
    # homogeneity of degree -1 keeps tiny separations exact
    assert_allclose(gamma([1e-3, 0, 0], [0, 0, 0]), 1000 / FOUR_PI, rtol=1e-15)


def test_gamma_coincident_points_rejected():
    with pytest.raises(ValueError):
        gamma([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        grad_gamma([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        dlp_kernel([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])


@given(vec3, vec3, st.floats(1e-3, 1e3))
@settings(max_examples=50, deadline=None)
def test_gamma_homogeneity(x, y, s):
    x, y = np.asarray(x), np.asarray(y)
    if np.linalg.norm(x - y) < 1e-6:
        return
    assert_allclose(gamma(s * x, s * y), gamma(x, y) / s, rtol=1e-12)


def test_grad_gamma_values_and_antisymmetry():
    g = grad_gamma([1, 0, 0], [0, 0, 0])
    assert_allclose(g, [-1 / FOUR_PI, 0, 0], atol=1e-16)
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=3), rng.normal(size=3)
    assert_allclose(grad_gamma(x, y), -grad_gamma(y, x), rtol=1e-14)


def test_grad_gamma_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(10):
        x, y = rng.normal(size=3), rng.normal(size=3)
        if np.linalg.norm(x - y) < 0.3:
            continue
        h = 1e-6
        fd = np.array(
            [
                (gamma(x + h * e, y) - gamma(x - h * e, y)) / (2 * h)
                for e in np.eye(3)
            ]
        )
        assert_allclose(grad_gamma(x, y), fd, rtol=1e-6)


def test_dlp_kernel_values():
    # x - y perpendicular to the normal
    assert dlp_kernel([1, 0, 0], [0, 0, 0], [0, 0, 1]) == 0.0
    # x - y equal to the unit normal
    assert_allclose(dlp_kernel([0, 0, 1], [0, 0, 0], [0, 0, 1]), 1 / FOUR_PI)


def test_dlp_kernel_on_unit_sphere():
    # for x, y on the unit sphere, (x-y).y = -|x-y|^2/2 so the kernel
    # collapses to -1/(8 pi |x-y|)
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        y = rng.normal(size=3)
        y /= np.linalg.norm(y)
        r = np.linalg.norm(x - y)
        if r < 1e-3:
            continue
        assert_allclose(dlp_kernel(x, y, y), -1 / (8 * math.pi * r), rtol=1e-12)
    # antipodal points: |x-y| = 2
    assert_allclose(
        dlp_kernel([0, 0, 1.0], [0, 0, -1.0], [0, 0, -1.0]),
        -1 / (16 * math.pi),
        rtol=1e-14,
    )


def test_kernels_broadcast():
    x = np.zeros((4, 3))
    y = np.array([[1.0, 0, 0], [0, 2, 0], [0, 0, 4], [3, 0, 0]])
    vals = gamma(x, y)
    assert vals.shape == (4,)
    assert_allclose(vals, 1 / (FOUR_PI * np.array([1.0, 2, 4, 3])))
    grads = grad_gamma(x, y)
    assert grads.shape == (4, 3)
