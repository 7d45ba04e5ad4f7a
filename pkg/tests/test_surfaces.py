import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from plasmonbem.errors import ConfigError
from plasmonbem.meshing import triangulate
from plasmonbem.surfaces import (
    SQRT2,
    build_surface,
    curvature_at,
    symbol_positivity,
    willmore_energy,
)


def test_chart_reference_points():
    torus = build_surface("clifford_torus")
    assert_allclose(torus.position(0, 0), [SQRT2 + 1, 0, 0], atol=1e-15)
    sphere = build_surface("sphere", radius=1.0)
    assert_allclose(sphere.position(0, 0), [0, 0, 1], atol=1e-15)
    spheroid = build_surface("oblate_spheroid")
    p = spheroid.position(math.pi / 2, 0)
    assert_allclose(p, [SQRT2, 0, 0], atol=1e-15)
    x, y, z = p
    assert_allclose(x**2 / 2 + y**2 / 2 + z**2, 1.0, rtol=1e-14)


def test_invalid_surface_parameters():
    with pytest.raises(ConfigError):
        build_surface("sphere", radius=-2.0)
    with pytest.raises(ConfigError):
        build_surface("sphere", radius=0.0)
    with pytest.raises(ConfigError):
        build_surface("cube")
    with pytest.raises(ConfigError):
        build_surface("clifford_torus", radius=1.0)


@pytest.mark.parametrize("kind", ["sphere", "oblate_spheroid", "clifford_torus"])
def test_unit_normals(kind):
    surface = build_surface(kind)
    rng = np.random.default_rng(2)
    u = rng.uniform(0.05, surface.u_max - 0.05, size=50)
    v = rng.uniform(0, 2 * math.pi, size=50)
    n = surface.unit_normal(u, v)
    assert_allclose(np.linalg.norm(n, axis=-1), 1.0, rtol=1e-13)
    # outward: moving along the normal leaves the solid
    p = surface.position(u, v)
    assert not surface.contains(p + 1e-3 * n).any()
    assert surface.contains(p - 1e-3 * n).all()


def test_sphere_curvature_constant():
    sphere = build_surface("sphere")
    sample = curvature_at(sphere, 0.7, 1.3)
    assert_allclose(sample.kappa, 1.0, rtol=1e-12)
    assert_allclose(sample.mean, 1.0, rtol=1e-12)
    big = build_surface("sphere", radius=2.0)
    sample = curvature_at(big, 1.1, 0.4)
    assert_allclose(sample.kappa, 0.25, rtol=1e-12)
    assert_allclose(sample.mean, 0.5, rtol=1e-12)


def test_torus_curvature_signs():
    torus = build_surface("clifford_torus")
    inner = curvature_at(torus, math.pi, 0.3)
    # standard torus curvature cos(u)/(r (R + r cos u))
    assert_allclose(inner.kappa, -1.0 / (SQRT2 - 1.0), rtol=1e-12)
    assert inner.kappa < 0
    outer = curvature_at(torus, 0.0, 1.1)
    assert_allclose(outer.kappa, 1.0 / (SQRT2 + 1.0), rtol=1e-12)
    assert outer.kappa > 0


@pytest.mark.parametrize("kind", ["sphere", "oblate_spheroid", "clifford_torus"])
def test_curvature_invariants_and_fd_oracle(kind):
    surface = build_surface(kind)
    rng = np.random.default_rng(9)
    u = rng.uniform(0.1, surface.u_max - 0.1, size=20)
    v = rng.uniform(0.0, 2 * math.pi, size=20)
    sample = curvature_at(surface, u, v)
    det = sample.g11 * sample.g22 - sample.g12**2
    assert np.all(det > 0)
    assert np.all(sample.mean**2 >= sample.kappa - 1e-12)
    # second fundamental form against centered finite differences of the chart
    h = 1e-4
    n = -surface.unit_normal(u, v)  # curvature convention: inward normal
    fd_uu = (surface.position(u + h, v) - 2 * surface.position(u, v)
             + surface.position(u - h, v)) / h**2
    fd_vv = (surface.position(u, v + h) - 2 * surface.position(u, v)
             + surface.position(u, v - h)) / h**2
    fd_uv = (surface.position(u + h, v + h) - surface.position(u + h, v - h)
             - surface.position(u - h, v + h) + surface.position(u - h, v - h)
             ) / (4 * h**2)
    scale = np.abs(sample.L) + np.abs(sample.M) + np.abs(sample.N)
    assert np.all(np.abs(np.sum(fd_uu * n, -1) - sample.L) < 1e-4 * scale)
    assert np.all(np.abs(np.sum(fd_uv * n, -1) - sample.M) < 1e-4 * scale)
    assert np.all(np.abs(np.sum(fd_vv * n, -1) - sample.N) < 1e-4 * scale)


def test_willmore_energy_sphere():
    sphere = build_surface("sphere")
    mesh = triangulate(sphere, 32, 64)
    assert abs(willmore_energy(sphere, mesh) / (4 * math.pi) - 1) < 0.01
    # scale invariance: H = 1/2 on radius 2, area 16 pi
    big = build_surface("sphere", radius=2.0)
    mesh2 = triangulate(big, 32, 64)
    assert abs(willmore_energy(big, mesh2) / (4 * math.pi) - 1) < 0.01


def test_willmore_energy_torus_against_quadrature_oracle():
    torus = build_surface("clifford_torus")
    mesh = triangulate(torus, 40, 30)
    w = willmore_energy(torus, mesh)
    # independent high-resolution quadrature of the closed-form integrand
    # H^2 dS = (R + 2 cos u)^2 / (4 (R + cos u)) du dv, R = sqrt(2)
    integrand = lambda u: (SQRT2 + 2 * math.cos(u)) ** 2 / (4 * (SQRT2 + math.cos(u)))
    oracle = 2 * math.pi * quad(integrand, 0, 2 * math.pi, epsabs=1e-12)[0]
    assert_allclose(oracle, 2 * math.pi**2, rtol=1e-10)
    assert abs(w / oracle - 1) < 0.01


def test_symbol_positivity_verdicts():
    for kind, convex in [
        ("sphere", True),
        ("oblate_spheroid", True),
        ("clifford_torus", False),
    ]:
        surface = build_surface(kind)
        mesh = triangulate(surface, 16, 16)
        report = symbol_positivity(surface, mesh)
        assert report.strictly_convex is convex
        if kind == "sphere":
            assert_allclose(report.min_kappa, 1.0, rtol=1e-10)
        if kind == "clifford_torus":
            assert report.min_kappa < 0
