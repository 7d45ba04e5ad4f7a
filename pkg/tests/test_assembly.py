import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from plasmonbem.assembly import (
    assemble_np_adjoint,
    assemble_operator_pair,
    assemble_single_layer,
    calderon_residual,
    check_positive_definite,
    np_adjoint_from_double_layer,
    triangle_self_potential,
)
from plasmonbem.errors import ConfigError, NumericalError
from plasmonbem.meshing import triangulate
from plasmonbem.quadrature import triangle_rule
from plasmonbem.surfaces import build_surface


def _wedge_oracle(tri, p):
    """1-D polar quadrature of the in-plane self integral (independent path)."""
    total = 0.0
    for e in range(3):
        a = np.asarray(tri[e], float)
        b = np.asarray(tri[(e + 1) % 3], float)
        c = np.linalg.norm(b - a)
        unit = (b - a) / c
        t0 = -np.dot(a - p, unit)
        h = np.linalg.norm(a - p + t0 * unit)
        phi1 = math.atan2(-t0, h)
        phi2 = math.atan2(c - t0, h)
        total += quad(lambda t: h / math.cos(t), phi1, phi2, epsabs=1e-13)[0]
    return total


@pytest.mark.parametrize(
    "tri",
    [
        [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
        [[0, 0, 0], [2, 0, 0], [0.3, 1.4, 0]],
        [[1, 1, 1], [2, 1.2, 0.6], [1.1, 2.2, 1.4]],
    ],
)
def test_triangle_self_potential_vs_polar_oracle(tri):
    tri = np.asarray(tri, float)
    p = tri.mean(axis=0)
    assert_allclose(triangle_self_potential(tri, p), _wedge_oracle(tri, p), rtol=1e-12)


def test_self_potential_equilateral_closed_form():
    # side L, centroid: I = sqrt(3) L log(2 + sqrt(3))
    L = 1.7
    tri = np.array([[0, 0, 0], [L, 0, 0], [L / 2, L * math.sqrt(3) / 2, 0]])
    expect = math.sqrt(3) * L * math.log(2 + math.sqrt(3))
    assert_allclose(triangle_self_potential(tri, tri.mean(axis=0)), expect, rtol=1e-13)


def test_low_order_rule_rejected():
    sphere = build_surface("sphere")
    mesh = triangulate(sphere, 6, 8)
    with pytest.raises(ConfigError):
        assemble_single_layer(mesh, triangle_rule(1))


def test_single_layer_uniform_density(sphere_small):
    # Newton potential of the uniform unit sphere equals the radius on-surface
    s_mat = sphere_small.s_matrix
    on_surface = s_mat @ np.ones(sphere_small.mesh.n_panels)
    assert np.all(np.abs(on_surface - 1.0) < 0.02)


def test_single_layer_weighted_symmetry(sphere_small):
    # the Galerkin-weighted matrix W S is the symmetric object for
    # collocation with unequal panels (entries scale with the source area)
    s_mat = sphere_small.s_matrix
    w = sphere_small.weights
    ws = w[:, None] * s_mat
    assert np.abs(ws - ws.T).max() / np.abs(ws).max() < 1e-3


def test_single_layer_positive_definite(sphere_small, torus_small):
    for run in (sphere_small, torus_small):
        sym = 0.5 * (run.s_matrix + run.s_matrix.T)
        assert np.linalg.eigvalsh(sym)[0] > 0
        check_positive_definite(run.s_matrix)  # must not raise


def test_check_positive_definite_reports_eigenvalue():
    bad = -np.eye(4)
    with pytest.raises(NumericalError) as err:
        check_positive_definite(bad)
    assert "smallest eigenvalue" in str(err.value)


def test_double_layer_row_sums(sphere_small, torus_small):
    for run in (sphere_small, torus_small):
        w = run.weights
        d_mat = (run.k_matrix.T * (w[None, :] / w[:, None]))
        assert_allclose(d_mat.sum(axis=1), 0.5, atol=1e-13)


def test_np_adjoint_weighted_transpose_relation(sphere_small):
    w = sphere_small.weights
    d_mat = (sphere_small.k_matrix.T * (w[None, :] / w[:, None]))
    rebuilt = np_adjoint_from_double_layer(d_mat, w)
    assert_allclose(rebuilt, sphere_small.k_matrix, rtol=1e-13, atol=1e-16)


def test_np_adjoint_constant_near_half_on_sphere(sphere_small):
    k_mat = sphere_small.k_matrix
    out = k_mat @ np.ones(len(k_mat))
    assert np.all(np.abs(out - 0.5) < 0.02)


def test_np_adjoint_degree_one_harmonic(sphere_run):
    # K* acts on Y_1 samples as multiplication by 1/6 on the unit sphere
    mesh = sphere_run.mesh
    y1 = mesh.centroids[:, 2]
    out = sphere_run.k_matrix @ y1
    w = sphere_run.weights
    err = math.sqrt(np.sum(w * (out - y1 / 6) ** 2) / np.sum(w * (y1 / 6) ** 2))
    assert err < 0.03


def test_calderon_residual_of_symmetrized_product_is_zero(sphere_small):
    prod = sphere_small.s_matrix @ sphere_small.k_matrix
    sym = 0.5 * (prod + prod.T)
    assert np.linalg.norm(sym - sym.T, "fro") == 0.0


def test_calderon_residual_decreases_under_refinement():
    sphere = build_surface("sphere")
    vals = []
    for dims in [(10, 16), (16, 32)]:
        mesh = triangulate(sphere, *dims)
        pair = assemble_operator_pair(mesh)
        vals.append(calderon_residual(pair.s_matrix, pair.k_matrix))
    assert vals[1] < vals[0]


def test_weighted_calderon_residual_small(sphere_small, torus_small):
    # in the panel-area pairing the symmetrization identity holds discretely
    for run in (sphere_small, torus_small):
        ws = run.weights[:, None] * run.s_matrix
        assert calderon_residual(ws, run.k_matrix) < 0.02


def test_assemble_np_adjoint_matches_pair(sphere_small):
    k_alone = assemble_np_adjoint(sphere_small.mesh)
    assert_allclose(k_alone, sphere_small.k_matrix, rtol=1e-12, atol=1e-15)
