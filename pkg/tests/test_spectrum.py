import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from plasmonbem.errors import ConfigError, NumericalError
from plasmonbem.meshing import triangulate
from plasmonbem.spectrum import (
    Spectrum,
    almost_sure_fraction,
    solve_spectrum,
    weyl_constant,
    weyl_fit,
)
from plasmonbem.surfaces import build_surface


def test_sphere_spectrum_structure(sphere_small):
    lam = sphere_small.spectrum.lambdas
    assert abs(lam[0] - 0.5) < 0.01
    assert np.all(np.abs(lam[1:]) < 0.5)
    # n=1 cluster of three near 1/6
    assert_allclose(lam[1:4], 1 / 6, rtol=0.04)
    # clusters separated: gap to the n=2 cluster
    assert lam[3] / lam[4] > 1.3


def test_orthonormality_in_weighted_gram(sphere_small):
    spec = sphere_small.spectrum
    gram = spec.vectors.T @ spec.gram_matrix() @ spec.vectors
    assert np.abs(gram - np.eye(spec.n)).max() < 1e-8


def test_eigen_residual_bounded_by_asymmetry(sphere_small):
    # K v = lambda v holds up to the discarded antisymmetric part, measured
    # in the B = sym(WS) norm
    spec = sphere_small.spectrum
    b_mat = spec.gram_matrix()
    chol = np.linalg.cholesky(b_mat)
    resid = sphere_small.k_matrix @ spec.vectors - spec.vectors * spec.lambdas
    resid_b = np.linalg.norm(chol.T @ resid, axis=0)  # ||r||_B per column
    w = spec.weights
    wsk = (w[:, None] * sphere_small.s_matrix) @ sphere_small.k_matrix
    asym = 0.5 * (wsk - wsk.T)
    white = np.linalg.solve(chol, np.linalg.solve(chol, asym).T).T
    bound = np.linalg.norm(white, "fro")
    assert np.max(resid_b) <= max(1e-6, bound)


def test_sorting_is_deterministic_and_by_descending_abs(sphere_small, torus_small):
    for run in (sphere_small, torus_small):
        lam = run.spectrum.lambdas
        assert np.all(np.diff(np.abs(lam)) <= 1e-12)
        again = solve_spectrum(run.s_matrix, run.k_matrix, run.weights)
        assert np.array_equal(again.lambdas, lam)
        assert np.array_equal(again.vectors, run.spectrum.vectors)


def test_torus_has_large_negative_eigenvalues(torus_small):
    lam = torus_small.spectrum.lambdas
    neg = lam[lam < 0]
    assert len(neg) > 10
    assert neg.min() < -0.15  # non-convexity shows up at the top of the spectrum


def test_signed_rank_convention(torus_small):
    spec = torus_small.spectrum
    rank = spec.signed_rank()
    pos = spec.positive_order()
    neg = spec.negative_order()
    assert rank[pos[0]] == 0  # the 1/2-eigenvalue
    assert rank[neg[0]] == -1  # paper's "-1st" negative
    # ranks are unique within each branch
    assert len(set(rank[pos])) == len(pos)
    assert len(set(rank[neg])) == len(neg)


def test_solver_rejects_non_spd_gram():
    s_mat = -np.eye(6)
    k_mat = np.eye(6)
    with pytest.raises(NumericalError) as err:
        solve_spectrum(s_mat, k_mat, np.ones(6))
    assert "smallest eigenvalue" in str(err.value)


def _synthetic_ball_spectrum(n_max):
    lam = [0.5]
    for n in range(1, n_max + 1):
        lam.extend([1.0 / (2 * (2 * n + 1))] * (2 * n + 1))
    return np.array(lam)


def test_weyl_analytic_ball_sequence():
    # closed-form index arithmetic: lambda at cumulative index j = n^2 gives
    # lambda * sqrt(j) -> 1/4, without any BEM input
    lam = _synthetic_ball_spectrum(60)
    spec = Spectrum(
        lambdas=lam,
        vectors=np.eye(len(lam)),
        weights=np.ones(len(lam)),
        s_matrix=np.eye(len(lam)),
    )
    sphere = build_surface("sphere")
    mesh = triangulate(sphere, 16, 32)
    fit = weyl_fit(spec, sphere, mesh, window=(0.3, 0.9))
    assert abs(fit.c_estimate - 0.25) < 0.005
    # deep-tail semantics via tail_fraction behave the same on exact data
    fit_tail = weyl_fit(spec, sphere, mesh, tail_fraction=0.7)
    assert abs(fit_tail.c_estimate - 0.25) < 0.005


def test_weyl_constants():
    assert_allclose(weyl_constant(4 * math.pi, 2), 0.25, rtol=1e-14)
    assert_allclose(
        weyl_constant(2 * math.pi**2, 0), math.sqrt(3 * math.pi / 64), rtol=1e-14
    )


def test_weyl_requires_enough_eigenvalues():
    lam = _synthetic_ball_spectrum(5)  # only 36 eigenvalues
    spec = Spectrum(
        lambdas=lam,
        vectors=np.eye(len(lam)),
        weights=np.ones(len(lam)),
        s_matrix=np.eye(len(lam)),
    )
    sphere = build_surface("sphere")
    mesh = triangulate(sphere, 8, 8)
    with pytest.raises(ConfigError):
        weyl_fit(spec, sphere, mesh)


def test_almost_sure_fraction_examples():
    j = np.arange(1, 101, dtype=float)
    assert almost_sure_fraction(1.0 / j, 1.0, 0.5, 100) == 0.0
    assert almost_sure_fraction(np.ones(100), 0.5, 0.5, 100) == 1.0
    assert almost_sure_fraction(j**-0.5, 0.9, 0.5, 77) == 1.0


def test_almost_sure_fraction_validation():
    with pytest.raises(ConfigError):
        almost_sure_fraction(np.ones(10), 1.0, 0.5, 11)
    with pytest.raises(ConfigError):
        almost_sure_fraction(np.ones(10), -1.0, 0.5, 5)
    with pytest.raises(ConfigError):
        almost_sure_fraction(np.ones(10), 1.0, -0.5, 5)


def test_almost_sure_fraction_vanishes_for_square_summable():
    # square-summable sequences decay almost surely at rate 1/2: the counted
    # fraction must decay to zero as delta grows at fixed large N
    rng = np.random.default_rng(12)
    a = rng.normal(size=5000) / np.arange(1, 5001) ** 0.6
    fractions = [
        almost_sure_fraction(a, delta, 0.5, 5000) for delta in (0.1, 0.5, 2.0, 8.0)
    ]
    assert all(f1 >= f2 for f1, f2 in zip(fractions, fractions[1:]))
    assert fractions[-1] < 0.01
