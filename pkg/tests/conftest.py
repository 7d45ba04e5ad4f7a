"""Shared fixtures.

The acceptance criteria run on production-size meshes (N ~ 2000-4100);
their operator assembly and eigensolves are shared session-wide.  Setting
PLASMONBEM_TEST_CACHE=<dir> additionally caches those arrays on disk
between pytest invocations (developer convenience; off by default).
"""

import os

import numpy as np
import pytest

from plasmonbem.assembly import assemble_operator_pair
from plasmonbem.meshing import triangulate
from plasmonbem.spectrum import solve_spectrum
from plasmonbem.surfaces import build_surface


def _cached_arrays(tag, builder):
    cache_dir = os.environ.get("PLASMONBEM_TEST_CACHE")
    if not cache_dir:
        return builder()
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"{tag}.npz")
    if os.path.exists(path):
        data = np.load(path)
        return {k: data[k] for k in data.files}
    arrays = builder()
    np.savez(path, **arrays)
    return arrays


def _operator_arrays(kind, n_u, n_v):
    def build():
        surface = build_surface(kind)
        mesh = triangulate(surface, n_u, n_v)
        pair = assemble_operator_pair(mesh)
        return {"s": pair.s_matrix, "k": pair.k_matrix, "w": pair.weights}

    return _cached_arrays(f"{kind}_{n_u}x{n_v}", build)


class BemRun:
    """Mesh + operators + spectrum bundle for one surface."""

    def __init__(self, kind, n_u, n_v, solve=True):
        self.surface = build_surface(kind)
        self.mesh = triangulate(self.surface, n_u, n_v)
        arrays = _operator_arrays(kind, n_u, n_v)
        self.s_matrix = arrays["s"]
        self.k_matrix = arrays["k"]
        self.weights = arrays["w"]
        self.spectrum = (
            solve_spectrum(self.s_matrix, self.k_matrix, self.weights)
            if solve
            else None
        )


@pytest.fixture(scope="session")
def sphere_run():
    """Unit sphere at the acceptance resolution (N = 2000)."""
    return BemRun("sphere", 25, 40)


@pytest.fixture(scope="session")
def sphere_refined_pair():
    """Finer sphere operators (assembly only) for refinement checks."""
    return BemRun("sphere", 30, 48, solve=False)


@pytest.fixture(scope="session")
def torus_run():
    """Clifford torus production run (N = 4104)."""
    return BemRun("clifford_torus", 54, 38)


@pytest.fixture(scope="session")
def torus_coarse_pair():
    """Torus operators near N = 2000 (assembly only)."""
    return BemRun("clifford_torus", 38, 26, solve=False)


@pytest.fixture(scope="session")
def spheroid_run():
    """Oblate spheroid at resolution matched to the torus run (N = 4104)."""
    return BemRun("oblate_spheroid", 27, 76)


@pytest.fixture(scope="session")
def sphere_small():
    """Small sphere run for unit tests (N = 1024)."""
    return BemRun("sphere", 16, 32)


@pytest.fixture(scope="session")
def torus_small():
    """Small torus run for unit tests (N = 560)."""
    return BemRun("clifford_torus", 20, 14)
