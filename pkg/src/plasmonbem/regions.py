"""Planar cross-section regions for off-surface L2 norms.

Both regions live in the y=0 half-plane: X is the square (0, 2*sqrt2)^2
used with the torus, Y the rectangle (0, 3*sqrt2/2) x (0, 2) used with the
spheroid.  Grid cells whose centers come closer than the margin eps to the
solid (points inside the solid count as distance 0) are excluded.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .meshing import distance_to_solid

REGION_BOUNDS = {
    "X": (2.0 * math.sqrt(2.0), 2.0 * math.sqrt(2.0)),
    "Y": (3.0 * math.sqrt(2.0) / 2.0, 2.0),
}


@dataclass
class CrossSectionRegion:
    """Admissible cell centers of a uniform grid over a plane rectangle."""

    kind: str
    x_max: float
    z_max: float
    eps: float
    grid_n: int
    xs: np.ndarray        # (grid_n,) cell-center abscissas
    zs: np.ndarray        # (grid_n,) cell-center heights
    mask: np.ndarray      # (grid_n, grid_n) admissible cells, [ix, iz]
    points: np.ndarray    # (M, 2) admissible (x, z), x-major order
    cell_area: float


def point_admissible(surface, kind, eps, x, z):
    """Inclusion predicate for a single in-plane point (x, 0, z)."""
    x_max, z_max = REGION_BOUNDS[kind]
    if not (0.0 < x < x_max and 0.0 < z < z_max):
        return False
    return bool(distance_to_solid(surface, np.array([x, 0.0, z])) > eps)


def build_region(surface, kind, eps, grid_n):
    """Uniform grid over the region rectangle minus the eps-tube.

    ``eps`` > 0 is the exclusion margin (default upstream: the mesh's
    typical panel side); ``grid_n`` >= 16 cells per axis.
    """
    if kind not in REGION_BOUNDS:
        raise ConfigError(f"unknown region kind {kind!r}; choices: X, Y")
    if eps <= 0:
        raise ConfigError(f"region margin must be positive, got {eps}")
    if grid_n < 16:
        raise ConfigError(f"region grid must be >= 16, got {grid_n}")
    x_max, z_max = REGION_BOUNDS[kind]
    dx = x_max / grid_n
    dz = z_max / grid_n
    xs = (np.arange(grid_n) + 0.5) * dx
    zs = (np.arange(grid_n) + 0.5) * dz
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    pts3 = np.column_stack([gx.ravel(), np.zeros(gx.size), gz.ravel()])
    dist = distance_to_solid(surface, pts3)
    mask = (dist > eps).reshape(grid_n, grid_n)
    if not mask.any():
        raise ConfigError(f"region {kind} empty: margin eps={eps} excludes every cell")
    pts = np.column_stack([gx.ravel(), gz.ravel()])[mask.ravel()]
    return CrossSectionRegion(
        kind=kind,
        x_max=x_max,
        z_max=z_max,
        eps=float(eps),
        grid_n=int(grid_n),
        xs=xs,
        zs=zs,
        mask=mask,
        points=pts,
        cell_area=dx * dz,
    )


def write_region_csv(region, path):
    """CSV export: columns x, z, cell_area (one row per admissible cell)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("x,z,cell_area\n")
        for x, z in region.points:
            fh.write(f"{x:.17g},{z:.17g},{region.cell_area:.17g}\n")
