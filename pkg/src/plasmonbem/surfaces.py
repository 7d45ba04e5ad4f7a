"""Parametric surfaces: charts, curvature, Willmore energy, convexity check.

Each surface is a surface of revolution about the z-axis, charted by
(u, v) with v the azimuth.  Charts provide analytic first and second
derivatives so the differential geometry downstream carries no
finite-difference error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SQRT2 = math.sqrt(2.0)


class ParametricSurface:
    """Base chart (u, v) -> R^3 with analytic derivatives.

    Attributes
    ----------
    kind : str
        One of "sphere", "oblate_spheroid", "clifford_torus".
    periodic_u, periodic_v : bool
        Whether the chart direction wraps around.
    u_max, v_max : float
        Chart domain is [0, u_max] x [0, v_max].
    orientation : int
        Sign s such that s * (sigma_u x sigma_v) points out of the solid.
    """

    kind = None
    periodic_u = False
    periodic_v = True
    u_max = 2.0 * math.pi
    v_max = 2.0 * math.pi
    orientation = 1

    def position(self, u, v):
        raise NotImplementedError

    def derivatives(self, u, v):
        """Return (d_u, d_v, d_uu, d_uv, d_vv), each shaped like (..., 3)."""
        raise NotImplementedError

    def profile(self, u):
        """Meridian curve (rho(u), z(u)) in the half-plane {azimuth 0}."""
        raise NotImplementedError

    def contains(self, points):
        """True for points strictly inside the solid bounded by the surface."""
        raise NotImplementedError

    def unit_normal(self, u, v):
        """Outward unit normal at chart point (u, v)."""
        du, dv = self.derivatives(u, v)[:2]
        n = np.cross(du, dv)
        n *= self.orientation
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def area_element(self, u):
        """|sigma_u x sigma_v| at azimuth 0 (v-independent by symmetry)."""
        du, dv = self.derivatives(u, np.zeros_like(np.asarray(u, dtype=float)))[:2]
        return np.linalg.norm(np.cross(du, dv), axis=-1)


class Sphere(ParametricSurface):
    """Sphere of radius r0 centered at the origin; u is the polar angle."""

    kind = "sphere"
    u_max = math.pi
    orientation = 1

    def __init__(self, radius=1.0):
        if radius <= 0:
            raise ConfigError(f"sphere radius must be positive, got {radius}")
        self.radius = float(radius)

    def position(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.radius
        return np.stack(
            [r * np.sin(u) * np.cos(v), r * np.sin(u) * np.sin(v), r * np.cos(u)],
            axis=-1,
        )

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.radius
        su, cu, sv, cv = np.sin(u), np.cos(u), np.sin(v), np.cos(v)
        zero = np.zeros_like(u)
        d_u = np.stack([r * cu * cv, r * cu * sv, -r * su], axis=-1)
        d_v = np.stack([-r * su * sv, r * su * cv, zero], axis=-1)
        d_uu = np.stack([-r * su * cv, -r * su * sv, -r * cu], axis=-1)
        d_uv = np.stack([-r * cu * sv, r * cu * cv, zero], axis=-1)
        d_vv = np.stack([-r * su * cv, -r * su * sv, zero], axis=-1)
        return d_u, d_v, d_uu, d_uv, d_vv

    def profile(self, u):
        u = np.asarray(u, float)
        return self.radius * np.sin(u), self.radius * np.cos(u)

    def contains(self, points):
        points = np.asarray(points, float)
        return np.linalg.norm(points, axis=-1) < self.radius

    def analytic_area(self):
        return 4.0 * math.pi * self.radius**2


class OblateSpheroid(ParametricSurface):
    """The spheroid x^2/2 + y^2/2 + z^2 = 1 (semi-axes sqrt2, sqrt2, 1)."""

    kind = "oblate_spheroid"
    u_max = math.pi
    orientation = 1

    def __init__(self):
        self.a = SQRT2
        self.c = 1.0

    def position(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        a, c = self.a, self.c
        return np.stack(
            [a * np.sin(u) * np.cos(v), a * np.sin(u) * np.sin(v), c * np.cos(u)],
            axis=-1,
        )

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        a, c = self.a, self.c
        su, cu, sv, cv = np.sin(u), np.cos(u), np.sin(v), np.cos(v)
        zero = np.zeros_like(u)
        d_u = np.stack([a * cu * cv, a * cu * sv, -c * su], axis=-1)
        d_v = np.stack([-a * su * sv, a * su * cv, zero], axis=-1)
        d_uu = np.stack([-a * su * cv, -a * su * sv, -c * cu], axis=-1)
        d_uv = np.stack([-a * cu * sv, a * cu * cv, zero], axis=-1)
        d_vv = np.stack([-a * su * cv, -a * su * sv, zero], axis=-1)
        return d_u, d_v, d_uu, d_uv, d_vv

    def profile(self, u):
        u = np.asarray(u, float)
        return self.a * np.sin(u), self.c * np.cos(u)

    def contains(self, points):
        points = np.asarray(points, float)
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        return x**2 / 2.0 + y**2 / 2.0 + z**2 < 1.0

    def analytic_area(self):
        # Closed form for an oblate spheroid with a > c.
        e = math.sqrt(1.0 - (self.c / self.a) ** 2)
        return 2.0 * math.pi * self.a**2 * (1.0 + (1.0 - e**2) / e * math.atanh(e))


class CliffordTorus(ParametricSurface):
    """Torus ((sqrt2 + cos u) cos v, (sqrt2 + cos u) sin v, sin u)."""

    kind = "clifford_torus"
    periodic_u = True
    orientation = -1  # sigma_u x sigma_v points into the tube for this chart

    def __init__(self):
        self.major = SQRT2
        self.minor = 1.0

    def position(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        w = self.major + self.minor * np.cos(u)
        return np.stack(
            [w * np.cos(v), w * np.sin(v), self.minor * np.sin(u)], axis=-1
        )

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        r = self.minor
        su, cu, sv, cv = np.sin(u), np.cos(u), np.sin(v), np.cos(v)
        w = self.major + r * cu
        zero = np.zeros_like(u)
        d_u = np.stack([-r * su * cv, -r * su * sv, r * cu], axis=-1)
        d_v = np.stack([-w * sv, w * cv, zero], axis=-1)
        d_uu = np.stack([-r * cu * cv, -r * cu * sv, -r * su], axis=-1)
        d_uv = np.stack([r * su * sv, -r * su * cv, zero], axis=-1)
        d_vv = np.stack([-w * cv, -w * sv, zero], axis=-1)
        return d_u, d_v, d_uu, d_uv, d_vv

    def profile(self, u):
        u = np.asarray(u, float)
        return self.major + self.minor * np.cos(u), self.minor * np.sin(u)

    def contains(self, points):
        points = np.asarray(points, float)
        rho = np.hypot(points[..., 0], points[..., 1])
        return (rho - self.major) ** 2 + points[..., 2] ** 2 < self.minor**2

    def analytic_area(self):
        return 4.0 * math.pi**2 * self.major * self.minor


_KINDS = {
    "sphere": Sphere,
    "oblate_spheroid": OblateSpheroid,
    "clifford_torus": CliffordTorus,
}


def build_surface(kind, **params):
    """Construct a surface by kind name.

    Only the sphere takes a shape parameter (``radius``); the spheroid and
    torus geometries are fixed.
    """
    if kind not in _KINDS:
        raise ConfigError(f"unknown surface kind {kind!r}; choices: {sorted(_KINDS)}")
    cls = _KINDS[kind]
    if kind == "sphere":
        radius = params.pop("radius", 1.0)
        if params:
            _reject(params)
        return cls(radius=radius)
    if params:
        _reject(params)
    return cls()


def _reject(params):
    raise ConfigError(f"unexpected surface parameters: {sorted(params)}")


@dataclass(frozen=True)
class CurvatureSample:
    """First/second fundamental form coefficients and derived curvatures."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    kappa: np.ndarray
    mean: np.ndarray


def curvature_at(surface, u, v):
    """Curvature data at chart points (broadcastable u, v arrays).

    The second fundamental form is taken against the inward normal, so a
    sphere of radius r has mean curvature +1/r and kappa = +1/r^2.
    """
    d_u, d_v, d_uu, d_uv, d_vv = surface.derivatives(u, v)
    g11 = np.sum(d_u * d_u, axis=-1)
    g12 = np.sum(d_u * d_v, axis=-1)
    g22 = np.sum(d_v * d_v, axis=-1)
    n = surface.unit_normal(u, v)
    big_l = -np.sum(d_uu * n, axis=-1)
    big_m = -np.sum(d_uv * n, axis=-1)
    big_n = -np.sum(d_vv * n, axis=-1)
    det = g11 * g22 - g12**2
    kappa = (big_l * big_n - big_m**2) / det
    mean = (g22 * big_l - 2.0 * g12 * big_m + g11 * big_n) / (2.0 * det)
    return CurvatureSample(g11, g12, g22, big_l, big_m, big_n, kappa, mean)


def willmore_energy(surface, mesh):
    """int H^2 dS by panel-centroid quadrature of the analytic curvature."""
    sample = curvature_at(surface, mesh.panel_params[:, 0], mesh.panel_params[:, 1])
    return float(np.sum(sample.mean**2 * mesh.areas))


@dataclass(frozen=True)
class SymbolReport:
    """Pointwise sign check of the Gaussian curvature over panel centroids."""

    min_kappa: float
    argmin_uv: tuple
    strictly_convex: bool


def symbol_positivity(surface, mesh):
    """Minimum Gaussian curvature over panel centroids and convexity verdict.

    For the closed genus-0 surfaces here, strict convexity is equivalent to
    kappa > 0 everywhere; the torus always fails at its inner equator.
    """
    sample = curvature_at(surface, mesh.panel_params[:, 0], mesh.panel_params[:, 1])
    i = int(np.argmin(sample.kappa))
    min_kappa = float(sample.kappa[i])
    return SymbolReport(
        min_kappa=min_kappa,
        argmin_uv=(float(mesh.panel_params[i, 0]), float(mesh.panel_params[i, 1])),
        strictly_convex=min_kappa > 0.0,
    )
