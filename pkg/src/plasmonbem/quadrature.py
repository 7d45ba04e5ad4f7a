"""Quadrature rules on the reference triangle.

The reference triangle is {(xi, eta) : xi >= 0, eta >= 0, xi + eta <= 1}
with area 1/2.  Rule weights sum to the reference area, so an integral
over a physical flat triangle T with vertices (v0, v1, v2) is

    int_T f dS  ~=  2 * area(T) * sum_k w_k * f(v0 + xi_k*(v1-v0) + eta_k*(v2-v0)).

All rules below have strictly positive weights.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_SQRT15 = math.sqrt(15.0)


def _symmetric_orbit(a, b):
    """The three permutations (barycentric a,b,b) as (xi, eta) pairs."""
    return [(b, b), (a, b), (b, a)]


# Nodes and weights (weights normalized to sum to 1) per polynomial degree.
_RULES = {
    1: ([(1.0 / 3.0, 1.0 / 3.0)], [1.0]),
    2: (_symmetric_orbit(2.0 / 3.0, 1.0 / 6.0), [1.0 / 3.0] * 3),
    4: (
        _symmetric_orbit(0.108103018168070, 0.445948490915965)
        + _symmetric_orbit(0.816847572980459, 0.091576213509771),
        [0.223381589678011] * 3 + [0.109951743655322] * 3,
    ),
    5: (
        [(1.0 / 3.0, 1.0 / 3.0)]
        + _symmetric_orbit((9.0 + 2.0 * _SQRT15) / 21.0, (6.0 - _SQRT15) / 21.0)
        + _symmetric_orbit((9.0 - 2.0 * _SQRT15) / 21.0, (6.0 + _SQRT15) / 21.0),
        [9.0 / 40.0]
        + [(155.0 - _SQRT15) / 1200.0] * 3
        + [(155.0 + _SQRT15) / 1200.0] * 3,
    ),
}


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on the reference triangle; exact to ``degree``."""

    degree: int
    nodes: np.ndarray   # (q, 2) reference coordinates (xi, eta)
    weights: np.ndarray  # (q,) positive, summing to the reference area 1/2

    def __len__(self):
        return len(self.weights)


def triangle_rule(degree=5):
    """Return a symmetric positive-weight rule exact to ``degree``.

    Available degrees: 1, 2, 4, 5.  Degree 5 (7 points) is the assembly
    default.
    """
    if degree not in _RULES:
        raise ConfigError(
            f"no triangle rule of degree {degree}; available: {sorted(_RULES)}"
        )
    nodes, weights = _RULES[degree]
    return QuadratureRule(
        degree=degree,
        nodes=np.array(nodes, dtype=float),
        weights=0.5 * np.array(weights, dtype=float),
    )


def reference_monomial_integral(a, b):
    """Exact value of int xi^a eta^b over the reference triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def physical_points(rule, v0, v1, v2):
    """Map rule nodes onto the flat triangle (v0, v1, v2).

    Vertices may carry leading batch dimensions (..., 3); the result has
    shape (..., q, 3) and pairs with weights ``2 * area * rule.weights``.
    """
    xi = rule.nodes[:, 0]
    eta = rule.nodes[:, 1]
    v0 = np.asarray(v0, dtype=float)[..., None, :]
    e1 = np.asarray(v1, dtype=float)[..., None, :] - v0
    e2 = np.asarray(v2, dtype=float)[..., None, :] - v0
    return v0 + xi[:, None] * e1 + eta[:, None] * e2
