"""Dense collocation assembly of the Laplace layer-potential operators.

Densities are piecewise constant per panel, collocated at panel centroids.
The single-layer diagonal uses the closed-form potential of a flat triangle
at an interior point; near-singular off-diagonal entries are integrated by
recursive 4-fold panel subdivision (a panel is "near" a target when the
target sits within two panel diameters).

Sign conventions: the double layer D_h is assembled with the kernel
<y - x, nu_y> / (4 pi |y - x|^3), so that the constant density maps to +1/2
on a closed surface and the sphere spectrum is positive; ``dlp_kernel``
returns the normal derivative of Gamma(x - .), which is its negative.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .quadrature import physical_points, triangle_rule

FOUR_PI = 4.0 * math.pi


def _separations(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("coincident evaluation and source points")
    return d, r


def gamma(x, y):
    """Fundamental solution 1 / (4 pi |x - y|); broadcasts over (..., 3)."""
    _, r = _separations(x, y)
    return 1.0 / (FOUR_PI * r)


def grad_gamma(x, y):
    """Gradient of gamma in its first argument: -(x - y) / (4 pi |x - y|^3)."""
    d, r = _separations(x, y)
    return -d / (FOUR_PI * r**3)[..., None]


def dlp_kernel(x, y, normal_y):
    """Normal derivative of Gamma(x - .) at y: (x - y).nu_y / (4 pi |x-y|^3)."""
    d, r = _separations(x, y)
    return np.sum(d * np.asarray(normal_y, dtype=float), axis=-1) / (FOUR_PI * r**3)


def triangle_self_potential(tri, point):
    """int_T dS / |y - p| for a flat triangle and an in-plane interior point.

    Closed form: split T into three wedges at p; each wedge integrates in
    polar coordinates to h * (asinh(s2/h) - asinh(s1/h)) with h the distance
    from p to the opposite edge line and s1, s2 the signed foot offsets of
    the edge endpoints.  Vectorized over leading dimensions of ``tri``
    (..., 3, 3) and ``point`` (..., 3).
    """
    tri = np.asarray(tri, dtype=float)
    point = np.asarray(point, dtype=float)
    total = np.zeros(tri.shape[:-2])
    for e in range(3):
        p0 = tri[..., e, :]
        p1 = tri[..., (e + 1) % 3, :]
        edge = p1 - p0
        c = np.linalg.norm(edge, axis=-1)
        unit = edge / np.where(c > 0, c, 1.0)[..., None]
        a = p0 - point
        t = -np.sum(a * unit, axis=-1)  # foot offset from p0 along the edge
        foot = a + t[..., None] * unit
        h = np.linalg.norm(foot, axis=-1)
        safe_h = np.where(h > 0, h, 1.0)
        wedge = safe_h * (np.arcsinh((c - t) / safe_h) - np.arcsinh(-t / safe_h))
        total = total + np.where(h > 1e-14 * np.maximum(c, 1.0), wedge, 0.0)
    return total


def _subdivide(tris):
    """Split each triangle into its four midpoint subtriangles."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=0,
    )


def integrate_panels_near(targets, tris, normals, rule, max_depth=3):
    """Integrate Gamma and <y-x, nu>/(4 pi r^3) over near panels.

    ``targets`` (M, 3) pairs elementwise with ``tris`` (M, 3, 3) and the
    per-panel unit normals (M, 3).  Subtriangles still within two of their
    own diameters of the target are split again, up to ``max_depth`` levels.
    Returns (slp, dlp) arrays of shape (M,).
    """
    m = len(tris)
    slp = np.zeros(m)
    dlp = np.zeros(m)
    idx = np.arange(m)
    work_tris = np.asarray(tris, dtype=float)
    for depth in range(max_depth + 1):
        cent = work_tris.mean(axis=1)
        edges = work_tris - np.roll(work_tris, 1, axis=1)
        diam = np.linalg.norm(edges, axis=2).max(axis=1)
        dist = np.linalg.norm(targets[idx] - cent, axis=1)
        split = (dist < 2.0 * diam) & (depth < max_depth)
        done = ~split
        if np.any(done):
            di, dt = idx[done], work_tris[done]
            pts = physical_points(rule, dt[:, 0], dt[:, 1], dt[:, 2])
            cross = np.cross(dt[:, 1] - dt[:, 0], dt[:, 2] - dt[:, 0])
            w = np.linalg.norm(cross, axis=1)[:, None] * rule.weights[None, :]
            d = targets[di][:, None, :] - pts
            r = np.linalg.norm(d, axis=2)
            slp_vals = np.sum(w / r, axis=1) / FOUR_PI
            num = -np.sum(d * normals[di][:, None, :], axis=2)
            dlp_vals = np.sum(w * num / r**3, axis=1) / FOUR_PI
            np.add.at(slp, di, slp_vals)
            np.add.at(dlp, di, dlp_vals)
        if not np.any(split):
            break
        # _subdivide concatenates the four child groups, so tile the indices
        idx = np.tile(idx[split], 4)
        work_tris = _subdivide(work_tris[split])
    return slp, dlp


@dataclass
class OperatorPair:
    """Discrete single layer S_h, NP adjoint K_h, and panel weights."""

    s_matrix: np.ndarray
    k_matrix: np.ndarray
    weights: np.ndarray
    mesh: object = None

    @property
    def n(self):
        return len(self.weights)


def _assemble(mesh, rule, want_slp, want_dlp, block=64, near_depth=4):
    n = mesh.n_panels
    q = len(rule)
    tri = mesh.vertices[mesh.faces]
    qp = physical_points(rule, tri[:, 0], tri[:, 1], tri[:, 2]).reshape(-1, 3)
    qw = ((2.0 * mesh.areas)[:, None] * rule.weights[None, :]).ravel()
    qp_sq = np.sum(qp**2, axis=1)
    cen = mesh.centroids
    cen_sq = np.sum(cen**2, axis=1)
    if want_dlp:
        # <y, nu_j> at quadrature points, and nu as a matrix for <x, nu_j>
        qp_dot_n = np.sum(
            qp.reshape(n, q, 3) * mesh.normals[:, None, :], axis=2
        ).ravel()
    s_mat = np.empty((n, n)) if want_slp else None
    d_mat = np.empty((n, n)) if want_dlp else None
    # near criterion is symmetric in (i, j) so corrections land on both sides
    near_radius = 2.0 * np.maximum(mesh.diameters[:, None], mesh.diameters[None, :])
    near_i, near_j = [], []
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        x = cen[lo:hi]
        x_sq = cen_sq[lo:hi]
        r2 = x_sq[:, None] + qp_sq[None, :] - 2.0 * (x @ qp.T)
        r = np.sqrt(np.maximum(r2, 0.0))
        r[r == 0.0] = np.inf  # self-panel centroid node; diagonal is analytic
        if want_slp:
            s_mat[lo:hi] = (qw[None, :] / r).reshape(-1, n, q).sum(axis=2) / FOUR_PI
        if want_dlp:
            num = qp_dot_n[None, :] - np.repeat(x @ mesh.normals.T, q, axis=1)
            d_mat[lo:hi] = (
                (qw[None, :] * num / r**3).reshape(-1, n, q).sum(axis=2) / FOUR_PI
            )
        cd2 = x_sq[:, None] + cen_sq[None, :] - 2.0 * (x @ cen.T)
        bi, bj = np.nonzero(cd2 < near_radius[lo:hi] ** 2)
        keep = (bi + lo) != bj
        near_i.append(bi[keep] + lo)
        near_j.append(bj[keep])
    near_i = np.concatenate(near_i)
    near_j = np.concatenate(near_j)
    if len(near_i):
        slp, dlp = integrate_panels_near(
            cen[near_i], tri[near_j], mesh.normals[near_j], rule,
            max_depth=near_depth,
        )
        if want_slp:
            s_mat[near_i, near_j] = slp
        if want_dlp:
            d_mat[near_i, near_j] = dlp
    if want_slp:
        s_mat[np.arange(n), np.arange(n)] = (
            triangle_self_potential(tri, cen) / FOUR_PI
        )
    if want_dlp:
        d_mat[np.arange(n), np.arange(n)] = 0.0
        diag = 0.5 - d_mat.sum(axis=1)
        if np.any(np.abs(diag) > 0.5):
            warnings.warn(
                "double-layer row-sum fix produced |diagonal| > 1/2; "
                "mesh too coarse near high curvature",
                stacklevel=3,
            )
        d_mat[np.arange(n), np.arange(n)] = diag
    return s_mat, d_mat


def _check_rule(rule):
    rule = rule if rule is not None else triangle_rule(5)
    if rule.degree < 2:
        raise ConfigError("assembly requires a quadrature rule of degree >= 2")
    return rule


def assemble_single_layer(mesh, rule=None):
    """Collocation matrix of the single-layer operator at panel centroids."""
    rule = _check_rule(rule)
    s_mat, _ = _assemble(mesh, rule, want_slp=True, want_dlp=False)
    return s_mat


def assemble_double_layer(mesh, rule=None):
    """Collocation matrix of the double layer, row sums forced to 1/2."""
    rule = _check_rule(rule)
    _, d_mat = _assemble(mesh, rule, want_slp=False, want_dlp=True)
    return d_mat


def np_adjoint_from_double_layer(d_mat, weights):
    """K_h = W^-1 D_h^T W, the discrete adjoint in the panel-area pairing."""
    w = np.asarray(weights, dtype=float)
    return d_mat.T * (w[None, :] / w[:, None])


def assemble_np_adjoint(mesh, rule=None):
    """Discrete K* via the weighted transpose of the double layer."""
    d_mat = assemble_double_layer(mesh, rule)
    return np_adjoint_from_double_layer(d_mat, mesh.areas)


def assemble_operator_pair(mesh, rule=None):
    """Assemble S_h and K_h in one pass (shared kernel evaluations)."""
    rule = _check_rule(rule)
    s_mat, d_mat = _assemble(mesh, rule, want_slp=True, want_dlp=True)
    return OperatorPair(
        s_matrix=s_mat,
        k_matrix=np_adjoint_from_double_layer(d_mat, mesh.areas),
        weights=mesh.areas.copy(),
        mesh=mesh,
    )


def check_positive_definite(s_mat, stage="assembly"):
    """Raise NumericalError naming the smallest eigenvalue if S_h is not SPD."""
    sym = 0.5 * (s_mat + s_mat.T)
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(sym)[0])
        raise NumericalError(
            stage, f"single-layer matrix not positive definite; "
            f"smallest eigenvalue {smallest:.3e}"
        ) from None


def calderon_residual(s_mat, k_mat):
    """Relative Frobenius defect of the symmetrization identity S K* = K S."""
    prod = s_mat @ k_mat
    return float(
        np.linalg.norm(prod - prod.T, "fro") / np.linalg.norm(prod, "fro")
    )
