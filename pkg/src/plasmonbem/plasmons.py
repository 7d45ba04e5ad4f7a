"""Off-surface evaluation of plasmons and localization diagnostics.

A plasmon is the single-layer potential of an NP eigenfunction; off the
surface the kernel is smooth, so panels integrate with the midpoint rule
and panels within two diameters of the target get recursive 4-fold
subdivision (midpoint per subtriangle).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import median_filter

from .assembly import FOUR_PI, _subdivide
from .errors import ConfigError
from .spectrum import almost_sure_fraction


def point_triangle_distance(points, tris):
    """Exact distance from points (M, 3) to paired triangles (M, 3, 3)."""
    points = np.asarray(points, dtype=float)
    tris = np.asarray(tris, dtype=float)
    best = np.full(len(points), np.inf)
    # in-plane projection, kept only where it lands inside the triangle
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    n = np.cross(v1 - v0, v2 - v0)
    nn = np.sum(n * n, axis=1)
    off = np.sum((points - v0) * n, axis=1)
    proj = points - (off / np.where(nn > 0, nn, 1.0))[:, None] * n
    # barycentric test for the projection
    d00 = np.sum((v1 - v0) * (v1 - v0), axis=1)
    d01 = np.sum((v1 - v0) * (v2 - v0), axis=1)
    d11 = np.sum((v2 - v0) * (v2 - v0), axis=1)
    pv = proj - v0
    d20 = np.sum(pv * (v1 - v0), axis=1)
    d21 = np.sum(pv * (v2 - v0), axis=1)
    denom = d00 * d11 - d01 * d01
    denom = np.where(denom > 0, denom, 1.0)
    b1 = (d11 * d20 - d01 * d21) / denom
    b2 = (d00 * d21 - d01 * d20) / denom
    inside = (b1 >= 0) & (b2 >= 0) & (b1 + b2 <= 1)
    plane_dist = np.abs(off) / np.sqrt(np.where(nn > 0, nn, 1.0))
    best = np.where(inside, plane_dist, best)
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        e = b - a
        ee = np.sum(e * e, axis=1)
        t = np.clip(np.sum((points - a) * e, axis=1) / np.where(ee > 0, ee, 1.0), 0, 1)
        best = np.minimum(best, np.linalg.norm(points - (a + t[:, None] * e), axis=1))
    return best


def min_panel_distance(mesh, points):
    """Exact minimum distance from each point to the panel surface."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri = mesh.vertices[mesh.faces]
    reach = np.linalg.norm(tri - mesh.centroids[:, None, :], axis=2).max(axis=1)
    out = np.empty(len(points))
    for k, p in enumerate(points):
        cd = np.linalg.norm(mesh.centroids - p[None, :], axis=1)
        # dist to panel p is in [cd_p - reach_p, cd_p]; exact check only
        # for panels whose lower bound beats the best upper bound
        cand = np.flatnonzero(cd - reach <= cd.min())
        d = point_triangle_distance(
            np.broadcast_to(p, (len(cand), 3)), tri[cand]
        )
        out[k] = d.min()
    return out


def _check_clearance(mesh, points, min_distance):
    if min_distance is None:
        return
    d = min_panel_distance(mesh, points)
    bad = np.flatnonzero(d < min_distance)
    if len(bad):
        p = np.atleast_2d(points)[bad[0]]
        raise ConfigError(
            f"evaluation point {tuple(float(v) for v in p)} is {d[bad[0]]:.3e} "
            f"from the surface (closer than {min_distance:.3e})"
        )


def _near_pairs(mesh, points):
    pts = np.atleast_2d(points)
    pi, pj = [], []
    for lo in range(0, len(pts), 256):
        hi = min(lo + 256, len(pts))
        cd = np.linalg.norm(
            pts[lo:hi, None, :] - mesh.centroids[None, :, :], axis=2
        )
        bi, bj = np.nonzero(cd < 2.0 * mesh.diameters[None, :])
        pi.append(bi + lo)
        pj.append(bj)
    return np.concatenate(pi), np.concatenate(pj)


def _near_potential(targets, tris, max_depth=3):
    """Midpoint-rule integral of gamma over panels, subdividing while the
    target is within two subtriangle diameters."""
    m = len(tris)
    out = np.zeros(m)
    idx = np.arange(m)
    work = np.asarray(tris, dtype=float)
    for depth in range(max_depth + 1):
        cent = work.mean(axis=1)
        edges = work - np.roll(work, 1, axis=1)
        diam = np.linalg.norm(edges, axis=2).max(axis=1)
        dist = np.linalg.norm(targets[idx] - cent, axis=1)
        split = (dist < 2.0 * diam) & (depth < max_depth)
        done = ~split
        if np.any(done):
            dt = work[done]
            area = 0.5 * np.linalg.norm(
                np.cross(dt[:, 1] - dt[:, 0], dt[:, 2] - dt[:, 0]), axis=1
            )
            vals = area / (FOUR_PI * np.linalg.norm(
                targets[idx[done]] - dt.mean(axis=1), axis=1
            ))
            np.add.at(out, idx[done], vals)
        if not np.any(split):
            break
        idx = np.tile(idx[split], 4)
        work = _subdivide(work[split])
    return out


def potential_matrix(mesh, points, min_distance=None):
    """Matrix G with G[m, p] = int_{panel p} gamma(z_m - y) dS_y.

    evaluate_plasmon is G @ density; building G once amortizes the panel
    sums over many eigenfunctions.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _check_clearance(mesh, pts, min_distance)
    cen = mesh.centroids
    cen_sq = np.sum(cen**2, axis=1)
    g = np.empty((len(pts), mesh.n_panels))
    for lo in range(0, len(pts), 512):
        hi = min(lo + 512, len(pts))
        x = pts[lo:hi]
        r2 = np.sum(x**2, axis=1)[:, None] + cen_sq[None, :] - 2.0 * (x @ cen.T)
        g[lo:hi] = mesh.areas[None, :] / (FOUR_PI * np.sqrt(np.maximum(r2, 1e-300)))
    pi, pj = _near_pairs(mesh, pts)
    if len(pi):
        tri = mesh.vertices[mesh.faces]
        g[pi, pj] = _near_potential(pts[pi], tri[pj])
    return g


def gradient_matrix(mesh, points, min_distance=None):
    """(M, N, 3) array of panel-integrated gradients of gamma at points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _check_clearance(mesh, pts, min_distance)
    diff = pts[:, None, :] - mesh.centroids[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    g = -diff * (mesh.areas[None, :] / (FOUR_PI * r**3))[:, :, None]
    pi, pj = _near_pairs(mesh, pts)
    if len(pi):
        tri = mesh.vertices[mesh.faces]
        for k in range(len(pi)):
            g[pi[k], pj[k]] = _near_gradient(pts[pi[k]], tri[pj[k]])
    return g


def _near_gradient(target, tri, max_depth=3):
    work = [np.asarray(tri, dtype=float)]
    total = np.zeros(3)
    for depth in range(max_depth + 1):
        nxt = []
        for t in work:
            cent = t.mean(axis=0)
            diam = max(
                np.linalg.norm(t[1] - t[0]),
                np.linalg.norm(t[2] - t[1]),
                np.linalg.norm(t[0] - t[2]),
            )
            d = target - cent
            r = np.linalg.norm(d)
            if r < 2.0 * diam and depth < max_depth:
                nxt.extend(_subdivide(t[None])[k] for k in range(4))
            else:
                area = 0.5 * np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0]))
                total += -d * area / (FOUR_PI * r**3)
        work = nxt
        if not work:
            break
    return total


def evaluate_plasmon(mesh, density, points, min_distance=None):
    """Single-layer potential of a panel density at off-surface points."""
    g = potential_matrix(mesh, points, min_distance=min_distance)
    vals = g @ np.asarray(density, dtype=float)
    return vals if np.asarray(points).ndim > 1 else float(vals[0])


def evaluate_plasmon_gradient(mesh, density, points, min_distance=None):
    """Gradient of the single-layer potential at off-surface points."""
    g = gradient_matrix(mesh, points, min_distance=min_distance)
    vals = np.einsum("mpc,p->mc", g, np.asarray(density, dtype=float))
    return vals if np.asarray(points).ndim > 1 else vals[0]


@dataclass(frozen=True)
class PlasmonField:
    """Sampled off-surface values of one plasmon."""

    eigenindex: int
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray = None


def region_l2_norms(mesh, spectrum, region, j_max):
    """L2(region) norms of the plasmons of positive-branch indices 1..j_max.

    Index j counts the positive eigenvalues in decreasing order with the
    1/2-eigenvalue at j=0 (excluded here, matching the j >= 1 sums).
    Returns (norms, lambdas), each of length j_max.
    """
    pos = spectrum.positive_order()
    if j_max >= len(pos):
        raise ConfigError(f"j_max={j_max} exceeds positive spectrum {len(pos)}")
    cols = pos[1 : j_max + 1]
    pts = np.column_stack(
        [region.points[:, 0], np.zeros(len(region.points)), region.points[:, 1]]
    )
    g = potential_matrix(mesh, pts, min_distance=region.eps / 2.0)
    u = g @ spectrum.vectors[:, cols]
    norms = np.sqrt(np.sum(u**2, axis=0) * region.cell_area)
    return norms, spectrum.lambdas[cols]


def kernel_expansion_residual(mesh, spectrum, z, x_panel, j_truncate):
    """Pointwise defect of the fundamental-solution expansion.

    Compares gamma(x - z) at a panel centroid x against the spectral sum
    sum_{j=1..J} u_j(z) u_j(x) + u_0(z) u_0(x), where on-surface values are
    (S_h v_j) at the panel and off-surface values come from the panel sums.
    """
    if not 1 <= j_truncate < spectrum.n:
        raise ConfigError("truncation must be in [1, spectrum size)")
    z = np.asarray(z, dtype=float)
    x = mesh.centroids[x_panel]
    u_on = spectrum.s_matrix[x_panel] @ spectrum.vectors
    u_z = potential_matrix(mesh, z[None])[0] @ spectrum.vectors
    partial = u_z[0] * u_on[0] + np.sum(u_z[1 : j_truncate + 1] * u_on[1 : j_truncate + 1])
    r = np.linalg.norm(x - z)
    return float(abs(1.0 / (FOUR_PI * r) - partial))


def plasmon_square_sums(mesh, spectrum, z):
    """Cumulative partial sums of u_j(z)^2 over j >= 1 (square-summability)."""
    z = np.asarray(z, dtype=float)
    u_z = potential_matrix(mesh, z[None])[0] @ spectrum.vectors
    return np.cumsum(u_z[1:] ** 2)


def decay_fit(norms, window, outlier_mask=None):
    """Least-squares slope/intercept of log(norm) vs log(j) on a window.

    ``norms[k]`` is the value at index j = k + 1; ``window`` = (j_lo, j_hi)
    inclusive.  Outlier positions (boolean mask over the array) are
    excluded and at least 30 points must remain.
    """
    norms = np.asarray(norms, dtype=float)
    j_lo, j_hi = window
    if not 1 <= j_lo < j_hi <= len(norms):
        raise ConfigError(f"degenerate fit window {window} for {len(norms)} norms")
    j = np.arange(j_lo, j_hi + 1)
    keep = np.ones(len(j), dtype=bool)
    if outlier_mask is not None:
        keep &= ~np.asarray(outlier_mask, dtype=bool)[j - 1]
    if keep.sum() < 30:
        raise ConfigError(f"only {int(keep.sum())} non-outlier points in window")
    x = np.log(j[keep].astype(float))
    y = np.log(norms[j - 1][keep])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def detect_outliers(norms, window=21, k=5.0):
    """Indices (0-based) whose log-norm exceeds a moving median by k * MAD.

    The moving median (window 21, edge-replicated) tracks the smooth
    decay trend; MAD is the median absolute deviation of the residuals.
    Deterministic; requires >= 50 positive values.
    """
    norms = np.asarray(norms, dtype=float)
    if len(norms) < 50:
        raise ConfigError(f"need >= 50 norms for outlier detection, got {len(norms)}")
    if np.any(norms <= 0):
        raise ConfigError("outlier detection requires positive norms")
    logn = np.log(norms)
    trend = median_filter(logn, size=window, mode="nearest")
    resid = logn - trend
    mad = np.median(np.abs(resid - np.median(resid)))
    return np.flatnonzero(resid > k * max(mad, 1e-12))


def axisymmetry_score(mesh, values):
    """1 - (azimuthal variance) / (total variance), in [0, 1].

    Panels are grouped into rings (u-band and quad-half labels); an
    axisymmetric density is constant along each ring, so its azimuthal
    variance vanishes and the score is 1.  Area-weighted throughout.
    Constant densities score 1 by convention.
    """
    if mesh.panel_ring is None:
        raise ConfigError("axisymmetry score requires a structured (u,v) mesh")
    values = np.asarray(values, dtype=float)
    w = mesh.areas
    mu = np.average(values, weights=w)
    total = np.average((values - mu) ** 2, weights=w)
    if total < 1e-30 * max(1.0, mu**2):
        return 1.0
    keys = mesh.panel_ring * 2 + mesh.panel_half
    azim = 0.0
    for key in np.unique(keys):
        sel = keys == key
        mu_r = np.average(values[sel], weights=w[sel])
        azim += np.sum(w[sel] * (values[sel] - mu_r) ** 2)
    azim /= np.sum(w)
    return float(min(1.0, max(0.0, 1.0 - azim / total)))


@dataclass
class DecayReport:
    """Per-index localization summary over a cross-section region."""

    norms: np.ndarray          # j = 1..j_max
    lambdas: np.ndarray
    outliers: np.ndarray       # j values (1-based) flagged
    axisymmetry: np.ndarray    # score per j
    slope: float
    intercept: float
    fit_window: tuple
    almost_sure: dict          # {s: {delta: fraction}}


def decay_report(mesh, spectrum, region, j_max, outlier_window=21, outlier_k=5.0):
    """Norms, outlier flags, axisymmetry scores and decay fit in one pass."""
    norms, lambdas = region_l2_norms(mesh, spectrum, region, j_max)
    out_idx = detect_outliers(norms, window=outlier_window, k=outlier_k)
    mask = np.zeros(j_max, dtype=bool)
    mask[out_idx] = True
    window = (1, j_max)
    slope, intercept = decay_fit(norms, window, outlier_mask=mask)
    pos = spectrum.positive_order()
    scores = np.array(
        [
            axisymmetry_score(mesh, spectrum.vectors[:, pos[j]])
            for j in range(1, j_max + 1)
        ]
    )
    almost = {}
    jj = np.arange(1, j_max + 1, dtype=float)
    for s in (0.0, 0.5):
        scale = float(np.median(np.abs(norms) * jj**s))
        almost[s] = {
            mult: almost_sure_fraction(norms, mult * scale, s, j_max)
            for mult in (0.25, 0.5, 1.0, 2.0, 4.0)
        }
    return DecayReport(
        norms=norms,
        lambdas=lambdas,
        outliers=out_idx + 1,
        axisymmetry=scores,
        slope=slope,
        intercept=intercept,
        fit_window=window,
        almost_sure=almost,
    )
