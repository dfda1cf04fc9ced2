"""Least-squares placement of a dual vertex from plane constraints.

Minimizes sum_e (n_e . (x - p_e))^2 about the constraint mass point. The
normal matrix is decomposed by SVD and singular values below 0.1 times
the largest are dropped, which resolves under-determined directions
toward the mass point instead of letting them blow up along sharp edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConstraints

TRUNCATION_RATIO = 0.1

_UNIT_BOUNDS = (np.zeros(3), np.ones(3))


@dataclass(frozen=True)
class PlaneConstraint:
    point: tuple[float, float, float]
    normal: tuple[float, float, float]


def qef_solve_batch(
    points: np.ndarray,
    normals: np.ndarray,
    valid: np.ndarray,
    bounds: tuple[np.ndarray, np.ndarray] | None = _UNIT_BOUNDS,
) -> np.ndarray:
    """Solve many constraint sets at once.

    points, normals: (B, N, 3); valid: (B, N) with at least one true row
    entry per problem. Invalid slots are ignored. Returns (B, 3) positions
    clamped to bounds, guaranteed no worse (in the QEF objective) than the
    mass point of the valid constraints.
    """
    points = np.asarray(points, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    counts = valid.sum(axis=1)
    if np.any(counts == 0):
        raise NoConstraints("every problem needs at least one constraint")

    w = valid[..., None].astype(np.float64)
    mass = (points * w).sum(axis=1) / counts[:, None]
    a = normals * w
    b = np.einsum("bnd,bnd->bn", a, points - mass[:, None, :])

    u, s, vt = np.linalg.svd(a, full_matrices=False)
    smax = s[:, :1]
    keep = (s >= TRUNCATION_RATIO * smax) & (s > 0)
    inv_s = np.where(keep, np.divide(1.0, s, where=s > 0, out=np.zeros_like(s)), 0.0)
    # x = q + V diag(1/s) U^T b over the kept directions
    utb = np.einsum("bnr,bn->br", u, b)
    x = mass + np.einsum("brd,br->bd", vt, inv_s * utb)

    fallback = mass
    if bounds is not None:
        lo, hi = (np.asarray(side, dtype=np.float64) for side in bounds)
        x = np.clip(x, lo, hi)
        fallback = np.clip(mass, lo, hi)

    # never return a point whose residual exceeds the mass point's
    def objective(pos):
        r = np.einsum("bnd,bnd->bn", a, pos[:, None, :] - points)
        return np.sum(np.where(valid, r, 0.0) ** 2, axis=1)

    worse = objective(x) > objective(fallback) + 1e-12
    if np.any(worse):
        x = np.where(worse[:, None], fallback, x)
    return x


def qef_solve(
    constraints,
    cell_bounds: tuple | None = _UNIT_BOUNDS,
) -> np.ndarray:
    """Solve a single constraint set; see qef_solve_batch.

    Accepts a sequence of PlaneConstraint or of (point, normal) pairs.
    """
    if len(constraints) == 0:
        raise NoConstraints("empty constraint list")
    pts, nrms = [], []
    for c in constraints:
        if isinstance(c, PlaneConstraint):
            pts.append(c.point)
            nrms.append(c.normal)
        else:
            p, n = c
            pts.append(p)
            nrms.append(n)
    points = np.asarray(pts, dtype=np.float64)[None]
    normals = np.asarray(nrms, dtype=np.float64)[None]
    valid = np.ones(points.shape[:2], dtype=bool)
    bounds = None
    if cell_bounds is not None:
        bounds = (np.asarray(cell_bounds[0], float), np.asarray(cell_bounds[1], float))
    return qef_solve_batch(points, normals, valid, bounds)[0]


def qef_objective(constraints, x: np.ndarray) -> float:
    """Residual sum of squares of a candidate position."""
    total = 0.0
    for c in constraints:
        p, n = (c.point, c.normal) if isinstance(c, PlaneConstraint) else c
        total += float(np.dot(np.asarray(n, float), np.asarray(x, float) - np.asarray(p, float)) ** 2)
    return total
