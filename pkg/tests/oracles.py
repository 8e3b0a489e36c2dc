"""Brute-force reference computations the decoder tests are checked against.

Everything here is deliberately independent of the package's search kernels:
closest points and sphere lists come from explicit box enumeration with a
rigorous radius-derived bound, so a bug in the production search cannot hide
in its own oracle.
"""

import numpy as np


def qr_positive(mat):
    q, r = np.linalg.qr(mat)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :], r * signs[:, None]


def enumeration_box(r_mat, y, radius):
    """Integer box certain to contain every z with |y - R z| <= radius."""
    m = r_mat.shape[0]
    center = np.linalg.solve(r_mat, y)
    span = np.abs(np.linalg.inv(r_mat)) @ np.full(m, radius)
    axes = [np.arange(int(np.floor(c - s)), int(np.ceil(c + s)) + 1)
            for c, s in zip(center, span)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m)
    return grid


def brute_force_closest(r_mat, y):
    """Exact closest integer point to y under R by exhaustive enumeration.

    The search radius is the Babai (successive rounding) distance, which the
    optimum can never exceed.
    """
    m = r_mat.shape[0]
    z = np.zeros(m)
    for i in range(m - 1, -1, -1):
        resid = y[i] - r_mat[i, i + 1:] @ z[i + 1:]
        z[i] = np.floor(resid / r_mat[i, i] + 0.5)
    radius = np.linalg.norm(y - r_mat @ z) + 1e-9
    grid = enumeration_box(r_mat, y, radius)
    d = np.linalg.norm(grid @ r_mat.T - y, axis=1)
    return grid[int(np.argmin(d))]


def brute_force_sphere(r_mat, y, radius_sq):
    """All integer points with |y - R z|^2 <= radius_sq, by box enumeration."""
    grid = enumeration_box(r_mat, y, np.sqrt(radius_sq) * (1 + 1e-12))
    d2 = np.sum((grid @ r_mat.T - y) ** 2, axis=1)
    inside = grid[d2 <= radius_sq]
    return {tuple(int(v) for v in z) for z in inside}


def brute_force_shortest(basis):
    """Exact shortest nonzero vector by exhaustive coefficient enumeration.

    Any vector no longer than the shortest basis column has coefficients
    bounded by |row_i(G^-1)| times that length, which fixes a finite box.
    """
    m = basis.shape[1]
    longest = float(np.min(np.linalg.norm(basis, axis=0)))
    bound = np.ceil(np.linalg.norm(np.linalg.inv(basis), axis=1) * longest)
    axes = [np.arange(-int(b), int(b) + 1) for b in bound]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m)
    grid = grid[np.any(grid != 0, axis=1)]
    norms = np.linalg.norm(grid @ basis.T, axis=1)
    return float(np.min(norms))


def random_full_rank(rng, m, min_det=0.3):
    b = rng.standard_normal((m, m))
    while abs(np.linalg.det(b)) < min_det:
        b = rng.standard_normal((m, m))
    return b
