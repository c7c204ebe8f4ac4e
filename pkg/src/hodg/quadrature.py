"""Quadrature rules for volume and face integrals.

Volume rules must integrate polynomials up to degree 2*order exactly and
face rules up to degree 2*order + 1; the rule selection below meets that
with one extra degree of headroom on triangles at order 1.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "gauss_legendre_1d",
    "triangle_rule",
    "quad_tensor_rule",
    "face_rule_size",
    "volume_rule_size",
]


def gauss_legendre_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1, 1]; exact through degree 2n-1."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


# Dunavant rules in barycentric coordinates (l1, l2, l3), weights normalized
# to sum to 1 so physical weights are w * cell_area.
_TRI_RULES = {
    # degree 1: centroid
    1: (
        np.array([[1 / 3, 1 / 3, 1 / 3]]),
        np.array([1.0]),
    ),
    # degree 2: three interior points
    2: (
        np.array(
            [
                [2 / 3, 1 / 6, 1 / 6],
                [1 / 6, 2 / 3, 1 / 6],
                [1 / 6, 1 / 6, 2 / 3],
            ]
        ),
        np.array([1 / 3, 1 / 3, 1 / 3]),
    ),
}


def _build_tri_degree4() -> tuple[np.ndarray, np.ndarray]:
    # degree 4: two symmetric orbits of three points (Dunavant)
    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    pts = []
    wts = []
    for a, w in ((a1, w1), (a2, w2)):
        b = 1.0 - 2.0 * a
        pts += [[b, a, a], [a, b, a], [a, a, b]]
        wts += [w, w, w]
    return np.array(pts), np.array(wts)


_TRI_RULES[4] = _build_tri_degree4()


def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric triangle rule exact through `degree`, barycentric points.

    Returns (points (n, 3), weights (n,)); weights sum to 1.
    """
    for d in sorted(_TRI_RULES):
        if d >= degree:
            return _TRI_RULES[d]
    raise ValueError(f"no triangle rule of degree {degree}")


def quad_tensor_rule(n1d: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss rule on the reference square [-1, 1]^2.

    Returns (points (n1d*n1d, 2), weights); exact through degree 2*n1d - 1
    in each variable.
    """
    x, w = gauss_legendre_1d(n1d)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wts = np.outer(w, w)
    pts = np.column_stack([xi.ravel(), eta.ravel()])
    return pts, wts.ravel()


def volume_rule_size(order: int, shape: str) -> int:
    """Number of volume quadrature points for a cell shape at a given order."""
    if shape == "triangle":
        return triangle_rule(max(2 * order, 1))[1].size
    if shape == "quadrilateral":
        return (order + 1) ** 2
    raise ValueError(f"unknown shape {shape!r}")


def face_rule_size(order: int) -> int:
    """Number of face quadrature points; (order+1)-point Gauss is exact
    through degree 2*order + 1."""
    return order + 1
