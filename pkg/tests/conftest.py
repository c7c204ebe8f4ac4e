"""Shared fixtures and independent oracles used across the test suite."""

import numpy as np
import pytest

from hodg import mesh as mesh_mod
from hodg.geometry import compute_geometry


def polygon_monomial_integral(xy: np.ndarray, a: int, b: int) -> float:
    """Exact integral of x^a y^b over a simple polygon via Green's theorem:
    the area integral equals the contour integral of x^(a+1)/(a+1) * y^b dy.
    Edge integrals are evaluated by exact polynomial integration, so this
    never touches the quadrature machinery it is used to check."""
    from numpy.polynomial import polynomial as Pn

    total = 0.0
    n = xy.shape[0]
    for i in range(n):
        x0, y0 = xy[i]
        x1, y1 = xy[(i + 1) % n]
        dx, dy = x1 - x0, y1 - y0
        if dy == 0.0:
            continue
        # x(t) = x0 + dx t, y(t) = y0 + dy t on t in [0, 1]
        px = Pn.polypow([x0, dx], a + 1)
        py = Pn.polypow([y0, dy], b)
        integrand = Pn.polymul(px, py) * dy / (a + 1)
        total += Pn.polyval(1.0, Pn.polyint(integrand)) - Pn.polyval(0.0, Pn.polyint(integrand))
    return total


def segment_monomial_integral(p0, p1, a: int, b: int) -> float:
    """Exact line integral of x^a y^b ds over a straight segment."""
    from numpy.polynomial import polynomial as Pn

    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    length = float(np.hypot(dx, dy))
    px = Pn.polypow([x0, dx], a)
    py = Pn.polypow([y0, dy], b)
    integrand = Pn.polymul(px, py)
    anti = Pn.polyint(integrand)
    return (Pn.polyval(1.0, anti) - Pn.polyval(0.0, anti)) * length


def corpus_meshes():
    """The mesh corpus: both shapes, regular and perturbed, one stretched."""
    return [
        ("quad_4x4", mesh_mod.generate_quad_grid(4, 4)),
        ("quad_stretched", mesh_mod.generate_quad_grid(3, 3, (0.0, 0.0, 2.0, 0.7))),
        ("tri_4x3", mesh_mod.generate_tri_grid(4, 3)),
        (
            "quad_perturbed",
            mesh_mod.perturb_interior_nodes(mesh_mod.generate_quad_grid(6, 5), 0.15, seed=3),
        ),
        (
            "tri_perturbed",
            mesh_mod.perturb_interior_nodes(mesh_mod.generate_tri_grid(5, 4), 0.12, seed=7),
        ),
    ]


@pytest.fixture(scope="session")
def corpus():
    return corpus_meshes()


@pytest.fixture(scope="session")
def geo_cache():
    cache = {}

    def get(mesh, order):
        key = (id(mesh), order)
        if key not in cache:
            cache[key] = compute_geometry(mesh, order)
        return cache[key]

    return get
