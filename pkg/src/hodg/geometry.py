"""Precomputed geometry for the DG discretization: quadrature points with
physical weights, basis values and gradients at those points, per-face
basis traces, and per-cell inverse mass matrices.

Quads use bilinear reference maps with the Jacobian evaluated per
quadrature point; triangles are affine. All tables are float64; 32-bit
copies for the reduced-precision phase are cached on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet
from .mesh import Mesh
from .quadrature import (
    face_rule_size,
    gauss_legendre_1d,
    quad_tensor_rule,
    triangle_rule,
    volume_rule_size,
)

__all__ = ["GeometryError", "GeometryTables", "compute_geometry"]


class GeometryError(Exception):
    pass


@dataclass
class GeometryTables:
    order: int
    n_basis: int
    # volume quadrature, padded to the max point count across shapes
    vol_xy: np.ndarray  # (n_cells, nqv, 2)
    vol_w: np.ndarray  # (n_cells, nqv); zero-padded
    vol_basis: np.ndarray  # (n_cells, nqv, nb)
    vol_gradx: np.ndarray  # (n_cells, nqv, nb)
    vol_grady: np.ndarray  # (n_cells, nqv, nb)
    # face quadrature
    face_xy: np.ndarray  # (n_faces, nqf, 2)
    face_w: np.ndarray  # (n_faces, nqf)
    face_basis_l: np.ndarray  # (n_faces, nqf, nb)
    face_basis_r: np.ndarray  # (n_faces, nqf, nb); zeros at boundary faces
    # per-cell mass data
    mass: np.ndarray  # (n_cells, nb, nb)
    minv: np.ndarray  # (n_cells, nb, nb)
    basis_mean: np.ndarray  # (n_cells, nb): cell average of each basis fn
    _f32: dict = field(default_factory=dict, repr=False)

    @property
    def n_vol_points(self) -> int:
        return self.vol_w.shape[1]

    @property
    def n_face_points(self) -> int:
        return self.face_w.shape[1]

    def constant_count(self) -> int:
        """Number of precomputed geometric constants held by the tables."""
        return sum(
            a.size
            for a in (
                self.vol_xy,
                self.vol_w,
                self.vol_basis,
                self.vol_gradx,
                self.vol_grady,
                self.face_xy,
                self.face_w,
                self.face_basis_l,
                self.face_basis_r,
                self.mass,
                self.minv,
                self.basis_mean,
            )
        )

    def as_dtype(self, dtype) -> dict[str, np.ndarray]:
        """Float tables used by the solver kernels, cast to `dtype`.

        float64 returns the canonical arrays; float32 copies are cached.
        """
        dtype = np.dtype(dtype)
        names = ("vol_w", "vol_basis", "vol_gradx", "vol_grady",
                 "face_w", "face_basis_l", "face_basis_r", "minv", "basis_mean")
        if dtype == np.float64:
            return {n: getattr(self, n) for n in names}
        key = dtype.str
        if key not in self._f32:
            self._f32[key] = {n: getattr(self, n).astype(dtype) for n in names}
        return self._f32[key]


def _quad_map(corners: np.ndarray, ref_pts: np.ndarray):
    """Bilinear map of the reference square: physical points and |det J|
    at each reference point."""
    xi = ref_pts[:, 0]
    eta = ref_pts[:, 1]
    shape = 0.25 * np.column_stack(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ]
    )
    dxi = 0.25 * np.column_stack([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
    deta = 0.25 * np.column_stack([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
    xy = shape @ corners
    jx = dxi @ corners
    jy = deta @ corners
    det = jx[:, 0] * jy[:, 1] - jx[:, 1] * jy[:, 0]
    return xy, det


def compute_geometry(mesh: Mesh, order: int, basis: BasisSet | None = None) -> GeometryTables:
    """Populate all quadrature-point basis evaluations and inverse mass
    matrices for a validated mesh at the given polynomial order."""
    if basis is None:
        basis = BasisSet(order)
    elif basis.order != order:
        raise GeometryError("basis order does not match requested order")
    nb = basis.n_basis
    n_cells = mesh.n_cells
    n_faces = mesh.n_faces

    tri_bary, tri_w = triangle_rule(max(2 * order, 1))
    quad_pts, quad_w = quad_tensor_rule(order + 1)
    nqv = max(
        volume_rule_size(order, "triangle") if np.any(mesh.cell_nvert == 3) else 0,
        volume_rule_size(order, "quadrilateral") if np.any(mesh.cell_nvert == 4) else 0,
    )

    vol_xy = np.zeros((n_cells, nqv, 2))
    vol_w = np.zeros((n_cells, nqv))
    vol_basis = np.zeros((n_cells, nqv, nb))
    vol_gradx = np.zeros((n_cells, nqv, nb))
    vol_grady = np.zeros((n_cells, nqv, nb))
    mass = np.zeros((n_cells, nb, nb))
    minv = np.zeros((n_cells, nb, nb))
    basis_mean = np.zeros((n_cells, nb))

    for c in range(n_cells):
        nv = int(mesh.cell_nvert[c])
        corners = mesh.node_xy[mesh.cell_nodes[c, :nv]]
        if nv == 3:
            xy = tri_bary @ corners
            w = tri_w * mesh.cell_area[c]
        else:
            xy, det = _quad_map(corners, quad_pts)
            if np.any(det <= 0.0):
                raise GeometryError(f"cell {c}: non-positive Jacobian (degenerate cell)")
            w = quad_w * det
        nq = xy.shape[0]
        xc, yc = mesh.cell_centroid[c]
        h = mesh.cell_h[c]
        b = basis.values(xy[:, 0], xy[:, 1], xc, yc, h)
        gx, gy = basis.gradients(xy[:, 0], xy[:, 1], xc, yc, h)
        vol_xy[c, :nq] = xy
        vol_w[c, :nq] = w
        vol_basis[c, :nq] = b
        vol_gradx[c, :nq] = gx
        vol_grady[c, :nq] = gy
        m = np.einsum("q,qj,qk->jk", w, b, b)
        mass[c] = m
        try:
            inv = np.linalg.inv(m)
        except np.linalg.LinAlgError:
            raise GeometryError(f"cell {c}: singular mass matrix") from None
        if not np.all(np.isfinite(inv)):
            raise GeometryError(f"cell {c}: singular mass matrix")
        minv[c] = inv
        basis_mean[c] = (w @ b) / mesh.cell_area[c]

    nqf = face_rule_size(order)
    t1d, w1d = gauss_legendre_1d(nqf)
    face_xy = np.zeros((n_faces, nqf, 2))
    face_w = np.zeros((n_faces, nqf))
    face_basis_l = np.zeros((n_faces, nqf, nb))
    face_basis_r = np.zeros((n_faces, nqf, nb))

    a_xy = mesh.node_xy[mesh.face_nodes[:, 0]]
    b_xy = mesh.node_xy[mesh.face_nodes[:, 1]]
    for q in range(nqf):
        s = 0.5 * (1.0 + t1d[q])
        face_xy[:, q, :] = a_xy + s * (b_xy - a_xy)
        face_w[:, q] = 0.5 * w1d[q] * mesh.face_length

    for f in range(n_faces):
        for side, cell in enumerate(mesh.face_cells[f]):
            if cell < 0:
                continue
            xc, yc = mesh.cell_centroid[cell]
            h = mesh.cell_h[cell]
            vals = basis.values(face_xy[f, :, 0], face_xy[f, :, 1], xc, yc, h)
            if side == 0:
                face_basis_l[f] = vals
            else:
                face_basis_r[f] = vals

    return GeometryTables(
        order=order,
        n_basis=nb,
        vol_xy=vol_xy,
        vol_w=vol_w,
        vol_basis=vol_basis,
        vol_gradx=vol_gradx,
        vol_grady=vol_grady,
        face_xy=face_xy,
        face_w=face_w,
        face_basis_l=face_basis_l,
        face_basis_r=face_basis_r,
        mass=mass,
        minv=minv,
        basis_mean=basis_mean,
    )
