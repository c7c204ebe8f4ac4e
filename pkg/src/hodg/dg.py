"""Modal DG spatial discretization: state containers, the auxiliary
gradient solve for viscous terms, the face-flux pass, and residual
assembly.

The right-hand side is organized as strictly ordered data-parallel passes
with disjoint writes, mirroring the two computational modes of the face/
cell storage layout: face passes write only per-face slots while reading
cell data of both neighbors; cell passes write only per-cell slots while
gathering the stored face fluxes. No atomics or cross-thread reductions
are involved, so results are bitwise reproducible for any worker count.

Kernels are compiled once per floating-point width via a factory so the
reduced-precision phase runs true 32-bit trace/flux arithmetic; residual
coefficients are always accumulated in 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
from numba import njit, prange

from .geometry import GeometryTables
from .mesh import Mesh
from .physics import OPS32, OPS64, AdmissibilityError, Conserved, GasModel

__all__ = [
    "BoundaryConditions",
    "DofState",
    "AuxGradient",
    "FaceFluxBuffer",
    "Residual",
    "Discretization",
    "project_initial",
    "compute_aux_gradient",
    "face_flux_pass",
    "accumulate_rhs",
    "rhs",
    "cell_means",
    "density_l2_error",
]

N_VARS = 4


@dataclass(frozen=True)
class BoundaryConditions:
    """Boundary data for a run: the freestream state used by far-field
    faces. Per-face kinds come from the mesh patches."""

    freestream: Conserved


@dataclass
class DofState:
    """Per-cell modal coefficients of the four conserved variables."""

    coeffs: np.ndarray  # (n_cells, 4, nb)
    iteration: int = 0

    @property
    def dtype(self) -> np.dtype:
        return self.coeffs.dtype

    @property
    def precision_bits(self) -> int:
        return self.coeffs.dtype.itemsize * 8

    @property
    def n_basis(self) -> int:
        return self.coeffs.shape[2]

    def copy(self) -> "DofState":
        return DofState(self.coeffs.copy(), self.iteration)


@dataclass
class AuxGradient:
    """Modal coefficients of z = grad(Q), directions x then y."""

    z: np.ndarray  # (n_cells, 2, 4, nb)


@dataclass
class FaceFluxBuffer:
    """Per-face, per-quadrature-point interface fluxes and trace average."""

    inviscid: np.ndarray  # (n_faces, nqf, 4)
    viscous: np.ndarray  # (n_faces, nqf, 4); zeros when inviscid-only
    qhat: np.ndarray  # (n_faces, nqf, 4); zeros when inviscid-only


@dataclass
class Residual:
    """dQ/dt modal coefficients, always 64-bit."""

    res: np.ndarray  # (n_cells, 4, nb) float64


def _build_kernels(ftype) -> SimpleNamespace:
    ops = OPS64 if ftype is np.float64 else OPS32
    roe = ops.roe
    boundary = ops.boundary
    prim = ops.prim
    vel_temp_grads = ops.vel_temp_grads
    stress_heat = ops.stress_heat
    viscn = ops.viscn
    F = ftype
    zero = F(0.0)
    half = F(0.5)

    @njit(parallel=True, cache=True, error_model="numpy")
    def qhat_pass(coeffs, fbL, fbR, face_cells, bc_code, fnx, fny, qinf, gamma, qhat, errf):
        n_faces = fbL.shape[0]
        nqf = fbL.shape[1]
        nb = fbL.shape[2]
        g = F(gamma)
        for f in prange(n_faces):
            iL = face_cells[f, 0]
            iR = face_cells[f, 1]
            nx = fnx[f]
            ny = fny[f]
            for q in range(nqf):
                qL0 = zero
                qL1 = zero
                qL2 = zero
                qL3 = zero
                for k in range(nb):
                    b = fbL[f, q, k]
                    qL0 += b * coeffs[iL, 0, k]
                    qL1 += b * coeffs[iL, 1, k]
                    qL2 += b * coeffs[iL, 2, k]
                    qL3 += b * coeffs[iL, 3, k]
                if iR >= 0:
                    qR0 = zero
                    qR1 = zero
                    qR2 = zero
                    qR3 = zero
                    for k in range(nb):
                        b = fbR[f, q, k]
                        qR0 += b * coeffs[iR, 0, k]
                        qR1 += b * coeffs[iR, 1, k]
                        qR2 += b * coeffs[iR, 2, k]
                        qR3 += b * coeffs[iR, 3, k]
                else:
                    if qL0 <= zero:
                        errf[f] = 1
                        continue
                    _, _, pL, _ = prim(qL0, qL1, qL2, qL3, g, F(1.0))
                    if pL <= zero:
                        errf[f] = 1
                        continue
                    qR0, qR1, qR2, qR3 = boundary(
                        bc_code[f], qL0, qL1, qL2, qL3, nx, ny,
                        qinf[0], qinf[1], qinf[2], qinf[3], g,
                    )
                qhat[f, q, 0] = half * (qL0 + qR0)
                qhat[f, q, 1] = half * (qL1 + qR1)
                qhat[f, q, 2] = half * (qL2 + qR2)
                qhat[f, q, 3] = half * (qL3 + qR3)

    @njit(parallel=True, cache=True, error_model="numpy")
    def aux_pass(coeffs, qhat, vol_w, vol_basis, vol_gx, vol_gy, cell_nvert,
                 cell_faces, cell_fsign, face_w, fbL, fbR, fnx, fny, minv,
                 scratch, aux):
        n_cells = coeffs.shape[0]
        nb = coeffs.shape[2]
        nqv = vol_w.shape[1]
        nqf = qhat.shape[1]
        for c in prange(n_cells):
            for d in range(2):
                for v in range(N_VARS):
                    for j in range(nb):
                        scratch[c, d, v, j] = zero
            # -integral of Q * grad(b) over the cell
            for qp in range(nqv):
                w = vol_w[c, qp]
                if w == zero:
                    continue
                q0 = zero
                q1 = zero
                q2 = zero
                q3 = zero
                for k in range(nb):
                    b = vol_basis[c, qp, k]
                    q0 += b * coeffs[c, 0, k]
                    q1 += b * coeffs[c, 1, k]
                    q2 += b * coeffs[c, 2, k]
                    q3 += b * coeffs[c, 3, k]
                for j in range(nb):
                    gx = w * vol_gx[c, qp, j]
                    gy = w * vol_gy[c, qp, j]
                    scratch[c, 0, 0, j] -= q0 * gx
                    scratch[c, 0, 1, j] -= q1 * gx
                    scratch[c, 0, 2, j] -= q2 * gx
                    scratch[c, 0, 3, j] -= q3 * gx
                    scratch[c, 1, 0, j] -= q0 * gy
                    scratch[c, 1, 1, j] -= q1 * gy
                    scratch[c, 1, 2, j] -= q2 * gy
                    scratch[c, 1, 3, j] -= q3 * gy
            # + surface integral of qhat * n * b over the cell boundary
            for slot in range(cell_nvert[c]):
                fid = cell_faces[c, slot]
                sgn = cell_fsign[c, slot]
                if sgn > 0:
                    tb = fbL
                else:
                    tb = fbR
                s = F(sgn)
                nx = fnx[fid]
                ny = fny[fid]
                for q in range(nqf):
                    w = s * face_w[fid, q]
                    h0 = qhat[fid, q, 0]
                    h1 = qhat[fid, q, 1]
                    h2 = qhat[fid, q, 2]
                    h3 = qhat[fid, q, 3]
                    wx = w * nx
                    wy = w * ny
                    for j in range(nb):
                        b = tb[fid, q, j]
                        scratch[c, 0, 0, j] += h0 * wx * b
                        scratch[c, 0, 1, j] += h1 * wx * b
                        scratch[c, 0, 2, j] += h2 * wx * b
                        scratch[c, 0, 3, j] += h3 * wx * b
                        scratch[c, 1, 0, j] += h0 * wy * b
                        scratch[c, 1, 1, j] += h1 * wy * b
                        scratch[c, 1, 2, j] += h2 * wy * b
                        scratch[c, 1, 3, j] += h3 * wy * b
            for d in range(2):
                for v in range(N_VARS):
                    for j in range(nb):
                        acc = zero
                        for k in range(nb):
                            acc += minv[c, j, k] * scratch[c, d, v, k]
                        aux[c, d, v, j] = acc

    @njit(parallel=True, cache=True, error_model="numpy")
    def flux_pass(coeffs, aux, fbL, fbR, face_cells, bc_code, fnx, fny, qinf,
                  gamma, Rgas, mu, Pr, ivis, finv, fvis, fqhat, errf):
        n_faces = fbL.shape[0]
        nqf = fbL.shape[1]
        nb = fbL.shape[2]
        g = F(gamma)
        R = F(Rgas)
        m = F(mu)
        pr = F(Pr)
        for f in prange(n_faces):
            iL = face_cells[f, 0]
            iR = face_cells[f, 1]
            nx = fnx[f]
            ny = fny[f]
            for q in range(nqf):
                qL0 = zero
                qL1 = zero
                qL2 = zero
                qL3 = zero
                for k in range(nb):
                    b = fbL[f, q, k]
                    qL0 += b * coeffs[iL, 0, k]
                    qL1 += b * coeffs[iL, 1, k]
                    qL2 += b * coeffs[iL, 2, k]
                    qL3 += b * coeffs[iL, 3, k]
                zLx0 = zLx1 = zLx2 = zLx3 = zero
                zLy0 = zLy1 = zLy2 = zLy3 = zero
                if ivis == 1:
                    for k in range(nb):
                        b = fbL[f, q, k]
                        zLx0 += b * aux[iL, 0, 0, k]
                        zLx1 += b * aux[iL, 0, 1, k]
                        zLx2 += b * aux[iL, 0, 2, k]
                        zLx3 += b * aux[iL, 0, 3, k]
                        zLy0 += b * aux[iL, 1, 0, k]
                        zLy1 += b * aux[iL, 1, 1, k]
                        zLy2 += b * aux[iL, 1, 2, k]
                        zLy3 += b * aux[iL, 1, 3, k]
                zRx0 = zLx0
                zRx1 = zLx1
                zRx2 = zLx2
                zRx3 = zLx3
                zRy0 = zLy0
                zRy1 = zLy1
                zRy2 = zLy2
                zRy3 = zLy3
                if iR >= 0:
                    qR0 = zero
                    qR1 = zero
                    qR2 = zero
                    qR3 = zero
                    for k in range(nb):
                        b = fbR[f, q, k]
                        qR0 += b * coeffs[iR, 0, k]
                        qR1 += b * coeffs[iR, 1, k]
                        qR2 += b * coeffs[iR, 2, k]
                        qR3 += b * coeffs[iR, 3, k]
                    if ivis == 1:
                        zRx0 = zRx1 = zRx2 = zRx3 = zero
                        zRy0 = zRy1 = zRy2 = zRy3 = zero
                        for k in range(nb):
                            b = fbR[f, q, k]
                            zRx0 += b * aux[iR, 0, 0, k]
                            zRx1 += b * aux[iR, 0, 1, k]
                            zRx2 += b * aux[iR, 0, 2, k]
                            zRx3 += b * aux[iR, 0, 3, k]
                            zRy0 += b * aux[iR, 1, 0, k]
                            zRy1 += b * aux[iR, 1, 1, k]
                            zRy2 += b * aux[iR, 1, 2, k]
                            zRy3 += b * aux[iR, 1, 3, k]
                else:
                    if qL0 <= zero:
                        errf[f] = 1
                        continue
                    _, _, pL, _ = prim(qL0, qL1, qL2, qL3, g, F(1.0))
                    if pL <= zero:
                        errf[f] = 1
                        continue
                    qR0, qR1, qR2, qR3 = boundary(
                        bc_code[f], qL0, qL1, qL2, qL3, nx, ny,
                        qinf[0], qinf[1], qinf[2], qinf[3], g,
                    )
                f0, f1, f2, f3, ok = roe(
                    qL0, qL1, qL2, qL3, qR0, qR1, qR2, qR3, nx, ny, g
                )
                if ok == 0:
                    errf[f] = 1
                    continue
                finv[f, q, 0] = f0
                finv[f, q, 1] = f1
                finv[f, q, 2] = f2
                finv[f, q, 3] = f3
                if ivis == 1:
                    hL0, hL1, hL2, hL3 = viscn(
                        qL0, qL1, qL2, qL3,
                        zLx0, zLx1, zLx2, zLx3, zLy0, zLy1, zLy2, zLy3,
                        nx, ny, g, R, m, pr,
                    )
                    hR0, hR1, hR2, hR3 = viscn(
                        qR0, qR1, qR2, qR3,
                        zRx0, zRx1, zRx2, zRx3, zRy0, zRy1, zRy2, zRy3,
                        nx, ny, g, R, m, pr,
                    )
                    fvis[f, q, 0] = half * (hL0 + hR0)
                    fvis[f, q, 1] = half * (hL1 + hR1)
                    fvis[f, q, 2] = half * (hL2 + hR2)
                    fvis[f, q, 3] = half * (hL3 + hR3)
                    fqhat[f, q, 0] = half * (qL0 + qR0)
                    fqhat[f, q, 1] = half * (qL1 + qR1)
                    fqhat[f, q, 2] = half * (qL2 + qR2)
                    fqhat[f, q, 3] = half * (qL3 + qR3)

    @njit(parallel=True, cache=True, error_model="numpy")
    def rhs_pass(coeffs, aux, finv, fvis, vol_w, vol_basis, vol_gx, vol_gy,
                 cell_nvert, cell_faces, cell_fsign, face_w, fbL, fbR, minv64,
                 gamma, Rgas, mu, Pr, ivis, scratch, res, errc):
        n_cells = coeffs.shape[0]
        nb = coeffs.shape[2]
        nqv = vol_w.shape[1]
        nqf = finv.shape[1]
        g = F(gamma)
        R = F(Rgas)
        m = F(mu)
        pr = F(Pr)
        for c in prange(n_cells):
            for v in range(N_VARS):
                for j in range(nb):
                    scratch[c, v, j] = 0.0
            # volume integral of (F - Fv) . grad(b)
            for qp in range(nqv):
                w = vol_w[c, qp]
                if w == zero:
                    continue
                q0 = zero
                q1 = zero
                q2 = zero
                q3 = zero
                for k in range(nb):
                    b = vol_basis[c, qp, k]
                    q0 += b * coeffs[c, 0, k]
                    q1 += b * coeffs[c, 1, k]
                    q2 += b * coeffs[c, 2, k]
                    q3 += b * coeffs[c, 3, k]
                if q0 <= zero:
                    errc[c] = 1
                    continue
                u, v_, p, _ = prim(q0, q1, q2, q3, g, F(1.0))
                if p <= zero:
                    errc[c] = 1
                    continue
                ex0 = q1
                ex1 = q1 * u + p
                ex2 = q1 * v_
                ex3 = (q3 + p) * u
                fy0 = q2
                fy1 = q2 * u
                fy2 = q2 * v_ + p
                fy3 = (q3 + p) * v_
                if ivis == 1:
                    zx0 = zx1 = zx2 = zx3 = zero
                    zy0 = zy1 = zy2 = zy3 = zero
                    for k in range(nb):
                        b = vol_basis[c, qp, k]
                        zx0 += b * aux[c, 0, 0, k]
                        zx1 += b * aux[c, 0, 1, k]
                        zx2 += b * aux[c, 0, 2, k]
                        zx3 += b * aux[c, 0, 3, k]
                        zy0 += b * aux[c, 1, 0, k]
                        zy1 += b * aux[c, 1, 1, k]
                        zy2 += b * aux[c, 1, 2, k]
                        zy3 += b * aux[c, 1, 3, k]
                    uu, vv, ux, uy, vx, vy, Tx, Ty = vel_temp_grads(
                        q0, q1, q2, q3, zx0, zx1, zx2, zx3, zy0, zy1, zy2, zy3, g, R
                    )
                    txx, txy, tyy, qx, qy = stress_heat(ux, uy, vx, vy, Tx, Ty, g, R, m, pr)
                    ex1 -= txx
                    ex2 -= txy
                    ex3 -= uu * txx + vv * txy - qx
                    fy1 -= txy
                    fy2 -= tyy
                    fy3 -= uu * txy + vv * tyy - qy
                for j in range(nb):
                    gx = w * vol_gx[c, qp, j]
                    gy = w * vol_gy[c, qp, j]
                    scratch[c, 0, j] += ex0 * gx + fy0 * gy
                    scratch[c, 1, j] += ex1 * gx + fy1 * gy
                    scratch[c, 2, j] += ex2 * gx + fy2 * gy
                    scratch[c, 3, j] += ex3 * gx + fy3 * gy
            # - surface integral of the stored interface fluxes
            for slot in range(cell_nvert[c]):
                fid = cell_faces[c, slot]
                sgn = cell_fsign[c, slot]
                if sgn > 0:
                    tb = fbL
                else:
                    tb = fbR
                s = F(sgn)
                for q in range(nqf):
                    w = s * face_w[fid, q]
                    h0 = finv[fid, q, 0]
                    h1 = finv[fid, q, 1]
                    h2 = finv[fid, q, 2]
                    h3 = finv[fid, q, 3]
                    if ivis == 1:
                        h0 -= fvis[fid, q, 0]
                        h1 -= fvis[fid, q, 1]
                        h2 -= fvis[fid, q, 2]
                        h3 -= fvis[fid, q, 3]
                    for j in range(nb):
                        wb = w * tb[fid, q, j]
                        scratch[c, 0, j] -= h0 * wb
                        scratch[c, 1, j] -= h1 * wb
                        scratch[c, 2, j] -= h2 * wb
                        scratch[c, 3, j] -= h3 * wb
            for v in range(N_VARS):
                for j in range(nb):
                    acc = 0.0
                    for k in range(nb):
                        acc += minv64[c, j, k] * scratch[c, v, k]
                    res[c, v, j] = acc

    return SimpleNamespace(
        qhat_pass=qhat_pass,
        aux_pass=aux_pass,
        flux_pass=flux_pass,
        rhs_pass=rhs_pass,
    )


_KERNELS = {
    np.dtype(np.float64): _build_kernels(np.float64),
    np.dtype(np.float32): _build_kernels(np.float32),
}


class Discretization:
    """Kernel-ready views of one (mesh, geometry, gas, freestream) setup.

    Caches per-precision casts of the float tables and the scratch/error
    buffers reused across iterations. Read-only during passes.
    """

    def __init__(self, mesh: Mesh, geo: GeometryTables, gas: GasModel, bcs: BoundaryConditions):
        self.mesh = mesh
        self.geo = geo
        self.gas = gas
        self.bcs = bcs
        self.bc_code = mesh.boundary_kind_codes()
        if np.any(self.bc_code < 0):
            bad = int(np.nonzero(self.bc_code < 0)[0][0])
            raise ValueError(f"boundary face {bad} has no boundary patch")
        self.qinf = bcs.freestream.as_array()
        self._per_dtype: dict = {}

    def bundle(self, dtype) -> SimpleNamespace:
        dtype = np.dtype(dtype)
        b = self._per_dtype.get(dtype)
        if b is None:
            mesh = self.mesh
            tabs = self.geo.as_dtype(dtype)
            nb = self.geo.n_basis
            nqf = self.geo.n_face_points
            b = SimpleNamespace(
                kernels=_KERNELS[dtype],
                fnx=np.ascontiguousarray(mesh.face_normal[:, 0], dtype=dtype),
                fny=np.ascontiguousarray(mesh.face_normal[:, 1], dtype=dtype),
                qinf=self.qinf.astype(dtype),
                aux_scratch=np.zeros((mesh.n_cells, 2, N_VARS, nb), dtype=dtype),
                rhs_scratch=np.zeros((mesh.n_cells, N_VARS, nb)),
                errf=np.zeros(mesh.n_faces, dtype=np.uint8),
                errc=np.zeros(mesh.n_cells, dtype=np.uint8),
                qhat=np.zeros((mesh.n_faces, nqf, N_VARS), dtype=dtype),
                finv=np.zeros((mesh.n_faces, nqf, N_VARS), dtype=dtype),
                fvis=np.zeros(
                    (mesh.n_faces, nqf, N_VARS) if self.gas.ivis else (1, nqf, N_VARS),
                    dtype=dtype,
                ),
                **tabs,
            )
            self._per_dtype[dtype] = b
        return b


def _get_disc(mesh: Mesh, geo: GeometryTables, gas: GasModel, bcs: BoundaryConditions) -> Discretization:
    cache = getattr(geo, "_disc_cache", None)
    if cache is None:
        cache = {}
        geo._disc_cache = cache
    key = (id(mesh), gas, bcs.freestream)
    disc = cache.get(key)
    if disc is None:
        disc = Discretization(mesh, geo, gas, bcs)
        cache[key] = disc
    return disc


def _raise_face_error(errf, iteration):
    if errf.any():
        face = int(np.nonzero(errf)[0][0])
        raise AdmissibilityError("inadmissible face trace", face=face, iteration=iteration)


def _raise_cell_error(errc, iteration):
    if errc.any():
        cell = int(np.nonzero(errc)[0][0])
        raise AdmissibilityError("inadmissible volume state", cell=cell, iteration=iteration)


def project_initial(mesh: Mesh, geo: GeometryTables, field, gas: GasModel) -> DofState:
    """L2-project an initial primitive field onto the basis.

    `field(x, y)` receives flat coordinate arrays covering all volume
    quadrature points and returns a Primitive of arrays.
    """
    x = geo.vol_xy[:, :, 0].ravel()
    y = geo.vol_xy[:, :, 1].ravel()
    w = field(x, y)
    rho = np.broadcast_to(np.asarray(w.rho, dtype=np.float64), x.shape)
    u = np.broadcast_to(np.asarray(w.u, dtype=np.float64), x.shape)
    v = np.broadcast_to(np.asarray(w.v, dtype=np.float64), x.shape)
    p = np.broadcast_to(np.asarray(w.p, dtype=np.float64), x.shape)
    if np.any(rho <= 0.0) or np.any(p <= 0.0):
        raise AdmissibilityError("initial field is inadmissible")
    e = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    q = np.stack([rho, rho * u, rho * v, e], axis=-1)
    q = q.reshape(mesh.n_cells, geo.n_vol_points, N_VARS)
    proj = np.einsum("cq,cqj,cqv->cvj", geo.vol_w, geo.vol_basis, q)
    coeffs = np.einsum("cjk,cvk->cvj", geo.minv, proj)
    return DofState(coeffs=np.ascontiguousarray(coeffs))


def compute_aux_gradient(
    state: DofState, mesh: Mesh, geo: GeometryTables, bcs: BoundaryConditions, gas: GasModel
) -> AuxGradient:
    """BR1 auxiliary solve: per-cell weak gradient of Q with central traces."""
    disc = _get_disc(mesh, geo, gas, bcs)
    b = disc.bundle(state.dtype)
    k = b.kernels
    b.errf[:] = 0
    k.qhat_pass(
        state.coeffs, b.face_basis_l, b.face_basis_r, mesh.face_cells,
        disc.bc_code, b.fnx, b.fny, b.qinf, gas.gamma, b.qhat, b.errf,
    )
    _raise_face_error(b.errf, state.iteration)
    aux = np.empty_like(b.aux_scratch)
    k.aux_pass(
        state.coeffs, b.qhat, b.vol_w, b.vol_basis, b.vol_gradx, b.vol_grady,
        mesh.cell_nvert, mesh.cell_faces, mesh.cell_fsign, b.face_w,
        b.face_basis_l, b.face_basis_r, b.fnx, b.fny, b.minv, b.aux_scratch, aux,
    )
    return AuxGradient(z=aux)


def face_flux_pass(
    state: DofState,
    aux: AuxGradient | None,
    mesh: Mesh,
    geo: GeometryTables,
    bcs: BoundaryConditions,
    gas: GasModel,
) -> FaceFluxBuffer:
    """Evaluate and store the interface fluxes for every face quadrature
    point; boundary faces close the trace with a boundary state."""
    disc = _get_disc(mesh, geo, gas, bcs)
    b = disc.bundle(state.dtype)
    k = b.kernels
    if gas.ivis and aux is None:
        raise ValueError("viscous flux pass requires the auxiliary gradient")
    zaux = aux.z if aux is not None else np.zeros((1, 2, N_VARS, state.n_basis), dtype=state.dtype)
    finv = np.empty_like(b.finv)
    fvis = np.zeros_like(b.fvis)
    fqhat = np.zeros_like(b.fvis)
    b.errf[:] = 0
    k.flux_pass(
        state.coeffs, zaux, b.face_basis_l, b.face_basis_r, mesh.face_cells,
        disc.bc_code, b.fnx, b.fny, b.qinf,
        gas.gamma, gas.R, gas.mu_dyn, gas.Pr, gas.ivis,
        finv, fvis, fqhat, b.errf,
    )
    _raise_face_error(b.errf, state.iteration)
    return FaceFluxBuffer(inviscid=finv, viscous=fvis, qhat=fqhat)


def accumulate_rhs(
    state: DofState,
    aux: AuxGradient | None,
    fluxes: FaceFluxBuffer,
    mesh: Mesh,
    geo: GeometryTables,
    bcs: BoundaryConditions,
    gas: GasModel,
) -> Residual:
    """Gather stored face fluxes and volume terms into dQ/dt coefficients."""
    disc = _get_disc(mesh, geo, gas, bcs)
    b = disc.bundle(state.dtype)
    k = b.kernels
    zaux = aux.z if aux is not None else np.zeros((1, 2, N_VARS, state.n_basis), dtype=state.dtype)
    res = np.empty((mesh.n_cells, N_VARS, geo.n_basis))
    b.errc[:] = 0
    k.rhs_pass(
        state.coeffs, zaux, fluxes.inviscid, fluxes.viscous,
        b.vol_w, b.vol_basis, b.vol_gradx, b.vol_grady,
        mesh.cell_nvert, mesh.cell_faces, mesh.cell_fsign, b.face_w,
        b.face_basis_l, b.face_basis_r, geo.minv,
        gas.gamma, gas.R, gas.mu_dyn, gas.Pr, gas.ivis,
        b.rhs_scratch, res, b.errc,
    )
    _raise_cell_error(b.errc, state.iteration)
    return Residual(res=res)


def rhs(
    state: DofState,
    mesh: Mesh,
    geo: GeometryTables,
    bcs: BoundaryConditions,
    gas: GasModel,
) -> Residual:
    """Full spatial residual: auxiliary gradient (viscous runs only), then
    the face-flux pass, then per-cell accumulation."""
    aux = compute_aux_gradient(state, mesh, geo, bcs, gas) if gas.ivis else None
    fluxes = face_flux_pass(state, aux, mesh, geo, bcs, gas)
    return accumulate_rhs(state, aux, fluxes, mesh, geo, bcs, gas)


def cell_means(state: DofState, geo: GeometryTables) -> np.ndarray:
    """Cell-average conserved state, (n_cells, 4) float64."""
    return np.einsum("cvj,cj->cv", state.coeffs.astype(np.float64), geo.basis_mean)


def density_l2_error(state: DofState, mesh: Mesh, geo: GeometryTables, rho_exact) -> float:
    """Quadrature L2 norm of the density error against `rho_exact(x, y)`."""
    x = geo.vol_xy[:, :, 0]
    y = geo.vol_xy[:, :, 1]
    rho_h = np.einsum("cqj,cj->cq", geo.vol_basis, state.coeffs[:, 0, :].astype(np.float64))
    err = rho_h - rho_exact(x, y)
    return float(np.sqrt(np.sum(geo.vol_w * err * err)))
