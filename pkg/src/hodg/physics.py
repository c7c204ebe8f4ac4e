"""Compressible-flow state algebra and fluxes: conversions between
conserved and primitive variables, physical inviscid/viscous fluxes, the
Roe approximate Riemann solver with a Harten-Hyman entropy fix, central
viscous interface fluxes, and boundary-state construction.

The scalar flux algebra is generated once per floating-point width by
`scalar_ops`, so the 32-bit solver phase runs genuine 32-bit arithmetic;
plain Python literals would silently promote float32 operands to float64
inside compiled code, hence every constant is a closure-captured typed
scalar. Each generated namespace must only ever be called with its own
width (the compilation cache does not key on closure values).

All operations are pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
from numba import njit

__all__ = [
    "AdmissibilityError",
    "GasModel",
    "Conserved",
    "Primitive",
    "FluxPair",
    "StressHeat",
    "primitive_from_conserved",
    "conserved_from_primitive",
    "inviscid_flux",
    "viscous_stress",
    "viscous_flux",
    "roe_flux",
    "br1_interface",
    "boundary_state",
    "scalar_ops",
    "OPS64",
    "OPS32",
    "BC_FAR_FIELD",
    "BC_SLIP_WALL",
    "BC_NO_SLIP_WALL",
]

# numeric BC codes shared with the mesh and the DG kernels
BC_FAR_FIELD = 1
BC_SLIP_WALL = 2
BC_NO_SLIP_WALL = 3

_BC_BY_NAME = {
    "far_field": BC_FAR_FIELD,
    "slip_wall": BC_SLIP_WALL,
    "no_slip_wall": BC_NO_SLIP_WALL,
}


class AdmissibilityError(Exception):
    """A state with non-positive density or pressure was encountered."""

    def __init__(self, message, cell=None, face=None, iteration=None):
        parts = [message]
        if cell is not None:
            parts.append(f"cell {cell}")
        if face is not None:
            parts.append(f"face {face}")
        if iteration is not None:
            parts.append(f"iteration {iteration}")
        super().__init__(", ".join(parts))
        self.cell = cell
        self.face = face
        self.iteration = iteration


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas with constant dynamic viscosity.

    ivis selects the governing equations: 0 drops the viscous terms
    entirely, 1 enables them.
    """

    gamma: float = 1.4
    R: float = 1.0
    mu_dyn: float = 0.0
    Pr: float = 0.72
    ivis: int = 0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if self.R <= 0.0:
            raise ValueError("gas constant must be positive")
        if self.mu_dyn < 0.0:
            raise ValueError("viscosity must be non-negative")
        if self.Pr <= 0.0:
            raise ValueError("Prandtl number must be positive")
        if self.ivis not in (0, 1):
            raise ValueError("ivis must be 0 or 1")

    @property
    def cv(self) -> float:
        return self.R / (self.gamma - 1.0)


@dataclass(frozen=True)
class Conserved:
    rho: float
    rho_u: float
    rho_v: float
    e: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.rho_u, self.rho_v, self.e])

    @classmethod
    def from_array(cls, q) -> "Conserved":
        return cls(float(q[0]), float(q[1]), float(q[2]), float(q[3]))


@dataclass(frozen=True)
class Primitive:
    rho: float
    u: float
    v: float
    p: float
    T: float


@dataclass(frozen=True)
class FluxPair:
    Ex: np.ndarray
    Fy: np.ndarray


@dataclass(frozen=True)
class StressHeat:
    tau_xx: float
    tau_xy: float
    tau_yx: float
    tau_yy: float
    q_x: float
    q_y: float


def scalar_ops(ftype) -> SimpleNamespace:
    """Compile the scalar flux algebra for one floating-point width."""
    F = ftype
    zero = F(0.0)
    half = F(0.5)
    one = F(1.0)
    two = F(2.0)
    quarter = F(0.25)
    two_thirds = F(2.0 / 3.0)
    entropy_fix = F(0.05)  # Harten-Hyman threshold as a fraction of the Roe sound speed

    @njit(cache=True, error_model="numpy")
    def prim(rho, ru, rv, e, gamma, Rgas):
        """(u, v, p, T); caller checks admissibility via p and rho."""
        u = ru / rho
        v = rv / rho
        p = (gamma - one) * (e - half * rho * (u * u + v * v))
        T = p / (rho * Rgas)
        return u, v, p, T

    @njit(cache=True, error_model="numpy")
    def energy(rho, u, v, p, gamma):
        return p / (gamma - one) + half * rho * (u * u + v * v)

    @njit(cache=True, error_model="numpy")
    def fluxn(rho, ru, rv, e, u, v, p, nx, ny):
        """Physical inviscid flux projected on a unit normal."""
        vn = u * nx + v * ny
        return rho * vn, ru * vn + p * nx, rv * vn + p * ny, (e + p) * vn

    @njit(cache=True, error_model="numpy")
    def roe(rL, ruL, rvL, eL, rR, ruR, rvR, eR, nx, ny, gamma):
        """Roe upwind flux with Harten-Hyman entropy fix on the acoustic
        waves. Returns (f0, f1, f2, f3, ok); ok is 0 on an inadmissible
        input state or a failed Roe average."""
        if rL <= zero or rR <= zero:
            return zero, zero, zero, zero, 0
        uL, vL, pL, _ = prim(rL, ruL, rvL, eL, gamma, one)
        uR, vR, pR, _ = prim(rR, ruR, rvR, eR, gamma, one)
        if pL <= zero or pR <= zero:
            return zero, zero, zero, zero, 0

        fL0, fL1, fL2, fL3 = fluxn(rL, ruL, rvL, eL, uL, vL, pL, nx, ny)
        fR0, fR1, fR2, fR3 = fluxn(rR, ruR, rvR, eR, uR, vR, pR, nx, ny)

        sL = np.sqrt(rL)
        sR = np.sqrt(rR)
        den = sL + sR
        ut = (sL * uL + sR * uR) / den
        vt = (sL * vL + sR * vR) / den
        HL = (eL + pL) / rL
        HR = (eR + pR) / rR
        Ht = (sL * HL + sR * HR) / den
        ke = half * (ut * ut + vt * vt)
        a2 = (gamma - one) * (Ht - ke)
        if a2 <= zero:
            return zero, zero, zero, zero, 0
        a = np.sqrt(a2)
        rt = sL * sR
        unt = ut * nx + vt * ny

        dr = rR - rL
        dp = pR - pL
        du = uR - uL
        dv = vR - vL
        dun = (uR * nx + vR * ny) - (uL * nx + vL * ny)

        l1 = np.abs(unt - a)
        l2 = np.abs(unt)
        l4 = np.abs(unt + a)
        delta = entropy_fix * a
        if l1 < delta:
            l1 = half * (l1 * l1 / delta + delta)
        if l4 < delta:
            l4 = half * (l4 * l4 / delta + delta)

        a1 = (dp - rt * a * dun) / (two * a2)
        a4 = (dp + rt * a * dun) / (two * a2)
        a2w = dr - dp / a2

        d0 = l1 * a1 + l2 * a2w + l4 * a4
        d1 = (
            l1 * a1 * (ut - a * nx)
            + l2 * (a2w * ut + rt * (du - dun * nx))
            + l4 * a4 * (ut + a * nx)
        )
        d2 = (
            l1 * a1 * (vt - a * ny)
            + l2 * (a2w * vt + rt * (dv - dun * ny))
            + l4 * a4 * (vt + a * ny)
        )
        d3 = (
            l1 * a1 * (Ht - a * unt)
            + l2 * (a2w * ke + rt * (ut * du + vt * dv - unt * dun))
            + l4 * a4 * (Ht + a * unt)
        )

        return (
            half * (fL0 + fR0) - half * d0,
            half * (fL1 + fR1) - half * d1,
            half * (fL2 + fR2) - half * d2,
            half * (fL3 + fR3) - half * d3,
            1,
        )

    @njit(cache=True, error_model="numpy")
    def vel_temp_grads(rho, ru, rv, e, zx0, zx1, zx2, zx3, zy0, zy1, zy2, zy3, gamma, Rgas):
        """Velocity and temperature gradients from the conserved state and
        its gradient (z = dQ/dx, dQ/dy)."""
        u = ru / rho
        v = rv / rho
        ux = (zx1 - u * zx0) / rho
        vx = (zx2 - v * zx0) / rho
        uy = (zy1 - u * zy0) / rho
        vy = (zy2 - v * zy0) / rho
        ke = half * (u * u + v * v)
        ein = e - rho * ke  # internal energy per volume; T = (g-1) ein / (rho R)
        kx = ke * zx0 + rho * (u * ux + v * vx)
        ky = ke * zy0 + rho * (u * uy + v * vy)
        coef = (gamma - one) / Rgas
        Tx = coef * ((zx3 - kx) * rho - ein * zx0) / (rho * rho)
        Ty = coef * ((zy3 - ky) * rho - ein * zy0) / (rho * rho)
        return u, v, ux, uy, vx, vy, Tx, Ty

    @njit(cache=True, error_model="numpy")
    def stress_heat(ux, uy, vx, vy, Tx, Ty, gamma, Rgas, mu, Pr):
        txx = mu * two_thirds * (two * ux - vy)
        tyy = mu * two_thirds * (two * vy - ux)
        txy = mu * (uy + vx)
        k = mu * gamma * Rgas / ((gamma - one) * Pr)
        return txx, txy, tyy, -k * Tx, -k * Ty

    @njit(cache=True, error_model="numpy")
    def viscn(rho, ru, rv, e, zx0, zx1, zx2, zx3, zy0, zy1, zy2, zy3,
              nx, ny, gamma, Rgas, mu, Pr):
        """Viscous flux projected on a unit normal, from state and gradient."""
        u, v, ux, uy, vx, vy, Tx, Ty = vel_temp_grads(
            rho, ru, rv, e, zx0, zx1, zx2, zx3, zy0, zy1, zy2, zy3, gamma, Rgas
        )
        txx, txy, tyy, qx, qy = stress_heat(ux, uy, vx, vy, Tx, Ty, gamma, Rgas, mu, Pr)
        g1 = txx * nx + txy * ny
        g2 = txy * nx + tyy * ny
        g3 = (u * txx + v * txy - qx) * nx + (u * txy + v * tyy - qy) * ny
        return zero, g1, g2, g3

    @njit(cache=True, error_model="numpy")
    def bstate_slip(rho, ru, rv, e, nx, ny):
        """Normal velocity negated, tangential kept; rho, p unchanged."""
        un2 = two * (ru * nx + rv * ny)
        return rho, ru - un2 * nx, rv - un2 * ny, e

    @njit(cache=True, error_model="numpy")
    def bstate_noslip(rho, ru, rv, e):
        """Velocity negated, density and pressure mirrored (adiabatic)."""
        return rho, -ru, -rv, e

    @njit(cache=True, error_model="numpy")
    def bstate_far(rho, ru, rv, e, nx, ny, rf, ruf, rvf, ef, gamma):
        """Characteristic far-field state from the interior state and the
        freestream; the normal points out of the domain."""
        ui, vi, pi, _ = prim(rho, ru, rv, e, gamma, one)
        uf, vf, pf, _ = prim(rf, ruf, rvf, ef, gamma, one)
        ai = np.sqrt(gamma * pi / rho)
        af = np.sqrt(gamma * pf / rf)
        uni = ui * nx + vi * ny
        unf = uf * nx + vf * ny
        if uni >= ai:  # supersonic outflow
            return rho, ru, rv, e
        if unf <= -af:  # supersonic inflow
            return rf, ruf, rvf, ef
        rplus = uni + two * ai / (gamma - one)
        rminus = unf - two * af / (gamma - one)
        unb = half * (rplus + rminus)
        ab = quarter * (gamma - one) * (rplus - rminus)
        if not (ab > zero):  # invariants crossed (or non-finite input)
            return rf, ruf, rvf, ef
        if unb > zero:  # outflow: entropy and tangential velocity from inside
            s = pi / rho**gamma
            utx = ui - uni * nx
            uty = vi - uni * ny
        else:
            s = pf / rf**gamma
            utx = uf - unf * nx
            uty = vf - unf * ny
        rb = (ab * ab / (gamma * s)) ** (one / (gamma - one))
        pb = rb * ab * ab / gamma
        ub = utx + unb * nx
        vb = uty + unb * ny
        return rb, rb * ub, rb * vb, energy(rb, ub, vb, pb, gamma)

    @njit(cache=True, error_model="numpy")
    def boundary(kind, rho, ru, rv, e, nx, ny, rf, ruf, rvf, ef, gamma):
        if kind == BC_FAR_FIELD:
            return bstate_far(rho, ru, rv, e, nx, ny, rf, ruf, rvf, ef, gamma)
        elif kind == BC_SLIP_WALL:
            return bstate_slip(rho, ru, rv, e, nx, ny)
        else:
            return bstate_noslip(rho, ru, rv, e)

    return SimpleNamespace(
        ftype=ftype,
        prim=prim,
        energy=energy,
        fluxn=fluxn,
        roe=roe,
        vel_temp_grads=vel_temp_grads,
        stress_heat=stress_heat,
        viscn=viscn,
        bstate_slip=bstate_slip,
        bstate_noslip=bstate_noslip,
        bstate_far=bstate_far,
        boundary=boundary,
    )


OPS64 = scalar_ops(np.float64)
OPS32 = scalar_ops(np.float32)


def ops_for(dtype) -> SimpleNamespace:
    dtype = np.dtype(dtype)
    if dtype == np.float64:
        return OPS64
    if dtype == np.float32:
        return OPS32
    raise ValueError(f"unsupported precision {dtype}")


# ---------------------------------------------------------------------------
# Public API over the 64-bit scalar kernels

def _check_admissible(rho, p, **ctx):
    if not (rho > 0.0):
        raise AdmissibilityError(f"non-positive density {rho}", **ctx)
    if not (p > 0.0):
        raise AdmissibilityError(f"non-positive pressure {p}", **ctx)


def primitive_from_conserved(q: Conserved, gas: GasModel) -> Primitive:
    if not (q.rho > 0.0):
        raise AdmissibilityError(f"non-positive density {q.rho}")
    u, v, p, T = OPS64.prim(q.rho, q.rho_u, q.rho_v, q.e, gas.gamma, gas.R)
    _check_admissible(q.rho, p)
    return Primitive(rho=q.rho, u=u, v=v, p=p, T=T)


def conserved_from_primitive(w: Primitive, gas: GasModel) -> Conserved:
    _check_admissible(w.rho, w.p)
    e = OPS64.energy(w.rho, w.u, w.v, w.p, gas.gamma)
    return Conserved(rho=w.rho, rho_u=w.rho * w.u, rho_v=w.rho * w.v, e=e)


def inviscid_flux(q: Conserved, gas: GasModel) -> FluxPair:
    w = primitive_from_conserved(q, gas)
    Ex = np.array(OPS64.fluxn(q.rho, q.rho_u, q.rho_v, q.e, w.u, w.v, w.p, 1.0, 0.0))
    Fy = np.array(OPS64.fluxn(q.rho, q.rho_u, q.rho_v, q.e, w.u, w.v, w.p, 0.0, 1.0))
    return FluxPair(Ex=Ex, Fy=Fy)


def viscous_stress(grad_u: np.ndarray, grad_T: np.ndarray, gas: GasModel) -> StressHeat:
    """grad_u rows are (du/dx, du/dy), (dv/dx, dv/dy)."""
    (ux, uy), (vx, vy) = np.asarray(grad_u, dtype=np.float64)
    Tx, Ty = np.asarray(grad_T, dtype=np.float64)
    txx, txy, tyy, qx, qy = OPS64.stress_heat(
        ux, uy, vx, vy, Tx, Ty, gas.gamma, gas.R, gas.mu_dyn, gas.Pr
    )
    return StressHeat(tau_xx=txx, tau_xy=txy, tau_yx=txy, tau_yy=tyy, q_x=qx, q_y=qy)


def viscous_flux(w: Primitive, stress: StressHeat) -> FluxPair:
    Ex = np.array(
        [
            0.0,
            stress.tau_xx,
            stress.tau_xy,
            w.u * stress.tau_xx + w.v * stress.tau_xy - stress.q_x,
        ]
    )
    Fy = np.array(
        [
            0.0,
            stress.tau_yx,
            stress.tau_yy,
            w.u * stress.tau_yx + w.v * stress.tau_yy - stress.q_y,
        ]
    )
    return FluxPair(Ex=Ex, Fy=Fy)


def roe_flux(qL: Conserved, qR: Conserved, n, gas: GasModel) -> np.ndarray:
    nx, ny = float(n[0]), float(n[1])
    f0, f1, f2, f3, ok = OPS64.roe(
        qL.rho, qL.rho_u, qL.rho_v, qL.e,
        qR.rho, qR.rho_u, qR.rho_v, qR.e,
        nx, ny, gas.gamma,
    )
    if not ok:
        raise AdmissibilityError("inadmissible state or failed Roe average")
    return np.array([f0, f1, f2, f3])


def br1_interface(qL: Conserved, qR: Conserved, zL, zR, n, gas: GasModel):
    """Central trace average and central viscous interface flux.

    zL, zR are (2, 4) arrays holding (dQ/dx, dQ/dy) on each side. Returns
    (q_hat, hv), both 4-vectors.
    """
    nx, ny = float(n[0]), float(n[1])
    zL = np.asarray(zL, dtype=np.float64)
    zR = np.asarray(zR, dtype=np.float64)
    qa = qL.as_array()
    qb = qR.as_array()
    q_hat = 0.5 * (qa + qb)
    hL = OPS64.viscn(*qa, *zL[0], *zL[1], nx, ny, gas.gamma, gas.R, gas.mu_dyn, gas.Pr)
    hR = OPS64.viscn(*qb, *zR[0], *zR[1], nx, ny, gas.gamma, gas.R, gas.mu_dyn, gas.Pr)
    hv = 0.5 * (np.array(hL) + np.array(hR))
    return q_hat, hv


def boundary_state(q_in: Conserved, kind: str, n, freestream: Conserved, gas: GasModel) -> Conserved:
    code = _BC_BY_NAME.get(kind)
    if code is None:
        raise ValueError(f"unknown boundary kind {kind!r}")
    primitive_from_conserved(q_in, gas)  # admissibility gate
    nx, ny = float(n[0]), float(n[1])
    out = OPS64.boundary(
        code,
        q_in.rho, q_in.rho_u, q_in.rho_v, q_in.e,
        nx, ny,
        freestream.rho, freestream.rho_u, freestream.rho_v, freestream.e,
        gas.gamma,
    )
    return Conserved(*map(float, out))
