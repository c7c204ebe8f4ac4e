"""Performance measurement and modeling: dual-phase timing, analytic
FLOP/DRAM-byte counters, arithmetic intensity, and roofline evaluation.

Counters are analytic rather than sampled from hardware: every add, mul,
div and sqrt counts as one FLOP (comparisons, casts and negations are
free), and the traffic model charges each float array touched by a pass
exactly once at the active precision width. The byte model is therefore an
ideal lower bound on true DRAM traffic, making the derived arithmetic
intensity an upper bound; index/topology arrays are excluded so traffic
scales exactly with the precision width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .physics import GasModel
from .quadrature import face_rule_size, volume_rule_size
from .basis import N_BASIS

__all__ = [
    "PerfSample",
    "MachineModel",
    "dual_phase",
    "count_flops_and_bytes",
    "roofline_attainable",
    "emit_roofline_csv",
    "emit_timing_csv",
    "ROE_FLOPS",
    "BOUNDARY_FLOPS",
    "PRIM_FLOPS",
    "VISCN_FLOPS",
    "INVISCID_VOL_FLOPS",
]

# Hand-counted operation totals of the scalar kernels (adds, muls, divs and
# sqrts each count 1; the entropy-fix branch is included).
PRIM_FLOPS = 12
ENERGY_FLOPS = 8
FLUXN_FLOPS = 12
ROE_FLOPS = 185
BOUNDARY_FLOPS = 79  # characteristic far-field state; used for every kind
VTGRADS_FLOPS = 48
STRESS_FLOPS = 17
VISCN_FLOPS = 82
INVISCID_VOL_FLOPS = 10  # assembling E and F components from (q, u, v, p)


@dataclass(frozen=True)
class PerfSample:
    wall_seconds: float
    flops: float
    dram_bytes: float
    iterations: int

    def __post_init__(self):
        if min(self.wall_seconds, self.flops, self.dram_bytes, self.iterations) < 0:
            raise ValueError("performance sample fields must be non-negative")

    @property
    def achieved_flops(self) -> float:
        return self.flops / self.wall_seconds if self.wall_seconds > 0 else 0.0

    @property
    def arithmetic_intensity(self) -> float:
        return self.flops / self.dram_bytes if self.dram_bytes > 0 else 0.0


@dataclass(frozen=True)
class MachineModel:
    label: str
    peak_flops: float
    peak_bandwidth: float

    def __post_init__(self):
        if self.peak_flops <= 0 or self.peak_bandwidth <= 0:
            raise ValueError("machine peaks must be positive")


def dual_phase(run_fn, n1: int, n2: int) -> PerfSample:
    """Per-iteration cost isolated by running twice and differencing.

    `run_fn(iterations)` executes the full application (including pre- and
    post-processing) and returns a PerfSample of totals; the subtraction
    removes everything that does not scale with the iteration count.
    """
    if n1 < 1 or n2 <= n1:
        raise ValueError("need n2 > n1 >= 1")
    s1 = run_fn(n1)
    s2 = run_fn(n2)
    d = n2 - n1
    return PerfSample(
        wall_seconds=(s2.wall_seconds - s1.wall_seconds) / d,
        flops=(s2.flops - s1.flops) / d,
        dram_bytes=(s2.dram_bytes - s1.dram_bytes) / d,
        iterations=1,
    )


def _pass_counts(mesh: Mesh, order: int, ivis: int):
    nb = N_BASIS[order]
    nqf = face_rule_size(order)
    n_tri = int(np.count_nonzero(mesh.cell_nvert == 3))
    n_quad = mesh.n_cells - n_tri
    vol_pts = n_tri * volume_rule_size(order, "triangle") + n_quad * volume_rule_size(
        order, "quadrilateral"
    )
    n_interior = mesh.n_interior_faces
    n_boundary = mesh.n_faces - n_interior
    return nb, nqf, vol_pts, n_interior, n_boundary


def count_flops_and_bytes(
    mesh: Mesh, order: int, gas: GasModel, precision_bits: int = 64, detail: bool = False
):
    """Analytic per-iteration FLOPs and ideal DRAM bytes for one time step
    (two spatial-residual evaluations, the time-step pass, the reduction
    and the two Runge-Kutta updates) at the given precision width.

    With detail=True also returns the per-pass FLOP breakdown.
    """
    if precision_bits not in (32, 64):
        raise ValueError("precision_bits must be 32 or 64")
    nb, nqf, vol_pts, n_interior, n_boundary = _pass_counts(mesh, order, gas.ivis)
    n_cells = mesh.n_cells
    n_faces = mesh.n_faces
    trace = 2 * nb  # one dotted basis evaluation: nb mul + nb add
    iq = n_interior * nqf
    bq = n_boundary * nqf

    flux = iq * (8 * trace + ROE_FLOPS) + bq * (4 * trace + PRIM_FLOPS + BOUNDARY_FLOPS + ROE_FLOPS)
    if gas.ivis:
        flux += iq * (16 * trace + 2 * VISCN_FLOPS + 16)
        flux += bq * (8 * trace + 2 * VISCN_FLOPS + 16)

    vol = vol_pts * (4 * trace + PRIM_FLOPS + INVISCID_VOL_FLOPS + nb * 18)
    if gas.ivis:
        vol += vol_pts * (8 * trace + VTGRADS_FLOPS + STRESS_FLOPS + 12)
    gather = (2 * n_interior + n_boundary) * nqf * (3 + (4 if gas.ivis else 0) + 9 * nb)
    solve = n_cells * 8 * nb * nb
    cellpass = vol + gather + solve

    aux = 0
    if gas.ivis:
        qhat = iq * (8 * trace + 8) + bq * (4 * trace + PRIM_FLOPS + BOUNDARY_FLOPS + 8)
        auxvol = vol_pts * (4 * trace + nb * 18)
        auxface = (2 * n_interior + n_boundary) * nqf * (5 + nb * 24)
        auxsolve = n_cells * 2 * 8 * nb * nb
        aux = qhat + auxvol + auxface + auxsolve

    dt_pass = n_cells * (8 * nb + 20)
    rk = n_cells * 4 * nb * (2 + 4)

    per_rhs = aux + flux + cellpass
    total = dt_pass + 2 * per_rhs + rk

    # ideal traffic in float elements touched per pass
    state = n_cells * 4 * nb
    auxsz = n_cells * 8 * nb
    traces_sz = 2 * n_faces * nqf * nb
    voltabs = 3 * vol_pts * nb + vol_pts  # basis, gradx, grady, weights
    facebuf = n_faces * nqf * 4
    minv_sz = n_cells * nb * nb
    mean_sz = n_cells * nb

    elems = 0
    # dt pass: coefficients, basis means, h, dt out
    elems += state + mean_sz + 2 * n_cells
    per_rhs_elems = 0
    if gas.ivis:
        # qhat pass + aux pass
        per_rhs_elems += state + traces_sz + facebuf
        per_rhs_elems += state + facebuf + voltabs + traces_sz + minv_sz + auxsz
    # flux pass
    per_rhs_elems += state + traces_sz + 2 * n_faces + facebuf
    if gas.ivis:
        per_rhs_elems += auxsz + 2 * facebuf
    # cell pass
    per_rhs_elems += state + voltabs + facebuf + traces_sz + minv_sz + state
    if gas.ivis:
        per_rhs_elems += auxsz + facebuf
    elems += 2 * per_rhs_elems
    # two RK updates: read u, r, dt; write out (plus u1 in the combine)
    elems += 2 * (3 * state + n_cells) + state
    bytes_total = elems * (precision_bits // 8)

    if detail:
        return total, bytes_total, {
            "flux_pass": flux,
            "cell_pass": cellpass,
            "aux_passes": aux,
            "dt_pass": dt_pass,
            "rk_updates": rk,
        }
    return total, bytes_total


def roofline_attainable(machine: MachineModel, ai: float) -> float:
    """min(peak compute, peak bandwidth * arithmetic intensity)."""
    if ai < 0:
        raise ValueError("arithmetic intensity must be non-negative")
    return min(machine.peak_flops, machine.peak_bandwidth * ai)


def emit_roofline_csv(samples, machines, path, check: bool = False) -> None:
    """One row per (sample, machine): label, ai, achieved_flops, machine,
    attainable_flops, bound. With check=True, raises if a sample exceeds
    its machine's attainable rate (useful for model-consistent fixtures).
    """
    samples = list(samples)
    machines = list(machines)
    if not samples or not machines:
        raise ValueError("need at least one sample and one machine model")
    lines = [
        "# analytic ideal-traffic byte model: every float array is counted once"
        " per pass, so ai is an upper bound",
        "label,ai,achieved_flops,machine,attainable_flops,bound",
    ]
    for label, s in samples:
        ai = s.arithmetic_intensity
        achieved = s.achieved_flops
        for m in machines:
            attainable = roofline_attainable(m, ai)
            bound = "memory" if m.peak_bandwidth * ai < m.peak_flops else "compute"
            if check and achieved > attainable * (1 + 1e-9):
                raise ValueError(
                    f"sample {label!r} achieves {achieved:.3e} above the "
                    f"{m.label} roof {attainable:.3e}"
                )
            lines.append(
                f"{label},{float(ai)!r},{float(achieved)!r},{m.label},"
                f"{float(attainable)!r},{bound}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_timing_csv(rows, path) -> None:
    """Scalability timings: rows of (label, workers, seconds_per_iter)."""
    with open(path, "w") as fh:
        fh.write("label,workers,seconds_per_iter\n")
        for label, workers, seconds in rows:
            fh.write(f"{label},{int(workers)},{float(seconds)!r}\n")
