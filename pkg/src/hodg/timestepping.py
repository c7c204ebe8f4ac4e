"""Time integration: local CFL time steps, a deterministic block-tree
minimum reduction, the two-stage explicit Runge-Kutta advance, residual
monitoring, and the outer iteration driver.

The driver is single-threaded orchestration; the inner passes delegate to
the data-parallel DG kernels. The minimum reduction combines fixed-size
blocks in a fixed order, so the global time step is bitwise equal to the
sequential minimum for any worker count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import numba
from numba import njit, prange

from . import output as output_mod
from .dg import BoundaryConditions, DofState, Residual, project_initial, rhs
from .geometry import compute_geometry
from .mesh import Mesh
from .physics import AdmissibilityError, Conserved, GasModel
from .precision import PrecisionController, PrecisionEvent, demote, promote

__all__ = [
    "StepControl",
    "ResidualHistory",
    "RunArtifacts",
    "SolverDivergedError",
    "local_dt",
    "min_reduce",
    "rk2_step",
    "residual_l2",
    "run",
]


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.3
    mode: str = "local"  # local pseudo-time march | global time-accurate
    dt_floor: float = 0.0

    def __post_init__(self):
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")
        if self.mode not in ("local", "global"):
            raise ValueError(f"unknown dt mode {self.mode!r}")
        if self.dt_floor < 0.0:
            raise ValueError("dt_floor must be non-negative")


@dataclass
class ResidualHistory:
    """Per-logged-iteration L2 norms of the four residual components."""

    iterations: list[int] = field(default_factory=list)
    res: list[tuple[float, float, float, float]] = field(default_factory=list)
    dts: list[float] = field(default_factory=list)
    precision: list[int] = field(default_factory=list)

    def append(self, iteration, res4, dt, bits):
        self.iterations.append(int(iteration))
        self.res.append(tuple(float(r) for r in res4))
        self.dts.append(float(dt))
        self.precision.append(int(bits))

    @property
    def res_rho(self) -> list[float]:
        return [r[0] for r in self.res]

    def as_arrays(self):
        return (
            np.asarray(self.iterations, dtype=np.int64),
            np.asarray(self.res, dtype=np.float64).reshape(-1, 4),
            np.asarray(self.dts, dtype=np.float64),
            np.asarray(self.precision, dtype=np.int64),
        )


class SolverDivergedError(RuntimeError):
    def __init__(self, iteration, history):
        super().__init__(f"non-finite residual at iteration {iteration}")
        self.iteration = iteration
        self.history = history


def local_dt(q: Conserved, h: float, gas: GasModel, cfl: float, order: int) -> float:
    """CFL time step for one cell: cfl * h / ((2p+1) (|u| + a + 2 mu (2p+1)/(rho h)))."""
    if not (q.rho > 0.0):
        raise AdmissibilityError(f"non-positive density {q.rho}")
    u = q.rho_u / q.rho
    v = q.rho_v / q.rho
    p = (gas.gamma - 1.0) * (q.e - 0.5 * q.rho * (u * u + v * v))
    if not (p > 0.0):
        raise AdmissibilityError(f"non-positive pressure {p}")
    a = np.sqrt(gas.gamma * p / q.rho)
    fac = 2.0 * order + 1.0
    speed = np.hypot(u, v) + a + 2.0 * gas.mu_dyn * fac / (q.rho * h)
    return float(cfl * h / (fac * speed))


@njit(parallel=True, cache=True, error_model="numpy")
def _dt_pass(coeffs, basis_mean, h, gamma, mu, cfl, order, out, errc):
    n_cells = coeffs.shape[0]
    nb = coeffs.shape[2]
    fac = 2.0 * order + 1.0
    for c in prange(n_cells):
        m0 = 0.0
        m1 = 0.0
        m2 = 0.0
        m3 = 0.0
        for j in range(nb):
            b = basis_mean[c, j]
            m0 += b * coeffs[c, 0, j]
            m1 += b * coeffs[c, 1, j]
            m2 += b * coeffs[c, 2, j]
            m3 += b * coeffs[c, 3, j]
        if m0 <= 0.0:
            errc[c] = 1
            out[c] = 0.0
            continue
        u = m1 / m0
        v = m2 / m0
        p = (gamma - 1.0) * (m3 - 0.5 * m0 * (u * u + v * v))
        if p <= 0.0:
            errc[c] = 1
            out[c] = 0.0
            continue
        a = np.sqrt(gamma * p / m0)
        speed = np.sqrt(u * u + v * v) + a + 2.0 * mu * fac / (m0 * h[c])
        out[c] = cfl * h[c] / (fac * speed)


def local_dt_field(state: DofState, mesh: Mesh, geo, gas: GasModel, cfl: float, order: int) -> np.ndarray:
    """Per-cell CFL time steps from the cell-mean states (64-bit)."""
    out = np.empty(mesh.n_cells)
    errc = np.zeros(mesh.n_cells, dtype=np.uint8)
    _dt_pass(state.coeffs, geo.basis_mean, mesh.cell_h, gas.gamma, gas.mu_dyn,
             cfl, order, out, errc)
    if errc.any():
        cell = int(np.nonzero(errc)[0][0])
        raise AdmissibilityError("inadmissible cell mean", cell=cell,
                                 iteration=state.iteration)
    return out


def min_reduce(values, block_size: int = 256) -> float:
    """Exact minimum via block-tree reduction: fixed-size blocks are each
    reduced, then the block results are reduced again until one value
    remains. Bitwise equal to a sequential left-fold with np.minimum."""
    a = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("min_reduce of empty array")
    if block_size < 2:
        raise ValueError("block size must be at least 2")
    while a.size > 1:
        starts = np.arange(0, a.size, block_size)
        a = np.minimum.reduceat(a, starts)
    return float(a[0])


@njit(parallel=True, cache=True, error_model="numpy")
def _axpy_state(u, r, dtc, out):
    for c in prange(u.shape[0]):
        dt = dtc[c]
        for v in range(u.shape[1]):
            for j in range(u.shape[2]):
                out[c, v, j] = u[c, v, j] + dt * r[c, v, j]


@njit(parallel=True, cache=True, error_model="numpy")
def _combine_state(u, u1, r1, dtc, out):
    for c in prange(u.shape[0]):
        dt = dtc[c]
        for v in range(u.shape[1]):
            for j in range(u.shape[2]):
                out[c, v, j] = 0.5 * (u[c, v, j] + u1[c, v, j] + dt * r1[c, v, j])


def _dt_vector(dt, n_cells: int) -> np.ndarray:
    if np.ndim(dt) == 0:
        return np.full(n_cells, float(dt))
    dt = np.asarray(dt, dtype=np.float64)
    if dt.shape != (n_cells,):
        raise ValueError("per-cell dt has wrong length")
    return dt


def rk2_step(state: DofState, dt, rhs_fn) -> DofState:
    """Heun two-stage advance: u1 = u + dt R(u); u' = (u + u1 + dt R(u1))/2.

    `dt` is a scalar or a per-cell array; rhs_fn is called exactly twice.
    """
    dtc = _dt_vector(dt, state.coeffs.shape[0])
    r0 = rhs_fn(state)
    u1 = np.empty_like(state.coeffs)
    _axpy_state(state.coeffs, r0.res, dtc, u1)
    s1 = DofState(coeffs=u1, iteration=state.iteration)
    r1 = rhs_fn(s1)
    out = np.empty_like(state.coeffs)
    _combine_state(state.coeffs, u1, r1.res, dtc, out)
    return DofState(coeffs=out, iteration=state.iteration + 1)


def residual_l2(residual: Residual, mesh: Mesh) -> np.ndarray:
    """Per-variable sqrt(sum over cells of area * mean-mode-residual^2)."""
    r0 = residual.res[:, :, 0]
    return np.sqrt(np.sum(mesh.cell_area[:, None] * r0 * r0, axis=0))


@dataclass
class RunArtifacts:
    final_state: DofState
    history: ResidualHistory
    events: list[PrecisionEvent]
    mesh: Mesh
    geo: object
    config: object
    iterations_run: int
    setup_seconds: float
    iterate_seconds: float
    flops: float
    dram_bytes: float
    constant_count: int
    bandwidth_before: int | None = None
    bandwidth_after: int | None = None
    output_files: list[str] = field(default_factory=list)


class _RhsRecorder:
    """Wraps the spatial residual so the driver can log the first-stage
    residual of each step without an extra evaluation."""

    def __init__(self, mesh, geo, bcs, gas):
        self.mesh = mesh
        self.geo = geo
        self.bcs = bcs
        self.gas = gas
        self.first: Residual | None = None
        self.calls = 0

    def start_step(self):
        self.first = None

    def __call__(self, state: DofState) -> Residual:
        r = rhs(state, self.mesh, self.geo, self.bcs, self.gas)
        if self.first is None:
            self.first = r
        self.calls += 1
        return r


def run(config, mesh: Mesh | None = None) -> RunArtifacts:
    """Drive a full solve from a RunConfig: optional cell renumbering,
    geometry setup, initial projection, the precision-controlled iteration
    loop, and periodic residual/field output.

    Raises SolverDivergedError when the residual goes non-finite; the
    exception carries the history up to the last good iteration.
    """
    from . import perf as perf_mod
    from .renumber import apply_permutation, bandwidth, build_adjacency, random_permutation, rcm

    t0 = time.perf_counter()
    if mesh is None:
        mesh = config.make_mesh()
    gas = config.gas_model()
    freestream = config.freestream_conserved()
    bcs = BoundaryConditions(freestream)

    bw_before = bw_after = None
    if config.randomize_cells is not None:
        mesh = apply_permutation(mesh, random_permutation(mesh.n_cells, config.randomize_cells))
    if config.renumber:
        graph = build_adjacency(mesh)
        perm = rcm(graph)
        bw_before = bandwidth(graph)
        bw_after = bandwidth(graph, perm)
        mesh = apply_permutation(mesh, perm)

    geo = compute_geometry(mesh, config.order)
    state = project_initial(mesh, geo, config.initial_field(gas), gas)
    controller = PrecisionController(config.precision_schedule())
    history = ResidualHistory()
    events: list[PrecisionEvent] = []
    recorder = _RhsRecorder(mesh, geo, bcs, gas)

    flops_it, bytes_it = perf_mod.count_flops_and_bytes(mesh, config.order, gas)

    out_files: list[str] = []
    prefix = config.output_prefix
    written: set[int] = set()

    def write_field(iteration):
        if prefix is None or iteration in written:
            return
        path = f"{prefix}_{iteration:06d}.vtk"
        output_mod.write_vtk(path, mesh, state, geo, gas)
        out_files.append(path)
        written.add(iteration)

    sched = config.precision_schedule()
    starts_reduced = sched.mode == "sp" or sched.mode == "mp_rebound" or (
        sched.mode == "mp_fixed" and sched.switch_iter > 0
    )
    if starts_reduced:
        state = demote(state)

    prev_threads = numba.get_num_threads()
    numba.set_num_threads(config.workers)
    setup_seconds = time.perf_counter() - t0
    t_sim = 0.0
    iterations_run = 0
    t1 = time.perf_counter()
    try:
        if config.max_iterations == 0:
            write_field(0)
        for it in range(config.max_iterations):
            bits, event = controller.decide(it, history.res_rho)
            if event is not None:
                events.append(event)
            if bits == 64 and state.precision_bits == 32:
                state = promote(state)

            dts = local_dt_field(state, mesh, geo, gas, config.cfl, config.order)
            if config.dt_floor > 0.0:
                np.maximum(dts, config.dt_floor, out=dts)
            if config.dt_mode == "global":
                dt = config.dt_fixed if config.dt_fixed is not None else min_reduce(dts)
                if config.t_final is not None:
                    if t_sim >= config.t_final - 1e-14:
                        break
                    dt = min(dt, config.t_final - t_sim)
                dtv = np.full(mesh.n_cells, dt)
                dt_log = dt
            else:
                dtv = dts
                dt_log = min_reduce(dts)

            recorder.start_step()
            state = rk2_step(state, dtv, recorder)
            iterations_run = it + 1
            if config.dt_mode == "global":
                t_sim += dt_log

            if config.log_every and (it % config.log_every == 0 or it == config.max_iterations - 1):
                res4 = residual_l2(recorder.first, mesh)
                if not np.all(np.isfinite(res4)):
                    raise SolverDivergedError(it, history)
                history.append(it, res4, dt_log, bits)
                if config.residual_target is not None and np.all(res4 < config.residual_target):
                    break
            if config.output_every and (it + 1) % config.output_every == 0:
                write_field(it + 1)
    finally:
        numba.set_num_threads(prev_threads)
    iterate_seconds = time.perf_counter() - t1

    if config.max_iterations > 0:
        write_field(iterations_run)
    if prefix is not None:
        csv_path = f"{prefix}_residuals.csv"
        output_mod.write_residual_csv(csv_path, history)
        out_files.append(csv_path)
        log_path = f"{prefix}_run.log"
        output_mod.write_run_log(
            log_path,
            config,
            dict(
                cells=mesh.n_cells,
                faces=mesh.n_faces,
                geometry_constants=geo.constant_count(),
                bandwidth_before=bw_before,
                bandwidth_after=bw_after,
                setup_seconds=setup_seconds,
                iterate_seconds=iterate_seconds,
                flops_per_iteration=flops_it,
                dram_bytes_per_iteration=bytes_it,
            ),
        )
        out_files.append(log_path)

    return RunArtifacts(
        final_state=state,
        history=history,
        events=events,
        mesh=mesh,
        geo=geo,
        config=config,
        iterations_run=iterations_run,
        setup_seconds=setup_seconds,
        iterate_seconds=iterate_seconds,
        flops=flops_it * iterations_run,
        dram_bytes=bytes_it * iterations_run,
        constant_count=geo.constant_count(),
        bandwidth_before=bw_before,
        bandwidth_after=bw_after,
        output_files=out_files,
    )
