"""File outputs of a solver run: legacy-ASCII VTK fields, the residual
history CSV, and the run log (a reloadable resolved config followed by
commented statistics).

Residual CSV columns: iter,res_rho,res_rhou,res_rhov,res_e,dt,precision.
Floats are written with repr so reruns reproduce files bytewise.
"""

from __future__ import annotations

import numpy as np

from .dg import DofState, cell_means
from .mesh import Mesh
from .physics import GasModel

RESIDUAL_CSV_HEADER = "iter,res_rho,res_rhou,res_rhov,res_e,dt,precision"


def write_residual_csv(path, history) -> None:
    with open(path, "w") as fh:
        fh.write(RESIDUAL_CSV_HEADER + "\n")
        for it, res, dt, bits in zip(
            history.iterations, history.res, history.dts, history.precision
        ):
            fh.write(
                f"{it},{res[0]!r},{res[1]!r},{res[2]!r},{res[3]!r},{dt!r},{bits}\n"
            )


def read_residual_csv(path):
    """(iterations, res (n, 4), dt, precision) arrays from a residual CSV."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != RESIDUAL_CSV_HEADER:
            raise ValueError(f"{path}: unexpected residual CSV header {header!r}")
        rows = [line.split(",") for line in fh.read().splitlines() if line]
    if not rows:
        return (
            np.empty(0, dtype=np.int64),
            np.empty((0, 4)),
            np.empty(0),
            np.empty(0, dtype=np.int64),
        )
    data = np.array(rows, dtype=object)
    return (
        data[:, 0].astype(np.int64),
        data[:, 1:5].astype(np.float64),
        data[:, 5].astype(np.float64),
        data[:, 6].astype(np.int64),
    )


def write_vtk(path, mesh: Mesh, state: DofState, geo, gas: GasModel) -> None:
    """Cell-mean fields (rho, u, v, p, Mach) on the unstructured grid."""
    means = cell_means(state, geo)
    rho = means[:, 0]
    u = means[:, 1] / rho
    v = means[:, 2] / rho
    p = (gas.gamma - 1.0) * (means[:, 3] - 0.5 * rho * (u * u + v * v))
    a = np.sqrt(np.maximum(gas.gamma * p / rho, 0.0))
    mach = np.divide(np.hypot(u, v), a, out=np.zeros_like(a), where=a > 0)

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("hodg cell-mean flow field\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.node_xy:
            fh.write(f"{float(x)!r} {float(y)!r} 0.0\n")
        sizes = mesh.cell_nvert.astype(np.int64)
        fh.write(f"CELLS {mesh.n_cells} {int(np.sum(sizes + 1))}\n")
        for c in range(mesh.n_cells):
            nv = int(sizes[c])
            fh.write(f"{nv} " + " ".join(str(n) for n in mesh.cell_nodes[c, :nv]) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_cells}\n")
        for c in range(mesh.n_cells):
            fh.write("5\n" if sizes[c] == 3 else "9\n")
        fh.write(f"CELL_DATA {mesh.n_cells}\n")
        for name, vals in (("rho", rho), ("u", u), ("v", v), ("p", p), ("Mach", mach)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for val in vals:
                fh.write(f"{float(val)!r}\n")


def write_run_log(path, config, stats: dict) -> None:
    """Resolved config in reloadable form, then one commented stat per line."""
    with open(path, "w") as fh:
        fh.write(config.to_ini_text())
        fh.write("\n")
        for key, value in stats.items():
            fh.write(f"# {key} = {value}\n")
