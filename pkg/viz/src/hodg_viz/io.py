"""Parsers for the solver's output files.

Formats consumed here:
  - MatrixMarket coordinate pattern (symmetric header, both triangles
    stored explicitly, 1-based indices) from the renumbering export
  - roofline CSV: label,ai,achieved_flops,machine,attainable_flops,bound
  - residual CSV: iter,res_rho,res_rhou,res_rhov,res_e,dt,precision
  - timing CSV: label,workers,seconds_per_iter
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MM_HEADER = "%%MatrixMarket matrix coordinate pattern symmetric"


@dataclass
class SpyPattern:
    n: int
    rows: np.ndarray  # 0-based
    cols: np.ndarray

    @property
    def bandwidth(self) -> int:
        if self.rows.size == 0:
            return 0
        return int(np.max(np.abs(self.rows - self.cols)))


def read_spy(path) -> SpyPattern:
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines or lines[0] != MM_HEADER:
        raise ValueError(f"{path}: expected header {MM_HEADER!r}")
    body = [l for l in lines[1:] if not l.startswith("%")]
    try:
        n, m, nnz = (int(v) for v in body[0].split())
    except (IndexError, ValueError):
        raise ValueError(f"{path}: bad size line") from None
    if n != m:
        raise ValueError(f"{path}: pattern must be square, got {n}x{m}")
    entries = body[1:]
    if len(entries) != nnz:
        raise ValueError(f"{path}: expected {nnz} entries, found {len(entries)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    for k, line in enumerate(entries):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: bad entry {line!r}")
        rows[k] = int(parts[0]) - 1
        cols[k] = int(parts[1]) - 1
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise ValueError(f"{path}: index out of range")
    # the exporter stores both triangles; anything else is asymmetric
    present = set(zip(rows.tolist(), cols.tolist()))
    for i, j in present:
        if i != j and (j, i) not in present:
            raise ValueError(f"{path}: asymmetric pattern, ({i + 1}, {j + 1}) unmatched")
    return SpyPattern(n=n, rows=rows, cols=cols)


@dataclass
class RooflineRow:
    label: str
    ai: float
    achieved: float
    machine: str
    attainable: float
    bound: str


def read_roofline_csv(path) -> list[RooflineRow]:
    rows = []
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip() and not l.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty roofline CSV")
    header = "label,ai,achieved_flops,machine,attainable_flops,bound"
    if lines[0] != header:
        raise ValueError(f"{path}: unexpected header {lines[0]!r}")
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}: malformed row {line!r}")
        rows.append(
            RooflineRow(
                label=parts[0], ai=float(parts[1]), achieved=float(parts[2]),
                machine=parts[3], attainable=float(parts[4]), bound=parts[5],
            )
        )
    if not rows:
        raise ValueError(f"{path}: no samples")
    return rows


def machine_roof(rows: list[RooflineRow]):
    """(peak_bandwidth, peak_flops or None) recovered from one machine's
    rows: memory-bound rows give the slope, compute-bound rows the cap."""
    bw = None
    peak = None
    for r in rows:
        if r.bound == "memory" and r.ai > 0:
            bw = r.attainable / r.ai
        elif r.bound == "compute":
            peak = r.attainable
    return bw, peak


def read_residual_csv(path):
    header = "iter,res_rho,res_rhou,res_rhov,res_e,dt,precision"
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines or lines[0] != header:
        raise ValueError(f"{path}: unexpected residual CSV header")
    if len(lines) == 1:
        raise ValueError(f"{path}: no residual rows")
    data = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"{path}: malformed row {line!r}")
        data.append(parts)
    arr = np.array(data, dtype=object)
    return {
        "iter": arr[:, 0].astype(np.int64),
        "res": arr[:, 1:5].astype(np.float64),
        "dt": arr[:, 5].astype(np.float64),
        "precision": arr[:, 6].astype(np.int64),
    }


def read_timing_csv(path):
    header = "label,workers,seconds_per_iter"
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines or lines[0] != header:
        raise ValueError(f"{path}: unexpected timing CSV header")
    if len(lines) == 1:
        raise ValueError(f"{path}: no timing rows")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed row {line!r}")
        out.append((parts[0], int(parts[1]), float(parts[2])))
    return out
