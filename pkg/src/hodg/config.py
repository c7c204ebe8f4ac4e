"""Run configuration: a flat key = value file with sections, resolved into
a dataclass that builds the mesh, gas model, freestream, initial field and
precision schedule for the driver.

The serialized form round-trips exactly (floats are written with repr), so
a run log can be reloaded to reproduce a run bit for bit.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from . import flows
from .mesh import Mesh, generate_quad_grid, generate_tri_grid, load_mesh
from .physics import Conserved, GasModel
from .precision import PrecisionSchedule
from .timestepping import StepControl

__all__ = ["ConfigError", "RunConfig"]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    # mesh: either a file path or a generator spec
    mesh_path: str | None = None
    gen_kind: str | None = None  # quad | tri
    gen_nx: int = 0
    gen_ny: int = 0
    gen_extent: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    gen_bc: str = "far_field"
    # gas
    gamma: float = 1.4
    R: float = 1.0
    mu_dyn: float | None = None
    Pr: float = 0.72
    ivis: int = 0
    # freestream
    mach: float = 0.3
    angle_deg: float = 0.0
    reynolds: float | None = None
    # initial field
    initial_kind: str = "freestream"  # freestream | vortex | pulse
    vortex_beta: float = 5.0
    initial_x0: float = 0.0
    initial_y0: float = 0.0
    pulse_amplitude: float = 0.2
    pulse_sigma: float = 0.1
    # solver
    order: int = 1
    cfl: float = 0.3
    dt_mode: str = "local"
    dt_floor: float = 0.0
    dt_fixed: float | None = None
    t_final: float | None = None
    max_iterations: int = 100
    residual_target: float | None = None
    workers: int = 1
    renumber: bool = False
    randomize_cells: int | None = None
    # precision
    precision_mode: str = "dp"
    switch_iter: int = 0
    window: int = 200
    factor: float = 2.0
    # output
    output_prefix: str | None = None
    log_every: int = 1
    output_every: int = 0

    def __post_init__(self):
        if self.mesh_path is None and self.gen_kind is None:
            raise ConfigError("config needs either a mesh path or a generator")
        if self.gen_kind is not None and self.gen_kind not in ("quad", "tri"):
            raise ConfigError(f"unknown generator {self.gen_kind!r}")
        if self.order not in (0, 1, 2):
            raise ConfigError("order must be 0, 1 or 2")
        if self.mach <= 0.0:
            raise ConfigError("freestream Mach number must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be non-negative")
        if self.initial_kind not in ("freestream", "vortex", "pulse"):
            raise ConfigError(f"unknown initial field {self.initial_kind!r}")
        StepControl(cfl=self.cfl, mode=self.dt_mode, dt_floor=self.dt_floor)
        self.precision_schedule()
        self.gas_model()

    # ------------------------------------------------------------------
    def make_mesh(self) -> Mesh:
        if self.mesh_path is not None:
            return load_mesh(self.mesh_path)
        gen = generate_quad_grid if self.gen_kind == "quad" else generate_tri_grid
        return gen(self.gen_nx, self.gen_ny, self.gen_extent, self.gen_bc)

    def gas_model(self) -> GasModel:
        mu = self.mu_dyn
        if mu is None:
            if self.ivis and self.reynolds:
                # Reynolds nondimensionalization with unit density and length
                a = (self.gamma * self.R) ** 0.5
                mu = self.mach * a / self.reynolds
            else:
                mu = 0.0
        return GasModel(gamma=self.gamma, R=self.R, mu_dyn=mu, Pr=self.Pr, ivis=self.ivis)

    def freestream_conserved(self) -> Conserved:
        return flows.freestream_conserved(self.gas_model(), self.mach, self.angle_deg)

    def initial_field(self, gas: GasModel):
        if self.initial_kind == "freestream":
            w = flows.freestream_primitive(gas, self.mach, self.angle_deg)
            return lambda x, y: w
        if self.initial_kind == "vortex":
            return lambda x, y: flows.vortex_primitive(
                gas, self.mach, self.angle_deg, self.vortex_beta,
                self.initial_x0, self.initial_y0, 0.0, x, y,
            )
        return lambda x, y: flows.pulse_primitive(
            gas, self.pulse_amplitude, self.pulse_sigma,
            self.initial_x0, self.initial_y0, x, y,
            mach=self.mach, angle_deg=self.angle_deg,
        )

    def precision_schedule(self) -> PrecisionSchedule:
        return PrecisionSchedule(
            mode=self.precision_mode,
            switch_iter=self.switch_iter,
            window=self.window,
            factor=self.factor,
        )

    def step_control(self) -> StepControl:
        return StepControl(cfl=self.cfl, mode=self.dt_mode, dt_floor=self.dt_floor)

    # ------------------------------------------------------------------
    # serialization

    _SCHEMA = {
        "mesh": {
            "path": ("mesh_path", str),
            "generator": ("gen_kind", str),
            "nx": ("gen_nx", int),
            "ny": ("gen_ny", int),
            "extent": ("gen_extent", "extent"),
            "bc": ("gen_bc", str),
        },
        "gas": {
            "gamma": ("gamma", float),
            "r": ("R", float),
            "mu_dyn": ("mu_dyn", float),
            "pr": ("Pr", float),
            "ivis": ("ivis", int),
        },
        "freestream": {
            "mach": ("mach", float),
            "angle_deg": ("angle_deg", float),
            "reynolds": ("reynolds", float),
        },
        "initial": {
            "kind": ("initial_kind", str),
            "beta": ("vortex_beta", float),
            "x0": ("initial_x0", float),
            "y0": ("initial_y0", float),
            "amplitude": ("pulse_amplitude", float),
            "sigma": ("pulse_sigma", float),
        },
        "solver": {
            "order": ("order", int),
            "cfl": ("cfl", float),
            "dt_mode": ("dt_mode", str),
            "dt_floor": ("dt_floor", float),
            "dt_fixed": ("dt_fixed", float),
            "t_final": ("t_final", float),
            "max_iterations": ("max_iterations", int),
            "residual_target": ("residual_target", float),
            "workers": ("workers", int),
            "renumber": ("renumber", "onoff"),
            "randomize_cells": ("randomize_cells", int),
        },
        "precision": {
            "mode": ("precision_mode", str),
            "switch_iter": ("switch_iter", int),
            "window": ("window", int),
            "factor": ("factor", float),
        },
        "output": {
            "prefix": ("output_prefix", str),
            "log_every": ("log_every", int),
            "output_every": ("output_every", int),
        },
    }

    @classmethod
    def from_ini(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser()
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not read:
            raise ConfigError(f"config file not found: {path}")
        kwargs = {}
        for section in parser.sections():
            if section not in cls._SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            schema = cls._SCHEMA[section]
            for key, raw in parser.items(section):
                if key not in schema:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                name, kind = schema[key]
                try:
                    kwargs[name] = _parse_value(raw, kind)
                except ValueError as exc:
                    raise ConfigError(f"{path}: bad value for {section}.{key}: {exc}") from None
        try:
            return cls(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def to_ini_text(self) -> str:
        out = io.StringIO()
        for section, schema in self._SCHEMA.items():
            lines = []
            for key, (name, kind) in schema.items():
                value = getattr(self, name)
                if value is None:
                    continue
                lines.append(f"{key} = {_format_value(value, kind)}")
            if lines:
                out.write(f"[{section}]\n")
                out.write("\n".join(lines) + "\n\n")
        return out.getvalue()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_ini_text())


def _parse_value(raw: str, kind):
    raw = raw.strip()
    if kind is str:
        return raw
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "onoff":
        if raw.lower() in ("on", "true", "1", "yes"):
            return True
        if raw.lower() in ("off", "false", "0", "no"):
            return False
        raise ValueError(f"expected on/off, got {raw!r}")
    if kind == "extent":
        parts = [float(v) for v in raw.split(",")]
        if len(parts) != 4:
            raise ValueError("extent needs four comma-separated values")
        return tuple(parts)
    raise ValueError(f"unhandled kind {kind!r}")


def _format_value(value, kind) -> str:
    if kind == "onoff":
        return "on" if value else "off"
    if kind == "extent":
        return ",".join(repr(float(v)) for v in value)
    if kind is float:
        return repr(float(value))
    return str(value)
