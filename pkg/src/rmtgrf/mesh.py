"""Graded finite-difference mesh: core, horizontal padding and air layers.

Coordinates follow one convention everywhere: ``y`` runs along the profile
(0 at the profile centre), ``z`` is positive downward with ``z = 0`` at the
air-earth interface.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError


@dataclass(frozen=True)
class MeshConfig:
    core_cell_size_m: float = 2.0
    first_layer_thickness_m: float = 1.0
    vertical_growth: float = 1.1
    n_subsurface_layers: int = 50
    n_pad_columns: int = 10
    pad_growth: float = 1.5
    n_air_layers: int = 10
    air_first_thickness_m: float = 1.0
    air_growth: float = 3.0
    air_resistivity_ohm_m: float = 1e10
    n_core_columns: int = 116

    def validate(self) -> None:
        for name in ("core_cell_size_m", "first_layer_thickness_m",
                     "air_first_thickness_m", "air_resistivity_ohm_m"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(name, f"must be > 0, got {v}")
        for name in ("vertical_growth", "pad_growth", "air_growth"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 1:
                raise ConfigError(name, f"growth ratio must be >= 1, got {v}")
        for name in ("n_subsurface_layers", "n_pad_columns", "n_air_layers",
                     "n_core_columns"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(name, f"count must be an integer >= 1, got {v}")

    @property
    def n_columns(self) -> int:
        return self.n_core_columns + 2 * self.n_pad_columns


@dataclass(frozen=True, eq=False)
class Mesh:
    """Rectangular tensor mesh.

    ``layer_thicknesses_m`` runs from the topmost air layer down to the
    deepest earth layer; the first ``n_air_layers`` entries are air.
    """

    column_widths_m: np.ndarray
    layer_thicknesses_m: np.ndarray
    n_air_layers: int
    core_column_range: tuple[int, int]
    config: MeshConfig = field(default_factory=MeshConfig)

    @property
    def n_columns(self) -> int:
        return len(self.column_widths_m)

    @property
    def n_layers(self) -> int:
        return len(self.layer_thicknesses_m) - self.n_air_layers

    @property
    def surface_row(self) -> int:
        """Node row index of the air-earth interface."""
        return self.n_air_layers

    @property
    def subsurface_thicknesses_m(self) -> np.ndarray:
        return self.layer_thicknesses_m[self.n_air_layers:]

    @property
    def air_thicknesses_m(self) -> np.ndarray:
        return self.layer_thicknesses_m[:self.n_air_layers]

    @property
    def node_y_m(self) -> np.ndarray:
        y = np.concatenate([[0.0], np.cumsum(self.column_widths_m)])
        lo, hi = self.core_column_range
        return y - 0.5 * (y[lo] + y[hi])

    @property
    def node_z_m(self) -> np.ndarray:
        z = np.concatenate([[0.0], np.cumsum(self.layer_thicknesses_m)])
        return z - z[self.n_air_layers]

    @property
    def cell_y_m(self) -> np.ndarray:
        y = self.node_y_m
        return 0.5 * (y[1:] + y[:-1])

    @property
    def cell_z_m(self) -> np.ndarray:
        """Centres of the subsurface cells."""
        z = self.node_z_m[self.n_air_layers:]
        return 0.5 * (z[1:] + z[:-1])

    @property
    def core_shape(self) -> tuple[int, int]:
        lo, hi = self.core_column_range
        return (self.n_layers, hi - lo)

    def to_dict(self) -> dict:
        return {
            "column_widths_m": self.column_widths_m.tolist(),
            "layer_thicknesses_m": self.layer_thicknesses_m.tolist(),
            "n_air_layers": int(self.n_air_layers),
            "core_column_range": [int(i) for i in self.core_column_range],
            "surface_row": int(self.surface_row),
            "node_y_m": self.node_y_m.tolist(),
            "node_z_m": self.node_z_m.tolist(),
            "config": asdict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        return cls(
            column_widths_m=np.asarray(d["column_widths_m"], dtype=float),
            layer_thicknesses_m=np.asarray(d["layer_thicknesses_m"], dtype=float),
            n_air_layers=int(d["n_air_layers"]),
            core_column_range=tuple(d["core_column_range"]),
            config=MeshConfig(**d.get("config", {})),
        )


@dataclass(eq=False)
class ResistivityModel:
    """log10 resistivity on the subsurface cells of a mesh (air excluded)."""

    log10_rho: np.ndarray
    mesh_id: str = "default"

    def __post_init__(self):
        self.log10_rho = np.asarray(self.log10_rho, dtype=float)
        if self.log10_rho.ndim != 2:
            raise DimensionError(f"log10_rho must be 2D, got shape {self.log10_rho.shape}")
        if not np.all(np.isfinite(self.log10_rho)):
            raise DomainError("resistivity model contains non-finite values")

    @property
    def rho(self) -> np.ndarray:
        return 10.0 ** self.log10_rho

    def core(self, mesh: Mesh) -> np.ndarray:
        lo, hi = mesh.core_column_range
        return self.log10_rho[:, lo:hi]


def build_mesh(config: MeshConfig | None = None) -> Mesh:
    config = config or MeshConfig()
    config.validate()
    npad = config.n_pad_columns
    pad = config.core_cell_size_m * config.pad_growth ** np.arange(1, npad + 1)
    core = np.full(config.n_core_columns, float(config.core_cell_size_m))
    widths = np.concatenate([pad[::-1], core, pad])
    sub = config.first_layer_thickness_m * config.vertical_growth ** np.arange(config.n_subsurface_layers)
    air = config.air_first_thickness_m * config.air_growth ** np.arange(config.n_air_layers)
    return Mesh(
        column_widths_m=widths,
        layer_thicknesses_m=np.concatenate([air[::-1], sub]),
        n_air_layers=config.n_air_layers,
        core_column_range=(npad, npad + config.n_core_columns),
        config=config,
    )


def station_nodes(mesh: Mesh, station_y_m) -> np.ndarray:
    """Surface node index nearest to each station (exact for aligned stations).

    Raises `DomainError` for stations outside the core extent.
    """
    y = mesh.node_y_m
    lo, hi = mesh.core_column_range
    st = np.atleast_1d(np.asarray(station_y_m, dtype=float))
    bad = (st < y[lo] - 1e-9) | (st > y[hi] + 1e-9)
    if np.any(bad):
        raise DomainError(f"stations outside core extent [{y[lo]}, {y[hi]}] m: {st[bad].tolist()}")
    return np.array([int(np.argmin(np.abs(y - s))) for s in st], dtype=int)


def default_stations(n: int = 21, length_m: float = 200.0) -> np.ndarray:
    return np.linspace(-length_m / 2, length_m / 2, n)


def embed_core(core_values, mesh: Mesh, background: float) -> ResistivityModel:
    """Place core log10 values into the full mesh and fill the padding.

    Padding column ``j`` (1 = next to the core, n_pad = outermost) holds
    ``edge + (background - edge) * j / n_pad`` per row, i.e. a linear ramp in
    log10 space from the outermost core column to the background.
    """
    core_values = np.asarray(core_values, dtype=float)
    if core_values.shape != mesh.core_shape:
        raise DimensionError(f"core values shape {core_values.shape} != mesh core {mesh.core_shape}")
    lo, hi = mesh.core_column_range
    npad = lo
    out = np.empty((mesh.n_layers, mesh.n_columns))
    out[:, lo:hi] = core_values
    t = np.arange(1, npad + 1) / npad
    left_edge = core_values[:, :1]
    right_edge = core_values[:, -1:]
    out[:, hi:] = right_edge + (background - right_edge) * t
    out[:, :lo] = (left_edge + (background - left_edge) * t)[:, ::-1]
    return ResistivityModel(out)


def uniform_model(mesh: Mesh, rho_ohm_m: float) -> ResistivityModel:
    return ResistivityModel(np.full((mesh.n_layers, mesh.n_columns), np.log10(rho_ohm_m)))
