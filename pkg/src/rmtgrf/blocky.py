"""Out-of-distribution blocky models and the two checkerboard fixtures."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GenerationError
from .mesh import Mesh, ResistivityModel, embed_core


class Geometry(enum.Enum):
    ONE_BLOCK = "OneBlock"
    TWO_BLOCKS = "TwoBlocks"
    THREE_BLOCKS = "ThreeBlocks"
    ONE_INCLINED = "OneInclined"
    TWO_INCLINED = "TwoInclined"

    @property
    def n_anomalies(self) -> int:
        return {"OneBlock": 1, "TwoBlocks": 2, "ThreeBlocks": 3,
                "OneInclined": 1, "TwoInclined": 2}[self.value]

    @property
    def inclined(self) -> bool:
        return self in (Geometry.ONE_INCLINED, Geometry.TWO_INCLINED)


@dataclass(frozen=True)
class BlockySpec:
    geometry_type: Geometry = Geometry.ONE_BLOCK
    background_ohm_m: float = 500.0
    high_range_ohm_m: tuple[float, float] = (1000.0, 2000.0)
    low_range_ohm_m: tuple[float, float] = (10.0, 20.0)
    width_m: tuple[float, float] = (20.0, 60.0)
    height_m: tuple[float, float] = (10.0, 30.0)
    top_m: tuple[float, float] = (4.0, 30.0)
    center_y_m: tuple[float, float] = (-80.0, 80.0)
    # inclined bodies: stacked rectangles
    n_segments: tuple[int, int] = (4, 8)
    segment_height_m: tuple[float, float] = (3.0, 6.0)
    segment_width_m: tuple[float, float] = (10.0, 30.0)
    dip_deg: tuple[float, float] = (20.0, 60.0)
    max_attempts: int = 100

    def validate(self):
        for name in ("high_range_ohm_m", "low_range_ohm_m", "width_m", "height_m",
                     "segment_height_m", "segment_width_m"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise DomainError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not self.background_ohm_m > 0:
            raise DomainError("background must be > 0")


@dataclass
class Anomaly:
    rectangles: list  # (y0, y1, z0, z1) in metres
    resistivity_ohm_m: float
    label: str  # "H" or "L"
    mask: np.ndarray = field(repr=False, default=None)


def _cell_centres(mesh: Mesh):
    lo, hi = mesh.core_column_range
    return mesh.cell_y_m[lo:hi], mesh.cell_z_m


def rasterize(rectangles, mesh: Mesh) -> np.ndarray:
    """Core cells whose centre lies inside any of the rectangles."""
    yc, zc = _cell_centres(mesh)
    out = np.zeros(mesh.core_shape, dtype=bool)
    for y0, y1, z0, z1 in rectangles:
        out |= ((zc > z0) & (zc < z1))[:, None] & ((yc > y0) & (yc < y1))[None, :]
    return out


def _core_extent(mesh: Mesh):
    lo, hi = mesh.core_column_range
    y = mesh.node_y_m
    z = mesh.node_z_m[mesh.surface_row:]
    return y[lo], y[hi], z[0], z[-1]


def _draw_shape(spec: BlockySpec, rng) -> list:
    if not spec.geometry_type.inclined:
        w = rng.uniform(*spec.width_m)
        h = rng.uniform(*spec.height_m)
        top = rng.uniform(*spec.top_m)
        cy = rng.uniform(*spec.center_y_m)
        return [(cy - w / 2, cy + w / 2, top, top + h)]
    n = int(rng.integers(spec.n_segments[0], spec.n_segments[1] + 1))
    sh = rng.uniform(*spec.segment_height_m)
    sw = rng.uniform(*spec.segment_width_m)
    dip = np.radians(rng.uniform(*spec.dip_deg)) * (1 if rng.random() < 0.5 else -1)
    top = rng.uniform(*spec.top_m)
    cy = rng.uniform(*spec.center_y_m)
    shift = sh / np.tan(abs(dip)) * np.sign(dip)
    # centre the stack horizontally on cy
    y_start = cy - 0.5 * shift * (n - 1)
    return [(y_start + i * shift - sw / 2, y_start + i * shift + sw / 2,
             top + i * sh, top + (i + 1) * sh) for i in range(n)]


def sample_blocky(spec: BlockySpec, mesh: Mesh, rng: np.random.Generator):
    """Homogeneous background with non-overlapping H/L anomalies.

    Returns ``(model, anomalies)``.  Raises `GenerationError` when the
    anomalies cannot be placed within ``spec.max_attempts`` tries.
    """
    spec.validate()
    ymin, ymax, zmin, zmax = _core_extent(mesh)
    core = np.full(mesh.core_shape, np.log10(spec.background_ohm_m))
    occupied = np.zeros(mesh.core_shape, dtype=bool)
    anomalies = []
    for _ in range(spec.geometry_type.n_anomalies):
        for _attempt in range(spec.max_attempts):
            rects = _draw_shape(spec, rng)
            inside = all(ymin <= r[0] and r[1] <= ymax and zmin <= r[2] and r[3] <= zmax for r in rects)
            if not inside:
                continue
            m = rasterize(rects, mesh)
            if m.any() and not (m & occupied).any():
                break
        else:
            raise GenerationError(
                f"could not place {spec.geometry_type.value} anomaly after {spec.max_attempts} attempts")
        label = "H" if rng.random() < 0.5 else "L"
        rng_range = spec.high_range_ohm_m if label == "H" else spec.low_range_ohm_m
        value = float(rng.uniform(*rng_range))
        occupied |= m
        core[m] = np.log10(value)
        anomalies.append(Anomaly(rects, value, label, m))
    return embed_core(core, mesh, np.log10(spec.background_ohm_m)), anomalies


def sample_geometry(rng: np.random.Generator, weights=(1, 2, 3, 2, 3)) -> Geometry:
    """Random geometry type; complex types drawn more often than simple ones."""
    p = np.asarray(weights, dtype=float)
    return list(Geometry)[int(rng.choice(len(Geometry), p=p / p.sum()))]


CHECKERBOARD_BACKGROUND = 100.0


def checkerboard_anomalies(fixture: int, central_ohm_m: float = 10.0):
    if fixture == 1:
        return [
            ([(-45.0, -15.0, 5.0, 30.0)], 1000.0),
            ([(-15.0, 15.0, 5.0, 30.0)], central_ohm_m),
            ([(15.0, 45.0, 5.0, 30.0)], 1000.0),
        ]
    if fixture == 2:
        return [
            ([(-60.0, -20.0, 5.0, 15.0)], 10.0),
            ([(20.0, 60.0, 5.0, 15.0)], 1000.0),
            ([(-60.0, -20.0, 25.0, 35.0)], 1000.0),
            ([(20.0, 60.0, 25.0, 35.0)], 10.0),
        ]
    raise DomainError(f"unknown checkerboard fixture {fixture!r}; expected 1 or 2")


def checkerboard(fixture: int, mesh: Mesh, central_ohm_m: float = 10.0) -> ResistivityModel:
    """Checkerboard test models in a 100 ohm m background.

    Fixture 1: three adjacent 30 m x 25 m blocks with tops at 5 m, resistive
    flanks (1000 ohm m) and a conductive centre (``central_ohm_m``).
    Fixture 2: two rows of two 40 m x 10 m blocks alternating 10 / 1000 ohm m.
    """
    core = np.full(mesh.core_shape, np.log10(CHECKERBOARD_BACKGROUND))
    for rects, value in checkerboard_anomalies(fixture, central_ohm_m):
        core[rasterize(rects, mesh)] = np.log10(value)
    return embed_core(core, mesh, np.log10(CHECKERBOARD_BACKGROUND))
