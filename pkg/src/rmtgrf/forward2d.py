"""2D TE/TM finite-difference forward modelling on a graded mesh.

Node-centred five-point scheme obtained by box integration around each node:

* TE:  d2E/dy2 + d2E/dz2 + i omega mu sigma E = 0, air included.
* TM:  d/dy(rho dH/dy) + d/dz(rho dH/dz) + i omega mu H = 0, earth only.

Both under the exp(-i omega t) time factor.  Dirichlet values on the four
sides come from 1D solutions of the adjacent cell columns.  A direct sparse
LU factorisation solves each system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionError, DomainError, NumericalError
from .layered import MU0, apparent_resistivity_phase, column_fields
from .mesh import Mesh, ResistivityModel, station_nodes
from .response import FrequencySet, RmtResponse

MODES = ("TE", "TM")
RESIDUAL_TOL = 1e-10


@dataclass
class LinearSystem:
    """Sparse system for the interior unknowns of one (mode, frequency).

    ``boundary`` holds the full node grid with Dirichlet values filled in
    and zeros at the unknowns; ``interior`` is the boolean grid of unknowns.
    """

    mode: str
    frequency_hz: float
    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary: np.ndarray
    interior: np.ndarray
    row_offset: int  # node row of grid row 0 (0 for TE, surface row for TM)


@dataclass
class FieldSolution:
    mode: str
    frequency_hz: float
    node_values: np.ndarray  # (n_node_rows, n_node_cols) of E_x (TE) or H_x (TM)
    row_offset: int
    residual: float


def _check(mode, mesh: Mesh, model: ResistivityModel, frequency_hz):
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if model.log10_rho.shape != (mesh.n_layers, mesh.n_columns):
        raise DimensionError(
            f"model shape {model.log10_rho.shape} != mesh cells {(mesh.n_layers, mesh.n_columns)}")
    if not np.all(np.isfinite(model.log10_rho)):
        raise DomainError("model contains non-finite resistivity")
    if not frequency_hz > 0:
        raise DomainError(f"frequency must be > 0, got {frequency_hz}")


def _cell_grids(mode, mesh: Mesh, model: ResistivityModel):
    """Cell flux coefficient, cell mass coefficient / (i omega mu), thicknesses."""
    rho = model.rho
    if mode == "TE":
        air = np.full((mesh.n_air_layers, mesh.n_columns), mesh.config.air_resistivity_ohm_m)
        rho_all = np.vstack([air, rho])
        return np.ones_like(rho_all), 1.0 / rho_all, mesh.layer_thicknesses_m, rho_all
    return rho, np.ones_like(rho), mesh.subsurface_thicknesses_m, rho


def _boundary_values(mode, rho_cells, dz, frequency_hz):
    """Dirichlet values on the full node grid (interior entries left at 0)."""
    nz, ny = rho_cells.shape
    grid = np.zeros((nz + 1, ny + 1), dtype=complex)
    cols = column_fields(rho_cells.T, dz, frequency_hz, mode)  # (ny, nz+1)
    grid[:, 0] = cols[0]
    grid[:, -1] = cols[-1]
    # bottom and top rows: mean of the two adjacent columns
    bottom = np.empty(ny + 1, dtype=complex)
    bottom[0], bottom[-1] = cols[0, -1], cols[-1, -1]
    bottom[1:-1] = 0.5 * (cols[:-1, -1] + cols[1:, -1])
    grid[-1, :] = bottom
    grid[0, :] = 1.0
    return grid


def assemble(mode: str, mesh: Mesh, model: ResistivityModel, frequency_hz: float) -> LinearSystem:
    _check(mode, mesh, model, frequency_hz)
    a, m, dz, rho_cells = _cell_grids(mode, mesh, model)
    dy = mesh.column_widths_m
    omega = 2 * np.pi * frequency_hz
    iwm = 1j * omega * MU0
    nz, ny = a.shape
    # cells around interior node (i, j), i=1..nz-1, j=1..ny-1
    aNW, aNE, aSW, aSE = a[:-1, :-1], a[:-1, 1:], a[1:, :-1], a[1:, 1:]
    mNW, mNE, mSW, mSE = m[:-1, :-1], m[:-1, 1:], m[1:, :-1], m[1:, 1:]
    dzu, dzd = dz[:-1, None], dz[1:, None]
    dyl, dyr = dy[None, :-1], dy[None, 1:]
    cE = (aNE * dzu + aSE * dzd) / (2 * dyr)
    cW = (aNW * dzu + aSW * dzd) / (2 * dyl)
    cN = (aNW * dyl + aNE * dyr) / (2 * dzu)
    cS = (aSW * dyl + aSE * dyr) / (2 * dzd)
    mass = iwm * (mNW * dyl * dzu + mNE * dyr * dzu + mSW * dyl * dzd + mSE * dyr * dzd) / 4
    diag = -(cE + cW + cN + cS) + mass

    boundary = _boundary_values(mode, rho_cells, dz, frequency_hz)
    interior = np.zeros((nz + 1, ny + 1), dtype=bool)
    interior[1:-1, 1:-1] = True
    ni, nj = nz - 1, ny - 1
    idx = np.arange(ni * nj).reshape(ni, nj)

    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [diag.ravel()]
    rhs = np.zeros((ni, nj), dtype=complex)
    for coef, di, dj in ((cE, 0, 1), (cW, 0, -1), (cN, -1, 0), (cS, 1, 0)):
        # neighbour node position in the full grid
        ii = np.arange(1, nz)[:, None] + di + np.zeros((1, nj), dtype=int)
        jj = np.arange(1, ny)[None, :] + dj + np.zeros((ni, 1), dtype=int)
        inner = interior[ii, jj]
        rows.append(idx[inner])
        cols.append(idx[np.clip(ii - 1, 0, ni - 1), np.clip(jj - 1, 0, nj - 1)][inner])
        vals.append(coef[inner])
        rhs -= np.where(inner, 0.0, coef * boundary[ii, jj])
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ni * nj, ni * nj),
    )
    return LinearSystem(
        mode=mode,
        frequency_hz=float(frequency_hz),
        matrix=A,
        rhs=rhs.ravel(),
        boundary=boundary,
        interior=interior,
        row_offset=0 if mode == "TE" else mesh.surface_row,
    )


def solve_linear(A, b) -> tuple[np.ndarray, float]:
    """Direct sparse solve; returns the solution and its relative residual."""
    A = sp.csc_matrix(A)
    try:
        x = spla.splu(A, permc_spec="MMD_AT_PLUS_A").solve(np.asarray(b))
    except RuntimeError as exc:  # singular factor
        raise NumericalError(f"sparse factorisation failed: {exc}") from exc
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / (nb if nb > 0 else 1.0)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise NumericalError("linear solve did not meet the residual contract", residual=float(res))
    return x, float(res)


def solve_fields(system: LinearSystem) -> FieldSolution:
    x, res = solve_linear(system.matrix, system.rhs)
    values = system.boundary.copy()
    values[system.interior] = x
    return FieldSolution(system.mode, system.frequency_hz, values, system.row_offset, res)


def _surface_quantities(fields: FieldSolution, mesh: Mesh, model: ResistivityModel):
    """Field and tangential flux (H_y for TE, E_y for TM) at every surface node.

    The flux at z = 0 comes from a flux balance over the upper half of the
    first earth cell: the flux at mid-cell is the one-cell difference, and the
    volume source (mass term plus lateral divergence) over the half cell is
    integrated with the trapezoid rule.
    """
    omega = 2 * np.pi * fields.frequency_hz
    s = mesh.surface_row - fields.row_offset
    u0 = fields.node_values[s]
    u1 = fields.node_values[s + 1]
    h1 = mesh.subsurface_thicknesses_m[0]
    w = mesh.column_widths_m
    rho1 = model.rho[0]
    # width-weighted first-layer resistivity at each node
    wl = np.concatenate([[0.0], w])
    wr = np.concatenate([w, [0.0]])
    rl = np.concatenate([[rho1[0]], rho1])
    rr = np.concatenate([rho1, [rho1[-1]]])
    rho_node = (rl * wl + rr * wr) / (wl + wr)
    v = 0.75 * u0 + 0.25 * u1  # mean of u over [0, h1/2]
    lateral = np.zeros_like(u0)
    if fields.mode == "TE":
        grad = np.diff(v) / w
        lateral[1:-1] = np.diff(grad) / (0.5 * (w[:-1] + w[1:]))
        flux_mid = (u1 - u0) / h1
        dudz = flux_mid + 0.5 * h1 * (1j * omega * MU0 / rho_node * v + lateral)
        flux = dudz / (1j * omega * MU0)
    else:
        grad = rho1 * np.diff(v) / w
        lateral[1:-1] = np.diff(grad) / (0.5 * (w[:-1] + w[1:]))
        flux_mid = rho_node * (u1 - u0) / h1
        flux = flux_mid + 0.5 * h1 * (1j * omega * MU0 * v + lateral)
    return u0, flux


def _impedance(mode, u0, flux):
    # physical E/H ratio has phase -45 deg over a half-space under
    # exp(-i omega t); report the conjugate (positive-phase) form
    if mode == "TE":
        return np.conj(u0 / flux)
    return -np.conj(flux / u0)


def surface_impedance(fields: FieldSolution, mesh: Mesh, model: ResistivityModel,
                      frequency_hz: float | None = None, nodes=None) -> np.ndarray:
    """Impedance at surface node indices ``nodes`` (all surface nodes if None)."""
    u0, flux = _surface_quantities(fields, mesh, model)
    Z = _impedance(fields.mode, u0, flux)
    if nodes is None:
        return Z
    nodes = np.asarray(nodes, dtype=int)
    if np.any(nodes < 1) or np.any(nodes > mesh.n_columns - 1):
        raise DomainError("station node index outside the surface interior")
    return Z[nodes]


def station_impedance(fields: FieldSolution, mesh: Mesh, model: ResistivityModel, station_y_m):
    """Impedance at arbitrary station coordinates.

    Aligned stations use their node directly; others interpolate field and
    flux linearly between the bracketing surface nodes.
    """
    nodes = station_nodes(mesh, station_y_m)
    y = mesh.node_y_m
    st = np.asarray(station_y_m, dtype=float)
    u0, flux = _surface_quantities(fields, mesh, model)
    if np.allclose(y[nodes], st, rtol=0, atol=1e-9):
        return _impedance(fields.mode, u0[nodes], flux[nodes])
    ui = np.interp(st, y, u0.real) + 1j * np.interp(st, y, u0.imag)
    fi = np.interp(st, y, flux.real) + 1j * np.interp(st, y, flux.imag)
    return _impedance(fields.mode, ui, fi)


def solve_mode(mode, mesh, model, frequency_hz) -> FieldSolution:
    return solve_fields(assemble(mode, mesh, model, frequency_hz))


def forward_response(model: ResistivityModel, mesh: Mesh, freqs: FrequencySet | None = None,
                     stations=None) -> RmtResponse:
    """Apparent resistivity and phase for both modes at every (frequency, station)."""
    from .mesh import default_stations

    freqs = freqs if freqs is not None else FrequencySet()
    stations = default_stations() if stations is None else np.asarray(stations, dtype=float)
    out = {m: np.empty((len(freqs), len(stations)), dtype=complex) for m in MODES}
    for fi, f in enumerate(freqs.frequencies_hz):
        for mode in MODES:
            sol = solve_mode(mode, mesh, model, f)
            out[mode][fi] = station_impedance(sol, mesh, model, stations)
    f = freqs.frequencies_hz[:, None]
    rho_te, phi_te = apparent_resistivity_phase(out["TE"], f)
    rho_tm, phi_tm = apparent_resistivity_phase(out["TM"], f)
    return RmtResponse(rho_te, rho_tm, phi_te, phi_tm, freqs.frequencies_hz, stations)
