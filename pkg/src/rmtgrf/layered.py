"""Analytic 1D layered-earth magnetotelluric responses.

Fields carry the time factor exp(-i*omega*t).  With that factor the physical
ratio E/H over a half-space has phase -45 deg; impedances returned here are
reported in the usual positive-phase form (the complex conjugate), so a
half-space gives +45 deg and ``arctan(Im Z / Re Z)`` lies in (0, 90) deg.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

MU0 = 4e-7 * np.pi


@dataclass
class LayeredModel:
    """Resistivities top to bottom; the last entry is the basement half-space."""

    resistivities_ohm_m: np.ndarray
    thicknesses_m: np.ndarray

    def __post_init__(self):
        self.resistivities_ohm_m = np.atleast_1d(np.asarray(self.resistivities_ohm_m, dtype=float))
        self.thicknesses_m = np.atleast_1d(np.asarray(self.thicknesses_m, dtype=float))
        if self.resistivities_ohm_m.ndim != 1 or len(self.resistivities_ohm_m) < 1:
            raise DomainError("need at least one layer")
        if len(self.thicknesses_m) != len(self.resistivities_ohm_m) - 1:
            raise DomainError("thicknesses must have one entry fewer than resistivities")
        if np.any(~(self.resistivities_ohm_m > 0)) or not np.all(np.isfinite(self.resistivities_ohm_m)):
            raise DomainError("resistivities must be finite and > 0")
        if np.any(~(self.thicknesses_m > 0)):
            raise DomainError("thicknesses must be > 0")

    @property
    def interfaces_m(self) -> np.ndarray:
        """Depths of the layer tops, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.thicknesses_m)])


def _check_frequency(frequency_hz):
    if not np.isfinite(frequency_hz) or frequency_hz <= 0:
        raise DomainError(f"frequency must be > 0, got {frequency_hz}")


def wavenumber(rho, omega):
    """Downward-decaying wavenumber sqrt(i*omega*mu0/rho), Im > 0."""
    return np.sqrt(1j * omega * MU0 / np.asarray(rho, dtype=float))


def impedance_1d(model: LayeredModel, frequency_hz: float) -> complex:
    """Surface impedance by the bottom-up layer recursion."""
    _check_frequency(frequency_hz)
    omega = 2 * np.pi * frequency_hz
    k = wavenumber(model.resistivities_ohm_m, omega)
    intrinsic = omega * MU0 / k
    Z = intrinsic[-1]
    for j in range(len(model.thicknesses_m) - 1, -1, -1):
        t = np.tanh(1j * k[j] * model.thicknesses_m[j])
        zj = intrinsic[j]
        Z = zj * (Z - zj * t) / (zj - Z * t)
    return complex(np.conj(Z))


def apparent_resistivity_phase(Z, frequency_hz):
    """rho_a = |Z|^2 / (omega mu0) and phase in degrees, elementwise."""
    omega = 2 * np.pi * np.asarray(frequency_hz, dtype=float)
    Z = np.asarray(Z)
    rho_a = np.abs(Z) ** 2 / (omega * MU0)
    phi = np.degrees(np.arctan2(Z.imag, Z.real))
    return rho_a, phi


def skin_depth(rho, frequency_hz):
    return np.sqrt(2 * np.asarray(rho) / (2 * np.pi * np.asarray(frequency_hz) * MU0))


def _admittance(k, rho, omega, mode):
    # flux / field amplitude ratio of a downgoing wave; flux is H_y for TE
    # (= E_x' / (i omega mu)) and E_y for TM (= rho H_x')
    if mode == "TE":
        return k / (omega * MU0)
    if mode == "TM":
        return 1j * rho * k
    raise DomainError(f"mode must be 'TE' or 'TM', got {mode!r}")


def field_profile_1d(model: LayeredModel, frequency_hz: float, depths_m, mode: str = "TE") -> np.ndarray:
    """Complex tangential field (E_x for TE, H_x for TM) at ``depths_m``.

    Depths are measured from the top of ``model`` and the result is normalised
    to 1 there.  Depths below the last interface fall in the basement.
    Each layer is written as ``u(s) ~ exp(iks) + r exp(ik(2h - s))`` with the
    bottom reflection coefficient ``r``, so no exponential ever grows.
    """
    _check_frequency(frequency_hz)
    depths = np.asarray(depths_m, dtype=float)
    if np.any(depths < 0) or not np.all(np.isfinite(depths)):
        raise DomainError("depths must be finite and >= 0")
    omega = 2 * np.pi * frequency_hz
    rho = model.resistivities_ohm_m
    h = model.thicknesses_m
    k = wavenumber(rho, omega)
    Y = np.array([_admittance(k[j], rho[j], omega, mode) for j in range(len(rho))])
    n = len(rho)
    # field/flux ratio at each layer top, bottom-up
    R = np.empty(n, dtype=complex)
    refl = np.zeros(n, dtype=complex)
    R[-1] = 1.0 / Y[-1]
    for j in range(n - 2, -1, -1):
        Rb = R[j + 1]
        refl[j] = (Y[j] * Rb - 1) / (Y[j] * Rb + 1)
        e = refl[j] * np.exp(2j * k[j] * h[j])
        R[j] = (1 + e) / (Y[j] * (1 - e))
    # field amplitude at each layer top, top-down
    top = np.empty(n, dtype=complex)
    top[0] = 1.0
    for j in range(n - 1):
        top[j + 1] = top[j] * _layer_transfer(k[j], h[j], refl[j], h[j])
    z_top = model.interfaces_m
    idx = np.clip(np.searchsorted(z_top, depths, side="right") - 1, 0, n - 1)
    out = np.empty(depths.shape, dtype=complex)
    for j in np.unique(idx):
        sel = idx == j
        s = depths[sel] - z_top[j]
        if j == n - 1:
            out[sel] = top[j] * np.exp(1j * k[j] * s)
        else:
            out[sel] = top[j] * _layer_transfer(k[j], h[j], refl[j], s)
    return out


def _layer_transfer(k, h, r, s):
    return (np.exp(1j * k * s) + r * np.exp(1j * k * (2 * h - s))) / (1 + r * np.exp(2j * k * h))


def column_fields(rho_cols, thicknesses_m, frequency_hz: float, mode: str = "TE") -> np.ndarray:
    """Fields at every interface of many 1D columns at once.

    ``rho_cols`` is (n_col, n_cell); the deepest cell continues as basement.
    Returns (n_col, n_cell + 1) values normalised to 1 at the top interface.
    """
    rho = np.atleast_2d(np.asarray(rho_cols, dtype=float))
    h = np.asarray(thicknesses_m, dtype=float)
    omega = 2 * np.pi * frequency_hz
    k = wavenumber(rho, omega)
    Y = k / (omega * MU0) if mode == "TE" else _admittance(k, rho, omega, mode)
    ncol, n = rho.shape
    refl = np.zeros((ncol, n), dtype=complex)
    R = 1.0 / Y[:, -1]  # below the last cell: basement of the same resistivity
    for j in range(n - 1, -1, -1):
        refl[:, j] = (Y[:, j] * R - 1) / (Y[:, j] * R + 1)
        e = refl[:, j] * np.exp(2j * k[:, j] * h[j])
        R = (1 + e) / (Y[:, j] * (1 - e))
    out = np.empty((ncol, n + 1), dtype=complex)
    out[:, 0] = 1.0
    for j in range(n):
        out[:, j + 1] = out[:, j] * _layer_transfer(k[:, j], h[j], refl[:, j], h[j])
    return out
