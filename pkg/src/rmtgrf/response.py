"""The four-channel RMT data container and its file format."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .io import read_array, write_array

CHANNELS = ("rho_te", "rho_tm", "phi_te", "phi_tm")


def default_frequencies(n: int = 13, f_min: float = 1e3, f_max: float = 2.5e5) -> np.ndarray:
    return np.logspace(np.log10(f_min), np.log10(f_max), n)


@dataclass
class FrequencySet:
    frequencies_hz: np.ndarray = None

    def __post_init__(self):
        if self.frequencies_hz is None:
            self.frequencies_hz = default_frequencies()
        f = np.atleast_1d(np.asarray(self.frequencies_hz, dtype=float))
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise DimensionError("frequencies must be positive and strictly increasing")
        self.frequencies_hz = f

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.frequencies_hz

    def __len__(self):
        return len(self.frequencies_hz)


@dataclass
class RmtResponse:
    """Apparent resistivity (ohm m) and phase (deg), each (n_freq, n_station).

    ``mask`` is None or a boolean array (4, n_freq, n_station) in channel
    order `CHANNELS`; True marks a missing entry.
    """

    rho_te: np.ndarray
    rho_tm: np.ndarray
    phi_te: np.ndarray
    phi_tm: np.ndarray
    frequencies_hz: np.ndarray
    stations_m: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        shape = np.shape(self.rho_te)
        for name in CHANNELS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DimensionError(f"{name} shape {arr.shape} != {shape}")
            setattr(self, name, arr)
        self.frequencies_hz = np.asarray(self.frequencies_hz, dtype=float)
        self.stations_m = np.asarray(self.stations_m, dtype=float)
        if shape != (len(self.frequencies_hz), len(self.stations_m)):
            raise DimensionError(f"channel shape {shape} does not match frequencies x stations")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != (4,) + shape:
                raise DimensionError(f"mask shape {self.mask.shape} != {(4,) + shape}")

    @property
    def shape(self):
        return self.rho_te.shape

    @property
    def has_mask(self) -> bool:
        return self.mask is not None and bool(self.mask.any())

    def as_array(self) -> np.ndarray:
        return np.stack([getattr(self, c) for c in CHANNELS])

    @classmethod
    def from_array(cls, arr, frequencies_hz, stations_m, mask=None) -> "RmtResponse":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != 4:
            raise DimensionError(f"expected (4, n_freq, n_station) array, got {arr.shape}")
        return cls(*arr, frequencies_hz=frequencies_hz, stations_m=stations_m, mask=mask)

    def with_array(self, arr, mask=None) -> "RmtResponse":
        return RmtResponse.from_array(arr, self.frequencies_hz, self.stations_m, mask=mask)

    def without_mask(self) -> "RmtResponse":
        return replace(self, mask=None)

    def save(self, path, extra: dict | None = None):
        meta = {
            "kind": "rmt_response",
            "channel_order": list(CHANNELS),
            "frequencies_hz": self.frequencies_hz,
            "stations_m": self.stations_m,
            "mask": None if self.mask is None else self.mask.astype(int),
        }
        meta.update(extra or {})
        return write_array(path, self.as_array(), meta)

    @classmethod
    def load(cls, path) -> "RmtResponse":
        arr, meta = read_array(path)
        mask = meta.get("mask")
        return cls.from_array(arr, meta["frequencies_hz"], meta["stations_m"],
                              mask=None if mask is None else np.asarray(mask, dtype=bool))
