"""Inversion, evaluation and the noise / compressed-sensing / cross-dataset studies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cs import CsConfig, MaskSpec, apply_mask, random_mask, reconstruct, relative_error
from .dataset import (ArraySet, NoiseSpec, add_noise, normalize_model, output_to_core,
                      response_to_input)
from .errors import DimensionError, MaskPresentError
from .metrics import MetricReport, evaluate_pairs, ssim
from .nn.unet import UNet
from .response import RmtResponse

CORE_SHAPE = (50, 116)
NOISE_LEVELS = (0.01, 0.03, 0.05)


def invert_arrays(net: UNet, responses, core_shape=CORE_SHAPE, batch_size: int = 32) -> np.ndarray:
    """(n, 4, nf, ns) unmasked responses to clamped log10 core models (n, nz, ny)."""
    responses = np.asarray(responses, dtype=float)
    if responses.ndim == 3:
        responses = responses[None]
    if np.isnan(responses).any():
        raise MaskPresentError("response contains missing entries; reconstruct before inverting")
    x = response_to_input(responses, net.cfg.input_size)
    return output_to_core(net.predict(x, batch_size), core_shape)


def invert(net: UNet, response: RmtResponse, core_shape=CORE_SHAPE) -> np.ndarray:
    """Invert a single response; refuses masked data."""
    if response.has_mask:
        raise MaskPresentError("mask present: reconstruct the response before inverting")
    return invert_arrays(net, response.as_array()[None], core_shape)[0]


def evaluate(net: UNet, data: ArraySet, dataset_id: str = "") -> MetricReport:
    """Mean MSE / MAE / SSIM in normalized model space on the core grid."""
    if len(data) == 0:
        raise DimensionError("cannot evaluate on an empty split")
    pred = invert_arrays(net, data.responses, data.cores.shape[1:])
    return evaluate_pairs(normalize_model(pred), normalize_model(data.cores), dataset_id)


def evaluate_predictions(pred_cores, true_cores, dataset_id: str = "") -> MetricReport:
    return evaluate_pairs(normalize_model(pred_cores), normalize_model(true_cores), dataset_id)


@dataclass
class NoiseReport:
    rows: list = field(default_factory=list)

    @property
    def ssim_non_increasing(self) -> bool:
        s = [r["ssim"] for r in self.rows]
        return all(b <= a for a, b in zip(s, s[1:]))


def run_noise_experiment(net: UNet, data: ArraySet, levels=NOISE_LEVELS, seed: int = 0) -> NoiseReport:
    """Metrics at noise level 0 and each requested level.

    Level ``k`` (1-based) draws its noise from ``default_rng(seed + k)``.
    """
    rows = []
    for k, level in enumerate((0.0,) + tuple(levels)):
        rng = np.random.default_rng(seed + k)
        noisy = np.stack([add_noise(data.response(i), NoiseSpec(level), rng).as_array()
                          for i in range(len(data))])
        rep = evaluate_predictions(invert_arrays(net, noisy, data.cores.shape[1:]), data.cores,
                                   f"noise={level}")
        rows.append({"level": level, **rep.row()})
    return NoiseReport(rows)


@dataclass
class CsResult:
    original: np.ndarray
    masked: np.ndarray
    reconstructed: np.ndarray
    mask: np.ndarray
    errors: np.ndarray
    histogram: dict
    inversion_original: np.ndarray
    inversion_reconstructed: np.ndarray
    inversion_ssim: float


def run_cs_experiment(net: UNet, response: RmtResponse, fraction: float = 0.3125, seed: int = 0,
                      config: CsConfig | None = None, core_shape=CORE_SHAPE) -> CsResult:
    """Mask, reconstruct and invert one response next to its clean inversion."""
    mask = random_mask((4,) + response.shape, MaskSpec(fraction, seed))
    masked = apply_mask(response, mask)
    rec = reconstruct(masked, config)
    orig = response.as_array()
    err, hist = relative_error(rec.as_array(), orig, where=mask if mask.any() else None)
    inv_o = invert(net, response, core_shape)
    inv_r = invert(net, rec, core_shape)
    s = ssim(normalize_model(inv_o), normalize_model(inv_r))
    return CsResult(orig, masked.as_array(), rec.as_array(), mask, err, hist, inv_o, inv_r, s)


def crosstest(nets: dict, datasets: dict) -> list:
    """Table-1 style rows for every (trained-on, tested-on) pair."""
    rows = []
    for train_name, net in nets.items():
        for test_name, data in datasets.items():
            rep = evaluate(net, data, test_name)
            rows.append({"train": train_name, "test": test_name,
                         "mse": rep.mse, "mae": rep.mae, "ssim": rep.ssim})
    return rows
