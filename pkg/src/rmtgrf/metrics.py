"""Model-space accuracy metrics: MSE, MAE and Gaussian-window SSIM."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionError, DomainError


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def mae(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _filter_valid(img, g):
    # separable filtering, keeping only positions where the window fits
    r = len(g) // 2
    out = correlate1d(correlate1d(img, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def ssim_map(a, b, data_range: float = 1.0, win_size: int = 11, sigma: float = 1.5):
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise DimensionError(f"ssim expects 2D images, got {a.shape}")
    if not data_range > 0:
        raise DomainError("data_range must be > 0")
    if win_size > min(a.shape):
        raise DomainError(f"window {win_size} larger than image {a.shape}")
    g = gaussian_window(win_size, sigma)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    saa = _filter_valid(a * a, g) - mu_a ** 2
    sbb = _filter_valid(b * b, g) - mu_b ** 2
    sab = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2)
    return num / den


def ssim(a, b, data_range: float = 1.0, win_size: int = 11, sigma: float = 1.5) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows."""
    return float(np.mean(ssim_map(a, b, data_range, win_size, sigma)))


@dataclass
class MetricReport:
    mse: float
    mae: float
    ssim: float
    per_sample: dict = field(default_factory=dict)
    dataset_id: str = ""

    def row(self) -> dict:
        return {"dataset": self.dataset_id, "mse": self.mse, "mae": self.mae, "ssim": self.ssim}


def evaluate_pairs(preds, targets, dataset_id: str = "", data_range: float = 1.0) -> MetricReport:
    """Average metrics over matching stacks of 2D predictions and targets."""
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape or preds.ndim != 3 or len(preds) == 0:
        raise DimensionError(f"need equal non-empty (n, H, W) stacks, got {preds.shape} / {targets.shape}")
    m = np.array([mse(p, t) for p, t in zip(preds, targets)])
    a = np.array([mae(p, t) for p, t in zip(preds, targets)])
    s = np.array([ssim(p, t, data_range) for p, t in zip(preds, targets)])
    return MetricReport(float(m.mean()), float(a.mean()), float(s.mean()),
                        {"mse": m, "mae": a, "ssim": s}, dataset_id)
