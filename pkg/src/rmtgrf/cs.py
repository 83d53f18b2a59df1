"""Masking and L1 compressed-sensing reconstruction of RMT data channels.

Each channel is recovered by solving

    min_x  1/2 ||M D^T x - y||^2 + lam ||x||_1

where D is the orthonormal 2D DCT-II over (frequency, station) and M keeps
the observed entries.  ||M D^T|| <= 1, so monotone FISTA runs with step 1.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DimensionError, DomainError
from .response import RmtResponse


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MaskSpec:
    fraction_masked: float = 0.3125
    seed: int = 0
    independent_per_channel: bool = True

    def validate(self):
        if not 0 <= self.fraction_masked < 1:
            raise DomainError(f"fraction_masked must be in [0, 1), got {self.fraction_masked}")


@dataclass(frozen=True)
class CsConfig:
    lambda_rel: float = 1e-3
    max_iters: int = 500
    tol: float = 1e-6

    def validate(self):
        for name in ("lambda_rel", "max_iters", "tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")


@dataclass
class ChannelResult:
    values: np.ndarray
    coefficients: np.ndarray
    iterations: int
    converged: bool
    objective: list = field(default_factory=list)


def random_mask(shape, spec: MaskSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Boolean mask with exactly floor(fraction * N) True entries per channel.

    ``shape`` is (n_channel, n_freq, n_station) or a single 2D channel shape.
    """
    spec.validate()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    shape = tuple(shape)
    chans = shape[0] if len(shape) == 3 else 1
    per = int(np.prod(shape[-2:]))
    n_mask = int(np.floor(spec.fraction_masked * per))
    out = np.zeros((chans, per), dtype=bool)
    shared = None
    for c in range(chans):
        if spec.independent_per_channel or shared is None:
            shared = rng.choice(per, size=n_mask, replace=False)
        out[c, shared] = True
    return out.reshape(shape)


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def reconstruct_channel(y, observed, config: CsConfig | None = None, lam: float | None = None) -> ChannelResult:
    """Fill the unobserved entries of one 2D channel.

    ``observed`` is True where ``y`` is known.  Observed entries of the
    returned values equal ``y`` exactly.
    """
    config = config or CsConfig()
    config.validate()
    y = np.asarray(y, dtype=float)
    observed = np.asarray(observed, dtype=bool)
    if y.shape != observed.shape or y.ndim != 2:
        raise DimensionError("channel and mask must be equal 2D shapes")
    if observed.all():
        return ChannelResult(y.copy(), dctn(y, norm="ortho"), 0, True)
    if not observed.any():
        raise DomainError("cannot reconstruct a channel with no observed entries")
    offset = y[observed].mean()
    data = np.where(observed, y - offset, 0.0)

    def residual(x):
        return np.where(observed, idctn(x, norm="ortho"), 0.0) - data

    def objective(x):
        r = residual(x)
        return 0.5 * np.sum(r * r) + lam * np.abs(x).sum()

    if lam is None:
        lam = config.lambda_rel * np.abs(dctn(data, norm="ortho")).max()
    x = np.zeros_like(y)
    x_prev = x
    z_prev = x
    yk = x
    t = 1.0
    f_x = objective(x)
    history = [f_x]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        z = soft_threshold(yk - dctn(residual(yk), norm="ortho"), lam)
        f_z = objective(z)
        x_prev, x = x, (z if f_z <= f_x else x)
        f_x = min(f_z, f_x)
        history.append(f_x)
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        yk = x + (t / t_next) * (z - x) + ((t - 1) / t_next) * (x - x_prev)
        t = t_next
        # rejected monotone steps leave x fixed, so track the prox iterate
        change = np.linalg.norm(z - z_prev) / max(np.linalg.norm(z), 1e-300)
        z_prev = z
        if it > 1 and change < config.tol:
            converged = True
            break
    values = idctn(x, norm="ortho") + offset
    values[observed] = y[observed]
    return ChannelResult(values, x, it, converged, history)


def reconstruct(data: RmtResponse, config: CsConfig | None = None) -> RmtResponse:
    """Reconstruct all masked entries; returns an unmasked response.

    Apparent resistivities are reconstructed as log10 values, phases in
    degrees.  Emits `ConvergenceWarning` if any channel hits ``max_iters``.
    """
    config = config or CsConfig()
    if data.mask is None or not data.mask.any():
        return data.without_mask()
    arr = data.as_array()
    out = np.empty_like(arr)
    failed = []
    for c in range(4):
        obs = ~data.mask[c]
        ch = np.log10(arr[c]) if c < 2 else arr[c]
        ch = np.where(obs, ch, 0.0)
        res = reconstruct_channel(ch, obs, config)
        if not res.converged:
            failed.append(c)
        out[c] = 10.0 ** res.values if c < 2 else res.values
    if failed:
        warnings.warn(f"CS reconstruction reached max_iters on channels {failed}", ConvergenceWarning)
    return data.with_array(out)


def apply_mask(data: RmtResponse, mask) -> RmtResponse:
    """Masked copy with missing entries set to NaN."""
    arr = data.as_array().copy()
    arr[mask] = np.nan
    return data.with_array(arr, mask=mask)


def relative_error(reconstructed, original, bins: int = 50, where=None):
    """(reconstructed - original) / original per entry, with a histogram.

    ``where`` optionally restricts the histogram to a boolean selection.
    Returns ``(errors, {"counts", "edges", "median", "median_abs"})``.
    """
    rec = np.asarray(reconstructed, dtype=float)
    org = np.asarray(original, dtype=float)
    if rec.shape != org.shape:
        raise DimensionError(f"shape mismatch {rec.shape} vs {org.shape}")
    if np.any(org == 0):
        raise DomainError("original data contain zeros; relative error undefined")
    err = (rec - org) / org
    sel = err if where is None else err[np.asarray(where, dtype=bool)]
    counts, edges = np.histogram(sel, bins=bins)
    summary = {
        "counts": counts,
        "edges": edges,
        "median": float(np.median(sel)) if sel.size else 0.0,
        "median_abs": float(np.median(np.abs(sel))) if sel.size else 0.0,
    }
    return err, summary
