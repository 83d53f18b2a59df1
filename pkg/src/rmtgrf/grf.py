"""Gaussian-random-field resistivity models via truncated Karhunen-Loeve sampling."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError
from .mesh import Mesh, ResistivityModel, embed_core
from .resample import resize_bilinear


@dataclass(frozen=True)
class GrfSpec:
    """Covariance and range parameters of one random field.

    ``correlation_lengths`` is a scalar (isotropic) or a (vertical,
    horizontal) pair, in metres on the nominal lattice: cell indices in both
    directions are scaled by the core cell size.
    """

    correlation_lengths: float | tuple[float, float] = 30.0
    variance: float = 1.0
    truncation_k: int = 8
    mean_log10_rho: float = 2.5
    log10_range: tuple[float, float] = (1.0, 4.0)
    grid_shape: tuple[int, int] = (25, 34)

    def lengths(self) -> np.ndarray:
        c = np.atleast_1d(np.asarray(self.correlation_lengths, dtype=float))
        return np.repeat(c, 2) if c.size == 1 else c

    def validate(self) -> None:
        c = self.lengths()
        if c.size != 2 or np.any(~(c > 0)):
            raise DomainError(f"correlation lengths must be positive, got {self.correlation_lengths}")
        if not self.variance > 0:
            raise DomainError("variance must be > 0")
        lo, hi = self.log10_range
        if not lo < hi:
            raise DomainError(f"log10_range must satisfy lo < hi, got {self.log10_range}")
        if self.truncation_k < 1:
            raise DomainError("truncation_k must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["correlation_lengths"] = self.lengths().tolist()
        return d


@dataclass(frozen=True)
class GrfBounds:
    """Ranges that auto-sampled specs are drawn from."""

    correlation_length_m: tuple[float, float] = (10.0, 80.0)
    truncation_k: tuple[int, int] = (5, 10)
    p_anisotropic: float = 0.5


@dataclass
class KlDecomposition:
    eigenvalues: np.ndarray  # (k,) descending
    eigenvectors: np.ndarray  # (n_points, k), orthonormal columns


def covariance_matrix(points, spec: GrfSpec) -> np.ndarray:
    """C_ij = variance * exp(-1/2 sum_axis (x_i - x_j)^2 / c_axis^2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 1:
        raise DomainError("need at least one point")
    c = np.atleast_1d(np.asarray(spec.correlation_lengths, dtype=float))
    if np.any(~(c > 0)):
        raise DomainError(f"correlation lengths must be positive, got {c}")
    c = np.broadcast_to(c, (pts.shape[1],)) if c.size == 1 else c
    scaled = pts / c
    sq = np.sum(scaled ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * scaled @ scaled.T, 0.0)
    C = spec.variance * np.exp(-0.5 * d2)
    return 0.5 * (C + C.T)


def kl_decompose(C, k: int) -> KlDecomposition:
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if C.ndim != 2 or C.shape[1] != n:
        raise DomainError(f"covariance must be square, got {C.shape}")
    if not np.allclose(C, C.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(C).max())):
        raise DomainError("covariance matrix is not symmetric")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= {n}, got {k}")
    w, v = scipy.linalg.eigh(C, subset_by_index=[n - k, n - 1])
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    v = v[:, order]
    # fix eigenvector signs so the largest-magnitude entry is positive
    flip = np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(k)])
    return KlDecomposition(w, v * np.where(flip == 0, 1.0, flip))


def sample_grf(decomp: KlDecomposition, mean, rng: np.random.Generator) -> np.ndarray:
    """F = U_k sqrt(S_k) W + mean with W ~ N(0, I_k)."""
    xi = rng.standard_normal(len(decomp.eigenvalues))
    return decomp.eigenvectors @ (np.sqrt(decomp.eigenvalues) * xi) + mean


def lattice_points(grid_shape, core_shape, cell_size_m: float = 2.0) -> np.ndarray:
    """Lattice node coordinates (row, col) in nominal metres over the core."""
    rows = np.linspace(0, core_shape[0] - 1, grid_shape[0]) * cell_size_m
    cols = np.linspace(0, core_shape[1] - 1, grid_shape[1]) * cell_size_m
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.column_stack([rr.ravel(), cc.ravel()])


def rescale_to_range(field, log10_range, fallback, rtol: float = 1e-6, scale: float = 1.0):
    """Affine min-max map onto ``log10_range``.

    A field whose spread is below ``rtol * scale`` counts as constant and maps
    to ``fallback`` clipped into the range.
    """
    lo, hi = log10_range
    fmin, fmax = field.min(), field.max()
    if fmax - fmin <= rtol * scale:
        return np.full_like(field, float(np.clip(fallback, lo, hi)))
    out = lo + (field - fmin) * (hi - lo) / (fmax - fmin)
    out[field == fmin] = lo
    out[field == fmax] = hi
    return out


def sample_spec(rng: np.random.Generator, bounds: GrfBounds | None = None, **fixed) -> GrfSpec:
    bounds = bounds or GrfBounds()
    lo, hi = bounds.correlation_length_m
    if rng.random() < bounds.p_anisotropic:
        lengths = (float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi)))
    else:
        lengths = float(rng.uniform(lo, hi))
    k = int(rng.integers(bounds.truncation_k[0], bounds.truncation_k[1] + 1))
    return GrfSpec(correlation_lengths=lengths, truncation_k=k, **fixed)


def grf_core(spec: GrfSpec, mesh: Mesh, rng: np.random.Generator) -> np.ndarray:
    """One random field rescaled into the log10 range on the core cells."""
    spec.validate()
    pts = lattice_points(spec.grid_shape, mesh.core_shape, mesh.config.core_cell_size_m)
    decomp = kl_decompose(covariance_matrix(pts, spec), min(spec.truncation_k, len(pts)))
    raw = sample_grf(decomp, spec.mean_log10_rho, rng).reshape(spec.grid_shape)
    lat = rescale_to_range(raw, spec.log10_range, spec.mean_log10_rho, scale=np.sqrt(spec.variance))
    return resize_bilinear(lat, mesh.core_shape)


def grf_resistivity_model(spec: GrfSpec | None, mesh: Mesh, rng: np.random.Generator,
                          bounds: GrfBounds | None = None) -> tuple[ResistivityModel, GrfSpec]:
    """Draw a GRF model; ``spec=None`` auto-samples the spec from ``bounds``."""
    if spec is None:
        spec = sample_spec(rng, bounds)
    core = grf_core(spec, mesh, rng)
    return embed_core(core, mesh, float(core.mean())), spec
