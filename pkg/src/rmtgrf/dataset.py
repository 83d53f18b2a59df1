"""Synthetic dataset generation, splits, noise and network pre/post-processing."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .blocky import BlockySpec, sample_blocky, sample_geometry
from .errors import ConfigError, DimensionError, DomainError, GenerationError, NumericalError
from .forward2d import forward_response
from .grf import grf_resistivity_model
from .io import read_array, read_json, write_array, write_json
from .mesh import Mesh, MeshConfig, ResistivityModel, build_mesh
from .resample import resize_bilinear
from .response import RmtResponse

log = logging.getLogger(__name__)

KINDS = ("grf", "blocky")
TEST_FRACTION = 0.10
VAL_FRACTION = 0.135
TRAIN_FRACTION = 0.765
LOG10_RANGE = (1.0, 4.0)
# stride between retry seeds, far above any realistic sample count
RETRY_SEED_STRIDE = 1 << 32


@dataclass
class DatasetManifest:
    kind: str
    n: int
    base_seed: int
    samples: list = field(default_factory=list)
    split_fractions: dict = field(default_factory=lambda: {
        "test": TEST_FRACTION, "train": TRAIN_FRACTION, "val": VAL_FRACTION})
    mesh: dict = field(default_factory=dict)
    root: str = ""

    def ids(self, split: str | None = None) -> list:
        return [s["id"] for s in self.samples if split is None or s["split"] == split]

    def to_dict(self):
        d = asdict(self)
        d.pop("root")
        return d

    @classmethod
    def load(cls, root) -> "DatasetManifest":
        d = read_json(Path(root) / "manifest.json")
        return cls(**d, root=str(root))


def split_assignment(n: int, seed: int) -> np.ndarray:
    """Split label per sample index from a seeded permutation.

    The first 10 % of the permutation is test, the next 13.5 % validation and
    the rest training, so n = 1000 gives exactly 100 / 135 / 765.
    """
    if n < 1:
        raise DomainError("dataset must contain at least one sample")
    n_test = int(round(TEST_FRACTION * n))
    n_val = int(round(VAL_FRACTION * n))
    perm = np.random.default_rng([seed, 0x5917]).permutation(n)
    labels = np.empty(n, dtype=object)
    labels[perm[:n_test]] = "test"
    labels[perm[n_test:n_test + n_val]] = "val"
    labels[perm[n_test + n_val:]] = "train"
    return labels


def generate_model(kind: str, seed: int, mesh: Mesh):
    """Model and a JSON-able description for one generator seed."""
    rng = np.random.default_rng(seed)
    if kind == "grf":
        model, spec = grf_resistivity_model(None, mesh, rng)
        return model, {"grf_spec": spec.to_dict()}
    if kind == "blocky":
        geom = sample_geometry(rng)
        model, anomalies = sample_blocky(BlockySpec(geometry_type=geom), mesh, rng)
        return model, {"geometry": geom.value,
                       "anomalies": [{"rectangles": a.rectangles, "ohm_m": a.resistivity_ohm_m,
                                      "label": a.label} for a in anomalies]}
    raise ConfigError("kind", f"unknown generator kind {kind!r}; expected one of {KINDS}")


def _make_sample(args):
    kind, i, base_seed, mesh_cfg, max_retries = args
    mesh = build_mesh(MeshConfig(**mesh_cfg))
    last = None
    for attempt in range(max_retries + 1):
        seed = base_seed + i + attempt * RETRY_SEED_STRIDE
        try:
            model, desc = generate_model(kind, seed, mesh)
            resp = forward_response(model, mesh)
            return i, seed, attempt, model, resp, desc
        except (NumericalError, GenerationError) as exc:
            log.warning("sample %d seed %d failed (%s); regenerating", i, seed, exc)
            last = exc
    raise GenerationError(f"sample {i} failed after {max_retries + 1} attempts: {last}")


def gen_dataset(kind: str, n: int, base_seed: int, out_dir, mesh_config: MeshConfig | None = None,
                max_retries: int = 5, workers: int = 1) -> DatasetManifest:
    """Generate ``n`` model/response pairs under ``out_dir``.

    Sample ``i`` uses generator seed ``base_seed + i``; a failed sample is
    retried with ``seed + k * 2**32``.  Output is identical for any
    ``workers`` count.
    """
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown generator kind {kind!r}; expected one of {KINDS}")
    if n < 10:
        raise ConfigError("n", "dataset needs at least 10 samples")
    mesh_config = mesh_config or MeshConfig()
    mesh_config.validate()
    root = Path(out_dir)
    cfg = asdict(mesh_config)
    jobs = [(kind, i, base_seed, cfg, max_retries) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_make_sample, jobs, chunksize=4))
    else:
        results = map(_make_sample, jobs)
    labels = split_assignment(n, base_seed)
    samples = []
    for i, seed, attempt, model, resp, desc in results:
        sid = f"{i:05d}"
        write_array(root / "models" / sid, model.log10_rho,
                    {"kind": "resistivity_model", "id": sid, "mesh_id": model.mesh_id, "seed": seed, **desc})
        resp.save(root / "responses" / sid, {"id": sid, "model_id": sid})
        samples.append({"id": sid, "seed": seed, "retries": attempt, "split": str(labels[i])})
    man = DatasetManifest(kind, n, base_seed, samples, mesh=cfg, root=str(root))
    write_json(root / "manifest.json", man.to_dict())
    return man


def load_sample(root, sid: str):
    root = Path(root)
    log10_rho, meta = read_array(root / "models" / sid)
    return ResistivityModel(log10_rho, meta.get("mesh_id", "default")), RmtResponse.load(root / "responses" / sid)


@dataclass
class ArraySet:
    """Stacked responses (n, 4, nf, ns) and core log10 models (n, nz, ny)."""

    ids: list
    responses: np.ndarray
    cores: np.ndarray
    frequencies_hz: np.ndarray
    stations_m: np.ndarray

    def response(self, i: int) -> RmtResponse:
        return RmtResponse.from_array(self.responses[i], self.frequencies_hz, self.stations_m)

    def __len__(self):
        return len(self.ids)


def load_split(root, split: str | None = None, limit: int | None = None) -> ArraySet:
    man = DatasetManifest.load(root)
    mesh = build_mesh(MeshConfig(**man.mesh))
    ids = man.ids(split)[:limit]
    if not ids:
        raise DimensionError(f"split {split!r} of {root} is empty")
    resp, cores = [], []
    freqs = stations = None
    for sid in ids:
        model, r = load_sample(root, sid)
        resp.append(r.as_array())
        cores.append(model.core(mesh))
        freqs, stations = r.frequencies_hz, r.stations_m
    return ArraySet(ids, np.stack(resp), np.stack(cores), freqs, stations)


# ---- network pre/post-processing -------------------------------------------

def normalize_response(arr) -> np.ndarray:
    """log10 apparent resistivity and phase / 90 on (..., 4, nf, ns) arrays."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[-3] != 4:
        raise DimensionError(f"expected 4 channels, got shape {arr.shape}")
    out = np.empty_like(arr)
    out[..., :2, :, :] = np.log10(arr[..., :2, :, :])
    out[..., 2:, :, :] = arr[..., 2:, :, :] / 90.0
    return out


def response_to_input(arr, size: int) -> np.ndarray:
    """(…, 4, nf, ns) responses to (…, 4, size, size) network inputs."""
    return resize_bilinear(normalize_response(arr), (size, size))


def normalize_model(log10_rho):
    lo, hi = LOG10_RANGE
    return (np.asarray(log10_rho, dtype=float) - lo) / (hi - lo)


def denormalize_model(values):
    lo, hi = LOG10_RANGE
    return lo + (hi - lo) * np.asarray(values, dtype=float)


def model_to_target(cores, size: int) -> np.ndarray:
    """(n, nz, ny) core models to (n, 1, size, size) normalized targets."""
    return resize_bilinear(normalize_model(cores), (size, size))[:, None]


def output_to_core(out, core_shape) -> np.ndarray:
    """(n, 1, S, S) network output to clamped log10 core models (n, nz, ny)."""
    lo, hi = LOG10_RANGE
    return np.clip(denormalize_model(resize_bilinear(np.asarray(out)[:, 0], core_shape)), lo, hi)


# ---- noise ---------------------------------------------------------------

PHASE_MARGIN_DEG = 1e-6
RHO_FLOOR_REL = 1e-6


@dataclass(frozen=True)
class NoiseSpec:
    level: float = 0.0
    seed: int = 0

    def validate(self):
        if not self.level >= 0:
            raise ConfigError("level", "noise level must be >= 0")


def add_noise(response: RmtResponse, spec: NoiseSpec, rng: np.random.Generator | None = None) -> RmtResponse:
    """Multiplicative Gaussian noise ``v * (1 + level * g)`` on every unmasked entry.

    Apparent resistivity stays positive and phase stays in (0, 90) degrees.
    """
    spec.validate()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    arr = response.as_array()
    g = rng.standard_normal(arr.shape)
    noisy = arr * (1.0 + spec.level * g)
    noisy[:2] = np.maximum(noisy[:2], RHO_FLOOR_REL * arr[:2])
    noisy[2:] = np.clip(noisy[2:], PHASE_MARGIN_DEG, 90.0 - PHASE_MARGIN_DEG)
    if spec.level == 0:
        noisy = arr.copy()
    if response.mask is not None:
        noisy[response.mask] = arr[response.mask]
    return response.with_array(noisy, mask=response.mask)
