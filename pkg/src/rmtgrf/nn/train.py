"""Mini-batch training loop, early stopping and checkpoint files."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DimensionError, NumericalError
from ..io import read_json, write_json
from ..metrics import mae, mse, ssim
from . import layers as L
from .optim import AdamState, adam_step, lr_schedule
from .unet import UNet, UNetConfig

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("epoch", "train_loss", "val_loss", "val_mse", "val_mae", "val_ssim", "lr")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_decay_per_epoch: float = 0.95
    early_stop_patience: int = 20
    batch_size: int = 16
    max_epochs: int = 200
    seed: int = 0

    def validate(self):
        if not self.lr > 0:
            raise ConfigError("lr", "must be > 0")
        for name in ("beta1", "beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(name, "must lie in (0, 1)")
        if not self.adam_eps > 0:
            raise ConfigError("adam_eps", "must be > 0")
        if not 0 < self.lr_decay_per_epoch <= 1:
            raise ConfigError("lr_decay_per_epoch", "must lie in (0, 1]")
        for name in ("early_stop_patience", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainResult:
    net: UNet
    history: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def history_csv(self) -> str:
        return history_to_csv(self.history)


def history_to_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_FIELDS)
    for row in history:
        w.writerow([row["epoch"]] + [repr(float(row[k])) for k in HISTORY_FIELDS[1:]])
    return buf.getvalue()


def _val_metrics(net: UNet, x, y, batch_size):
    pred = net.predict(x, batch_size)
    loss = L.mse_loss(pred, y)[0]
    p2, y2 = pred[:, 0], y[:, 0]
    # tiny test images get the largest odd window that fits
    win = min(11, min(p2.shape[1:]) - (1 - min(p2.shape[1:]) % 2))
    return {
        "val_loss": loss,
        "val_mse": float(np.mean([mse(a, b) for a, b in zip(p2, y2)])),
        "val_mae": float(np.mean([mae(a, b) for a, b in zip(p2, y2)])),
        "val_ssim": float(np.mean([ssim(a, b, win_size=win) for a, b in zip(p2, y2)])),
    }


def _copy(d):
    return {k: v.copy() for k, v in d.items()}


def train(x_train, y_train, x_val, y_val, unet_config: UNetConfig | None = None,
          train_config: TrainConfig | None = None, net: UNet | None = None,
          callback=None) -> TrainResult:
    """Fit a U-Net on (N, 4, S, S) inputs and (N, 1, S, S) targets.

    Training stops once neither the validation loss nor the validation MAE
    has improved for ``early_stop_patience`` epochs.  The returned network
    holds the parameters of the epoch with the lowest validation loss.
    """
    tc = train_config or TrainConfig()
    tc.validate()
    x_train, y_train = np.asarray(x_train, float), np.asarray(y_train, float)
    x_val, y_val = np.asarray(x_val, float), np.asarray(y_val, float)
    if len(x_train) == 0 or len(x_val) == 0:
        raise DimensionError("training and validation sets must be non-empty")
    if len(x_train) != len(y_train) or len(x_val) != len(y_val):
        raise DimensionError("inputs and targets differ in sample count")
    if net is None:
        net = UNet(unet_config or UNetConfig(), seed=tc.seed)
    opt = AdamState(tc.beta1, tc.beta2, tc.adam_eps)
    rng = np.random.default_rng(tc.seed)
    history = []
    best_loss = best_mae = np.inf
    best = (_copy(net.params), _copy(net.state), 0)
    since_improved = 0
    stopped = False
    for epoch in range(tc.max_epochs):
        lr = lr_schedule(epoch, tc.lr, tc.lr_decay_per_epoch)
        order = rng.permutation(len(x_train))
        total = 0.0
        for start in range(0, len(order), tc.batch_size):
            idx = order[start:start + tc.batch_size]
            pred, caches = net.forward(x_train[idx], training=True)
            loss, dout = L.mse_loss(pred, y_train[idx])
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite training loss at epoch {epoch}, batch offset {start}")
            grads = net.backward(dout, caches)
            adam_step(net.params, grads, opt, lr)
            total += loss * len(idx)
        row = {"epoch": epoch, "train_loss": total / len(order), "lr": lr}
        row.update(_val_metrics(net, x_val, y_val, tc.batch_size))
        if not np.isfinite(row["val_loss"]):
            raise NumericalError(f"non-finite validation loss at epoch {epoch}")
        history.append(row)
        log.info("epoch %d train %.5f val %.5f ssim %.4f", epoch, row["train_loss"],
                 row["val_loss"], row["val_ssim"])
        improved = False
        if row["val_loss"] < best_loss:
            best_loss = row["val_loss"]
            best = (_copy(net.params), _copy(net.state), epoch)
            improved = True
        if row["val_mae"] < best_mae:
            best_mae = row["val_mae"]
            improved = True
        since_improved = 0 if improved else since_improved + 1
        if callback is not None:
            callback(row)
        if since_improved >= tc.early_stop_patience:
            stopped = True
            break
    net.params, net.state = best[0], best[1]
    return TrainResult(net, history, best[2], stopped)


def save_checkpoint(path, net: UNet, epoch: int = 0, metrics: dict | None = None,
                    train_config: TrainConfig | None = None) -> Path:
    """Write every array as raw little-endian float64 plus ``manifest.json``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    arrays = []
    for kind, store in (("param", net.params), ("state", net.state)):
        for name in sorted(store):
            arr = np.ascontiguousarray(store[name], dtype="<f8")
            fname = f"{kind}.{name}.bin"
            (root / fname).write_bytes(arr.tobytes())
            arrays.append({"name": name, "kind": kind, "file": fname, "shape": list(arr.shape)})
    write_json(root / "manifest.json", {
        "config": net.cfg.to_dict(),
        "train_config": train_config.to_dict() if train_config else None,
        "epoch": epoch,
        "metrics": metrics or {},
        "arrays": arrays,
    })
    return root


def load_checkpoint(path) -> tuple[UNet, dict]:
    root = Path(path)
    man = read_json(root / "manifest.json")
    params, state = {}, {}
    for a in man["arrays"]:
        raw = np.frombuffer((root / a["file"]).read_bytes(), dtype="<f8").astype(float)
        (params if a["kind"] == "param" else state)[a["name"]] = raw.reshape(a["shape"])
    cfg = UNetConfig(**man["config"])
    return UNet(cfg, params=params, state=state), man
