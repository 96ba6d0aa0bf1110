"""Offline training of the curve regressor."""

import json
import math
import warnings
from copy import deepcopy
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import MIN_SAMPLES, load_rendered_dataset
from .errors import DatasetTooSmall, NonDecreasingLoss, SchemaViolation
from .net import CurveRegressor, trainable_parameter_count


@dataclass(frozen=True)
class TrainConfig:
    frozen_layers: int = 20   # full-scale default; desk configs use 0
    lr: float = 1e-3
    decay_after: int = 10     # epochs at flat lr before exponential decay
    epochs: int = 20
    batch_size: int = 64
    val_split: float = 0.15
    patience: int = 4
    seed: int = 0
    weights_path: str | None = None   # optional pretrained backbone

    def __post_init__(self):
        if not self.lr > 0:
            raise SchemaViolation("lr must be positive")
        if not 0.0 < self.val_split < 1.0:
            raise SchemaViolation("val_split must be inside (0, 1)")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise SchemaViolation("epochs, batch_size and patience must "
                                  "be >= 1")
        if self.frozen_layers < 0 or self.decay_after < 0:
            raise SchemaViolation("frozen_layers and decay_after must be "
                                  ">= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SchemaViolation(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def learning_rate(cfg: TrainConfig, epoch: int) -> float:
    """Flat for the first `decay_after` epochs, then lr * e^(-0.1 x)."""
    if epoch <= cfg.decay_after:
        return cfg.lr
    return cfg.lr * math.exp(-0.1 * (epoch - cfg.decay_after))


def _batches(indices, batch_size):
    for k in range(0, len(indices), batch_size):
        yield indices[k:k + batch_size]


def _tensors(data, idx):
    images = torch.from_numpy(
        data["images"][idx].astype(np.float32) / 255.0).permute(0, 3, 1, 2)
    t_ox = torch.from_numpy(data["t_ox_norm"][idx].astype(np.float32))
    labels = torch.from_numpy(data["labels"][idx])
    return images, t_ox.unsqueeze(1), labels


def train(data_dir, cfg: TrainConfig, out_dir, progress=None):
    """Train on a rendered dataset directory and write the artifact.

    Returns the training log dict (also persisted as log.json). Early
    stopping restores the best-validation weights before saving.
    """
    from .artifact import save_artifact

    data = load_rendered_dataset(data_dir)
    n = len(data["images"])
    if n < MIN_SAMPLES:
        raise DatasetTooSmall(f"{n} samples < required {MIN_SAMPLES}")

    t_scaler = data["scalers"]["t_ox"]
    data["t_ox_norm"] = np.array([t_scaler.normalize(x)
                                  for x in data["t_ox_nm"]])

    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    perm = torch.randperm(n, generator=gen).numpy()
    n_val = max(1, round(n * cfg.val_split))
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    model = CurveRegressor()
    if cfg.weights_path:
        state = torch.load(cfg.weights_path, map_location="cpu",
                           weights_only=True)
        model.load_state_dict(state, strict=False)
    frozen = model.freeze_prefix(cfg.frozen_layers)
    params = [p for p in model.parameters() if p.requires_grad]
    if not params:
        raise SchemaViolation("nothing left to train")
    optimizer = torch.optim.Adam(params, lr=cfg.lr)
    loss_fn = torch.nn.MSELoss()

    val_images, val_tox, val_labels = _tensors(data, val_idx)

    def validate():
        model.eval()
        with torch.no_grad():
            out = model(val_images, val_tox)
            return float(loss_fn(out, val_labels))

    epochs_log = []
    best_val = math.inf
    best_epoch = 0
    best_state = None
    bad = 0
    for epoch in range(1, cfg.epochs + 1):
        lr = learning_rate(cfg, epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        model.train()
        order = train_idx[torch.randperm(len(train_idx),
                                         generator=gen).numpy()]
        total = 0.0
        for batch in _batches(order, cfg.batch_size):
            images, tox, labels = _tensors(data, batch)
            optimizer.zero_grad()
            loss = loss_fn(model(images, tox), labels)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(batch)
        train_loss = total / len(train_idx)
        val_loss = validate()
        epochs_log.append({"epoch": epoch, "lr": lr,
                           "train_loss": train_loss,
                           "val_loss": val_loss,
                           "val_rmse": math.sqrt(val_loss)})
        if progress is not None:
            progress(epochs_log[-1])
        if val_loss < best_val:
            best_val, best_epoch, bad = val_loss, epoch, 0
            best_state = deepcopy(model.state_dict())
        else:
            bad += 1
            if bad >= cfg.patience:
                break

    if len(epochs_log) > 1 and best_epoch <= 1:
        warnings.warn("validation loss never improved on epoch 1",
                      NonDecreasingLoss)
    if best_state is not None:
        model.load_state_dict(best_state)

    log = {
        "epochs": epochs_log,
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
        "best_val_rmse": math.sqrt(best_val),
        "n_train": int(len(train_idx)),
        "n_val": int(n_val),
        "frozen_layers": frozen,
        "trainable_params": trainable_parameter_count(model),
        "config": asdict(cfg),
    }
    save_artifact(Path(out_dir), model, cfg, data["scalers"],
                  data["style"], log)
    return log
