"""Model artifact directory: weights, scalers, style lock, config, log.

Layout:

    artifact/
      model.pt       backbone + head state dict
      config.json    TrainConfig used
      scalers.json   label and t_ox min-max scalers
      style.json     render style the model was trained on
      log.json       per-epoch training log
"""

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .errors import ArtifactError, StyleMismatch
from .net import CurveRegressor
from .protocol import FIXED_I0
from .render import STYLE_VERSION, render_curve
from .scalers import denormalize_labels, scalers_from_dict


def save_artifact(out_dir, model, cfg, scalers, style, log):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / "model.pt")
    from .scalers import scalers_to_dict
    (out_dir / "config.json").write_text(
        json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
    (out_dir / "scalers.json").write_text(
        json.dumps(scalers_to_dict(scalers), indent=2, sort_keys=True)
        + "\n")
    (out_dir / "style.json").write_text(
        json.dumps(style, indent=2, sort_keys=True) + "\n")
    (out_dir / "log.json").write_text(
        json.dumps(log, indent=2, sort_keys=True) + "\n")


class Predictor:
    """Loaded artifact; refuses inputs rendered under another style."""

    def __init__(self, model, scalers, style):
        if style.get("version") != STYLE_VERSION:
            raise StyleMismatch(
                f"artifact was trained on style {style.get('version')!r}, "
                f"this build renders {STYLE_VERSION!r}")
        self.model = model.eval()
        self.scalers = scalers
        self.style = style

    @classmethod
    def load(cls, artifact_dir) -> "Predictor":
        artifact_dir = Path(artifact_dir)
        try:
            style = json.loads((artifact_dir / "style.json").read_text())
            scalers = scalers_from_dict(
                json.loads((artifact_dir / "scalers.json").read_text()))
            state = torch.load(artifact_dir / "model.pt",
                               map_location="cpu", weights_only=True)
        except OSError as exc:
            raise ArtifactError(f"cannot load artifact: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"bad artifact JSON: {exc}") from None
        model = CurveRegressor()
        try:
            model.load_state_dict(state)
        except RuntimeError as exc:
            raise ArtifactError(f"weights do not fit the network: {exc}"
                                ) from None
        return cls(model, scalers, style)

    def predict_image(self, image: np.ndarray, t_ox_nm: float) -> dict:
        """Parameter dict (i0 filled with the dataset constant)."""
        x = torch.from_numpy(
            image.astype(np.float32) / 255.0).permute(2, 0, 1).unsqueeze(0)
        t = torch.tensor([[self.scalers["t_ox"].normalize(t_ox_nm)]],
                         dtype=torch.float32)
        with torch.no_grad():
            out = self.model(x, t)[0].numpy()
        params = denormalize_labels(out, self.scalers)
        params["i0"] = FIXED_I0
        return params

    def predict_curve(self, v, i, t_ox_nm: float) -> dict:
        return self.predict_image(render_curve(v, i, self.style), t_ox_nm)
