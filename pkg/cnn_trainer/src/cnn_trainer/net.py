"""Residual regression network: curve raster + oxide thickness -> labels.

Desk-scale twin of the big pretrained-backbone setup: same shape contract
(224x224x3 in, five sigmoid outputs, t_ox through its own dense branch,
a freezable backbone prefix), but sized to train on a CPU in minutes.
The backbone enumerates exactly 20 freezable layers so the conventional
"freeze the first 20" full-scale recipe maps onto it verbatim; with no
pretrained weights to protect, desk configs freeze 0.
"""

import torch
from torch import nn

BACKBONE_WIDTHS = (16, 32, 64)
N_LABELS = 5


class _ResidualBlock(nn.Module):
    def __init__(self, c_in, c_out, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.short_conv = nn.Conv2d(c_in, c_out, 1, stride, bias=False)
        self.short_bn = nn.BatchNorm2d(c_out)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        y = self.act(self.bn1(self.conv1(x)))
        y = self.bn2(self.conv2(y))
        return self.act(y + self.short_bn(self.short_conv(x)))


class CurveRegressor(nn.Module):
    def __init__(self, widths=BACKBONE_WIDTHS, t_ox_width=16,
                 head_width=64):
        super().__init__()
        w0, w1, w2 = widths
        self.stem_conv = nn.Conv2d(3, w0, 7, stride=4, padding=3,
                                   bias=False)
        self.stem_bn = nn.BatchNorm2d(w0)
        self.act = nn.ReLU(inplace=True)
        self.block1 = _ResidualBlock(w0, w0, stride=2)
        self.block2 = _ResidualBlock(w0, w1, stride=2)
        self.block3 = _ResidualBlock(w1, w2, stride=2)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.t_ox_branch = nn.Sequential(nn.Linear(1, t_ox_width),
                                         nn.ReLU(inplace=True))
        self.head = nn.Sequential(nn.Linear(w2 + t_ox_width, head_width),
                                  nn.ReLU(inplace=True),
                                  nn.Linear(head_width, N_LABELS),
                                  nn.Sigmoid())
        self._frozen_modules = []

    def backbone_layers(self):
        """The 20 freezable layers, input side first."""
        layers = [self.stem_conv, self.stem_bn]
        for block in (self.block1, self.block2, self.block3):
            layers += [block.conv1, block.bn1, block.conv2, block.bn2,
                       block.short_conv, block.short_bn]
        return layers

    def freeze_prefix(self, n_layers: int):
        """Freeze the first n backbone layers (clamped to the total)."""
        layers = self.backbone_layers()
        n_layers = max(0, min(int(n_layers), len(layers)))
        self._frozen_modules = layers[:n_layers]
        for m in self._frozen_modules:
            for p in m.parameters():
                p.requires_grad_(False)
        return n_layers

    def train(self, mode: bool = True):
        # Frozen batch norms must not keep adapting their running stats.
        super().train(mode)
        for m in self._frozen_modules:
            if isinstance(m, nn.BatchNorm2d):
                m.eval()
        return self

    def forward(self, images: torch.Tensor,
                t_ox: torch.Tensor) -> torch.Tensor:
        """images: (n, 3, 224, 224) in [0, 1]; t_ox: (n, 1) normalized."""
        x = self.act(self.stem_bn(self.stem_conv(images)))
        x = self.block3(self.block2(self.block1(x)))
        x = self.pool(x).flatten(1)
        x = torch.cat([x, self.t_ox_branch(t_ox)], dim=1)
        return self.head(x)


def trainable_parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def head_parameter_count(model: CurveRegressor) -> int:
    """Parameters outside the freezable backbone."""
    return (sum(p.numel() for p in model.t_ox_branch.parameters())
            + sum(p.numel() for p in model.head.parameters()))
