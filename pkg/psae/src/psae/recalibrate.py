"""BatchNorm recalibration: refresh running statistics, touch no weights.

Pruning invalidates the stored running mean/variance, so they are
recomputed as exact population moments of each BatchNorm layer's input
over a calibration set.  Layers are processed in network order, each from
a fresh forward sweep under the already-updated upstream statistics —
after the final layer, every stored statistic equals the moments its layer
actually sees in the finished model, and re-running the procedure is a
no-op.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import torch

if TYPE_CHECKING:
    from .model import ArchNet


def bn_layers_in_order(net: "ArchNet") -> list[tuple[str, torch.nn.BatchNorm2d]]:
    found = []
    for layer in net.desc.layers:
        if layer.kind == "conv" and layer.has_bn:
            found.append((layer.id, net.blocks[layer.id][1]))
    return found


def _input_moments(net: "ArchNet", bn: torch.nn.BatchNorm2d,
                   images: np.ndarray,
                   batch_size: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-channel mean and population variance of the layer's input."""
    count = 0
    total = torch.zeros(bn.num_features, dtype=torch.float64)
    total_sq = torch.zeros(bn.num_features, dtype=torch.float64)

    def hook(_module, inputs, _output):
        nonlocal count
        x = inputs[0].detach().double()
        count += x.shape[0] * x.shape[2] * x.shape[3]
        total.add_(x.sum(dim=(0, 2, 3)))
        total_sq.add_(x.pow(2).sum(dim=(0, 2, 3)))

    handle = bn.register_forward_hook(hook)
    try:
        net.eval()
        with torch.no_grad():
            for start in range(0, len(images), batch_size):
                net(torch.from_numpy(images[start:start + batch_size]))
    finally:
        handle.remove()
    mean = total / count
    var = total_sq / count - mean.pow(2)
    return mean.float(), var.clamp_min_(0).float()


def recalibrate_bn(net: "ArchNet", calibration: np.ndarray,
                   batch_size: int = 128) -> "ArchNet":
    """Recompute every BatchNorm layer's running statistics in place."""
    if len(calibration) == 0:
        raise ValueError("calibration set is empty")
    for _layer_id, bn in bn_layers_in_order(net):
        mean, var = _input_moments(net, bn, calibration, batch_size)
        with torch.no_grad():
            bn.running_mean.copy_(mean)
            bn.running_var.copy_(var)
    return net
