"""Torch models built from architecture descriptions, plus pretraining.

The reference model is trained once at the full structure; pruned variants
are later instantiated by slicing its weights (see ``pruning``).  All
training is seeded and single-threaded so a given (arch, dataset, epochs,
seed) reproduces bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .archdesc import ArchDescription, Layer
from .data import Dataset, make_dataset

CHANCE_FLOOR = 2.0 / 10  # refuse models that never left random guessing


class ArchNet(nn.Module):
    """Executes the layer DAG; module names follow layer ids."""

    def __init__(self, desc: ArchDescription, structure):
        super().__init__()
        self.desc = desc
        self.structure = desc.validate_structure(structure)
        self.blocks = nn.ModuleDict()
        for layer in desc.layers:
            if layer.kind == "conv":
                cin = desc.channels(layer.inputs[0], self.structure)
                cout = desc.channels(layer.id, self.structure)
                pad = layer.kernel[0] // 2 if layer.padding == "same" else 0
                block: list[nn.Module] = [nn.Conv2d(
                    cin, cout, layer.kernel, stride=layer.stride,
                    padding=pad, groups=layer.groups, bias=layer.has_bias)]
                if layer.has_bn:
                    block.append(nn.BatchNorm2d(cout))
                block.append(nn.ReLU())
                self.blocks[layer.id] = nn.Sequential(*block)
            elif layer.kind == "fc":
                cin = desc.channels(layer.inputs[0], self.structure)
                cout = desc.channels(layer.id, self.structure)
                self.blocks[layer.id] = nn.Linear(cin, cout,
                                                  bias=layer.has_bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        outputs: dict[str, torch.Tensor] = {}
        result = x
        for layer in self.desc.layers:
            if layer.kind == "input":
                outputs[layer.id] = x
            elif layer.kind == "add":
                total = outputs[layer.inputs[0]]
                for other in layer.inputs[1:]:
                    total = total + outputs[other]
                outputs[layer.id] = torch.relu(total)
            elif layer.kind == "fc":
                src = outputs[layer.inputs[0]]
                if src.dim() == 4:  # global average pool to channel features
                    src = src.mean(dim=(2, 3))
                outputs[layer.id] = self.blocks[layer.id](src)
            else:
                outputs[layer.id] = self.blocks[layer.id](
                    outputs[layer.inputs[0]])
            result = outputs[layer.id]
        return result


@dataclass
class ReferenceModel:
    """A pretrained full-structure network plus its provenance."""

    desc: ArchDescription
    net: ArchNet
    dataset_name: str
    epochs: int
    seed: int
    accuracy: float

    def state(self) -> dict:
        return {
            "arch_name": self.desc.name,
            "base_structure": list(self.desc.base_structure),
            "layer_ids": [l.id for l in self.desc.layers],
            "dataset": self.dataset_name,
            "epochs": self.epochs,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "state_dict": self.net.state_dict(),
        }


def accuracy_on(net: nn.Module, images: np.ndarray, labels: np.ndarray,
                batch_size: int = 256) -> float:
    net.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch = torch.from_numpy(images[start:start + batch_size])
            preds = net(batch).argmax(dim=1).numpy()
            correct += int((preds == labels[start:start + batch_size]).sum())
    return correct / len(images)


def pretrain(desc: ArchDescription, dataset: Dataset | None = None,
             dataset_name: str = "synthetic", epochs: int = 20,
             seed: int = 0, batch_size: int = 64, lr: float = 3e-3,
             weight_decay: float = 3e-3,
             calibration_count: int = 2000) -> ReferenceModel:
    """Train the full-structure network; deterministic for a fixed seed.

    Weight decay shrinks filters the task never recruits, which is what
    gives the l1 magnitude criterion its signal later.  Training ends by
    recalibrating the BatchNorm statistics on training samples, so the
    stored accuracy is measured under the same statistics regime the
    evaluator uses.  Raises RuntimeError when a nonzero-epoch run ends
    below twice the chance accuracy (training diverged; not worth saving).
    """
    from .recalibrate import recalibrate_bn

    torch.set_num_threads(1)
    torch.manual_seed(seed)
    if dataset is None:
        dataset = make_dataset(dataset_name)
    net = ArchNet(desc, desc.base_structure)
    optimizer = torch.optim.Adam(net.parameters(), lr=lr,
                                 weight_decay=weight_decay)
    loss_fn = nn.CrossEntropyLoss()
    shuffle = np.random.default_rng(seed)

    net.train()
    for _ in range(epochs):
        order = shuffle.permutation(len(dataset.train_x))
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            x = torch.from_numpy(dataset.train_x[idx])
            y = torch.from_numpy(dataset.train_y[idx])
            optimizer.zero_grad()
            loss = loss_fn(net(x), y)
            loss.backward()
            optimizer.step()

    recalibrate_bn(net, dataset.train_x[:calibration_count])
    acc = accuracy_on(net, dataset.val_x, dataset.val_y)
    if epochs > 0 and acc < CHANCE_FLOOR:
        raise RuntimeError(
            f"training diverged: validation accuracy {acc:.3f} is below "
            f"{CHANCE_FLOOR} after {epochs} epochs")
    return ReferenceModel(desc=desc, net=net, dataset_name=dataset_name,
                          epochs=epochs, seed=seed, accuracy=acc)


def save_model(model: ReferenceModel, path) -> None:
    torch.save(model.state(), path)


def load_model(path, desc: ArchDescription) -> ReferenceModel:
    state = torch.load(path, weights_only=False)
    if state["arch_name"] != desc.name or \
            state["base_structure"] != list(desc.base_structure) or \
            state["layer_ids"] != [l.id for l in desc.layers]:
        raise ValueError(
            f"checkpoint was trained for architecture "
            f"'{state['arch_name']}' with a different layer layout than "
            f"'{desc.name}'")
    net = ArchNet(desc, desc.base_structure)
    net.load_state_dict(state["state_dict"])
    net.eval()
    return ReferenceModel(desc=desc, net=net,
                          dataset_name=state["dataset"],
                          epochs=state["epochs"], seed=state["seed"],
                          accuracy=state["accuracy"])
