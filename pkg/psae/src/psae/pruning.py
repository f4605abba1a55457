"""Weight sampling: instantiate a pruned network from the reference model.

Each searchable layer keeps the filters with the largest l1 norms (norm
over the filter's full weight slab); downstream layers' input slices
follow the kept indices of their producers, and tie-group members reuse
the index set chosen by the group's first layer.  A seeded random
selection mode exists for ablations.
"""

from __future__ import annotations

import numpy as np
import torch

from .archdesc import ArchDescription
from .model import ArchNet, ReferenceModel

MODE_L1 = "l1"
MODE_RANDOM = "random"


def filter_l1_norms(weight: torch.Tensor) -> torch.Tensor:
    """l1 norm of each output filter over its entire weight slab."""
    return weight.detach().abs().flatten(start_dim=1).sum(dim=1)


def top_l1_indices(weight: torch.Tensor, keep: int) -> list[int]:
    """Indices of the ``keep`` largest-l1 filters, ties to lower index."""
    norms = filter_l1_norms(weight).numpy()
    order = np.argsort(-norms, kind="stable")  # stable: ties by index
    return sorted(int(i) for i in order[:keep])


def random_indices(total: int, keep: int, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return sorted(int(i) for i in rng.choice(total, size=keep,
                                             replace=False))


def _kept_indices(reference: ReferenceModel, structure, mode: str,
                  selection_seed: int) -> dict[str, list[int]]:
    desc = reference.desc
    kept: dict[str, list[int]] = {}
    tie_owner: dict[str, list[int]] = {}
    for layer in desc.layers:
        if layer.kind == "input":
            kept[layer.id] = list(range(desc.input_shape[0]))
            continue
        if layer.kind == "add":
            kept[layer.id] = kept[layer.inputs[0]]
            continue
        total = desc.channels(layer.id, desc.base_structure)
        want = desc.channels(layer.id, structure)
        if want > total:
            raise ValueError(f"layer '{layer.id}': cannot keep {want} of "
                             f"{total} filters")
        if not layer.searchable or want == total:
            kept[layer.id] = list(range(total))
            continue
        if layer.tie_group is not None and layer.tie_group in tie_owner:
            kept[layer.id] = tie_owner[layer.tie_group]
            continue
        weight = _block_weight(reference.net, layer.id)
        if mode == MODE_L1:
            indices = top_l1_indices(weight, want)
        elif mode == MODE_RANDOM:
            indices = random_indices(total, want, selection_seed)
        else:
            raise ValueError(f"unknown selection mode '{mode}'")
        kept[layer.id] = indices
        if layer.tie_group is not None:
            tie_owner[layer.tie_group] = indices
    return kept


def _block_weight(net: ArchNet, layer_id: str) -> torch.Tensor:
    block = net.blocks[layer_id]
    if isinstance(block, torch.nn.Linear):
        return block.weight.detach()
    return block[0].weight.detach()


def sample_weights(reference: ReferenceModel, structure,
                   mode: str = MODE_L1, selection_seed: int = 0) -> ArchNet:
    """Build the pruned network with weights inherited from the reference."""
    desc: ArchDescription = reference.desc
    structure = desc.validate_structure(structure)
    kept = _kept_indices(reference, structure, mode, selection_seed)
    pruned = ArchNet(desc, structure)

    for layer in desc.layers:
        if layer.kind not in ("conv", "fc"):
            continue
        src_block = reference.net.blocks[layer.id]
        dst_block = pruned.blocks[layer.id]
        out_idx = torch.tensor(kept[layer.id], dtype=torch.long)
        in_idx = torch.tensor(kept[layer.inputs[0]], dtype=torch.long)
        with torch.no_grad():
            if layer.kind == "fc":
                dst_block.weight.copy_(
                    src_block.weight[out_idx][:, in_idx])
                if layer.has_bias:
                    dst_block.bias.copy_(src_block.bias[out_idx])
                continue
            if layer.groups != 1:
                raise ValueError(f"layer '{layer.id}': weight sampling "
                                 f"supports groups=1 only")
            conv_src, conv_dst = src_block[0], dst_block[0]
            conv_dst.weight.copy_(conv_src.weight[out_idx][:, in_idx])
            if layer.has_bias:
                conv_dst.bias.copy_(conv_src.bias[out_idx])
            if layer.has_bn:
                bn_src, bn_dst = src_block[1], dst_block[1]
                bn_dst.weight.copy_(bn_src.weight[out_idx])
                bn_dst.bias.copy_(bn_src.bias[out_idx])
                bn_dst.running_mean.copy_(bn_src.running_mean[out_idx])
                bn_dst.running_var.copy_(bn_src.running_var[out_idx])
                bn_dst.num_batches_tracked.copy_(bn_src.num_batches_tracked)
    pruned.eval()
    return pruned
