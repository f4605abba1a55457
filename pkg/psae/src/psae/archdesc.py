"""Reader for the architecture document format served by this evaluator.

The file format is the shared contract with the search tool; this module
re-derives the same search-variable mapping (searchable conv/fc layers in
order, tie groups collapsing to the variable of their first member) so a
structure vector received over the wire can be expanded into per-layer
channel counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files as _pkg_files
from pathlib import Path

import yaml


@dataclass(frozen=True)
class Layer:
    id: str
    kind: str
    inputs: tuple[str, ...] = ()
    kernel: tuple[int, int] = (0, 0)
    stride: int = 1
    padding: str = "same"
    groups: int = 1
    has_bias: bool = False
    has_bn: bool = False
    base_out_channels: int = 0
    searchable: bool = False
    tie_group: str | None = None


@dataclass(frozen=True)
class ArchDescription:
    name: str
    input_shape: tuple[int, int, int]
    layers: tuple[Layer, ...]
    base_structure: tuple[int, ...]
    # layer id -> variable index, or -1 for fixed channel counts
    variable_of: dict

    @property
    def num_variables(self) -> int:
        return len(self.base_structure)

    def channels(self, layer_id: str, structure) -> int:
        """Output channels of a layer under a structure vector."""
        index = self.variable_of[layer_id]
        if index >= 0:
            return int(structure[index])
        layer = next(l for l in self.layers if l.id == layer_id)
        if layer.kind == "input":
            return self.input_shape[0]
        if layer.kind == "add":
            return self.channels(layer.inputs[0], structure)
        return layer.base_out_channels

    def validate_structure(self, structure) -> tuple[int, ...]:
        values = tuple(int(v) for v in structure)
        if len(values) != self.num_variables:
            raise ValueError(f"structure has {len(values)} entries, "
                             f"expected {self.num_variables}")
        for v, c in zip(values, self.base_structure):
            if not 0 < v <= c:
                raise ValueError(f"channel count {v} outside [1, {c}]")
        return values


def parse(text: str) -> ArchDescription:
    doc = yaml.safe_load(text)
    layers = []
    for raw in doc["layers"]:
        kernel = (raw.get("kernel_h", 0), raw.get("kernel_w", 0))
        layers.append(Layer(
            id=raw["id"], kind=raw["kind"],
            inputs=tuple(raw.get("inputs", ())),
            kernel=kernel, stride=raw.get("stride", 1),
            padding=raw.get("padding", "same"),
            groups=raw.get("groups", 1),
            has_bias=raw.get("has_bias", False),
            has_bn=raw.get("has_bn", False),
            base_out_channels=raw.get("base_out_channels", 0),
            searchable=raw.get("searchable",
                               raw["kind"] in ("conv", "fc")),
            tie_group=raw.get("tie_group"),
        ))

    base: list[int] = []
    variable_of: dict[str, int] = {}
    tie_vars: dict[str, int] = {}
    for layer in layers:
        if layer.kind in ("conv", "fc") and layer.searchable:
            if layer.tie_group is not None:
                if layer.tie_group not in tie_vars:
                    tie_vars[layer.tie_group] = len(base)
                    base.append(layer.base_out_channels)
                variable_of[layer.id] = tie_vars[layer.tie_group]
            else:
                variable_of[layer.id] = len(base)
                base.append(layer.base_out_channels)
        else:
            variable_of[layer.id] = -1

    shape = doc["input_shape"]
    return ArchDescription(
        name=doc["name"],
        input_shape=(shape[0], shape[1], shape[2]),
        layers=tuple(layers),
        base_structure=tuple(base),
        variable_of=variable_of,
    )


def load(path) -> ArchDescription:
    return parse(Path(path).read_text(encoding="utf-8"))


def asset_path(name: str) -> str:
    """Path of a bundled architecture document, e.g. ``tiny3``."""
    return str(_pkg_files("psae").joinpath(f"assets/{name}.arch"))
