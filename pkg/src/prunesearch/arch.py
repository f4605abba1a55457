"""Declarative CNN architecture descriptions and exact cost accounting.

An architecture document describes a DAG of layers (``input``, ``conv``,
``fc``, ``add``).  Every searchable conv/fc layer contributes one integer
search variable; layers sharing a ``tie_group`` collapse into a single
variable so residual additions stay dimensionally consistent.  A structure
vector assigns an output channel count to each variable, and the cost model
computes FLOPs (multiply-accumulate units) and parameter counts for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib.resources import files as _pkg_files
from typing import NamedTuple

import yaml


class ArchSpecError(ValueError):
    """An architecture document failed validation."""


class StructureError(ValueError):
    """A structure vector is invalid for the given architecture."""


KIND_INPUT = "input"
KIND_CONV = "conv"
KIND_FC = "fc"
KIND_ADD = "add"

_PADDINGS = ("same", "valid")

# Channel references: ("var", index) for searchable variables,
# ("const", n) for fixed channel counts.
_VAR = "var"
_CONST = "const"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of an architecture DAG."""

    id: str
    kind: str
    inputs: tuple[str, ...] = ()
    kernel_h: int = 0
    kernel_w: int = 0
    stride: int = 1
    padding: str = "same"
    groups: int = 1
    has_bias: bool = False
    has_bn: bool = False
    base_out_channels: int = 0
    searchable: bool = False
    tie_group: str | None = None


@dataclass(frozen=True)
class CostReport:
    """FLOPs (multiply-accumulates) and parameter count of one structure."""

    flops: int
    params: int


@dataclass(frozen=True)
class SparsityTargets:
    """Minimum required pruning rates for FLOPs and parameters.

    A rate of 0 leaves that quantity unconstrained.
    """

    flops_rate: float = 0.0
    params_rate: float = 0.0

    def __post_init__(self) -> None:
        for name, value in (("flops_rate", self.flops_rate),
                            ("params_rate", self.params_rate)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


class _CostTerm(NamedTuple):
    # in_var/out_var are variable indices, -1 when the channel count is fixed.
    in_var: int
    in_const: int
    out_var: int
    out_const: int
    weight_mults: int  # kernel_h * kernel_w for conv, 1 for fc
    spatial: int       # out_h * out_w for conv, 1 for fc
    groups: int
    has_bias: bool
    has_bn: bool
    layer_id: str


@dataclass(frozen=True)
class ArchitectureSpec:
    """A validated architecture with its search-variable mapping."""

    name: str
    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    base_structure: tuple[int, ...]
    variable_ids: tuple[str, ...]  # tie-group name or layer id per variable
    _channel_refs: dict = field(repr=False)
    _terms: tuple = field(repr=False)
    _base_cost: CostReport = field(repr=False)

    @property
    def num_variables(self) -> int:
        return len(self.base_structure)

    @property
    def base_cost(self) -> CostReport:
        return self._base_cost

    def channel_ref(self, layer_id: str) -> tuple[str, int]:
        """Resolve a layer id to ("var", idx) or ("const", channels)."""
        return self._channel_refs[layer_id]

    def resolved_channels(self, layer_id: str, structure) -> int:
        kind, value = self._channel_refs[layer_id]
        return structure[value] if kind == _VAR else value


def _fail(layer_id: str | None, msg: str) -> ArchSpecError:
    where = f"layer '{layer_id}': " if layer_id else ""
    return ArchSpecError(where + msg)


def _get_int(raw: dict, key: str, lid: str, *, minimum: int = 1,
             default: int | None = None) -> int:
    if key not in raw:
        if default is None:
            raise _fail(lid, f"missing required field '{key}'")
        return default
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(lid, f"field '{key}' must be an integer")
    if value < minimum:
        raise _fail(lid, f"field '{key}' must be >= {minimum}, got {value}")
    return value


def _get_bool(raw: dict, key: str, lid: str, default: bool) -> bool:
    value = raw.get(key, default)
    if not isinstance(value, bool):
        raise _fail(lid, f"field '{key}' must be a boolean")
    return value


_KEYS_COMMON = {"id", "kind"}
_KEYS_BY_KIND = {
    KIND_INPUT: _KEYS_COMMON,
    KIND_CONV: _KEYS_COMMON | {"inputs", "kernel_h", "kernel_w", "stride",
                               "padding", "groups", "has_bias", "has_bn",
                               "base_out_channels", "searchable", "tie_group"},
    KIND_FC: _KEYS_COMMON | {"inputs", "has_bias", "has_bn",
                             "base_out_channels", "searchable", "tie_group"},
    KIND_ADD: _KEYS_COMMON | {"inputs"},
}


def _parse_layer(raw: object) -> LayerSpec:
    if not isinstance(raw, dict):
        raise ArchSpecError("each layer must be a mapping")
    lid = raw.get("id")
    if not isinstance(lid, str) or not lid:
        raise ArchSpecError("every layer needs a non-empty string 'id'")
    kind = raw.get("kind")
    if kind not in _KEYS_BY_KIND:
        raise _fail(lid, f"unknown kind {kind!r}")
    unknown = set(raw) - _KEYS_BY_KIND[kind]
    if unknown:
        raise _fail(lid, f"unknown fields for kind '{kind}': {sorted(unknown)}")

    inputs_raw = raw.get("inputs", [])
    if not isinstance(inputs_raw, list) or not all(
            isinstance(x, str) for x in inputs_raw):
        raise _fail(lid, "'inputs' must be a list of layer ids")
    inputs = tuple(inputs_raw)

    if kind == KIND_INPUT:
        return LayerSpec(id=lid, kind=kind)

    if kind == KIND_ADD:
        if len(inputs) < 2:
            raise _fail(lid, "add layers need at least two inputs")
        return LayerSpec(id=lid, kind=kind, inputs=inputs)

    # conv / fc
    if len(inputs) != 1:
        raise _fail(lid, f"{kind} layers take exactly one input")
    out_ch = _get_int(raw, "base_out_channels", lid)
    searchable = _get_bool(raw, "searchable", lid, True)
    tie_group = raw.get("tie_group")
    if tie_group is not None and not isinstance(tie_group, str):
        raise _fail(lid, "'tie_group' must be a string")
    if tie_group is not None and not searchable:
        raise _fail(lid, "tie_group requires searchable: true")
    common = dict(id=lid, kind=kind, inputs=inputs,
                  has_bias=_get_bool(raw, "has_bias", lid, False),
                  has_bn=_get_bool(raw, "has_bn", lid, False),
                  base_out_channels=out_ch, searchable=searchable,
                  tie_group=tie_group)
    if kind == KIND_FC:
        return LayerSpec(**common)

    padding = raw.get("padding", "same")
    if padding not in _PADDINGS:
        raise _fail(lid, f"padding must be one of {_PADDINGS}")
    return LayerSpec(
        kernel_h=_get_int(raw, "kernel_h", lid),
        kernel_w=_get_int(raw, "kernel_w", lid),
        stride=_get_int(raw, "stride", lid, default=1),
        padding=padding,
        groups=_get_int(raw, "groups", lid, default=1),
        **common,
    )


def _out_size(size: int, kernel: int, stride: int, padding: str,
              lid: str) -> int:
    if padding == "same":
        return -(-size // stride)  # ceil division
    span = size - kernel
    if span < 0 or span % stride != 0:
        raise _fail(lid, f"valid padding yields a non-integer spatial size "
                         f"(input {size}, kernel {kernel}, stride {stride})")
    return span // stride + 1


def parse_arch_spec(text: str) -> ArchitectureSpec:
    """Parse and validate an architecture document.

    Raises ArchSpecError on malformed documents, dangling references,
    add layers with untied inputs, group/channel inconsistencies, or
    documents with no searchable layers.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ArchSpecError(f"not a valid document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ArchSpecError("document root must be a mapping")
    unknown = set(doc) - {"name", "input_shape", "layers"}
    if unknown:
        raise ArchSpecError(f"unknown top-level fields: {sorted(unknown)}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ArchSpecError("'name' must be a non-empty string")
    shape = doc.get("input_shape")
    if (not isinstance(shape, list) or len(shape) != 3
            or any(isinstance(x, bool) or not isinstance(x, int) or x < 1
                   for x in shape)):
        raise ArchSpecError("'input_shape' must be [channels, height, width] "
                            "of positive integers")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ArchSpecError("'layers' must be a non-empty list")

    layers = tuple(_parse_layer(x) for x in raw_layers)

    seen: dict[str, LayerSpec] = {}
    input_layers = [l for l in layers if l.kind == KIND_INPUT]
    if len(input_layers) != 1:
        raise ArchSpecError("exactly one input layer is required")
    for layer in layers:
        if layer.id in seen:
            raise _fail(layer.id, "duplicate layer id")
        for dep in layer.inputs:
            if dep not in seen:
                raise _fail(layer.id, f"input '{dep}' does not name an "
                                      f"earlier layer")
        seen[layer.id] = layer

    in_ch, in_h, in_w = shape

    # Resolve channel references (tie groups share one variable).
    refs: dict[str, tuple[str, int]] = {}
    tie_vars: dict[str, int] = {}
    tie_channels: dict[str, int] = {}
    base: list[int] = []
    var_ids: list[str] = []
    for layer in layers:
        if layer.kind == KIND_INPUT:
            refs[layer.id] = (_CONST, in_ch)
        elif layer.kind == KIND_ADD:
            got = {refs[dep] for dep in layer.inputs}
            if len(got) != 1:
                raise _fail(layer.id, "add inputs must share one channel "
                                      "variable (tie_group) or be equal "
                                      "fixed channel counts")
            refs[layer.id] = got.pop()
        elif not layer.searchable:
            refs[layer.id] = (_CONST, layer.base_out_channels)
        elif layer.tie_group is not None:
            group = layer.tie_group
            if group in tie_vars:
                if tie_channels[group] != layer.base_out_channels:
                    raise _fail(layer.id,
                                f"tie_group '{group}' mixes base channel "
                                f"counts {tie_channels[group]} and "
                                f"{layer.base_out_channels}")
                refs[layer.id] = (_VAR, tie_vars[group])
            else:
                tie_vars[group] = len(base)
                tie_channels[group] = layer.base_out_channels
                refs[layer.id] = (_VAR, len(base))
                base.append(layer.base_out_channels)
                var_ids.append(group)
        else:
            refs[layer.id] = (_VAR, len(base))
            base.append(layer.base_out_channels)
            var_ids.append(layer.id)

    if not base:
        raise ArchSpecError("no searchable layers")

    # Spatial propagation (structure independent).
    spatial: dict[str, tuple[int, int] | None] = {}
    for layer in layers:
        if layer.kind == KIND_INPUT:
            spatial[layer.id] = (in_h, in_w)
        elif layer.kind == KIND_FC:
            spatial[layer.id] = None
        elif layer.kind == KIND_ADD:
            shapes = {spatial[dep] for dep in layer.inputs}
            if len(shapes) != 1 or None in shapes:
                raise _fail(layer.id, "add inputs must share one spatial size")
            spatial[layer.id] = shapes.pop()
        else:
            src = spatial[layer.inputs[0]]
            if src is None:
                raise _fail(layer.id, "conv cannot consume an fc layer")
            spatial[layer.id] = (
                _out_size(src[0], layer.kernel_h, layer.stride,
                          layer.padding, layer.id),
                _out_size(src[1], layer.kernel_w, layer.stride,
                          layer.padding, layer.id),
            )

    # Cost terms plus base-structure group checks.
    terms: list[_CostTerm] = []
    for layer in layers:
        if layer.kind not in (KIND_CONV, KIND_FC):
            continue
        ikind, ival = refs[layer.inputs[0]]
        okind, oval = refs[layer.id]
        in_var, in_const = (ival, 0) if ikind == _VAR else (-1, ival)
        out_var, out_const = (oval, 0) if okind == _VAR else (-1, oval)
        if layer.kind == KIND_CONV:
            base_in = base[ival] if ikind == _VAR else ival
            base_out = base[oval] if okind == _VAR else oval
            if base_in % layer.groups or base_out % layer.groups:
                raise _fail(layer.id, f"groups={layer.groups} must divide "
                                      f"input ({base_in}) and output "
                                      f"({base_out}) channel counts")
            oh, ow = spatial[layer.id]
            terms.append(_CostTerm(in_var, in_const, out_var, out_const,
                                   layer.kernel_h * layer.kernel_w, oh * ow,
                                   layer.groups, layer.has_bias, layer.has_bn,
                                   layer.id))
        else:
            terms.append(_CostTerm(in_var, in_const, out_var, out_const,
                                   1, 1, 1, layer.has_bias, layer.has_bn,
                                   layer.id))

    spec = ArchitectureSpec(
        name=name,
        input_shape=(in_ch, in_h, in_w),
        layers=layers,
        base_structure=tuple(base),
        variable_ids=tuple(var_ids),
        _channel_refs=refs,
        _terms=tuple(terms),
        _base_cost=CostReport(0, 0),
    )
    object.__setattr__(spec, "_base_cost", compute_cost(spec, spec.base_structure))
    return spec


def load_arch(path) -> ArchitectureSpec:
    """Parse an architecture document from a file path."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_arch_spec(handle.read())


def bundled_arch_path(name: str) -> str:
    """Path of a bundled architecture document, e.g. ``t2``."""
    resource = _pkg_files("prunesearch").joinpath(f"data/{name}.arch")
    if not resource.is_file():
        raise ArchSpecError(f"no bundled architecture named '{name}'")
    return str(resource)


def validate_structure(spec: ArchitectureSpec, structure) -> tuple[int, ...]:
    """Check length and per-variable channel range, returning a tuple."""
    values = tuple(structure)
    if len(values) != spec.num_variables:
        raise StructureError(
            f"structure has {len(values)} entries, architecture "
            f"'{spec.name}' has {spec.num_variables} variables")
    for i, (v, c) in enumerate(zip(values, spec.base_structure)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise StructureError(f"entry {i} is not an integer: {v!r}")
        if not 0 < v <= c:
            raise StructureError(
                f"entry {i} ({spec.variable_ids[i]}) must be in [1, {c}], "
                f"got {v}")
    return values


def compute_cost(spec: ArchitectureSpec, structure) -> CostReport:
    """Exact FLOPs (MACs) and parameter count for a structure vector."""
    s = validate_structure(spec, structure)
    flops = 0
    params = 0
    for t in spec._terms:
        cin = s[t.in_var] if t.in_var >= 0 else t.in_const
        cout = s[t.out_var] if t.out_var >= 0 else t.out_const
        if cin % t.groups or cout % t.groups:
            raise StructureError(
                f"layer '{t.layer_id}': groups={t.groups} does not divide "
                f"channels (in={cin}, out={cout})")
        weights = t.weight_mults * (cin // t.groups) * cout
        flops += weights * t.spatial
        params += weights
        if t.has_bias:
            params += cout
        if t.has_bn:
            params += 2 * cout
    return CostReport(flops, params)


def pruning_rates(spec: ArchitectureSpec, structure) -> tuple[float, float]:
    """Fractional FLOPs/parameter reduction relative to the base structure."""
    cost = compute_cost(spec, structure)
    base = spec.base_cost
    return 1.0 - cost.flops / base.flops, 1.0 - cost.params / base.params


def is_feasible(spec: ArchitectureSpec, structure,
                targets: SparsityTargets) -> bool:
    """True iff both pruning rates meet their targets."""
    r_f, r_p = pruning_rates(spec, structure)
    return r_f >= targets.flops_rate and r_p >= targets.params_rate
