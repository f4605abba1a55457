"""Compressed integer search spaces, sampling, and constraint repair.

Each dimension admits the multiples of a step size inside [lo, hi]; for
pruning problems dimension ``i`` is ``{e_i, 2*e_i, ..., floor(c_i/e_i)*e_i}``.
``rescale`` snaps an arbitrary integer vector into the space and then, when
sparsity constraints are attached, repairs it by randomly decrementing
channels until the constraints hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arch import ArchitectureSpec, SparsityTargets, is_feasible


class MinimumReached(RuntimeError):
    """Repair hit the all-minimum vector with constraints still unmet."""


@dataclass(frozen=True)
class IntegerBox:
    """Axis-aligned integer box; dimension i admits multiples of steps[i]
    within [los[i], his[i]]."""

    los: tuple[int, ...]
    his: tuple[int, ...]
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.los) == len(self.his) == len(self.steps)):
            raise ValueError("los/his/steps must have equal lengths")
        for i, (lo, hi, step) in enumerate(
                zip(self.los, self.his, self.steps)):
            if step < 1:
                raise ValueError(f"dimension {i}: step must be >= 1")
            if lo % step != 0:
                raise ValueError(f"dimension {i}: lo={lo} is not a multiple "
                                 f"of step={step}")
            if lo > hi:
                raise ValueError(f"dimension {i}: lo={lo} > hi={hi}")
            if (hi // step) * step < lo:
                raise ValueError(f"dimension {i}: no admissible value")

    @property
    def dims(self) -> int:
        return len(self.los)

    def count(self, i: int) -> int:
        """Number of admissible values along dimension i."""
        return self.his[i] // self.steps[i] - self.los[i] // self.steps[i] + 1

    def max_value(self, i: int) -> int:
        return (self.his[i] // self.steps[i]) * self.steps[i]

    def snap(self, i: int, value: int) -> int:
        """Nearest admissible value at or below ``value``, clamped inside."""
        snapped = (value // self.steps[i]) * self.steps[i]
        if snapped < self.los[i]:
            return self.los[i]
        top = self.max_value(i)
        return top if snapped > top else snapped

    def contains(self, vector) -> bool:
        if len(vector) != self.dims:
            return False
        return all(self.los[i] <= v <= self.his[i] and v % self.steps[i] == 0
                   for i, v in enumerate(vector))


@dataclass(frozen=True)
class SparsityConstraints:
    """Feasibility test for a search space tied to an architecture."""

    arch: ArchitectureSpec
    targets: SparsityTargets

    def feasible(self, vector) -> bool:
        return is_feasible(self.arch, vector, self.targets)


@dataclass(frozen=True)
class CompressedSpace:
    """An integer box, optionally linked to sparsity constraints."""

    box: IntegerBox
    constraints: SparsityConstraints | None = None

    @property
    def dims(self) -> int:
        return self.box.dims

    @property
    def min_vector(self) -> tuple[int, ...]:
        return self.box.los


def build_space(base, steps, *, arch: ArchitectureSpec | None = None,
                targets: SparsityTargets | None = None) -> CompressedSpace:
    """Compressed pruning space for base channels ``c`` and steps ``e``.

    Dimension i admits {e_i, 2*e_i, ..., floor(c_i/e_i)*e_i}.  When an
    architecture and targets are given, the space carries the sparsity
    constraints used by ``rescale``.
    """
    base = tuple(int(c) for c in base)
    steps = tuple(int(e) for e in steps)
    if len(base) != len(steps):
        raise ValueError(f"base has {len(base)} entries, steps has "
                         f"{len(steps)}")
    for i, (c, e) in enumerate(zip(base, steps)):
        if not 1 <= e <= c:
            raise ValueError(f"dimension {i}: step must satisfy "
                             f"1 <= e <= {c}, got {e}")
    box = IntegerBox(los=steps, his=base, steps=steps)
    constraints = None
    if arch is not None and targets is not None:
        if base != arch.base_structure:
            raise ValueError("base vector does not match the architecture's "
                             "base structure")
        constraints = SparsityConstraints(arch, targets)
    return CompressedSpace(box=box, constraints=constraints)


def symmetric_box_space(lo: int, hi: int, dims: int,
                        step: int = 1) -> CompressedSpace:
    """Unconstrained space with identical [lo, hi] bounds per dimension."""
    return CompressedSpace(IntegerBox((lo,) * dims, (hi,) * dims,
                                      (step,) * dims))


def default_steps(base, divisor: int = 8) -> tuple[int, ...]:
    """Per-dimension steps of one ``divisor``-th of the base channels."""
    return tuple(max(1, c // divisor) for c in base)


def space_size(space: CompressedSpace) -> int:
    """Exact number of points (arbitrary precision)."""
    size = 1
    for i in range(space.dims):
        size *= space.box.count(i)
    return size


def sample_uniform(space: CompressedSpace,
                   rng: np.random.Generator) -> tuple[int, ...]:
    """Draw each dimension independently and uniformly."""
    box = space.box
    values = []
    for i in range(box.dims):
        k = int(rng.integers(0, box.count(i)))
        values.append((box.los[i] // box.steps[i] + k) * box.steps[i])
    return tuple(values)


def snap_and_clamp(vector, space: CompressedSpace) -> tuple[int, ...]:
    """Floor each entry to a step multiple, then clamp into the box.

    Idempotent; accepts arbitrary integers (negative, oversized).
    """
    box = space.box
    if len(vector) != box.dims:
        raise ValueError(f"vector has {len(vector)} entries, space has "
                         f"{box.dims} dimensions")
    return tuple(box.snap(i, int(v)) for i, v in enumerate(vector))


def rescale(vector, space: CompressedSpace, rng: np.random.Generator,
            constraints: SparsityConstraints | None = None) -> tuple[int, ...]:
    """Snap a raw vector into the space and repair it to feasibility.

    While the vector violates the sparsity constraints, a uniformly random
    dimension is decremented by its step (dimensions already at their
    minimum are skipped).  Raises MinimumReached when even the all-minimum
    vector cannot satisfy the constraints.  Without constraints this is
    exactly ``snap_and_clamp``.
    """
    cons = constraints if constraints is not None else space.constraints
    values = list(snap_and_clamp(vector, space))
    if cons is None:
        return tuple(values)
    box = space.box
    mins = box.los
    feasible = cons.feasible(tuple(values))
    while not feasible:
        if all(v == m for v, m in zip(values, mins)):
            raise MinimumReached(
                f"targets {cons.targets} are unattainable: the all-minimum "
                f"structure {tuple(values)} still violates them")
        i = int(rng.integers(0, box.dims))
        if values[i] > mins[i]:
            values[i] -= box.steps[i]
            feasible = cons.feasible(tuple(values))
    return tuple(values)
