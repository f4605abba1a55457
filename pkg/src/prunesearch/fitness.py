"""Fitness evaluators: scalar "higher is better" scores for structures.

Three concrete evaluators live here: an analytic integer benchmark
(negated distance to a constant target vector), a deterministic cost-model
surrogate for evaluator-free end-to-end runs, and — in ``protocol`` — a
client for remote evaluators speaking the line protocol.  ``cached`` wraps
any deterministic evaluator with a content-addressed memo table.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .arch import ArchitectureSpec


class EvaluationError(RuntimeError):
    """An evaluator failed to produce a fitness value."""


@dataclass(frozen=True)
class EvaluatorDescriptor:
    """Handshake data describing an evaluator."""

    name: str
    deterministic: bool
    concurrent_safe: bool
    expected_vector_length: int
    value_range: tuple[float, float]


class Evaluator(ABC):
    """A fitness function over structure vectors; higher is better."""

    @property
    @abstractmethod
    def descriptor(self) -> EvaluatorDescriptor: ...

    @abstractmethod
    def evaluate(self, structure) -> float: ...

    def close(self) -> None:
        """Release any resources (no-op for local evaluators)."""


def check_fitness(value, source: str) -> float:
    """Reject missing, NaN, or infinite fitness values."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise EvaluationError(f"{source} returned a non-numeric fitness "
                              f"value: {value!r}")
    if not math.isfinite(value):
        raise EvaluationError(f"{source} returned a non-finite fitness "
                              f"value: {value!r}")
    return value


class TargetDistanceEvaluator(Evaluator):
    """Negated Euclidean distance to a constant integer target vector.

    The classic integer benchmark: the unique maximum (fitness 0) is the
    all-``target`` vector.  When bounds are given, entries outside
    [lo, hi] are rejected.
    """

    def __init__(self, dims: int = 30, target: int = 5,
                 bounds: tuple[int, int] | None = (-9, 9)):
        self._dims = dims
        self._target = target
        self._bounds = bounds
        if bounds is not None:
            worst = max(abs(bounds[0] - target), abs(bounds[1] - target))
            lo = -math.sqrt(dims * worst * worst)
        else:
            lo = -math.inf
        self._descriptor = EvaluatorDescriptor(
            name=f"target-distance(d={dims}, target={target})",
            deterministic=True,
            concurrent_safe=True,
            expected_vector_length=dims,
            value_range=(lo, 0.0),
        )

    @property
    def descriptor(self) -> EvaluatorDescriptor:
        return self._descriptor

    def evaluate(self, structure) -> float:
        if len(structure) != self._dims:
            raise EvaluationError(f"expected {self._dims} entries, got "
                                  f"{len(structure)}")
        if self._bounds is not None:
            lo, hi = self._bounds
            for v in structure:
                if not lo <= v <= hi:
                    raise EvaluationError(f"entry {v} outside [{lo}, {hi}]")
        sq = sum((v - self._target) ** 2 for v in structure)
        return -math.sqrt(sq)


class SurrogateAccuracyEvaluator(Evaluator):
    """Deterministic stand-in for a trained accuracy estimator.

    Scores sum(w_i * (1 - exp(-3 * s_i / c_i))) with fixed weights w_i equal
    to each variable's share of base-structure FLOPs, so wider layers and
    heavier stages matter more.  Strictly increasing in every coordinate;
    values lie in (0, 1].
    """

    def __init__(self, arch: ArchitectureSpec):
        self._arch = arch
        self._weights = _flops_share_weights(arch)
        self._descriptor = EvaluatorDescriptor(
            name=f"surrogate({arch.name})",
            deterministic=True,
            concurrent_safe=True,
            expected_vector_length=arch.num_variables,
            value_range=(0.0, 1.0),
        )

    @property
    def descriptor(self) -> EvaluatorDescriptor:
        return self._descriptor

    def evaluate(self, structure) -> float:
        if len(structure) != self._arch.num_variables:
            raise EvaluationError(
                f"expected {self._arch.num_variables} entries, got "
                f"{len(structure)}")
        total = 0.0
        for w, s, c in zip(self._weights, structure,
                           self._arch.base_structure):
            total += w * (1.0 - math.exp(-3.0 * s / c))
        return total


def _flops_share_weights(arch: ArchitectureSpec) -> tuple[float, ...]:
    # Attribute each cost term's base FLOPs to its output variable; terms
    # writing to fixed channels are attributed to their input variable when
    # searchable (the final classifier still rewards its producer).
    base = arch.base_structure
    per_var = [0.0] * arch.num_variables
    for t in arch._terms:
        cin = base[t.in_var] if t.in_var >= 0 else t.in_const
        cout = base[t.out_var] if t.out_var >= 0 else t.out_const
        flops = t.weight_mults * (cin // t.groups) * cout * t.spatial
        if t.out_var >= 0:
            per_var[t.out_var] += flops
        elif t.in_var >= 0:
            per_var[t.in_var] += flops
    total = sum(per_var)
    return tuple(v / total for v in per_var)


class CachedEvaluator(Evaluator):
    """Content-addressed memo table over a deterministic evaluator.

    ``hits``/``misses`` count lookups served from the table and inner
    evaluations respectively.
    """

    def __init__(self, inner: Evaluator):
        if not inner.descriptor.deterministic:
            raise ValueError(
                f"refusing to cache non-deterministic evaluator "
                f"'{inner.descriptor.name}'")
        self._inner = inner
        self._table: dict[tuple[int, ...], float] = {}
        self.hits = 0
        self.misses = 0

    @property
    def descriptor(self) -> EvaluatorDescriptor:
        return self._inner.descriptor

    def evaluate(self, structure) -> float:
        key = tuple(structure)
        try:
            value = self._table[key]
        except KeyError:
            value = check_fitness(self._inner.evaluate(key),
                                  self.descriptor.name)
            self._table[key] = value
            self.misses += 1
            return value
        self.hits += 1
        return value

    def close(self) -> None:
        self._inner.close()


def cached(evaluator: Evaluator) -> CachedEvaluator:
    """Wrap a deterministic evaluator with a memo table."""
    return CachedEvaluator(evaluator)
