"""Integer differential-evolution search with stagnation reinitialization.

The loop evolves a population of admissible, constraint-feasible structure
vectors: per individual and generation it applies rand/1 mutation, binomial
crossover, greedy selection, and — in ``ide`` mode — replaces individuals
detected as stuck with a fresh random sample.  ``de`` mode skips that last
step and is otherwise identical, which makes the two directly comparable
on the same seeds.

Operator details that matter:

* Mutation computes ``X_p + F * (X_q - X_r)`` in real arithmetic and
  rounds fractional entries in the direction of the differential term, so
  a small nonzero difference always moves a gene instead of truncating to
  no-op.  Integral entries are exact.
* Selection replaces the incumbent whenever the candidate's fitness is at
  least as good — equal-fitness moves keep plateau drift alive, which a
  small population needs on integer landscapes.
* An individual's stagnation counter tracks degeneracy, not mere lack of
  progress: it rises only when the generated candidate is *identical* to
  the incumbent (the differential term collapsed), resets when the vector
  changes, and holds otherwise.  Hitting ``stagnation_limit`` triggers
  reinitialization.

Every candidate passes through ``rescale`` before evaluation, so the
evaluator only ever sees vectors that lie inside the space and satisfy
the sparsity constraints.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .fitness import CachedEvaluator, Evaluator, check_fitness
from .space import CompressedSpace, SparsityConstraints, rescale, \
    sample_uniform

MODE_IDE = "ide"
MODE_DE = "de"


@dataclass
class Individual:
    """A candidate structure with its cached fitness and stagnation count."""

    vector: tuple[int, ...]
    fitness: float | None = None
    stagnation: int = 0


@dataclass
class Population:
    individuals: list[Individual]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.individuals)

    def best(self) -> Individual:
        return max(self.individuals, key=lambda ind: ind.fitness)


@dataclass(frozen=True)
class IdeConfig:
    """Search hyperparameters; the defaults are the recommended settings."""

    iterations: int
    population_size: int = 10
    differential_weight: float = 0.5
    crossover_prob: float = 0.8
    stagnation_limit: int = 4
    seed: int = 0
    mode: str = MODE_IDE
    # Canonical binomial crossover forces one gene from the mutant; off by
    # default, where genes are drawn independently.
    force_mutant_gene: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if not 0.0 <= self.differential_weight <= 2.0:
            raise ValueError("differential_weight must be in [0, 2]")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must be in [0, 1]")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be >= 1")
        if self.mode not in (MODE_IDE, MODE_DE):
            raise ValueError(f"mode must be '{MODE_IDE}' or '{MODE_DE}'")


@dataclass(frozen=True)
class HistoryRecord:
    generation: int
    best_fitness: float
    best_vector: tuple[int, ...]
    evaluations: int
    reinitializations: int


@dataclass
class SearchHistory:
    """Per-generation convergence trace; best_fitness is non-decreasing."""

    records: list[HistoryRecord] = field(default_factory=list)

    def first_hit(self, threshold: float) -> int | None:
        """Earliest generation whose best fitness reached ``threshold``."""
        for record in self.records:
            if record.best_fitness >= threshold:
                return record.generation
        return None

    @property
    def final(self) -> HistoryRecord:
        return self.records[-1]


HISTORY_COLUMNS = ("generation", "best_fitness", "best_structure",
                   "evaluations", "reinitializations")


def write_history(path, history: SearchHistory, metadata: dict) -> None:
    """Write a history file: '#' metadata lines, then CSV rows.

    Metadata keys are emitted sorted so identical runs produce identical
    bytes.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for key in sorted(metadata):
            handle.write(
                f"# {key}: {json.dumps(metadata[key], sort_keys=True)}\n")
        writer = csv.writer(handle)
        writer.writerow(HISTORY_COLUMNS)
        for r in history.records:
            writer.writerow([
                r.generation,
                repr(r.best_fitness),
                " ".join(str(v) for v in r.best_vector),
                r.evaluations,
                r.reinitializations,
            ])


def initialize(space: CompressedSpace,
               constraints: SparsityConstraints | None,
               evaluator: Evaluator, config: IdeConfig,
               rng: np.random.Generator) -> Population:
    """Sample, repair, and evaluate the generation-0 population."""
    individuals = []
    for _ in range(config.population_size):
        vector = rescale(sample_uniform(space, rng), space, rng, constraints)
        fitness = check_fitness(evaluator.evaluate(vector),
                                evaluator.descriptor.name)
        individuals.append(Individual(vector=vector, fitness=fitness))
    return Population(individuals=individuals, generation=0)


def mutant_vector(base, plus, minus, weight: float) -> tuple[int, ...]:
    """``base + weight * (plus - minus)`` rounded toward the differential.

    Fractional entries round up when the differential term is positive and
    down when it is negative, so a nonzero difference always moves the
    gene; integral entries (zero difference included) are returned exactly.
    """
    diff = weight * (np.asarray(plus, dtype=float)
                     - np.asarray(minus, dtype=float))
    raw = np.asarray(base, dtype=float) + diff
    rounded = np.where(diff > 0, np.ceil(raw), np.floor(raw))
    return tuple(int(v) for v in rounded.astype(np.int64))


def _distinct_indices(rng: np.random.Generator, size: int, exclude: int,
                      count: int) -> list[int]:
    picks: list[int] = []
    while len(picks) < count:
        k = int(rng.integers(0, size))
        if k != exclude and k not in picks:
            picks.append(k)
    return picks


def mutate(population: Population, n: int, config: IdeConfig,
           space: CompressedSpace,
           constraints: SparsityConstraints | None,
           rng: np.random.Generator) -> tuple[int, ...]:
    """Differential mutation from three distinct parents, then rescale."""
    if population.size < 4:
        raise ValueError("mutation needs a population of at least 4 so "
                         "three distinct parents exist besides the target")
    p, q, r = _distinct_indices(rng, population.size, n, 3)
    individuals = population.individuals
    raw = mutant_vector(individuals[p].vector, individuals[q].vector,
                        individuals[r].vector, config.differential_weight)
    return rescale(raw, space, rng, constraints)


def crossover(target: Individual, mutant, config: IdeConfig,
              rng: np.random.Generator) -> tuple[int, ...]:
    """Binomial gene mix: mutant gene where rand < CR, else target gene.

    The result is raw — callers rescale it before evaluation.
    """
    if len(mutant) != len(target.vector):
        raise ValueError("mutant and target lengths differ")
    draws = rng.random(len(mutant))
    trial = [m if d < config.crossover_prob else t
             for m, t, d in zip(mutant, target.vector, draws)]
    if config.force_mutant_gene:
        j = int(rng.integers(0, len(mutant)))
        trial[j] = mutant[j]
    return tuple(trial)


def select(target: Individual, candidate, evaluator: Evaluator) -> Individual:
    """Greedy replacement with plateau drift.

    The candidate replaces the incumbent when its fitness is greater or
    equal *and* its vector actually differs.  A candidate identical to the
    incumbent raises the stagnation counter (the search around this slot
    has degenerated); an ordinary rejection leaves the counter as is.
    """
    candidate = tuple(candidate)
    fitness = check_fitness(evaluator.evaluate(candidate),
                            evaluator.descriptor.name)
    if target.fitness is None:
        target.fitness = check_fitness(
            evaluator.evaluate(target.vector), evaluator.descriptor.name)
    if candidate == target.vector:
        target.stagnation += 1
        return target
    if fitness >= target.fitness:
        return Individual(vector=candidate, fitness=fitness)
    return target


def reinitialize_stagnant(population: Population, space: CompressedSpace,
                          constraints: SparsityConstraints | None,
                          evaluator: Evaluator, config: IdeConfig,
                          rng: np.random.Generator) -> Population:
    """Resample every individual whose stagnation counter reached the
    limit; a no-op in ``de`` mode."""
    if config.mode != MODE_IDE:
        return population
    for n in range(population.size):
        if population.individuals[n].stagnation >= config.stagnation_limit:
            _reinitialize_individual(population, n, space, constraints,
                                     evaluator, rng)
    return population


def _reinitialize_individual(population: Population, n: int,
                             space: CompressedSpace,
                             constraints: SparsityConstraints | None,
                             evaluator: Evaluator,
                             rng: np.random.Generator) -> None:
    vector = rescale(sample_uniform(space, rng), space, rng, constraints)
    fitness = check_fitness(evaluator.evaluate(vector),
                            evaluator.descriptor.name)
    population.individuals[n] = Individual(vector=vector, fitness=fitness)


def run(space: CompressedSpace,
        constraints: SparsityConstraints | None,
        evaluator: Evaluator,
        config: IdeConfig) -> tuple[Individual, SearchHistory]:
    """Full search: returns the best individual ever evaluated plus the
    per-generation history.

    The best-ever record survives reinitialization even when the population
    member holding it is resampled away.  Identical inputs (including the
    seed) produce identical results and histories.
    """
    if evaluator.descriptor.expected_vector_length != space.dims:
        raise ValueError(
            f"evaluator '{evaluator.descriptor.name}' expects "
            f"{evaluator.descriptor.expected_vector_length} entries, the "
            f"space has {space.dims} dimensions")
    if constraints is None:
        constraints = space.constraints

    rng = np.random.default_rng(config.seed)
    if evaluator.descriptor.deterministic:
        tracked = evaluator if isinstance(evaluator, CachedEvaluator) \
            else CachedEvaluator(evaluator)
        inner_calls = lambda: tracked.misses  # noqa: E731
    else:
        # Caching a non-deterministic evaluator would freeze its noise.
        tracked = _CountingEvaluator(evaluator)
        inner_calls = lambda: tracked.calls  # noqa: E731

    history = SearchHistory()
    reinits = 0

    population = initialize(space, constraints, tracked, config, rng)
    best = replace(population.best())

    def record() -> None:
        history.records.append(HistoryRecord(
            generation=population.generation,
            best_fitness=best.fitness,
            best_vector=best.vector,
            evaluations=inner_calls(),
            reinitializations=reinits,
        ))

    record()
    try:
        for _ in range(config.iterations):
            population.generation += 1
            for n in range(population.size):
                mutant = mutate(population, n, config, space, constraints,
                                rng)
                trial = crossover(population.individuals[n], mutant, config,
                                  rng)
                candidate = rescale(trial, space, rng, constraints)
                updated = select(population.individuals[n], candidate,
                                 tracked)
                population.individuals[n] = updated
                if updated.fitness > best.fitness:
                    best = replace(updated)
                if (config.mode == MODE_IDE
                        and updated.stagnation >= config.stagnation_limit):
                    _reinitialize_individual(population, n, space,
                                             constraints, tracked, rng)
                    reinits += 1
                    fresh = population.individuals[n]
                    if fresh.fitness > best.fitness:
                        best = replace(fresh)
            record()
    except Exception as exc:
        exc.partial_history = history  # type: ignore[attr-defined]
        raise
    return best, history


class _CountingEvaluator(Evaluator):
    def __init__(self, inner: Evaluator):
        self._inner = inner
        self.calls = 0

    @property
    def descriptor(self):
        return self._inner.descriptor

    def evaluate(self, structure) -> float:
        self.calls += 1
        return self._inner.evaluate(structure)
