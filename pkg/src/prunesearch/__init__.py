"""Constrained integer evolutionary search for CNN channel pruning."""

from .arch import ArchSpecError, ArchitectureSpec, CostReport, LayerSpec, \
    SparsityTargets, StructureError, bundled_arch_path, compute_cost, \
    is_feasible, load_arch, parse_arch_spec, pruning_rates
from .engine import IdeConfig, Individual, Population, SearchHistory, \
    run, write_history
from .fitness import CachedEvaluator, EvaluationError, Evaluator, \
    EvaluatorDescriptor, SurrogateAccuracyEvaluator, \
    TargetDistanceEvaluator, cached
from .protocol import ProtocolError, RemoteEvaluator, connect, \
    serve_evaluator
from .space import CompressedSpace, IntegerBox, MinimumReached, \
    SparsityConstraints, build_space, default_steps, rescale, \
    sample_uniform, snap_and_clamp, space_size, symmetric_box_space

__version__ = "0.1.0"

__all__ = [
    "ArchSpecError", "ArchitectureSpec", "CostReport", "LayerSpec",
    "SparsityTargets", "StructureError", "bundled_arch_path", "compute_cost",
    "is_feasible", "load_arch", "parse_arch_spec", "pruning_rates",
    "IdeConfig", "Individual", "Population", "SearchHistory", "run",
    "write_history",
    "CachedEvaluator", "EvaluationError", "Evaluator", "EvaluatorDescriptor",
    "SurrogateAccuracyEvaluator", "TargetDistanceEvaluator", "cached",
    "ProtocolError", "RemoteEvaluator", "connect", "serve_evaluator",
    "CompressedSpace", "IntegerBox", "MinimumReached", "SparsityConstraints",
    "build_space", "default_steps", "rescale", "sample_uniform",
    "snap_and_clamp", "space_size", "symmetric_box_space",
    "__version__",
]
