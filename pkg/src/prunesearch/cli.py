"""Command line interface: run searches, benchmarks, and cost queries.

Artifacts are plain files (best-structure vector, CSV history, JSON
metadata) written to the output directory; identical manifests produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
import statistics
import sys
from pathlib import Path

import click
import yaml

from . import arch as arch_mod
from .arch import ArchSpecError, ArchitectureSpec, SparsityTargets, \
    StructureError, compute_cost, load_arch, pruning_rates
from .engine import HISTORY_COLUMNS, IdeConfig, MODE_DE, MODE_IDE, \
    SearchHistory, run, write_history
from .fitness import EvaluationError, Evaluator, SurrogateAccuracyEvaluator, \
    TargetDistanceEvaluator, cached
from .protocol import ChildProcessTransport, RemoteEvaluator, TcpTransport
from .space import MinimumReached, build_space, default_steps, space_size, \
    symmetric_box_space

OUT_DIR_ENV = "PRUNESEARCH_OUT"

TOY_DIMS = 30
TOY_BOUNDS = (-9, 9)
TOY_TARGET = 5


def _default_out() -> str:
    return os.environ.get(OUT_DIR_ENV, "runs")


def _fail(message: str) -> "click.ClickException":
    err = click.ClickException(message)
    err.exit_code = 1
    return err


def _parse_structure(text: str) -> list[int]:
    """Parse 'c1,c2,...' or a file containing such a line."""
    candidate = Path(text)
    if candidate.is_file():
        text = candidate.read_text(encoding="utf-8").strip()
    try:
        return [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise _fail(f"cannot parse structure vector from {text!r}")


def _resolve_steps(rule: str, spec: ArchitectureSpec) -> tuple[int, ...]:
    base = spec.base_structure
    if rule == "eighth":
        return default_steps(base)
    if rule.startswith("multiple:"):
        try:
            k = int(rule.split(":", 1)[1])
        except ValueError:
            raise _fail(f"bad step rule {rule!r}: expected multiple:<int>")
        return tuple(k for _ in base)
    if rule.startswith("file:"):
        path = rule.split(":", 1)[1]
        try:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise _fail(f"cannot read step file {path}: {exc}")
        if not isinstance(doc, dict):
            raise _fail("step file must map variable index to step size")
        steps = list(default_steps(base))
        for key, value in doc.items():
            try:
                index = int(key)
                steps[index] = int(value)
            except (ValueError, IndexError):
                raise _fail(f"bad step file entry {key!r}: {value!r}")
        return tuple(steps)
    raise _fail(f"unknown step rule {rule!r} (use eighth, file:P or "
                f"multiple:K)")


def _make_evaluator(kind: str, spec: ArchitectureSpec, remote_cmd: str | None,
                    remote_addr: str | None, timeout: float) -> Evaluator:
    if kind == "surrogate":
        return SurrogateAccuracyEvaluator(spec)
    if kind == "toy":
        # Debugging fitness over the search space's own dimensionality.
        return TargetDistanceEvaluator(dims=spec.num_variables,
                                       target=TOY_TARGET, bounds=None)
    if kind == "remote":
        if bool(remote_cmd) == bool(remote_addr):
            raise _fail("remote evaluator needs exactly one of --remote-cmd "
                        "or --remote-addr")
        if remote_cmd:
            transport = ChildProcessTransport(remote_cmd)
        else:
            host, _, port = remote_addr.rpartition(":")
            if not host or not port.isdigit():
                raise _fail(f"--remote-addr must be HOST:PORT, got "
                            f"{remote_addr!r}")
            transport = TcpTransport(host, int(port))
        return RemoteEvaluator(transport, timeout=timeout)
    raise _fail(f"unknown evaluator {kind!r}")


def _descriptor_meta(evaluator: Evaluator) -> dict:
    d = evaluator.descriptor
    return {
        "name": d.name,
        "deterministic": d.deterministic,
        "concurrent_safe": d.concurrent_safe,
        "expected_vector_length": d.expected_vector_length,
        "value_range": list(d.value_range),
    }


def _config_meta(config: IdeConfig) -> dict:
    return {
        "iterations": config.iterations,
        "population_size": config.population_size,
        "differential_weight": config.differential_weight,
        "crossover_prob": config.crossover_prob,
        "stagnation_limit": config.stagnation_limit,
        "seed": config.seed,
        "mode": config.mode,
        "force_mutant_gene": config.force_mutant_gene,
    }


@click.group()
def cli() -> None:
    """Constrained evolutionary search for channel-pruning structures."""


@cli.command()
@click.option("--arch", "arch_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Architecture document.")
@click.option("--rf", type=float, default=0.0,
              help="Minimum FLOPs pruning rate.")
@click.option("--rp", type=float, default=0.0,
              help="Minimum parameter pruning rate.")
@click.option("--evaluator", "evaluator_kind", default="surrogate",
              type=click.Choice(["toy", "surrogate", "remote"]))
@click.option("--remote-cmd", default=None,
              help="Spawn this command as the remote evaluator (stdio).")
@click.option("--remote-addr", default=None,
              help="Connect to a running evaluator at HOST:PORT.")
@click.option("--remote-timeout", type=float, default=300.0,
              help="Per-evaluation timeout in seconds.")
@click.option("--steps", "step_rule", default="eighth",
              help="Step rule: eighth, file:P, or multiple:K.")
@click.option("--seed", type=int, default=0)
@click.option("--iters", type=int, required=True, help="Generations to run.")
@click.option("--pop", type=int, default=10, help="Population size.")
@click.option("--f", "f_weight", type=float, default=0.5,
              help="Differential weight.")
@click.option("--cr", type=float, default=0.8, help="Crossover probability.")
@click.option("--stagnation", type=int, default=4,
              help="Reinitialization threshold.")
@click.option("--mode", type=click.Choice([MODE_IDE, MODE_DE]),
              default=MODE_IDE)
@click.option("--force-mutant-gene", is_flag=True, default=False,
              help="Canonical crossover: always take one mutant gene.")
@click.option("--out", "out_dir", default=None,
              help=f"Output directory (default ${OUT_DIR_ENV} or ./runs).")
def search(arch_path, rf, rp, evaluator_kind, remote_cmd, remote_addr,
           remote_timeout, step_rule, seed, iters, pop, f_weight, cr,
           stagnation, mode, force_mutant_gene, out_dir) -> None:
    """Search for the best feasible structure of an architecture."""
    spec = load_arch(arch_path)
    try:
        targets = SparsityTargets(flops_rate=rf, params_rate=rp)
    except ValueError as exc:
        raise _fail(str(exc))
    steps = _resolve_steps(step_rule, spec)
    try:
        space = build_space(spec.base_structure, steps, arch=spec,
                            targets=targets)
    except ValueError as exc:
        raise _fail(str(exc))
    config = IdeConfig(iterations=iters, population_size=pop,
                       differential_weight=f_weight, crossover_prob=cr,
                       stagnation_limit=stagnation, seed=seed, mode=mode,
                       force_mutant_gene=force_mutant_gene)

    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    evaluator = _make_evaluator(evaluator_kind, spec, remote_cmd,
                                remote_addr, remote_timeout)
    metadata = {
        "arch": spec.name,
        "targets": {"flops_rate": rf, "params_rate": rp},
        "steps": list(steps),
        "space_size": space_size(space),
        "config": _config_meta(config),
        "evaluator": _descriptor_meta(evaluator),
    }
    try:
        best, history = run(space, None, cached(evaluator), config)
    except MinimumReached as exc:
        evaluator.close()
        raise _fail(f"MinimumReached: {exc}")
    except EvaluationError as exc:
        partial = getattr(exc, "partial_history", None)
        if isinstance(partial, SearchHistory) and partial.records:
            write_history(out / "history.csv", partial, metadata)
        evaluator.close()
        raise _fail(f"evaluation failed: {exc}")
    evaluator.close()

    r_f, r_p = pruning_rates(spec, best.vector)
    structure_text = ",".join(str(v) for v in best.vector)
    (out / "best_structure.txt").write_text(structure_text + "\n",
                                            encoding="utf-8")
    write_history(out / "history.csv", history, metadata)
    meta = dict(metadata)
    meta["best"] = {
        "structure": list(best.vector),
        "fitness": best.fitness,
        "flops_pruning_rate": r_f,
        "params_pruning_rate": r_p,
    }
    (out / "meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    click.echo(f"best_structure: {structure_text}")
    click.echo(f"fitness: {best.fitness!r}")
    click.echo(f"flops_pruning_rate: {r_f!r}")
    click.echo(f"params_pruning_rate: {r_p!r}")
    click.echo(f"history: {out / 'history.csv'}")


@cli.command()
@click.option("--seeds", default="0,1,2,3,4,5,6,7,8,9",
              help="Comma separated seed list.")
@click.option("--iters", type=int, required=True)
@click.option("--mode", type=click.Choice([MODE_IDE, MODE_DE]),
              default=MODE_IDE)
@click.option("--pop", type=int, default=10)
@click.option("--f", "f_weight", type=float, default=0.5)
@click.option("--cr", type=float, default=0.8)
@click.option("--stagnation", type=int, default=4)
@click.option("--out", "out_dir", default=None)
def benchmark(seeds, iters, mode, pop, f_weight, cr, stagnation,
              out_dir) -> None:
    """Run the 30-dimensional integer benchmark per seed and summarize.

    The objective is the negated Euclidean distance to the all-fives
    vector on the box [-9, 9]^30; a seed succeeds when it reaches fitness
    0 within the generation budget.
    """
    try:
        seed_list = [int(s) for s in seeds.replace(",", " ").split()]
    except ValueError:
        raise _fail(f"cannot parse seed list {seeds!r}")
    if not seed_list:
        raise _fail("no seeds given")
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)

    space = symmetric_box_space(TOY_BOUNDS[0], TOY_BOUNDS[1], TOY_DIMS)
    rows = []
    for seed in seed_list:
        config = IdeConfig(iterations=iters, population_size=pop,
                           differential_weight=f_weight, crossover_prob=cr,
                           stagnation_limit=stagnation, seed=seed, mode=mode)
        evaluator = TargetDistanceEvaluator(dims=TOY_DIMS, target=TOY_TARGET,
                                            bounds=TOY_BOUNDS)
        best, history = run(space, None, evaluator, config)
        first = history.first_hit(0.0)
        write_history(out / f"bench_{mode}_seed{seed}.csv", history, {
            "benchmark": f"target-distance d={TOY_DIMS}",
            "config": _config_meta(config),
            "space_size": space_size(space),
        })
        rows.append((seed, best.fitness, first))

    successes = [r for r in rows if r[2] is not None]
    hit_values = [r[2] if r[2] is not None else float("inf") for r in rows]
    median_hit = statistics.median(hit_values)
    summary = {
        "mode": mode,
        "iterations": iters,
        "seeds": seed_list,
        "success_count": len(successes),
        "median_first_hit": None if median_hit == float("inf")
        else median_hit,
        "per_seed": [{"seed": s, "best_fitness": b, "first_hit": f}
                     for s, b, f in rows],
    }
    (out / f"benchmark_{mode}.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    click.echo(f"mode: {mode}   seeds: {len(seed_list)}   "
               f"iterations: {iters}")
    click.echo(f"successes: {len(successes)}/{len(seed_list)}")
    click.echo(f"median_first_hit: {summary['median_first_hit']}")
    for seed, best_fitness, first in rows:
        click.echo(f"  seed {seed}: best {best_fitness!r} "
                   f"first_hit {first}")


@cli.command()
@click.option("--arch", "arch_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--structure", required=True,
              help="Inline 'c1,c2,...' or a file containing it.")
def cost(arch_path, structure) -> None:
    """Print FLOPs, parameters, and pruning rates of a structure."""
    spec = load_arch(arch_path)
    values = _parse_structure(structure)
    report = compute_cost(spec, values)
    r_f, r_p = pruning_rates(spec, values)
    click.echo(f"structure: {','.join(str(v) for v in values)}")
    click.echo(f"flops: {report.flops}")
    click.echo(f"params: {report.params}")
    click.echo(f"flops_pruning_rate: {r_f!r}")
    click.echo(f"params_pruning_rate: {r_p!r}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return exc.exit_code or 1
    except click.Abort:
        return 130
    except (ArchSpecError, StructureError, MinimumReached,
            EvaluationError, ValueError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
