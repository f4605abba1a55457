"""psae command line: pretrain a reference model, serve or run evaluations."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import torch

from .archdesc import load
from .evaluator import PsaeConfig, StructureEvaluator
from .model import load_model, pretrain, save_model
from .pruning import MODE_L1, MODE_RANDOM
from .server import serve_endpoint


def _val_size(value: str):
    return "all" if value == "all" else int(value)


@click.group()
def cli() -> None:
    """Pruned-structure accuracy evaluation over a pretrained CNN."""


@cli.command("pretrain")
@click.option("--arch", "arch_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", default="synthetic")
@click.option("--epochs", type=int, default=20)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True)
def cmd_pretrain(arch_path, dataset, epochs, seed, out_path) -> None:
    """Train the unpruned reference model and save it."""
    desc = load(arch_path)
    model = pretrain(desc, dataset_name=dataset, epochs=epochs, seed=seed)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out_path)
    click.echo(f"arch: {desc.name}")
    click.echo(f"epochs: {epochs}")
    click.echo(f"val_accuracy: {model.accuracy!r}")
    click.echo(f"saved: {out_path}")


def _make_evaluator(model_path, arch_path, dataset, calib_n, val_n, seed,
                    mode) -> StructureEvaluator:
    desc = load(arch_path)
    reference = load_model(model_path, desc)
    config = PsaeConfig(calibration_sample_count=calib_n,
                        validation_subset_size=_val_size(val_n),
                        dataset=dataset, seed=seed, selection_mode=mode)
    return StructureEvaluator(reference, config)


@cli.command("serve")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--arch", "arch_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", default="synthetic")
@click.option("--calib-n", type=int, default=2000)
@click.option("--val-n", default="all")
@click.option("--seed", type=int, default=0)
@click.option("--mode", default=MODE_L1,
              type=click.Choice([MODE_L1, MODE_RANDOM]))
@click.option("--listen", default="stdio", help="'stdio' or HOST:PORT.")
@click.option("--log", "log_path", default=None,
              help="Append one JSON line per answered evaluation.")
def cmd_serve(model_path, arch_path, dataset, calib_n, val_n, seed, mode,
              listen, log_path) -> None:
    """Serve fitness requests over the evaluation protocol."""
    torch.set_num_threads(1)
    evaluator = _make_evaluator(model_path, arch_path, dataset, calib_n,
                                val_n, seed, mode)
    log = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        serve_endpoint(evaluator, listen, log=log)
    finally:
        if log is not None:
            log.close()


@cli.command("eval")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--arch", "arch_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--structure", required=True, help="'c1,c2,...'")
@click.option("--dataset", default="synthetic")
@click.option("--calib-n", type=int, default=2000)
@click.option("--val-n", default="all")
@click.option("--seed", type=int, default=0)
@click.option("--mode", default=MODE_L1,
              type=click.Choice([MODE_L1, MODE_RANDOM]))
def cmd_eval(model_path, arch_path, structure, dataset, calib_n, val_n,
             seed, mode) -> None:
    """Evaluate one structure and print its estimated accuracy."""
    torch.set_num_threads(1)
    evaluator = _make_evaluator(model_path, arch_path, dataset, calib_n,
                                val_n, seed, mode)
    values = [int(v) for v in structure.replace(",", " ").split()]
    accuracy = evaluator.evaluate(values)
    click.echo(f"structure: {','.join(str(v) for v in values)}")
    click.echo(f"accuracy: {accuracy!r}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return exc.exit_code or 1
    except click.Abort:
        return 130
    except (ValueError, RuntimeError, OSError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
