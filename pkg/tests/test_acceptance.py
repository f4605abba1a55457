"""Acceptance suite: one test per release criterion.

Each test prints a single PASS/FAIL line (run with ``-s`` to see them all
live); every tolerance is asserted, nothing is deferred.
"""

import statistics
import sys
import time

import numpy as np
import pytest

from prunesearch.arch import SparsityTargets, is_feasible, parse_arch_spec
from prunesearch.engine import IdeConfig, run, write_history
from prunesearch.fitness import SurrogateAccuracyEvaluator, \
    TargetDistanceEvaluator, cached
from prunesearch.protocol import ChildProcessTransport, RemoteEvaluator
from prunesearch.space import MinimumReached, build_space, default_steps, \
    rescale, sample_uniform, symmetric_box_space

from oracles import brute_force_cost, enumerate_space
from prunesearch.arch import compute_cost

SEEDS = list(range(10))


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


ORACLE_CHAIN = """
name: chain3
input_shape: [2, 5, 5]
layers:
  - id: image
    kind: input
  - id: conv1
    kind: conv
    inputs: [image]
    kernel_h: 3
    kernel_w: 3
    padding: same
    base_out_channels: 4
    has_bias: true
    has_bn: true
  - id: conv2
    kind: conv
    inputs: [conv1]
    kernel_h: 3
    kernel_w: 3
    padding: valid
    base_out_channels: 6
  - id: head
    kind: fc
    inputs: [conv2]
    base_out_channels: 5
    has_bias: true
"""


def test_benchmark_reproduction():
    """IDE solves the 30-dim integer benchmark; plain DE does not."""
    space = symmetric_box_space(-9, 9, 30)
    started = time.monotonic()
    hits = {}
    for mode in ("ide", "de"):
        hits[mode] = []
        for seed in SEEDS:
            config = IdeConfig(iterations=1000, seed=seed, mode=mode)
            _, history = run(space, None, TargetDistanceEvaluator(), config)
            hits[mode].append(history.first_hit(0.0))
    elapsed = time.monotonic() - started

    ide_successes = sum(1 for h in hits["ide"] if h is not None)
    de_successes = sum(1 for h in hits["de"] if h is not None)
    median_hit = statistics.median(
        [h if h is not None else float("inf") for h in hits["ide"]])
    ok = (ide_successes >= 8 and median_hit <= 500
          and de_successes < ide_successes and elapsed <= 60.0)
    report("benchmark-reproduction", ok,
           f"ide {ide_successes}/10 (median first hit {median_hit}), "
           f"de {de_successes}/10, {elapsed:.1f}s")
    assert ide_successes >= 8
    assert median_hit <= 500
    assert de_successes < ide_successes
    assert elapsed <= 60.0


def test_cost_model_matches_brute_force(t2):
    """Exact MAC/weight agreement over entire compressed spaces."""
    started = time.monotonic()
    checked = 0
    for spec, steps in ((t2, (1, 1)),
                        (parse_arch_spec(ORACLE_CHAIN), (1, 1, 1))):
        for s in enumerate_space(spec.base_structure, steps):
            report_ = compute_cost(spec, s)
            macs, weights = brute_force_cost(spec, s)
            assert (report_.flops, report_.params) == (macs, weights), s
            checked += 1
    elapsed = time.monotonic() - started
    assert checked <= 1000
    report("cost-oracle-equivalence", True,
           f"{checked} structures exact, {elapsed:.1f}s")


def test_rescale_feasibility_suite(t2, vgg16):
    """Random raw vectors are always repaired into feasible space points."""
    started = time.monotonic()
    target_sets = [SparsityTargets(0.5, 0.0), SparsityTargets(0.0, 0.5),
                   SparsityTargets(0.5, 0.5)]
    rng = np.random.default_rng(2024)
    total, minimum_reached = 0, 0
    for spec in (t2, vgg16):
        steps = default_steps(spec.base_structure)
        spaces = [build_space(spec.base_structure, steps, arch=spec,
                              targets=t) for t in target_sets]
        lo = -2 * max(spec.base_structure)
        hi = 3 * max(spec.base_structure)
        for i in range(10_000):
            raw = rng.integers(lo, hi, size=spec.num_variables)
            space = spaces[i % len(spaces)]
            targets = target_sets[i % len(target_sets)]
            try:
                result = rescale([int(v) for v in raw], space, rng)
            except MinimumReached:
                assert not is_feasible(spec, space.min_vector, targets)
                minimum_reached += 1
                continue
            assert space.box.contains(result)
            assert is_feasible(spec, result, targets)
            total += 1
    elapsed = time.monotonic() - started
    report("rescale-feasibility", True,
           f"{total} repaired + {minimum_reached} confirmed minimum-reached, "
           f"{elapsed:.1f}s")


def test_multi_constraint_end_to_end(vgg16):
    """Search under joint FLOPs+params constraints beats random sampling."""
    started = time.monotonic()
    targets = SparsityTargets(0.5, 0.5)
    steps = default_steps(vgg16.base_structure)
    space = build_space(vgg16.base_structure, steps, arch=vgg16,
                        targets=targets)
    surrogate = SurrogateAccuracyEvaluator(vgg16)
    wins = 0
    for seed in range(5):
        best, _ = run(space, None, cached(surrogate),
                      IdeConfig(iterations=200, seed=seed))
        assert is_feasible(vgg16, best.vector, targets)

        rng = np.random.default_rng(10_000 + seed)
        random_best = -float("inf")
        found = 0
        while found < 1000:
            sample = sample_uniform(space, rng)
            if is_feasible(vgg16, sample, targets):
                found += 1
                random_best = max(random_best, surrogate.evaluate(sample))
        if best.fitness >= random_best:
            wins += 1
    elapsed = time.monotonic() - started
    ok = wins >= 4 and elapsed <= 120.0
    report("multi-constraint-search", ok,
           f"beat 1000 random feasible samples on {wins}/5 seeds, "
           f"{elapsed:.1f}s")
    assert wins >= 4
    assert elapsed <= 120.0


def test_determinism_byte_identical_histories(tmp_path, vgg16):
    """The same manifest produces byte-identical history files."""
    targets = SparsityTargets(0.5, 0.0)
    steps = default_steps(vgg16.base_structure)
    space = build_space(vgg16.base_structure, steps, arch=vgg16,
                        targets=targets)
    blobs = []
    for name in ("first", "second"):
        _, history = run(space, None,
                         cached(SurrogateAccuracyEvaluator(vgg16)),
                         IdeConfig(iterations=40, seed=77))
        path = tmp_path / f"{name}.csv"
        write_history(path, history, {"seed": 77, "arch": vgg16.name})
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1]
    report("determinism", ok, f"{len(blobs[0])} bytes, identical={ok}")
    assert ok


def test_protocol_conformance_loopback():
    """1000 evaluations over a child-process echo server, ids all matched."""
    started = time.monotonic()
    rng = np.random.default_rng(5)
    client = RemoteEvaluator(ChildProcessTransport(
        [sys.executable, "-m", "prunesearch.echo", "--length", "8"]),
        timeout=60.0)
    try:
        mismatches = 0
        for _ in range(1000):
            vector = [int(v) for v in rng.integers(-50, 50, size=8)]
            got = client.evaluate(vector)
            if got != -float(sum(abs(v) for v in vector)):
                mismatches += 1
    finally:
        client.close()
    elapsed = time.monotonic() - started
    report("protocol-conformance", mismatches == 0,
           f"1000 evaluations, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
