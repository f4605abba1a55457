"""Loopback evaluator server for wiring checks: fitness(s) = -sum(|s_i|).

Run as ``python -m prunesearch.echo --length L [--listen stdio|HOST:PORT]``.
"""

from __future__ import annotations

import argparse
import socket
import sys

from .fitness import Evaluator, EvaluatorDescriptor
from .protocol import serve_evaluator


class AbsSumEvaluator(Evaluator):
    """Reference evaluator returning the negated l1 norm."""

    def __init__(self, length: int):
        self._descriptor = EvaluatorDescriptor(
            name=f"abs-sum-echo(d={length})",
            deterministic=True,
            concurrent_safe=True,
            expected_vector_length=length,
            value_range=(-float("inf"), 0.0),
        )

    @property
    def descriptor(self) -> EvaluatorDescriptor:
        return self._descriptor

    def evaluate(self, structure) -> float:
        if len(structure) != self._descriptor.expected_vector_length:
            raise ValueError(
                f"expected {self._descriptor.expected_vector_length} "
                f"entries, got {len(structure)}")
        return -float(sum(abs(int(v)) for v in structure))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--length", type=int, required=True)
    parser.add_argument("--listen", default="stdio",
                        help="'stdio' or HOST:PORT")
    args = parser.parse_args(argv)
    evaluator = AbsSumEvaluator(args.length)
    if args.listen == "stdio":
        serve_evaluator(evaluator, sys.stdin, sys.stdout)
        return 0
    host, _, port = args.listen.rpartition(":")
    with socket.create_server((host or "127.0.0.1", int(port))) as server:
        conn, _ = server.accept()
        with conn, conn.makefile("r") as rfile, conn.makefile("w") as wfile:
            serve_evaluator(evaluator, rfile, wfile)
    return 0


if __name__ == "__main__":
    sys.exit(main())
