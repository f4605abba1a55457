"""Line-protocol server exposing a StructureEvaluator.

One JSON message per line: hello -> descriptor, eval -> result|error,
bye ends the session.  Evaluation failures become error responses and the
loop keeps serving; malformed messages likewise.  Each answered request is
optionally appended to a JSON-lines log.
"""

from __future__ import annotations

import json
import socket
import sys

from .evaluator import StructureEvaluator

PROTOCOL_VERSION = 1


def descriptor(evaluator: StructureEvaluator) -> dict:
    return {
        "type": "descriptor",
        "name": f"psae({evaluator.reference.desc.name})",
        "deterministic": True,
        "concurrent_safe": False,
        "expected_vector_length": evaluator.num_variables,
        "value_range": [0.0, 1.0],
    }


def serve(evaluator: StructureEvaluator, rfile, wfile, log=None) -> int:
    """Blocking request loop over text streams; returns answered count."""

    def reply(message: dict) -> None:
        wfile.write(json.dumps(message, separators=(",", ":")) + "\n")
        wfile.flush()

    answered = 0
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
            kind = message["type"]
        except (ValueError, TypeError, KeyError):
            reply({"type": "error", "id": 0,
                   "message": f"malformed message: {line[:80]}"})
            continue
        if kind == "hello":
            reply(descriptor(evaluator))
        elif kind == "bye":
            break
        elif kind == "eval":
            request_id = message.get("id")
            if not isinstance(request_id, int):
                reply({"type": "error", "id": 0,
                       "message": "eval without an integer id"})
                continue
            try:
                structure = [int(v) for v in message["structure"]]
                fitness = evaluator.evaluate(structure)
            except Exception as exc:
                reply({"type": "error", "id": request_id,
                       "message": str(exc)})
                continue
            if log is not None:
                log.write(json.dumps({"id": request_id,
                                      "structure": structure,
                                      "fitness": fitness}) + "\n")
                log.flush()
            answered += 1
            reply({"type": "result", "id": request_id, "fitness": fitness})
        else:
            reply({"type": "error",
                   "id": message.get("id") if
                   isinstance(message.get("id"), int) else 0,
                   "message": f"unknown message type '{kind}'"})
    return answered


def serve_endpoint(evaluator: StructureEvaluator, listen: str,
                   log=None) -> int:
    """Serve on stdio or on a TCP address ('HOST:PORT'), one client."""
    if listen == "stdio":
        return serve(evaluator, sys.stdin, sys.stdout, log=log)
    host, _, port = listen.rpartition(":")
    with socket.create_server((host or "127.0.0.1", int(port))) as server:
        conn, _ = server.accept()
        with conn, conn.makefile("r") as rfile, conn.makefile("w") as wfile:
            return serve(evaluator, rfile, wfile, log=log)
