"""Line protocol for remote fitness evaluation.

Messages are single-line JSON objects over a byte stream (a child
process's stdio or a TCP connection):

  client -> {"type":"hello","version":1}
  server -> {"type":"descriptor","name":...,"deterministic":...,
             "concurrent_safe":...,"expected_vector_length":...,
             "value_range":[lo,hi]}
  client -> {"type":"eval","id":N,"structure":[...]}
  server -> {"type":"result","id":N,"fitness":F}
         or {"type":"error","id":N,"message":"..."}
  client -> {"type":"bye"}

Unknown message types are a protocol error.  The client serializes
requests by default; ``evaluate_batch`` pipelines multiple in-flight ids
when the server's descriptor declares it concurrent-safe.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import time

from .fitness import EvaluationError, Evaluator, EvaluatorDescriptor, \
    check_fitness

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 300.0  # a remote evaluation may run a full forward pass


class ProtocolError(EvaluationError):
    """The peer violated the evaluation protocol."""


def encode_message(message: dict) -> bytes:
    return (json.dumps(message, separators=(",", ":")) + "\n").encode("ascii")


def decode_message(line: bytes) -> dict:
    try:
        message = json.loads(line)
    except ValueError as exc:
        raise ProtocolError(f"malformed message: {line!r}") from exc
    if not isinstance(message, dict) or not isinstance(message.get("type"),
                                                       str):
        raise ProtocolError(f"message without a type: {line!r}")
    return message


def hello_message() -> dict:
    return {"type": "hello", "version": PROTOCOL_VERSION}


def descriptor_message(descriptor: EvaluatorDescriptor) -> dict:
    return {
        "type": "descriptor",
        "name": descriptor.name,
        "deterministic": descriptor.deterministic,
        "concurrent_safe": descriptor.concurrent_safe,
        "expected_vector_length": descriptor.expected_vector_length,
        "value_range": [descriptor.value_range[0], descriptor.value_range[1]],
    }


def descriptor_from_message(message: dict) -> EvaluatorDescriptor:
    try:
        lo, hi = message["value_range"]
        return EvaluatorDescriptor(
            name=str(message["name"]),
            deterministic=bool(message["deterministic"]),
            concurrent_safe=bool(message["concurrent_safe"]),
            expected_vector_length=int(message["expected_vector_length"]),
            value_range=(float(lo), float(hi)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad descriptor message: {message!r}") from exc


class _LineChannel:
    """Buffered line reader with a select() timeout over a raw fd."""

    def __init__(self, read_fd: int):
        self._fd = read_fd
        self._buffer = b""

    def readline(self, timeout: float | None) -> bytes:
        deadline = None if timeout is None else time.monotonic() + timeout
        while b"\n" not in self._buffer:
            if deadline is None:
                wait = None
            else:
                wait = deadline - time.monotonic()
                if wait <= 0:
                    raise EvaluationError("timed out waiting for the remote "
                                          "evaluator")
            ready, _, _ = select.select([self._fd], [], [], wait)
            if not ready:
                raise EvaluationError("timed out waiting for the remote "
                                      "evaluator")
            chunk = os.read(self._fd, 65536)
            if not chunk:
                raise ProtocolError("remote evaluator closed the connection")
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line


class Transport:
    """A bidirectional line stream to an evaluator process or endpoint."""

    def send_line(self, data: bytes) -> None:
        raise NotImplementedError

    def recv_line(self, timeout: float | None) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class ChildProcessTransport(Transport):
    """Spawns the evaluator as a child process and speaks over its stdio."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else command
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise EvaluationError(f"cannot spawn evaluator {argv!r}: "
                                  f"{exc}") from exc
        self._channel = _LineChannel(self._proc.stdout.fileno())

    def send_line(self, data: bytes) -> None:
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError("evaluator process is gone") from exc

    def recv_line(self, timeout: float | None) -> bytes:
        return self._channel.readline(timeout)

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class TcpTransport(Transport):
    """Connects to an already-running evaluator endpoint."""

    def __init__(self, host: str, port: int, connect_timeout: float = 10.0):
        try:
            self._sock = socket.create_connection((host, port),
                                                  timeout=connect_timeout)
        except OSError as exc:
            raise EvaluationError(f"cannot connect to {host}:{port}: "
                                  f"{exc}") from exc
        self._sock.settimeout(None)
        self._channel = _LineChannel(self._sock.fileno())

    def send_line(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ProtocolError("evaluator endpoint is gone") from exc

    def recv_line(self, timeout: float | None) -> bytes:
        return self._channel.readline(timeout)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def transport_for(target: str) -> Transport:
    """Build a transport from ``host:port`` or a child-process command."""
    host, sep, port = target.rpartition(":")
    if sep and host and port.isdigit() and " " not in target:
        return TcpTransport(host, int(port))
    return ChildProcessTransport(target)


class RemoteEvaluator(Evaluator):
    """Protocol client; completes the handshake on construction."""

    def __init__(self, transport: Transport, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = 0):
        self._transport = transport
        self._timeout = timeout
        self._retries = retries
        self._next_id = 1
        self._closed = False
        transport.send_line(encode_message(hello_message()))
        reply = decode_message(transport.recv_line(timeout))
        if reply["type"] != "descriptor":
            raise ProtocolError(f"expected a descriptor, got {reply!r}")
        self._descriptor = descriptor_from_message(reply)

    @property
    def descriptor(self) -> EvaluatorDescriptor:
        return self._descriptor

    def evaluate(self, structure) -> float:
        return self.evaluate_batch([structure])[0]

    def evaluate_batch(self, structures) -> list[float]:
        """Evaluate several structures; pipelined when the server allows."""
        structures = [self._checked(s) for s in structures]
        if self._descriptor.concurrent_safe:
            return self._exchange(structures)
        results = []
        for s in structures:
            results.extend(self._exchange([s]))
        return results

    def _checked(self, structure) -> list[int]:
        values = [int(v) for v in structure]
        if len(values) != self._descriptor.expected_vector_length:
            raise EvaluationError(
                f"structure has {len(values)} entries, evaluator "
                f"'{self._descriptor.name}' expects "
                f"{self._descriptor.expected_vector_length}")
        return values

    def _exchange(self, structures: list[list[int]]) -> list[float]:
        for attempt in range(self._retries + 1):
            try:
                return self._exchange_once(structures)
            except EvaluationError:
                if attempt == self._retries:
                    raise
        raise AssertionError("unreachable")

    def _exchange_once(self, structures: list[list[int]]) -> list[float]:
        pending: dict[int, int] = {}
        for position, values in enumerate(structures):
            request_id = self._next_id
            self._next_id += 1
            pending[request_id] = position
            self._transport.send_line(encode_message(
                {"type": "eval", "id": request_id, "structure": values}))
        results: list[float | None] = [None] * len(structures)
        while pending:
            reply = decode_message(self._transport.recv_line(self._timeout))
            kind = reply.get("type")
            if kind not in ("result", "error"):
                raise ProtocolError(f"unexpected message type {kind!r}")
            reply_id = reply.get("id")
            if reply_id not in pending:
                raise ProtocolError(f"response id {reply_id!r} does not "
                                    f"match any pending request")
            position = pending.pop(reply_id)
            if kind == "error":
                raise EvaluationError(
                    f"evaluator error: {reply.get('message', '')}")
            results[position] = check_fitness(reply.get("fitness"),
                                              self._descriptor.name)
        return results  # type: ignore[return-value]

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._transport.send_line(encode_message({"type": "bye"}))
        except EvaluationError:
            pass
        self._transport.close()


def connect(target: str, timeout: float = DEFAULT_TIMEOUT,
            retries: int = 0) -> RemoteEvaluator:
    """Handshake with ``host:port`` or a spawned child command."""
    return RemoteEvaluator(transport_for(target), timeout=timeout,
                           retries=retries)


def serve_evaluator(evaluator: Evaluator, rfile, wfile, *,
                    log=None) -> None:
    """Serve one client over text streams until bye/EOF.

    Evaluation failures are reported as error responses; the loop stays up.
    Each answered eval request is optionally appended to ``log`` as one
    JSON line.
    """

    def reply(message: dict) -> None:
        wfile.write(json.dumps(message, separators=(",", ":")) + "\n")
        wfile.flush()

    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            message = decode_message(line.encode("utf-8"))
        except ProtocolError as exc:
            reply({"type": "error", "id": 0, "message": str(exc)})
            continue
        kind = message["type"]
        if kind == "hello":
            reply(descriptor_message(evaluator.descriptor))
        elif kind == "bye":
            break
        elif kind == "eval":
            request_id = message.get("id")
            if not isinstance(request_id, int):
                reply({"type": "error", "id": 0,
                       "message": "eval without an integer id"})
                continue
            structure = message.get("structure")
            if (not isinstance(structure, list)
                    or any(isinstance(v, bool) or not isinstance(v, int)
                           for v in structure)):
                reply({"type": "error", "id": request_id,
                       "message": "structure must be a list of integers"})
                continue
            try:
                fitness = check_fitness(evaluator.evaluate(structure),
                                        evaluator.descriptor.name)
            except Exception as exc:  # report, keep serving
                reply({"type": "error", "id": request_id,
                       "message": str(exc)})
                continue
            if log is not None:
                log.write(json.dumps(
                    {"id": request_id, "structure": structure,
                     "fitness": fitness}) + "\n")
                log.flush()
            reply({"type": "result", "id": request_id, "fitness": fitness})
        else:
            reply({"type": "error", "id": int(message.get("id", 0) or 0),
                   "message": f"unknown message type '{kind}'"})
