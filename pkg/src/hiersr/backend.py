"""Client for an external 2x upscaling server speaking the HSR1 frame
protocol, adapted to the Upscaler2x interface.

Frame layout (all integers little-endian):

    magic   4 bytes  ``HSR1``
    kind    u8       0 = request, 1 = response, 2 = error
    level   u32      downscaling level the server's model produces
    ndim    u8       number of dims that follow (0 for handshake frames)
    dims    ndim x u64
    payload data frames: product(dims) float32, row-major
            error frames: UTF-8 message of product(dims) bytes

A zero-dim frame carries no payload.  Error frames use ndim=1 with
dims[0] holding the message byte length.  The handshake is a zero-dim
request answered by a zero-dim response.

One handle talks to one server process or socket, which serves exactly
one level's model; a handle allows one in-flight request at a time.
"""
from __future__ import annotations

import os
import select
import shlex
import socket
import struct
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadSpec,
    ConnectFailed,
    HandshakeTimeout,
    PayloadTooLarge,
    ProtocolViolation,
    ServerError,
    Timeout,
)
from .volume import Volume

FRAME_MAGIC = b"HSR1"
KIND_REQUEST = 0
KIND_RESPONSE = 1
KIND_ERROR = 2

_HEADER = struct.Struct("<4sBIB")  # magic, kind, level, ndim

DEFAULT_HANDSHAKE_TIMEOUT = 10.0
DEFAULT_REQUEST_TIMEOUT = 120.0
DEFAULT_PAYLOAD_CAP = 2 << 30  # bytes


@dataclass(frozen=True)
class Frame:
    kind: int
    level: int
    dims: tuple[int, ...]
    payload: bytes


def encode_frame(frame: Frame) -> bytes:
    head = _HEADER.pack(FRAME_MAGIC, frame.kind, frame.level, len(frame.dims))
    dims = struct.pack(f"<{len(frame.dims)}Q", *frame.dims)
    return head + dims + frame.payload


def _payload_size(kind: int, dims: tuple[int, ...]) -> int:
    if not dims:
        return 0
    count = 1
    for d in dims:
        count *= d
    return count if kind == KIND_ERROR else 4 * count


class _Transport:
    """Byte stream with deadline-aware exact reads."""

    def send(self, data: bytes) -> None:
        raise NotImplementedError

    def recv_exact(self, n: int, deadline: float) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _SocketTransport(_Transport):
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, data: bytes) -> None:
        self.sock.sendall(data)

    def recv_exact(self, n: int, deadline: float) -> bytes:
        chunks = []
        got = 0
        while got < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            self.sock.settimeout(remaining)
            try:
                chunk = self.sock.recv(n - got)
            except socket.timeout:
                raise TimeoutError from None
            if not chunk:
                raise ConnectionError("server closed the connection")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _ProcessTransport(_Transport):
    def __init__(self, proc: subprocess.Popen):
        self.proc = proc
        self.fd = proc.stdout.fileno()

    def send(self, data: bytes) -> None:
        self.proc.stdin.write(data)
        self.proc.stdin.flush()

    def recv_exact(self, n: int, deadline: float) -> bytes:
        chunks = []
        got = 0
        while got < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([self.fd], [], [], remaining)
            if not ready:
                raise TimeoutError
            chunk = os.read(self.fd, n - got)
            if not chunk:
                raise ConnectionError("server process closed its output")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self.proc.terminate()
            self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()


def _read_frame(transport: _Transport, deadline: float,
                payload_cap: int) -> Frame:
    head = transport.recv_exact(_HEADER.size, deadline)
    magic, kind, level, ndim = _HEADER.unpack(head)
    if magic != FRAME_MAGIC:
        raise ProtocolViolation(f"bad magic {magic!r}")
    if kind not in (KIND_REQUEST, KIND_RESPONSE, KIND_ERROR):
        raise ProtocolViolation(f"unknown frame kind {kind}")
    if ndim > 3 and kind != KIND_ERROR:
        raise ProtocolViolation(f"response ndim {ndim} out of range")
    dims = struct.unpack(f"<{ndim}Q",
                         transport.recv_exact(8 * ndim, deadline)) if ndim else ()
    size = _payload_size(kind, dims)
    if size > payload_cap:
        raise ProtocolViolation(f"frame payload of {size} bytes exceeds cap")
    payload = transport.recv_exact(size, deadline) if size else b""
    return Frame(kind, level, tuple(int(d) for d in dims), payload)


def parse_endpoint_spec(spec: str) -> tuple[str, str, int]:
    """Split ``exec:<command>@level=<i>`` / ``tcp:<host>:<port>@level=<i>``
    into (transport, address, level)."""
    marker = "@level="
    at = spec.rfind(marker)
    if at < 0:
        raise BadSpec(f"{spec!r}: missing @level=<i> suffix")
    try:
        level = int(spec[at + len(marker):])
    except ValueError:
        raise BadSpec(f"{spec!r}: level is not an integer") from None
    if level < 0:
        raise BadSpec(f"{spec!r}: level must be >= 0")
    head = spec[:at]
    if head.startswith("exec:"):
        command = head[len("exec:"):].strip()
        if not command:
            raise BadSpec(f"{spec!r}: empty exec command")
        return "exec", command, level
    if head.startswith("tcp:"):
        addr = head[len("tcp:"):]
        host, sep, port = addr.rpartition(":")
        if not sep or not host:
            raise BadSpec(f"{spec!r}: tcp endpoint needs host:port")
        try:
            int(port)
        except ValueError:
            raise BadSpec(f"{spec!r}: port is not an integer") from None
        return "tcp", addr, level
    raise BadSpec(f"{spec!r}: transport must be exec: or tcp:")


class ModelHandle:
    """Live connection to one level's model server.

    Calling the handle with a Volume performs a 2x inference, so a handle
    slots directly into an UpscalerHierarchy.  Exclusive-use: one request
    in flight at a time.
    """

    def __init__(self, transport: _Transport, level: int,
                 request_timeout: float, payload_cap: int):
        self._transport = transport
        self.level = level
        self.request_timeout = request_timeout
        self.payload_cap = payload_cap
        self._closed = False

    def __call__(self, v: Volume) -> Volume:
        return infer2x(self, v)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._transport.close()

    def __enter__(self) -> "ModelHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(endpoint_spec: str, *,
            handshake_timeout: float = DEFAULT_HANDSHAKE_TIMEOUT,
            request_timeout: float = DEFAULT_REQUEST_TIMEOUT,
            payload_cap: int = DEFAULT_PAYLOAD_CAP) -> ModelHandle:
    """Open a connection per the endpoint spec and run the handshake."""
    transport_kind, address, level = parse_endpoint_spec(endpoint_spec)
    if transport_kind == "tcp":
        host, _, port = address.rpartition(":")
        try:
            sock = socket.create_connection((host, int(port)),
                                            timeout=handshake_timeout)
        except OSError as e:
            raise ConnectFailed(f"cannot connect to {address}: {e}") from None
        transport: _Transport = _SocketTransport(sock)
    else:
        try:
            proc = subprocess.Popen(
                shlex.split(address), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as e:
            raise ConnectFailed(f"cannot start {address!r}: {e}") from None
        transport = _ProcessTransport(proc)

    handle = ModelHandle(transport, level, request_timeout, payload_cap)
    deadline = time.monotonic() + handshake_timeout
    try:
        transport.send(encode_frame(Frame(KIND_REQUEST, level, (), b"")))
        reply = _read_frame(transport, deadline, payload_cap)
    except TimeoutError:
        handle.close()
        raise HandshakeTimeout(f"{endpoint_spec}: no handshake reply") from None
    except (ConnectionError, BrokenPipeError, OSError) as e:
        handle.close()
        raise ConnectFailed(f"{endpoint_spec}: handshake failed: {e}") from None
    except ProtocolViolation:
        handle.close()
        raise
    if reply.kind == KIND_ERROR:
        handle.close()
        raise ServerError(reply.payload.decode("utf-8", errors="replace"))
    if reply.kind != KIND_RESPONSE or reply.dims != ():
        handle.close()
        raise ProtocolViolation(
            f"handshake reply kind={reply.kind} dims={reply.dims}, "
            "expected an empty response"
        )
    return handle


def infer2x(h: ModelHandle, v: Volume) -> Volume:
    """One 2x inference round trip; validates the reply against the
    Upscaler2x contract (dims doubled, finite values)."""
    dims = tuple(v.dims)
    payload = np.ascontiguousarray(v.data, dtype="<f4").tobytes()
    if len(payload) > h.payload_cap:
        raise PayloadTooLarge(
            f"request payload of {len(payload)} bytes exceeds cap {h.payload_cap}"
        )
    deadline = time.monotonic() + h.request_timeout
    try:
        h._transport.send(encode_frame(Frame(KIND_REQUEST, h.level, dims, payload)))
        reply = _read_frame(h._transport, deadline, h.payload_cap)
    except TimeoutError:
        raise Timeout(f"no reply within {h.request_timeout}s") from None
    except (ConnectionError, BrokenPipeError, OSError) as e:
        raise ProtocolViolation(f"connection broke mid-request: {e}") from None
    if reply.kind == KIND_ERROR:
        raise ServerError(reply.payload.decode("utf-8", errors="replace"))
    if reply.kind != KIND_RESPONSE:
        raise ProtocolViolation(f"expected a response frame, got kind {reply.kind}")
    expected = tuple(2 * n for n in dims)
    if reply.dims != expected:
        raise ProtocolViolation(f"reply dims {reply.dims}, expected {expected}")
    data = np.frombuffer(reply.payload, dtype="<f4").reshape(expected)
    if not np.all(np.isfinite(data)):
        raise ProtocolViolation("reply payload contains NaN or Inf")
    return Volume(data.astype(np.float32).reshape(expected), v.meta)
