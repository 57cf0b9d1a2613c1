"""HSR1 frame-protocol inference server.

Answers 2x upscaling requests with a loaded model artifact.  One server
holds exactly one level's model and refuses requests tagged with any
other level.  Malformed or unserviceable frames get a kind=2 error frame
with a UTF-8 message; the server never crashes on bad input.  A frame
whose magic is wrong desynchronizes the stream, so the server replies
with an error frame and closes.

Frame layout (little-endian): magic ``HSR1``, u8 kind (0 request,
1 response, 2 error), u32 level, u8 ndim, ndim x u64 dims, then the
payload: float32 voxels for data frames, UTF-8 bytes for error frames
(dims[0] = message byte length), nothing for zero-dim frames.  The
handshake is a zero-dim request answered by a zero-dim response.
"""
from __future__ import annotations

import socket
import struct
import sys

import numpy as np
import torch

from .model import Upscaler2xNet

HEADER = struct.Struct("<4sBIB")
MAGIC = b"HSR1"
KIND_REQUEST = 0
KIND_RESPONSE = 1
KIND_ERROR = 2

MAX_PAYLOAD = 2 << 30  # bytes


class _Desync(Exception):
    """Stream cannot be trusted past this point."""


def _read_exact(read, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = read(n - len(buf))
        if not chunk:
            return None if not buf else buf  # EOF
        buf += chunk
    return buf


def _frame(kind: int, level: int, dims: tuple[int, ...], payload: bytes) -> bytes:
    return HEADER.pack(MAGIC, kind, level, len(dims)) + \
        struct.pack(f"<{len(dims)}Q", *dims) + payload


def _error(level: int, message: str) -> bytes:
    raw = message.encode("utf-8")
    return _frame(KIND_ERROR, level, (len(raw),), raw)


def serve_stream(read, write, net: Upscaler2xNet, level: int) -> None:
    """Answer frames until EOF.  ``read(n)`` returns up to n bytes,
    ``write(b)`` sends them."""
    net.eval()
    while True:
        try:
            reply = _handle_one(read, net, level)
        except _Desync as e:
            write(_error(level, str(e)))
            return
        if reply is None:
            return  # clean EOF
        write(reply)


def _handle_one(read, net: Upscaler2xNet, level: int) -> bytes | None:
    head = _read_exact(read, HEADER.size)
    if head is None:
        return None
    if len(head) < HEADER.size:
        raise _Desync("truncated frame header")
    magic, kind, req_level, ndim = HEADER.unpack(head)
    if magic != MAGIC:
        raise _Desync(f"bad magic {magic!r}")
    if ndim:
        raw = _read_exact(read, 8 * ndim)
        if raw is None or len(raw) < 8 * ndim:
            raise _Desync("truncated dims")
        dims = struct.unpack(f"<{ndim}Q", raw)
    else:
        dims = ()

    count = 1
    for d in dims:
        count *= int(d)
    payload_size = (count if kind == KIND_ERROR else 4 * count) if dims else 0
    if payload_size > MAX_PAYLOAD:
        raise _Desync(f"payload of {payload_size} bytes exceeds the cap")
    payload = b""
    if payload_size:
        payload = _read_exact(read, payload_size)
        if payload is None or len(payload) < payload_size:
            raise _Desync("truncated payload")

    if kind != KIND_REQUEST:
        return _error(level, f"expected a request frame, got kind {kind}")
    if req_level != level:
        return _error(level, f"this server holds level {level}, "
                             f"request asked for {req_level}")
    if not dims:
        return _frame(KIND_RESPONSE, level, (), b"")  # handshake
    if ndim != net.ndim:
        return _error(level, f"model is {net.ndim}D, request is {ndim}D")
    if any(d < 1 for d in dims):
        return _error(level, f"empty request dims {dims}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(data)):
        return _error(level, "request payload contains NaN or Inf")
    try:
        out = net.upscale_array(data.astype(np.float32))
    except Exception as e:  # inference must never kill the server
        return _error(level, f"inference failed: {e}")
    out_dims = tuple(2 * int(d) for d in dims)
    return _frame(KIND_RESPONSE, level, out_dims,
                  out.numpy().astype("<f4").tobytes())


def serve_stdio(net: Upscaler2xNet, level: int) -> None:
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer

    def write(b: bytes) -> None:
        stdout.write(b)
        stdout.flush()

    serve_stream(stdin.read, write, net, level)


def serve_tcp(net: Upscaler2xNet, level: int, port: int,
              announce=print) -> None:
    """Serve connections sequentially; port 0 picks a free one (announced
    as ``PORT <n>`` on stdout)."""
    listener = socket.create_server(("127.0.0.1", port))
    announce(f"PORT {listener.getsockname()[1]}", flush=True)
    try:
        while True:
            conn, _ = listener.accept()
            with conn:
                reader = conn.makefile("rb")
                serve_stream(reader.read, conn.sendall, net, level)
    finally:
        listener.close()
