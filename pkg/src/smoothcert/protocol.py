"""Length-prefixed frame protocol for external classifier processes.

Frame layout, both directions:

    4-byte little-endian payload length,
    payload = one UTF-8 JSON header line ending in "\\n", then the binary body.

Requests: ``{"op":"info"}`` (no body) or
``{"op":"predict","count":N,"dim":M,"dtype":"f32"}`` followed by N*M
little-endian float32 values, row-major. Responses carry no body:
``{"ok":true,...}`` or ``{"ok":false,"error":"..."}``.
"""

from __future__ import annotations

import json
import shlex
import socket
import struct
import subprocess
from typing import BinaryIO

import numpy as np

from .errors import TransportError

MAX_FRAME = 64 * 1024 * 1024


def encode_frame(header: dict, body: bytes = b"") -> bytes:
    payload = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n" + body
    return struct.pack("<I", len(payload)) + payload


def decode_payload(payload: bytes) -> tuple[dict, bytes]:
    nl = payload.find(b"\n")
    if nl < 0:
        raise TransportError("malformed frame: missing header newline")
    try:
        header = json.loads(payload[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TransportError(f"malformed frame header: {exc}") from exc
    return header, payload[nl + 1:]


def read_exact(stream: BinaryIO, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            raise TransportError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream: BinaryIO) -> tuple[dict, bytes]:
    (length,) = struct.unpack("<I", read_exact(stream, 4))
    if length > MAX_FRAME:
        raise TransportError(f"frame length {length} exceeds limit {MAX_FRAME}")
    return decode_payload(read_exact(stream, length))


def write_frame(stream: BinaryIO, header: dict, body: bytes = b"") -> None:
    stream.write(encode_frame(header, body))
    stream.flush()


class Connection:
    """One request-at-a-time channel to a classifier process.

    Owns either a subprocess (stdio transport) or a TCP socket. Not shareable
    across threads; worker pools clone connections instead.
    """

    def __init__(self, command: str | None = None, address: tuple[str, int] | None = None):
        if (command is None) == (address is None):
            raise TransportError("exactly one of command/address must be given")
        self.command = command
        self.address = address
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._rd: BinaryIO | None = None
        self._wr: BinaryIO | None = None

    def _ensure_open(self) -> None:
        if self._rd is not None:
            return
        if self.command is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as exc:
                raise TransportError(f"could not launch classifier {self.command!r}: {exc}") from exc
            self._rd = self._proc.stdout
            self._wr = self._proc.stdin
        else:
            try:
                self._sock = socket.create_connection(self.address, timeout=30.0)
            except OSError as exc:
                raise TransportError(f"could not connect to {self.address}: {exc}") from exc
            self._rd = self._sock.makefile("rb")
            self._wr = self._sock.makefile("wb")

    def request(self, header: dict, body: bytes = b"") -> dict:
        self._ensure_open()
        try:
            write_frame(self._wr, header, body)
            resp, _ = read_frame(self._rd)
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"classifier connection failed: {exc}") from exc
        if not resp.get("ok", False):
            raise TransportError(f"classifier error: {resp.get('error', 'unspecified')}")
        return resp

    def info(self) -> dict:
        return self.request({"op": "info"})

    def predict(self, batch: np.ndarray) -> np.ndarray:
        count, dim = batch.shape
        header = {"op": "predict", "count": count, "dim": dim, "dtype": "f32"}
        body = np.ascontiguousarray(batch, dtype="<f4").tobytes()
        resp = self.request(header, body)
        labels = resp.get("labels")
        if not isinstance(labels, list) or len(labels) != count:
            raise TransportError(f"predict response carried {labels!r} for {count} inputs")
        return np.asarray(labels, dtype=np.int64)

    def close(self) -> None:
        for stream in (self._wr, self._rd):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass
        if self._proc is not None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._sock is not None:
            self._sock.close()
        self._rd = self._wr = self._proc = self._sock = None

    def __enter__(self):
        self._ensure_open()
        return self

    def __exit__(self, *exc):
        self.close()
