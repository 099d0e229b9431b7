"""Image and text embeddings with a common unit-norm contract.

Two backends: a built-in pixel embedder (image-only weak baseline) and a
client for an external model served over a newline-delimited JSON
protocol. Scores elsewhere in the package only ever touch embeddings
through dot products, so any backend with unit-norm output plugs in.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import os
import socket
import subprocess
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core import Frame


class EmbeddingError(RuntimeError):
    pass


class BackendUnavailable(EmbeddingError):
    """Transport failure or malformed response from the sidecar."""


class CapabilityMissing(EmbeddingError):
    """Backend cannot perform the requested operation."""


@dataclass(frozen=True)
class EmbedderDescriptor:
    name: str
    dim: int
    supports_text: bool


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / n


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product of two embeddings of equal dimension."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"embedding dims differ: {a.shape} vs {b.shape}")
    return float(a @ b)


def frame_to_png_bytes(frame: Frame) -> bytes:
    arr = np.clip(frame.pixels * 255.0, 0, 255).round().astype(np.uint8)
    img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def frame_hash(frame: Frame) -> str:
    arr = np.ascontiguousarray(frame.pixels)
    return hashlib.sha256(arr.tobytes()).hexdigest()


class Embedder:
    """Backend interface: batch image embedding plus optional text."""

    def describe(self) -> EmbedderDescriptor:
        raise NotImplementedError

    def embed_images(self, frames: list[Frame]) -> np.ndarray:
        """(n, D) array, row-aligned with the input order."""
        raise NotImplementedError

    def embed_image(self, frame: Frame) -> np.ndarray:
        return self.embed_images([frame])[0]

    def embed_text(self, prompt: str) -> np.ndarray:
        raise CapabilityMissing(f"{self.describe().name} cannot embed text")

    def close(self) -> None:
        pass


def _box_average(image: np.ndarray, cells: int) -> np.ndarray:
    """Average HxWxC pixels into a cells x cells grid (integer buckets)."""
    h, w = image.shape[:2]
    rb = (np.arange(cells + 1) * h) // cells
    cb = (np.arange(cells + 1) * w) // cells
    rows = np.add.reduceat(image, rb[:-1], axis=0)
    both = np.add.reduceat(rows, cb[:-1], axis=1)
    counts = np.outer(np.diff(rb), np.diff(cb)).astype(np.float64)
    return both / counts[:, :, None]


class PixelEmbedder(Embedder):
    """Low-level baseline: 8x8 box-averaged pixels, mean-subtracted,
    L2-normalized (D = 192). A uniform frame has no signal left after
    mean subtraction; by convention it maps to the first basis vector.
    """

    CELLS = 8
    DIM = CELLS * CELLS * 3

    def describe(self) -> EmbedderDescriptor:
        return EmbedderDescriptor("pixel", self.DIM, supports_text=False)

    def embed_images(self, frames: list[Frame]) -> np.ndarray:
        out = np.empty((len(frames), self.DIM))
        for i, frame in enumerate(frames):
            if frame.pixels.shape[0] < self.CELLS or frame.pixels.shape[1] < self.CELLS:
                raise ValueError("frame smaller than the 8x8 embedding grid")
            flat = _box_average(frame.pixels, self.CELLS).reshape(-1)
            out[i] = normalize(flat - flat.mean())
        return out


class SidecarEmbedder(Embedder):
    """Client for the line protocol: one JSON object per line.

    Requests carry a unique id; responses are matched by id, never by
    arrival order. Connects over TCP ("host:port") or speaks stdio to a
    spawned command (list of argv strings).
    """

    def __init__(self, address: str | None = None, command: list[str] | None = None):
        if (address is None) == (command is None):
            raise ValueError("pass exactly one of address or command")
        self._next_id = 0
        self._proc: subprocess.Popen | None = None
        self._sock_file = None
        if address is not None:
            host, _, port = address.rpartition(":")
            try:
                sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=30)
            except OSError as e:
                raise BackendUnavailable(f"cannot connect to sidecar at {address}: {e}")
            self._sock_file = sock.makefile("rwb")
        else:
            try:
                self._proc = subprocess.Popen(
                    command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                )
            except OSError as e:
                raise BackendUnavailable(f"cannot spawn sidecar {command!r}: {e}")
        self._descriptor = self._handshake()

    @staticmethod
    def from_env() -> "SidecarEmbedder":
        """Build from ASAL_SIDECAR ("host:port") or ASAL_SIDECAR_CMD."""
        address = os.environ.get("ASAL_SIDECAR")
        command = os.environ.get("ASAL_SIDECAR_CMD")
        if address:
            return SidecarEmbedder(address=address)
        if command:
            return SidecarEmbedder(command=command.split())
        raise BackendUnavailable(
            "set ASAL_SIDECAR (host:port) or ASAL_SIDECAR_CMD to use the fm backend"
        )

    def _handshake(self) -> EmbedderDescriptor:
        # the describe exchange is id-less
        self._write_line({"op": "describe"})
        reply = self._read_line()
        if "error" in reply:
            raise BackendUnavailable(f"sidecar describe failed: {reply['error']}")
        try:
            return EmbedderDescriptor(
                str(reply["name"]), int(reply["dim"]), bool(reply["supports_text"])
            )
        except KeyError as e:
            raise BackendUnavailable(f"describe reply missing field {e}")

    def _write_line(self, obj: dict) -> None:
        data = (json.dumps(obj) + "\n").encode()
        try:
            if self._sock_file is not None:
                self._sock_file.write(data)
                self._sock_file.flush()
            else:
                self._proc.stdin.write(data)
                self._proc.stdin.flush()
        except (OSError, ValueError, BrokenPipeError) as e:
            raise BackendUnavailable(f"sidecar write failed: {e}")

    def _read_line(self) -> dict:
        try:
            if self._sock_file is not None:
                line = self._sock_file.readline()
            else:
                line = self._proc.stdout.readline()
        except OSError as e:
            raise BackendUnavailable(f"sidecar read failed: {e}")
        if not line:
            raise BackendUnavailable("sidecar closed the connection")
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise BackendUnavailable(f"sidecar sent malformed JSON: {e}")

    def _roundtrip(self, payload: dict) -> dict:
        req_id = self._next_id
        self._next_id += 1
        self._write_line({"id": req_id, **payload})
        while True:
            reply = self._read_line()
            if reply.get("id") == req_id:
                if "error" in reply:
                    raise EmbeddingError(f"sidecar error: {reply['error']}")
                return reply
            # response for a different in-flight id; protocol violation here
            raise BackendUnavailable(
                f"sidecar answered id {reply.get('id')} to request {req_id}"
            )

    def describe(self) -> EmbedderDescriptor:
        return self._descriptor

    def embed_images(self, frames: list[Frame]) -> np.ndarray:
        out = np.empty((len(frames), self._descriptor.dim))
        for i, frame in enumerate(frames):
            png = base64.b64encode(frame_to_png_bytes(frame)).decode("ascii")
            reply = self._roundtrip({"op": "embed_image", "png_b64": png})
            out[i] = self._vector(reply)
        return out

    def embed_text(self, prompt: str) -> np.ndarray:
        if not self._descriptor.supports_text:
            raise CapabilityMissing(f"{self._descriptor.name} cannot embed text")
        reply = self._roundtrip({"op": "embed_text", "text": prompt})
        return self._vector(reply)

    def _vector(self, reply: dict) -> np.ndarray:
        vec = np.asarray(reply.get("embedding", []), dtype=np.float64)
        if vec.shape != (self._descriptor.dim,):
            raise BackendUnavailable(
                f"sidecar returned {vec.shape} embedding, expected ({self._descriptor.dim},)"
            )
        return vec

    def close(self) -> None:
        if self._sock_file is not None:
            self._sock_file.close()
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


class CachingEmbedder(Embedder):
    """Memoizes by (backend name, frame hash) and (backend name, text).

    Archive maintenance in the diversity search re-touches surviving
    members every generation; the cache makes that free."""

    def __init__(self, inner: Embedder, max_entries: int = 200_000):
        self.inner = inner
        self.max_entries = max_entries
        self._images: dict[str, np.ndarray] = {}
        self._texts: dict[str, np.ndarray] = {}

    def describe(self) -> EmbedderDescriptor:
        return self.inner.describe()

    def embed_images(self, frames: list[Frame]) -> np.ndarray:
        keys = [frame_hash(f) for f in frames]
        missing = [i for i, k in enumerate(keys) if k not in self._images]
        if missing:
            fresh = self.inner.embed_images([frames[i] for i in missing])
            if len(self._images) + len(missing) > self.max_entries:
                self._images.clear()
            for row, i in enumerate(missing):
                self._images[keys[i]] = fresh[row]
        return np.stack([self._images[k] for k in keys])

    def embed_text(self, prompt: str) -> np.ndarray:
        if prompt not in self._texts:
            self._texts[prompt] = self.inner.embed_text(prompt)
        return self._texts[prompt]

    def close(self) -> None:
        self.inner.close()


def make_embedder(backend: str, cached: bool = True) -> Embedder:
    """Build a backend by name: "pixel" or "fm" (sidecar via env vars)."""
    if backend == "pixel":
        inner: Embedder = PixelEmbedder()
    elif backend == "fm":
        inner = SidecarEmbedder.from_env()
    else:
        raise ValueError(f"unknown embedder backend {backend!r}")
    return CachingEmbedder(inner) if cached else inner
