"""Embedding providers for evaluation metrics.

A provider turns frames and captions into fixed-dimension embedding
vectors. Real deployments wrap a vision-language encoder as an external
process speaking a line protocol on its standard streams:

    request:  IMG <frame-file-path>        one per line
              TXT <base64 utf-8 text>
    response: OK <dim> <base64 little-endian float32 values>
              ERR <message>

``SubprocessEmbedder`` drives any such executable. ``MockEmbedder`` is a
deterministic stand-in for tests: embeddings are unit vectors seeded by a
hash of the 8-bit pixel content (or caption text), so identical inputs
agree across processes and platforms while distinct inputs scatter.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import ProviderError

logger = logging.getLogger(__name__)

EMBEDDING_DIM = 32


def hash_embedding(payload: bytes, dim: int = EMBEDDING_DIM) -> np.ndarray:
    """Deterministic unit vector derived from a byte payload."""
    digest = hashlib.sha256(payload).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vector = rng.standard_normal(dim)
    return (vector / np.linalg.norm(vector)).astype(np.float32)


def image_payload(levels: np.ndarray) -> bytes:
    """Canonical byte payload of an 8-bit image: dimensions plus pixels."""
    levels = np.ascontiguousarray(levels, dtype=np.uint8)
    header = ",".join(str(d) for d in levels.shape).encode("ascii")
    return b"IMG:" + header + b":" + levels.tobytes()


def text_payload(text: str) -> bytes:
    return b"TXT:" + text.encode("utf-8")


class EmbeddingProvider:
    """Interface: embed frames ((H, W, 3) float [0, 1]) and caption text."""

    provider_id: str = "unconfigured"
    supports_text: bool = True

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def embed_text(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        """Release any resources; safe to call more than once."""

    def __enter__(self) -> "EmbeddingProvider":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class MockEmbedder(EmbeddingProvider):
    """In-process deterministic provider (hash-seeded unit vectors)."""

    provider_id = "mock-hash-v1"
    supports_text = True

    def __init__(self, dim: int = EMBEDDING_DIM) -> None:
        self.dim = dim

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        levels = np.rint(np.asarray(frame, dtype=np.float64) * 255.0).astype(np.uint8)
        return hash_embedding(image_payload(levels), self.dim)

    def embed_text(self, text: str) -> np.ndarray:
        return hash_embedding(text_payload(text), self.dim)


def _parse_response(line: str) -> np.ndarray:
    parts = line.strip().split(" ", 2)
    if parts and parts[0] == "ERR":
        raise ProviderError(line.strip()[4:] or "provider reported an error")
    if len(parts) != 3 or parts[0] != "OK":
        raise ProviderError(f"malformed provider response: {line.strip()!r}")
    try:
        dim = int(parts[1])
        values = np.frombuffer(base64.b64decode(parts[2], validate=True), dtype="<f4")
    except (ValueError, TypeError) as exc:
        raise ProviderError(f"undecodable provider response: {exc}") from exc
    if values.shape != (dim,):
        raise ProviderError(
            f"provider promised {dim} values but sent {values.shape[0]}")
    return values.astype(np.float32)


class SubprocessEmbedder(EmbeddingProvider):
    """Drives an external provider executable over the line protocol.

    Frames are written as temporary PNG files and passed by path; requests
    are issued sequentially, one response line per request line.
    """

    def __init__(self, command: str | list[str]) -> None:
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ProviderError("provider command is empty")
        self.provider_id = " ".join(self.command)
        self._process: subprocess.Popen | None = None
        self._tempdir: tempfile.TemporaryDirectory | None = None
        self._counter = 0

    def _ensure_started(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            try:
                self._process = subprocess.Popen(
                    self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    text=True, bufsize=1)
            except OSError as exc:
                raise ProviderError(f"cannot start provider {self.provider_id!r}: {exc}") from exc
            self._tempdir = tempfile.TemporaryDirectory(prefix="compfx-provider-")
        return self._process

    def _request(self, line: str) -> np.ndarray:
        process = self._ensure_started()
        try:
            process.stdin.write(line + "\n")
            process.stdin.flush()
            response = process.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ProviderError(f"provider {self.provider_id!r} pipe failed: {exc}") from exc
        if not response:
            raise ProviderError(f"provider {self.provider_id!r} exited without responding")
        return _parse_response(response)

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        from PIL import Image  # local import keeps provider module light for tools

        self._ensure_started()
        levels = np.rint(np.asarray(frame, dtype=np.float64) * 255.0).astype(np.uint8)
        self._counter += 1
        path = Path(self._tempdir.name) / f"frame_{self._counter:08d}.png"
        Image.fromarray(levels, "RGB").save(path)
        try:
            return self._request(f"IMG {path}")
        finally:
            path.unlink(missing_ok=True)

    def embed_text(self, text: str) -> np.ndarray:
        encoded = base64.b64encode(text.encode("utf-8")).decode("ascii")
        return self._request(f"TXT {encoded}")

    def close(self) -> None:
        if self._process is not None and self._process.poll() is None:
            try:
                self._process.stdin.close()
                self._process.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._process.kill()
        self._process = None
        if self._tempdir is not None:
            self._tempdir.cleanup()
            self._tempdir = None


def mock_provider_main(argv: list[str] | None = None) -> int:
    """Entry point for the mock provider executable.

    Reads protocol requests from stdin and answers on stdout until EOF.
    Embeddings match MockEmbedder exactly: files are decoded to 8-bit
    pixels before hashing, so the container format does not matter.
    """
    from PIL import Image

    args = argv if argv is not None else sys.argv[1:]
    dim = int(args[0]) if args else EMBEDDING_DIM
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            tag, _, rest = line.partition(" ")
            if tag == "IMG":
                with Image.open(rest) as image:
                    levels = np.asarray(image.convert("RGB"))
                vector = hash_embedding(image_payload(levels), dim)
            elif tag == "TXT":
                text = base64.b64decode(rest, validate=True).decode("utf-8")
                vector = hash_embedding(text_payload(text), dim)
            else:
                raise ValueError(f"unknown request tag {tag!r}")
            encoded = base64.b64encode(vector.astype("<f4").tobytes()).decode("ascii")
            sys.stdout.write(f"OK {dim} {encoded}\n")
        except Exception as exc:  # noqa: BLE001 - protocol surfaces all failures as ERR
            sys.stdout.write(f"ERR {exc}\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(mock_provider_main())
