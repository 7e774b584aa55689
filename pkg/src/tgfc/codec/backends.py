"""Frame codec backends behind a common byte-oriented interface.

Three backends ship by default:

* ``DeflateBackend`` (id 0): lossless zlib over raw pixels; deterministic.
* ``ExternalBackend`` (id 1): hands the frame to a user-configured encoder /
  decoder command pair as a raw 8-bit grayscale file.  This is how HM-16.12
  or any other conventional codec binary is attached.
* ``RequantBackend`` (id 2): uniform requantization followed by deflate, a
  self-contained lossy stand-in for rate sweeps without external binaries.

Backends receive and return whole frames; layout bookkeeping stays with the
caller.  A lossless backend must reproduce pixels exactly.
"""

from __future__ import annotations

import shlex
import struct
import subprocess
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tiling import TiledFrame, TileLayout

__all__ = [
    "CodecBackend",
    "DeflateBackend",
    "RequantBackend",
    "ExternalBackend",
    "ExternalCodecConfig",
    "BackendError",
    "default_registry",
]


class BackendError(RuntimeError):
    """A codec backend failed or produced inconsistent output."""


class CodecBackend:
    """Interface: encode a frame to bytes and decode bytes back given the layout."""

    codec_id: int = -1

    def encode_frame(self, frame: TiledFrame) -> bytes:
        raise NotImplementedError

    def decode_frame(self, data: bytes, layout: TileLayout) -> TiledFrame:
        raise NotImplementedError


class DeflateBackend(CodecBackend):
    """Lossless deflate of the raw frame bytes."""

    codec_id = 0

    def __init__(self, level: int = 9):
        self.level = level

    def encode_frame(self, frame: TiledFrame) -> bytes:
        return zlib.compress(frame.pixels.tobytes(), self.level)

    def decode_frame(self, data: bytes, layout: TileLayout) -> TiledFrame:
        raw = zlib.decompress(data)
        expected = layout.frame_height * layout.frame_width
        if len(raw) != expected:
            raise BackendError(f"decoded {len(raw)} bytes, layout needs {expected}")
        pixels = np.frombuffer(raw, dtype=np.uint8).reshape(layout.frame_height, layout.frame_width)
        return TiledFrame(layout, pixels)


class RequantBackend(CodecBackend):
    """Uniform requantization to a coarser step, then deflate.

    ``step`` trades rate for distortion: larger steps collapse more code
    values and compress better.  step = 1 degenerates to lossless.
    """

    codec_id = 2

    def __init__(self, step: int = 8, level: int = 9):
        if not 1 <= step <= 255:
            raise ValueError(f"step must be in [1, 255], got {step}")
        self.step = step
        self.level = level

    def degrade_frame(self, pixels: np.ndarray) -> np.ndarray:
        """The lossy part on its own: exactly what a round trip reconstructs."""
        levels = np.rint(pixels.astype(np.float64) / self.step).astype(np.int64)
        return np.clip(levels * self.step, 0, 255).astype(np.uint8)

    def encode_frame(self, frame: TiledFrame) -> bytes:
        levels = np.rint(frame.pixels.astype(np.float64) / self.step).astype(np.uint8)
        return struct.pack("<B", self.step) + zlib.compress(levels.tobytes(), self.level)

    def decode_frame(self, data: bytes, layout: TileLayout) -> TiledFrame:
        if len(data) < 1:
            raise BackendError("requant payload missing step byte")
        step = data[0]
        raw = zlib.decompress(data[1:])
        expected = layout.frame_height * layout.frame_width
        if len(raw) != expected:
            raise BackendError(f"decoded {len(raw)} bytes, layout needs {expected}")
        levels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
        pixels = np.clip(levels * step, 0, 255).astype(np.uint8)
        return TiledFrame(layout, pixels.reshape(layout.frame_height, layout.frame_width))


@dataclass
class ExternalCodecConfig:
    """Command templates for an out-of-process codec.

    Placeholders: {input} {output} {width} {height}.  The encode command reads
    a raw 8-bit grayscale frame from {input} and writes a bitstream to
    {output}; the decode command is the reverse.  Each invocation runs in its
    own temp directory so concurrent calls never share files.
    """

    encode_cmd: str
    decode_cmd: str
    timeout_s: float = 120.0


class ExternalBackend(CodecBackend):
    codec_id = 1

    def __init__(self, config: ExternalCodecConfig):
        self.config = config

    def _run(self, template: str, workdir: Path, src: Path, dst: Path, layout: TileLayout) -> bytes:
        cmd = template.format(input=str(src), output=str(dst),
                              width=layout.frame_width, height=layout.frame_height)
        proc = subprocess.run(shlex.split(cmd), cwd=workdir, capture_output=True,
                              timeout=self.config.timeout_s)
        if proc.returncode != 0:
            raise BackendError(f"codec command failed ({proc.returncode}): {cmd}\n"
                               f"{proc.stderr.decode(errors='replace')[-500:]}")
        if not dst.exists():
            raise BackendError(f"codec command produced no output file: {cmd}")
        return dst.read_bytes()

    def encode_frame(self, frame: TiledFrame) -> bytes:
        with tempfile.TemporaryDirectory(prefix="tgfc-enc-") as td:
            workdir = Path(td)
            src = workdir / "frame.gray"
            dst = workdir / "frame.bin"
            src.write_bytes(frame.pixels.tobytes())
            return self._run(self.config.encode_cmd, workdir, src, dst, frame.layout)

    def decode_frame(self, data: bytes, layout: TileLayout) -> TiledFrame:
        with tempfile.TemporaryDirectory(prefix="tgfc-dec-") as td:
            workdir = Path(td)
            src = workdir / "frame.bin"
            dst = workdir / "frame.gray"
            src.write_bytes(data)
            raw = self._run(self.config.decode_cmd, workdir, src, dst, layout)
        expected = layout.frame_height * layout.frame_width
        if len(raw) != expected:
            raise BackendError(f"decoded file holds {len(raw)} bytes, layout needs {expected}")
        pixels = np.frombuffer(raw, dtype=np.uint8).reshape(layout.frame_height, layout.frame_width)
        return TiledFrame(layout, pixels)


def default_registry(extra: dict[int, CodecBackend] | None = None) -> dict[int, CodecBackend]:
    """codec_id -> backend map used by the container decoder."""
    registry: dict[int, CodecBackend] = {0: DeflateBackend(), 2: RequantBackend()}
    if extra:
        registry.update(extra)
    return registry
