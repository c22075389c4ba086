"""
Service layer for frame-by-frame correction over binary streams.

Protocol: a 12-byte handshake ``<4sII`` = (b"HSTR", version, channel count),
echoed unchanged on the output, then frames of ``channel count`` little-endian
float32 samples. Each corrected frame is written and flushed before the next
input frame is read.
"""
import logging
import struct
from typing import BinaryIO, Optional

import numpy as np

from hear.models.state import CorrectorState
from hear.services.correction_service import CorrectionService
from hear.utils.error_handler import DimensionMismatch, MalformedFrame, VersionMismatch

logger = logging.getLogger(__name__)

HANDSHAKE = struct.Struct('<4sII')
STREAM_MAGIC = b'HSTR'
STREAM_VERSION = 1
FRAME_DTYPE = np.dtype('<f4')


class StreamService:
    """Service class for streaming correction."""

    @staticmethod
    def handshake(n_channels: int) -> bytes:
        return HANDSHAKE.pack(STREAM_MAGIC, STREAM_VERSION, n_channels)

    @staticmethod
    def encode_frames(frames: np.ndarray) -> bytes:
        """frames x channels samples as concatenated stream frames."""
        return np.ascontiguousarray(frames, dtype=FRAME_DTYPE).tobytes()

    @staticmethod
    def run_stream(
        source: BinaryIO,
        sink: BinaryIO,
        state: CorrectorState,
        side_channel: Optional[BinaryIO] = None
    ) -> int:
        """
        Correct a framed sample stream until end of input.

        Args:
            source: Input stream (handshake then frames)
            sink: Output stream (echoed handshake then corrected frames)
            state: Calibrated corrector state, updated in place
            side_channel: Optional output receiving, per frame, the artifact
                probabilities followed by the uncorrectable probabilities

        Returns:
            Number of frames processed

        Raises:
            MalformedFrame: If the handshake or a frame is incomplete or unknown
            VersionMismatch: If the stream version is not supported
            DimensionMismatch: If the stream's channel count differs from the state
        """
        header = _read_exact(source, HANDSHAKE.size)
        if len(header) != HANDSHAKE.size:
            raise MalformedFrame(f"Handshake needs {HANDSHAKE.size} bytes, got {len(header)}")
        magic, version, n_channels = HANDSHAKE.unpack(header)
        if magic != STREAM_MAGIC:
            raise MalformedFrame(f"Unknown stream magic {magic!r}")
        if version != STREAM_VERSION:
            raise VersionMismatch(f"Stream version {version} is not supported")
        if n_channels != state.n_channels:
            raise DimensionMismatch(
                f"Stream carries {n_channels} channels, model has {state.n_channels}"
            )
        sink.write(header)
        sink.flush()

        frame_size = n_channels * FRAME_DTYPE.itemsize
        buffer = bytearray(frame_size)
        view = memoryview(buffer)
        count = 0
        while True:
            received = _read_into(source, view)
            if received == 0:
                break
            if received != frame_size:
                raise MalformedFrame(
                    f"Frame {count} holds {received} of {frame_size} bytes"
                )
            x = np.frombuffer(buffer, dtype=FRAME_DTYPE).astype(np.float64)
            corrected, p_art = CorrectionService.correct_sample(state, x)
            sink.write(corrected.astype(FRAME_DTYPE).tobytes())
            sink.flush()
            if side_channel is not None:
                p_unc = CorrectionService.uncorrectable_probability(p_art, state.d_matrix)
                side_channel.write(np.concatenate([p_art, p_unc]).astype(FRAME_DTYPE).tobytes())
            count += 1

        logger.info(f"Stream closed after {count} frame(s)")
        return count


def _read_into(source: BinaryIO, view: memoryview) -> int:
    """Fill ``view`` from ``source``; returns the byte count read before end of input."""
    filled = 0
    while filled < len(view):
        chunk = source.read(len(view) - filled)
        if not chunk:
            break
        view[filled:filled + len(chunk)] = chunk
        filled += len(chunk)
    return filled


def _read_exact(source: BinaryIO, size: int) -> bytes:
    buffer = bytearray(size)
    received = _read_into(source, memoryview(buffer))
    return bytes(buffer[:received])
