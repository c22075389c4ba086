"""
Service layer for files: recordings, ground-truth events and metric records.

Recording layout::

    HEAR-RECORDING\\n
    {"format_version": 1, "f_s": ..., "labels": [...], ...}\\n
    <little-endian float32 payload, frame-major>
"""
import json
import logging
import os
from typing import IO, Iterable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from hear.models.evaluation import MetricRecord
from hear.models.recording import FORMAT_VERSION, UNITS, Recording, RecordingHeader, TrialSegment
from hear.models.simulation import ArtifactEvent
from hear.utils.error_handler import (
    Inconsistency, NotFoundError, TruncatedPayload, ValidationError, VersionMismatch
)

logger = logging.getLogger(__name__)

MAGIC = b'HEAR-RECORDING\n'
SAMPLE_DTYPE = np.dtype('<f4')


class RecordingService:
    """Service class for recording and ground-truth file operations."""

    @staticmethod
    def write_recording(
        path: str,
        data: ArrayLike,
        f_s: float,
        labels: Sequence[str],
        trials: Optional[Sequence[TrialSegment]] = None
    ) -> Recording:
        """
        Write channels x samples µV data.

        Samples are stored as float32; the returned Recording holds exactly
        what a later read will return.

        Args:
            path: Output file
            data: channels x samples signal
            f_s: Sampling rate (Hz)
            labels: Channel labels in row order
            trials: Optional trial boundaries

        Returns:
            The Recording as stored
        """
        stored = np.asarray(data, dtype=SAMPLE_DTYPE)
        if stored.ndim != 2:
            raise Inconsistency(f"Recording data must be channels x samples, got shape {stored.shape}")
        header = RecordingHeader(
            f_s=float(f_s),
            labels=tuple(labels),
            sample_count=int(stored.shape[1]),
            trials=None if trials is None else tuple(trials),
        )
        recording = Recording(header=header, data=stored.astype(np.float64))
        with open(path, 'wb') as handle:
            handle.write(MAGIC)
            handle.write(json.dumps(header.to_dict()).encode('utf-8') + b'\n')
            handle.write(np.ascontiguousarray(stored.T).tobytes())
        logger.debug(f"Wrote {header.n_channels} x {header.sample_count} recording to {path}")
        return recording

    @staticmethod
    def write_trials(path: str, trials: ArrayLike, f_s: float, labels: Sequence[str]) -> Recording:
        """Write trials x channels x samples data as one recording with trial boundaries."""
        trials = np.asarray(trials, dtype=np.float64)
        n_trials, _, n_samples = trials.shape
        segments = [TrialSegment(i * n_samples, n_samples) for i in range(n_trials)]
        flat = np.concatenate(list(trials), axis=1)
        return RecordingService.write_recording(path, flat, f_s, labels, segments)

    @staticmethod
    def read_recording(path: str) -> Recording:
        """
        Read a recording written by write_recording.

        Raises:
            NotFoundError: If the file does not exist
            VersionMismatch: If the format version is not supported
            TruncatedPayload: If the payload is shorter than the header declares
            Inconsistency: If header and payload disagree otherwise
        """
        if not os.path.isfile(path):
            raise NotFoundError(f"Recording '{path}' not found")
        with open(path, 'rb') as handle:
            if handle.readline() != MAGIC:
                raise Inconsistency(f"'{path}' is not a recording file")
            try:
                raw = json.loads(handle.readline().decode('utf-8'))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise Inconsistency(f"Unreadable recording header: {e}")
            payload = handle.read()

        header = _parse_header(raw)
        expected = header.n_channels * header.sample_count * SAMPLE_DTYPE.itemsize
        if len(payload) < expected:
            raise TruncatedPayload(f"Payload holds {len(payload)} bytes, header declares {expected}")
        if len(payload) != expected:
            raise Inconsistency(f"Payload holds {len(payload)} bytes, header declares {expected}")

        frames = np.frombuffer(payload, dtype=SAMPLE_DTYPE).reshape(header.sample_count, header.n_channels)
        return Recording(header=header, data=frames.T.astype(np.float64))

    @staticmethod
    def write_events(path: str, events: Iterable[ArtifactEvent]) -> None:
        """One JSON object per event per line."""
        with open(path, 'w', encoding='utf-8') as handle:
            for event in events:
                handle.write(json.dumps(event.to_dict()) + '\n')

    @staticmethod
    def read_events(path: str) -> list[ArtifactEvent]:
        if not os.path.isfile(path):
            raise NotFoundError(f"Events file '{path}' not found")
        events = []
        with open(path, encoding='utf-8') as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    events.append(ArtifactEvent.from_dict(json.loads(line)))
                except json.JSONDecodeError as e:
                    raise ValidationError(f"Events line {line_number}: {e}")
        return events

    @staticmethod
    def write_metrics(handle: IO[str], records: Iterable[MetricRecord]) -> None:
        for record in records:
            handle.write(record.to_line() + '\n')

    @staticmethod
    def read_metrics(path: str) -> list[MetricRecord]:
        with open(path, encoding='utf-8') as handle:
            return [MetricRecord.from_line(line) for line in handle if line.strip()]


def _parse_header(raw: dict) -> RecordingHeader:
    if not isinstance(raw, dict):
        raise Inconsistency("Recording header must be a JSON object")
    version = raw.get('format_version')
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"Recording format version {version} is not supported (expected {FORMAT_VERSION})")
    try:
        trials = raw.get('trials')
        return RecordingHeader(
            f_s=float(raw['f_s']),
            labels=tuple(str(label) for label in raw['labels']),
            sample_count=int(raw['sample_count']),
            trials=None if trials is None else tuple(
                TrialSegment(int(t['start_sample']), int(t['length'])) for t in trials
            ),
            format_version=version,
            units=str(raw.get('units', UNITS)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise Inconsistency(f"Incomplete recording header: {e}")
