import logging
from typing import IO, Optional

import click

from hear.cli.options import load_recording
from hear.config import Config
from hear.services.evaluation_service import EvaluationService
from hear.services.recording_service import RecordingService
from hear.utils.error_handler import ShapeMismatch, handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@click.option('--clean', 'clean_path', required=True, type=click.Path(dir_okay=False),
              help='Ground-truth clean recording.')
@click.option('--corrected', 'corrected_path', required=True, type=click.Path(dir_okay=False),
              help='Recording to score.')
@click.option('--events', 'events_path', required=True, type=click.Path(dir_okay=False),
              help='Ground-truth events file.')
@click.option('--subject', default='0', show_default=True, help='Subject id of the records.')
@click.option('--label', default='candidate', show_default=True, help='Algorithm-config label.')
@click.option('--epsilon', type=float, default=None, help='Contamination threshold (µV).')
@click.option('--output', type=click.File('w'), default='-', help='Metric records (default stdout).')
@click.pass_obj
@handle_cli_errors
def evaluate(
    config: type[Config],
    clean_path: str,
    corrected_path: str,
    events_path: str,
    subject: str,
    label: str,
    epsilon: Optional[float],
    output: IO[str]
) -> None:
    """Score a corrected recording against ground truth (one JSON record per line)."""
    clean = load_recording(clean_path)
    corrected = load_recording(corrected_path)
    if clean.header.labels != corrected.header.labels or clean.header.f_s != corrected.header.f_s:
        raise ShapeMismatch("Clean and corrected recordings differ in channels or sampling rate")
    events = RecordingService.read_events(events_path)

    clean_trials = clean.trial_array()
    corrected_trials = corrected.trial_array()
    if clean_trials.shape != corrected_trials.shape:
        raise ShapeMismatch(f"Clean trials {clean_trials.shape} vs corrected {corrected_trials.shape}")

    mask = EvaluationService.build_contamination_mask(
        events, clean_trials.shape, clean.header.f_s,
        config.MASK_EPSILON if epsilon is None else epsilon
    )
    records = EvaluationService.signal_metrics(
        int(subject) if subject.isdigit() else subject,
        label, clean_trials, corrected_trials, mask, clean.header.f_s
    )
    RecordingService.write_metrics(output, records)
