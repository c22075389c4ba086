import logging
from typing import Any, Optional

import click
import numpy as np

from hear.cli.options import (
    apply_overrides, hear_options, load_model, load_montage, load_recording, model_option, montage_option
)
from hear.config import Config
from hear.services.correction_service import MODES, ONLINE, CorrectionService
from hear.services.montage_service import MontageService
from hear.services.recording_service import RecordingService
from hear.utils.error_handler import SamplingRateMismatch, handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@montage_option
@model_option
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False))
@click.option('--output', 'output_path', required=True, type=click.Path(dir_okay=False))
@click.option('--mode', type=click.Choice(MODES), default=ONLINE, show_default=True,
              help='online: causal variance (oHEAR); offline: bidirectional (HEAR).')
@click.option('--reset-per-trial', is_flag=True,
              help='Treat each trial of the recording as an independent stream.')
@click.option('--probabilities', 'probabilities_path', type=click.Path(dir_okay=False), default=None,
              help='Also write artifact and uncorrectable probabilities as a recording.')
@hear_options
@click.pass_obj
@handle_cli_errors
def correct(
    config: type[Config],
    montage_path: str,
    model_path: str,
    input_path: str,
    output_path: str,
    mode: str,
    reset_per_trial: bool,
    probabilities_path: Optional[str],
    **overrides: Any
) -> None:
    """Remove pop and drift artifacts from a recording."""
    montage = load_montage(montage_path)
    model = load_model(model_path)
    recording = load_recording(input_path, montage)
    header = recording.header
    if header.f_s != model.config.f_s:
        raise SamplingRateMismatch(
            f"Recording sampled at {header.f_s:g} Hz, model calibrated at {model.config.f_s:g} Hz"
        )

    effective = apply_overrides(model.config, overrides)
    d_matrix = MontageService.build_interpolation_matrix(montage, effective.k_neighbors)
    segments = header.trials if reset_per_trial else None

    if mode == ONLINE:
        state = CorrectionService.create_corrector(model, d_matrix, effective, header.f_s)
        result = CorrectionService.correct_recording_online(recording.data, state, segments)
    else:
        result = CorrectionService.correct_offline(recording.data, model, d_matrix, effective, segments)

    RecordingService.write_recording(output_path, result.x_corrected, header.f_s, header.labels, header.trials)
    if probabilities_path:
        p_unc = CorrectionService.uncorrectable_probability(result.p_art, d_matrix)
        labels = [f'p_art:{label}' for label in header.labels] + [f'p_unc:{label}' for label in header.labels]
        RecordingService.write_recording(
            probabilities_path, np.vstack([result.p_art, p_unc]), header.f_s, labels, header.trials
        )
    logger.info(
        f"Corrected {header.n_channels} x {header.sample_count} samples ({mode}); "
        f"mean artifact probability {float(result.p_art.mean()):.4f}"
    )
