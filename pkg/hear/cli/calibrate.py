import logging
from typing import Any

import click

from hear.cli.options import apply_overrides, hear_options, load_montage, load_recording, montage_option
from hear.config import Config
from hear.models.evaluation import OutlierCriteria
from hear.services.correction_service import CorrectionService
from hear.services.model_service import ModelService
from hear.utils.error_handler import handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@montage_option
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False),
              help='Rest recording with trial boundaries.')
@click.option('--output', 'output_path', required=True, type=click.Path(dir_okay=False),
              help='Model file to write.')
@click.option('--screen/--no-screen', default=True, show_default=True,
              help='Drop outlier trials before calibrating.')
@hear_options
@click.pass_obj
@handle_cli_errors
def calibrate(
    config: type[Config],
    montage_path: str,
    input_path: str,
    output_path: str,
    screen: bool,
    **overrides: Any
) -> None:
    """Learn the per-channel reference variance from rest trials."""
    montage = load_montage(montage_path)
    recording = load_recording(input_path, montage)
    hear_config = apply_overrides(config.hear_config(recording.header.f_s), overrides)

    trials = recording.trial_array()
    if screen:
        trials, report = CorrectionService.screen_calibration_trials(trials, OutlierCriteria())
        logger.info(f"Screening kept {trials.shape[0]} of {report.n_trials} trial(s)")
    model = CorrectionService.calibrate(trials, hear_config, montage)
    ModelService.save_model(model, output_path)
