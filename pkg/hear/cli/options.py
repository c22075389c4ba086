"""
Shared options and input loaders for the commands.
"""
from typing import Any, Callable, Optional

import click

from hear.models.calibration import CalibrationModel
from hear.models.config import HearConfig
from hear.models.montage import ElectrodeMontage
from hear.models.recording import Recording
from hear.services.model_service import ModelService
from hear.services.montage_service import MontageService
from hear.services.recording_service import RecordingService
from hear.utils.error_handler import FingerprintMismatch

F = Callable[..., Any]


def positive(ctx: click.Context, param: click.Parameter, value: Optional[float]) -> Optional[float]:
    """Click callback rejecting zero and negative values."""
    if value is not None and not value > 0:
        raise click.BadParameter('must be positive')
    return value


def montage_option(f: F) -> F:
    return click.option(
        '--montage', 'montage_path', required=True, type=click.Path(dir_okay=False),
        help='Montage file (label x y z per line, mm).'
    )(f)


def model_option(f: F) -> F:
    return click.option(
        '--model', 'model_path', required=True, type=click.Path(dir_okay=False),
        help='Calibration model written by calibrate.'
    )(f)


def hear_options(f: F) -> F:
    """--phi, --xi, --t-est, --k and --p-weight; unset options keep the configured value."""
    options = [
        click.option('--phi', type=float, default=None, callback=positive, help='Threshold multiplier.'),
        click.option('--xi', type=float, default=None, callback=positive, help='Transition width multiplier.'),
        click.option('--t-est', 't_est', type=float, default=None, callback=positive,
                     help='Variance estimation window (s).'),
        click.option('--k', 'k_neighbors', type=click.IntRange(min=1), default=None,
                     help='Neighbors per channel.'),
        click.option('--p-weight', type=float, default=None, callback=positive,
                     help='Weight share of the estimation window.'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def apply_overrides(config: HearConfig, overrides: dict[str, Any]) -> HearConfig:
    return config.with_overrides(
        phi=overrides.get('phi'),
        xi=overrides.get('xi'),
        t_est=overrides.get('t_est'),
        k_neighbors=overrides.get('k_neighbors'),
        p_weight=overrides.get('p_weight'),
    )


def load_montage(path: str) -> ElectrodeMontage:
    return MontageService.load_montage_file(path)


def load_model(path: str) -> CalibrationModel:
    return ModelService.load_model(path)


def load_recording(path: str, montage: Optional[ElectrodeMontage] = None) -> Recording:
    """Read a recording; with a montage, its channels must match the montage order."""
    recording = RecordingService.read_recording(path)
    if montage is not None and recording.header.labels != montage.labels:
        raise FingerprintMismatch(
            f"Recording '{path}' channels do not match the montage labels and order"
        )
    return recording
