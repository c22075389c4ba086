import json
import logging

import click

from hear.cli.options import load_recording, positive
from hear.models.evaluation import OutlierCriteria
from hear.services.evaluation_service import EvaluationService
from hear.utils.error_handler import handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False),
              help='Recording with trial boundaries.')
@click.option('--amplitude-threshold', type=float, default=200.0, show_default=True, callback=positive,
              help='µV.')
@click.option('--z-probability', type=float, default=6.0, show_default=True, callback=positive)
@click.option('--z-variance', type=float, default=4.0, show_default=True, callback=positive)
@click.option('--z-kurtosis', type=float, default=6.0, show_default=True, callback=positive)
@handle_cli_errors
def detect(
    input_path: str,
    amplitude_threshold: float,
    z_probability: float,
    z_variance: float,
    z_kurtosis: float
) -> None:
    """Print outlier trials, one JSON record per flagged trial."""
    recording = load_recording(input_path)
    criteria = OutlierCriteria(
        amplitude_threshold=amplitude_threshold,
        z_probability=z_probability,
        z_variance=z_variance,
        z_kurtosis=z_kurtosis,
    )
    report = EvaluationService.detect_outlier_trials(recording.trial_array(), criteria)
    for trial in report.flagged:
        click.echo(json.dumps({'trial': trial, 'criteria': report.criteria_for(trial)}))
    logger.info(
        f"{len(report.flagged)} of {report.n_trials} trial(s) flagged "
        f"({100 * report.fraction:.1f}%)"
        + (f"; skipped: {', '.join(report.skipped)}" if report.skipped else "")
    )
