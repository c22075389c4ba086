import logging
from typing import IO, Any, Optional

import click
from joblib import Parallel, delayed

from hear.cli.options import apply_overrides, hear_options
from hear.config import Config
from hear.models.evaluation import MetricRecord
from hear.models.simulation import SimulationSpec
from hear.services.correction_service import MODES
from hear.services.evaluation_service import EvaluationService
from hear.services.recording_service import RecordingService
from hear.services.simulation_service import SimulationService
from hear.utils.error_handler import handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@click.option('--seed', type=int, default=None)
@click.option('--subjects', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--reach-trials', type=click.IntRange(min=1), default=60, show_default=True)
@click.option('--sweep', 'phis', type=float, multiple=True, default=(2.0, 3.0, 4.0), show_default=True,
              help='Threshold multipliers to score; repeat the option.')
@click.option('--mode', 'modes', type=click.Choice(MODES), multiple=True, default=MODES, show_default=True)
@click.option('--jobs', type=int, default=None, help='Parallel subjects.')
@click.option('--output', type=click.File('w'), default='-', help='Metric records (default stdout).')
@hear_options
@click.pass_obj
@handle_cli_errors
def study(
    config: type[Config],
    seed: Optional[int],
    subjects: int,
    reach_trials: int,
    phis: tuple[float, ...],
    modes: tuple[str, ...],
    jobs: Optional[int],
    output: IO[str],
    **overrides: Any
) -> None:
    """Simulate subjects and score uncorrected, HEAR and oHEAR data over a phi sweep."""
    spec = SimulationSpec(
        seed=config.SEED if seed is None else seed,
        n_subjects=subjects,
        n_reach_trials=reach_trials,
        f_s=config.SAMPLING_RATE,
    )
    hear_config = apply_overrides(config.hear_config(spec.f_s), overrides)
    n_jobs = config.JOBS if jobs is None else jobs

    datasets = SimulationService.simulate(spec, n_jobs=n_jobs)
    results: list[list[MetricRecord]] = Parallel(n_jobs=n_jobs)(
        delayed(EvaluationService.evaluate_subject)(
            dataset, hear_config, phis, modes, config.MASK_EPSILON
        )
        for dataset in datasets
    )
    for records in results:
        RecordingService.write_metrics(output, records)
