import logging
import os
from typing import Optional

import click

from hear.config import Config
from hear.models.simulation import DECAY_MODES, SimulatedDataset, SimulationSpec
from hear.services.montage_service import MontageService
from hear.services.recording_service import RecordingService
from hear.services.simulation_service import SimulationService
from hear.utils.error_handler import handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Output directory.')
@click.option('--seed', type=int, default=None, help='Master seed; all randomness derives from it.')
@click.option('--subjects', type=click.IntRange(min=1), default=15, show_default=True)
@click.option('--rest-trials', type=click.IntRange(min=1), default=12, show_default=True)
@click.option('--reach-trials', type=click.IntRange(min=1), default=60, show_default=True)
@click.option('--trial-length', type=float, default=15.0, show_default=True, help='Seconds.')
@click.option('--fs', 'f_s', type=float, default=None, help='Sampling rate (Hz).')
@click.option('--electrodes', type=click.IntRange(min=2, max=64), default=64, show_default=True)
@click.option('--drift-rms', type=float, default=50.0, show_default=True, help='µV.')
@click.option('--brain-rms', type=float, default=3.0, show_default=True, help='µV.')
@click.option('--pop-decay-mode', type=click.Choice(DECAY_MODES), default='rate', show_default=True)
@click.option('--jobs', type=int, default=None, help='Parallel subjects.')
@click.pass_obj
@handle_cli_errors
def simulate(
    config: type[Config],
    out_dir: str,
    seed: Optional[int],
    subjects: int,
    rest_trials: int,
    reach_trials: int,
    trial_length: float,
    f_s: Optional[float],
    electrodes: int,
    drift_rms: float,
    brain_rms: float,
    pop_decay_mode: str,
    jobs: Optional[int]
) -> None:
    """Simulate subjects with ground truth into OUT."""
    spec = SimulationSpec(
        seed=config.SEED if seed is None else seed,
        n_subjects=subjects,
        n_rest_trials=rest_trials,
        n_reach_trials=reach_trials,
        trial_length=trial_length,
        f_s=config.SAMPLING_RATE if f_s is None else f_s,
        n_electrodes=electrodes,
        drift_rms_uv=drift_rms,
        brain_rms_uv=brain_rms,
        pop_decay_mode=pop_decay_mode,
    )
    datasets = SimulationService.simulate(spec, n_jobs=config.JOBS if jobs is None else jobs)

    os.makedirs(out_dir, exist_ok=True)
    MontageService.save_montage(datasets[0].montage, os.path.join(out_dir, 'montage.txt'))
    for dataset in datasets:
        write_dataset(out_dir, dataset)
    logger.info(f"Wrote {len(datasets)} subject(s) to {out_dir}")


def write_dataset(out_dir: str, dataset: SimulatedDataset) -> None:
    """sub-XX_rest.rec, sub-XX_reach.rec, sub-XX_reach_clean.rec and sub-XX_events.jsonl."""
    prefix = os.path.join(out_dir, f'sub-{dataset.subject:02d}')
    labels = dataset.montage.labels
    RecordingService.write_trials(f'{prefix}_rest.rec', dataset.rest, dataset.f_s, labels)
    RecordingService.write_trials(f'{prefix}_reach.rec', dataset.reach, dataset.f_s, labels)
    RecordingService.write_trials(f'{prefix}_reach_clean.rec', dataset.reach_clean, dataset.f_s, labels)
    RecordingService.write_events(f'{prefix}_events.jsonl', dataset.events)
