import logging
from typing import Any, Optional

import click

from hear.cli.options import apply_overrides, hear_options, load_model, load_montage, model_option, montage_option
from hear.services.correction_service import CorrectionService
from hear.services.montage_service import MontageService
from hear.services.stream_service import StreamService
from hear.utils.error_handler import handle_cli_errors

logger = logging.getLogger(__name__)


@click.command()
@montage_option
@model_option
@click.option('--side-channel', 'side_path', type=click.Path(dir_okay=False), default=None,
              help='File receiving per-frame artifact and uncorrectable probabilities.')
@hear_options
@handle_cli_errors
def stream(montage_path: str, model_path: str, side_path: Optional[str], **overrides: Any) -> None:
    """Correct framed float32 samples from stdin to stdout."""
    montage = load_montage(montage_path)
    model = load_model(model_path)
    effective = apply_overrides(model.config, overrides)
    d_matrix = MontageService.build_interpolation_matrix(montage, effective.k_neighbors)
    state = CorrectionService.create_corrector(model, d_matrix, effective)

    source = click.get_binary_stream('stdin')
    sink = click.get_binary_stream('stdout')
    if side_path is None:
        StreamService.run_stream(source, sink, state)
        return
    with open(side_path, 'wb') as side_channel:
        StreamService.run_stream(source, sink, state, side_channel)
