"""
Command-line interface.

Each subcommand lives in its own module and is registered on the ``cli``
group, which selects the configuration and sets up logging first.
"""
import os

import click

from hear import __version__, create_app
from hear.cli.calibrate import calibrate
from hear.cli.correct import correct
from hear.cli.detect import detect
from hear.cli.evaluate import evaluate
from hear.cli.simulate import simulate
from hear.cli.stream import stream
from hear.cli.study import study


@click.group()
@click.option('--env', type=click.Choice(['dev', 'prod']), default=lambda: os.environ.get('HEAR_ENV', 'dev'),
              help='Configuration (prod adds rotating log files).')
@click.version_option(__version__, prog_name='hear')
@click.pass_context
def cli(ctx: click.Context, env: str) -> None:
    """Remove electrode pop and drift artifacts from EEG."""
    ctx.obj = create_app(env)


cli.add_command(simulate)
cli.add_command(calibrate)
cli.add_command(correct)
cli.add_command(evaluate)
cli.add_command(detect)
cli.add_command(stream)
cli.add_command(study)
