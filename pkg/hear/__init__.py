import logging
import os
from logging.handlers import TimedRotatingFileHandler

from rich.console import Console
from rich.logging import RichHandler

from hear.config import Config, config as configs

__version__ = '1.0.0'

logger = logging.getLogger('hear')


def setup_logging(config: type[Config]) -> None:
    """Configure logging for the toolkit. Logs go to stderr, never to stdout."""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = RichHandler(
        console=Console(stderr=True),
        show_path=config.DEBUG,
        rich_tracebacks=config.DEBUG,
    )
    console_handler.setFormatter(logging.Formatter('%(message)s'))
    logger.addHandler(console_handler)
    logger.setLevel(logging.DEBUG if config.DEBUG else config.LOG_LEVEL)
    logger.propagate = False

    if not config.DEBUG:
        log_dir = config.LOG_DIR
        os.makedirs(log_dir, exist_ok=True)

        file_handler = TimedRotatingFileHandler(
            os.path.join(log_dir, 'hear.log'),
            when='midnight',
            interval=1,
            backupCount=7,
            encoding='utf-8'
        )
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
        ))
        file_handler.setLevel(logging.INFO)

        error_handler = TimedRotatingFileHandler(
            os.path.join(log_dir, 'errors.log'),
            when='midnight',
            interval=1,
            backupCount=30,
            encoding='utf-8'
        )
        error_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
        ))
        error_handler.setLevel(logging.ERROR)

        logger.addHandler(file_handler)
        logger.addHandler(error_handler)


def create_app(config_name: str = 'dev') -> type[Config]:
    """Select the configuration and set up logging; returns the active config."""
    config = configs.get(config_name, configs['default'])
    setup_logging(config)
    logger.debug(f'hear {__version__} started with {config.__name__}')
    return config
