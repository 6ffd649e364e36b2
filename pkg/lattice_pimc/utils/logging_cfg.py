"""
Logging configuration for lattice path-integral Monte Carlo.

This module sets up logging with a rotating file handler and console output,
and provides a context manager that captures the log of a single run next to
its CSV output.
"""
import logging
import logging.handlers
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from lattice_pimc import config


# Maximum log file size (10 MB)
MAX_LOG_SIZE = 10 * 1024 * 1024

# Number of backup log files to keep
BACKUP_COUNT = 5

DETAILED_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
SIMPLE_FORMAT = '%(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logging(debug: bool = False, log_file: Optional[Path] = None) -> None:
    """
    Configure logging for the command-line application.

    Sets up:
    - Rotating file handler (``config.LOG_FILE`` unless ``log_file`` is given)
    - Console handler on stderr, WARNING and above unless debug

    Args:
        debug: If True, sets log level to DEBUG. Otherwise, uses INFO.
        log_file: Optional path of the rotating log file.
    """
    target = Path(log_file) if log_file is not None else config.LOG_FILE
    target.parent.mkdir(parents=True, exist_ok=True)

    log_level = logging.DEBUG if debug else logging.INFO

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()

    file_handler = logging.handlers.RotatingFileHandler(
        filename=str(target),
        maxBytes=MAX_LOG_SIZE,
        backupCount=BACKUP_COUNT,
        encoding='utf-8'
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(logging.Formatter(fmt=DETAILED_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG if debug else logging.WARNING)
    console_handler.setFormatter(logging.Formatter(fmt=SIMPLE_FORMAT))
    root_logger.addHandler(console_handler)

    logger = logging.getLogger(__name__)
    logger.info("Lattice PIMC started")
    logger.info(f"Log level: {logging.getLevelName(log_level)}")
    logger.info(f"Log file: {target}")


@contextmanager
def run_log(path: Optional[Path]) -> Iterator[Optional[Path]]:
    """
    Attach a plain file handler for the duration of one command.

    The run log records seeds, schedules, acceptance rates and wall times.
    These values are kept out of the CSV output so that it stays byte-for-byte
    reproducible.

    Args:
        path: Log file to write. If None, nothing is attached.

    Yields:
        The path being written, or None.
    """
    if path is None:
        yield None
        return

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(str(path), mode='w', encoding='utf-8')
    handler.setLevel(logging.INFO)
    handler.setFormatter(logging.Formatter(fmt=DETAILED_FORMAT, datefmt=DATE_FORMAT))

    root_logger = logging.getLogger()
    previous_level = root_logger.level
    if root_logger.level == logging.NOTSET or root_logger.level > logging.INFO:
        root_logger.setLevel(logging.INFO)
    root_logger.addHandler(handler)
    try:
        yield path
    finally:
        root_logger.removeHandler(handler)
        root_logger.setLevel(previous_level)
        handler.close()

