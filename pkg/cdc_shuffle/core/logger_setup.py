import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

ROOT_LOGGER_NAME = 'cdc_shuffle'


def setup_logger(name: str = ROOT_LOGGER_NAME,
                 log_file: str = 'cdc_shuffle.log',
                 level: Optional[int] = None,
                 log_directory: Optional[str] = 'logs') -> logging.Logger:
    """
    Sets up a logger with a rotating file handler and a console handler.

    The console handler writes to stderr: stdout carries the JSON reports and
    CSV tables produced by the command-line front end.

    Args:
        name (str): Name of the logger. Child loggers ('cdc_shuffle.OsctScheme', ...)
            propagate to it.
        log_file (str): Name of the log file.
        level (int, optional): Logging level. If None, read from the LOG_LEVEL env var,
            defaulting to INFO.
        log_directory (str, optional): Directory for log files. None disables file logging.

    Returns:
        logging.Logger: Configured logger instance.
    """
    if level is None:
        env_level_str = os.getenv('LOG_LEVEL', 'INFO').upper()
        level = getattr(logging, env_level_str, logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # one set of handlers per logger
    if logger.hasHandlers():
        logger.handlers.clear()

    if log_directory is not None:
        log_file_path = os.path.join(log_directory, log_file)
        try:
            os.makedirs(log_directory, exist_ok=True)
        except OSError as e:
            print(f"Error creating log directory {log_directory}: {e}. Logging to current directory.", file=sys.stderr)
            log_file_path = log_file

        try:
            fh = RotatingFileHandler(log_file_path, maxBytes=10 * 1024 * 1024, backupCount=5, mode='a', encoding='utf-8')
            fh.setLevel(level)
            file_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(funcName)s - %(message)s')
            fh.setFormatter(file_formatter)
            logger.addHandler(fh)
        except Exception as e:
            print(f"Error setting up file handler for logging at {log_file_path}: {e}", file=sys.stderr)

    ch = logging.StreamHandler(stream=sys.stderr)
    ch.setLevel(level)
    console_formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(module)s - %(message)s')
    ch.setFormatter(console_formatter)
    logger.addHandler(ch)

    logger.debug(f"Logger '{name}' configured with level {logging.getLevelName(level)}.")
    return logger


if __name__ == '__main__':
    from dotenv import load_dotenv
    dotenv_path = os.path.join(os.path.dirname(__file__), '../../.env')
    load_dotenv(dotenv_path=dotenv_path)

    default_logger = setup_logger(log_directory=None)
    default_logger.info("Info message on the default logger.")
    logging.getLogger(f'{ROOT_LOGGER_NAME}.demo').warning("Child logger message propagates to the root handlers.")

    again = setup_logger(log_directory=None)
    assert len(again.handlers) == 1
