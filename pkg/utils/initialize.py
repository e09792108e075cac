import logging

from utils.logger import console_handler, logger


def set_console_logging_level(level: str = "INFO", verbose: bool = False):
    """
    Sets the logging level of the console handler. --verbose always means DEBUG; otherwise the level name from .env.params or --log-level is
    used, and an unknown name falls back to INFO.
    """
    if verbose:
        console_handler.setLevel(logging.DEBUG)
        return

    resolved = logging.getLevelName(str(level).upper())
    console_handler.setLevel(resolved if isinstance(resolved, int) else logging.INFO)


def declare_start(command: str):
    """
    Logs a message saying which command is starting, after a blank line in the file log when an earlier command of the same process wrote
    there.

    Args:
        command (str): The subcommand being run.
    """
    logger.insert_blank_line()
    logger.info(f"Starting {command}...")


def initialize(args):
    set_console_logging_level(args.log_level, args.verbose)
    declare_start(args.command)
