import logging
import os
import time
from typing import Any, Union

import colorlog

LOG_DIR = os.environ.get("SSLS_LOG_DIR", "logs")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
LOG_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}


class CustomLogger(logging.Logger):
    def insert_blank_line(self):
        """
        Separates runs in the file log. The console is left alone so stderr stays compact.
        """
        for handler in self.handlers:
            # A delayed handler has no stream until its first record
            if isinstance(handler, logging.FileHandler) and handler.stream is not None:
                handler.stream.write("\n")
                handler.flush()


def build_console_handler(level: int = logging.INFO) -> logging.Handler:
    handler = logging.StreamHandler()
    handler.setLevel(level)
    handler.setFormatter(colorlog.ColoredFormatter(f"%(log_color)s{LOG_FORMAT}", reset=True, log_colors=LOG_COLORS))
    return handler


def build_file_handler(log_dir: str = LOG_DIR) -> logging.FileHandler:
    """
    DEBUG-level handler writing to <log_dir>/logs-<timestamp>.log. The file is only opened on the first record, so importing the package
    never leaves empty log files behind.
    """
    os.makedirs(log_dir, exist_ok=True)
    path = os.path.join(log_dir, f"logs-{time.strftime('%Y-%m-%d_%H-%M-%S')}.log")

    handler = logging.FileHandler(path, encoding="utf-8", delay=True)
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    return handler


logging.setLoggerClass(CustomLogger)

logger: Union[CustomLogger, Any] = logging.getLogger("ssls_logger")
logger.setLevel(logging.DEBUG)
logger.propagate = False

console_handler = build_console_handler()

# Re-imports (pytest, reloads) must not stack handlers
if not logger.handlers:
    logger.addHandler(console_handler)
    logger.addHandler(build_file_handler())
else:
    console_handler = next(handler for handler in logger.handlers if not isinstance(handler, logging.FileHandler))


def make_set_width(subject, width: int = 12) -> str:
    """
    Pads a log subject (algorithm name, user id, file name) to a fixed width so tab separated log columns line up.
    """
    return str(subject).ljust(width)
