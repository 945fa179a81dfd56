import logging
import sys

from tqdm import tqdm

ROOT = "perpsim"


class TagFormatter(logging.Formatter):
    """Formats records as ``[info] message``."""

    def format(self, record):
        message = super().format(record)
        return f"[{record.levelname.lower()}] {message}"


def get_logger(name):
    if not name.startswith(ROOT):
        name = f"{ROOT}.{name}"
    return logging.getLogger(name)


def configure(verbose=False, stream=None):
    """
    Attach the tag formatter to the package logger.

    :param verbose: INFO level when True, WARNING otherwise
    :param stream: target stream, stderr by default
    """
    logger = logging.getLogger(ROOT)
    for handler in list(logger.handlers):
        if getattr(handler, "_perpsim", False):
            logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(TagFormatter("%(message)s"))
    handler._perpsim = True
    logger.addHandler(handler)
    logger.setLevel(logging.INFO if verbose else logging.WARNING)
    logger.propagate = False
    return logger


def progress(iterable, total=None, desc=None, enabled=False):
    return tqdm(iterable, total=total, desc=desc, disable=not enabled, leave=False, file=sys.stderr)
