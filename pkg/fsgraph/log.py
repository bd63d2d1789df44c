"""
Logging setup.

Levels come from the ``FSGRAPH_LOG`` environment variable the way ``RUST_LOG``
drives env_logger, and are raised further by ``-v`` flags on the command line.
"""

import logging
import os

ENV_VAR = "FSGRAPH_LOG"
FORMAT = "[%(asctime)s %(levelname)s %(name)s] %(message)s"

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def level_from_env(default: int = logging.WARNING) -> int:
    value = os.environ.get(ENV_VAR, "").strip().lower()
    return _LEVELS.get(value, default)


def setup_logging(verbosity: int = 0, stream=None) -> int:
    """
    Configure the ``fsgraph`` logger hierarchy.

    Args:
        verbosity: number of ``-v`` flags; each one lowers the threshold by one level
        stream: optional stream for the handler (defaults to stderr)

    Returns:
        The effective level
    """
    level = level_from_env()
    for _ in range(verbosity):
        level = max(logging.DEBUG, level - 10)

    root = logging.getLogger("fsgraph")
    root.setLevel(level)
    if not any(getattr(h, "_fsgraph", False) for h in root.handlers):
        handler = logging.StreamHandler(stream)
        handler.setFormatter(logging.Formatter(FORMAT))
        handler._fsgraph = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    return level

