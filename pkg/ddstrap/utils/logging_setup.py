import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> int:
    """
    Install one stream handler on the ``ddstrap`` logger.

    Level precedence: explicit argument (CLI flag), then DDSTRAP_LOG_LEVEL, then INFO.
    """
    name = (level or os.getenv("DDSTRAP_LOG_LEVEL") or "INFO").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level '{name}'")

    root = logging.getLogger("ddstrap")
    for handler in list(root.handlers):
        if getattr(handler, "_ddstrap", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._ddstrap = True
    root.addHandler(handler)
    root.setLevel(numeric)
    return numeric
