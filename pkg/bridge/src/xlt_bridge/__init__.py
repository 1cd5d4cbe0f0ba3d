"""Service hosting translation, word-alignment, and task-model backends
behind the cross-lingual transfer toolkit's JSON wire protocols."""

__version__ = "0.1.0"

from .app import create_app  # noqa: F401
from .config import BridgeConfig, ModelLoadFailure, parse_args  # noqa: F401
