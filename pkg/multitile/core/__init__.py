from .config import get_settings
from .logging import configure_logging

__all__ = ["get_settings", "configure_logging"]
