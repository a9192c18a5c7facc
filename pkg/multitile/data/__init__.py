from .exact import FreqValue, LogLinearValue, VolumeFraction, format_rational, parse_rational
from .models import Patch, PlacedTile, Scheme, TimePoint

__all__ = [
    "FreqValue",
    "LogLinearValue",
    "Patch",
    "PlacedTile",
    "Scheme",
    "TimePoint",
    "VolumeFraction",
    "format_rational",
    "parse_rational",
]
