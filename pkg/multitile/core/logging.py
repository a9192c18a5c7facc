"""JSON log lines on stderr.

Each line is one object with ``time``, ``level``, ``logger`` and ``message``;
everything passed through ``extra=`` is grouped under ``context`` so it cannot
shadow those keys. Fractions, paths and mpmath numbers are written with str().
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, MutableMapping, Tuple

_RECORD_FIELDS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        line: Dict[str, Any] = {
            "time": datetime.fromtimestamp(record.created, timezone.utc).isoformat(timespec="milliseconds"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        context = {k: v for k, v in vars(record).items() if k not in _RECORD_FIELDS and not k.startswith("_")}
        if context:
            line["context"] = context
        if record.exc_info:
            line["error"] = {
                "type": record.exc_info[0].__name__ if record.exc_info[0] else None,
                "trace": self.formatException(record.exc_info),
            }
        return json.dumps(line, ensure_ascii=False, default=str)


class SchemeLogAdapter(logging.LoggerAdapter):
    """Tags every record with the scheme it concerns; call-site extras win on clashes."""

    def __init__(self, logger: logging.Logger, scheme_name: str, **fields: Any) -> None:
        super().__init__(logger, {"scheme": scheme_name, **fields})

    def process(self, msg: str, kwargs: MutableMapping[str, Any]) -> Tuple[str, MutableMapping[str, Any]]:
        kwargs["extra"] = {**self.extra, **kwargs.get("extra", {})}
        return msg, kwargs


def scheme_logger(logger: logging.Logger, scheme) -> SchemeLogAdapter:
    return SchemeLogAdapter(logger, scheme.name, dimension=scheme.dimension)


def configure_logging(level: int | str = logging.INFO) -> None:
    # stdout is reserved for command output
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()
    root.addHandler(handler)
