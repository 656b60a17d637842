# lunarnet/server/logging_setup.py
import logging
import socket
import sys

import coloredlogs

HOSTNAME = socket.gethostname()


class HostnameFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.hostname = HOSTNAME
        return True


LOG_FMT = "%(asctime)s %(hostname)s %(levelname)-8s %(name)s: %(message)s"
DATE_FMT = "%Y-%m-%dT%H:%M:%S"


def setup_logging(level: str = "INFO") -> None:
    """Colored diagnostics on stderr; stdout and output files stay clean."""
    root = logging.getLogger()
    root.setLevel(level.upper())
    root.handlers.clear()
    coloredlogs.install(
        logger=root,
        level=level.upper(),
        stream=sys.stderr,
        fmt=LOG_FMT,
        datefmt=DATE_FMT,
        milliseconds=True,
        field_styles=dict(levelname=dict(bold=True)),
        level_styles=dict(
            debug=dict(color="blue"),
            info=dict(color="green"),
            warning=dict(color="yellow"),
            error=dict(color="red"),
            critical=dict(color="red", background="white"),
        ),
    )
    for handler in root.handlers:
        handler.addFilter(HostnameFilter())
