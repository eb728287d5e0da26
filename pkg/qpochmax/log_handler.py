import logging

from rich.console import Console
from rich.markup import escape

SEVERITY_STYLES = {
    "information": "cyan",
    "warning": "yellow",
    "error": "bold red",
}


class ConsoleHandler(logging.Handler):
    """
    A logging handler that echoes records to a rich Console, normally stderr.
    The run log file keeps everything; this handler is meant for WARNING and
    above so the operator sees problems while a long computation runs.
    """

    def __init__(self, console: Console | None = None, config=None):
        """
        Initializes the handler.

        Args:
            console: Where messages are printed. Defaults to a stderr Console.
            config: Optional ConfigManager; `suppress_console_logs` silences output.
        """
        super().__init__()
        self.console = console or Console(stderr=True)
        self.config = config

    def emit(self, record: logging.LogRecord):
        if self.config is not None and self.config.get_setting("suppress_console_logs", False):
            return

        try:
            message = self.format(record)

            severity = "information"
            if record.levelno >= logging.ERROR:
                severity = "error"
            elif record.levelno >= logging.WARNING:
                severity = "warning"

            style = SEVERITY_STYLES[severity]
            self.console.print(
                f"[{style}]{record.levelname.capitalize()}:[/] {escape(message)}",
                highlight=False,
            )
        except Exception:
            self.handleError(record)
