import io
import logging
import unittest
from unittest.mock import MagicMock

from rich.console import Console

from qpochmax.log_handler import ConsoleHandler


class TestConsoleHandler(unittest.TestCase):
    """Unit tests for the rich console log handler."""

    def setUp(self):
        self.buffer = io.StringIO()
        self.console = Console(file=self.buffer, width=200, color_system=None)
        self.config = MagicMock()
        self.config.get_setting = MagicMock(return_value=False)
        self.handler = ConsoleHandler(self.console, self.config)
        self.handler.setFormatter(logging.Formatter("%(message)s"))
        self.logger = logging.getLogger("qpochmax.test_console")
        self.logger.propagate = False
        self.logger.setLevel(logging.INFO)
        self.logger.addHandler(self.handler)

    def tearDown(self):
        self.logger.removeHandler(self.handler)

    def test_levels_are_labelled(self):
        self.logger.info("Informational message.")
        self.logger.warning("A warning message.")
        self.logger.error("An error message.")
        lines = self.buffer.getvalue().splitlines()
        self.assertEqual(
            lines,
            ["Info: Informational message.", "Warning: A warning message.", "Error: An error message."],
        )

    def test_markup_in_messages_is_printed_literally(self):
        self.logger.warning("Checkpoint [bold]qpoch_0000010.qpnb[/] failed")
        self.assertIn("[bold]qpoch_0000010.qpnb[/]", self.buffer.getvalue())

    def test_suppressed_by_setting(self):
        self.config.get_setting.return_value = True
        self.logger.error("Hidden.")
        self.assertEqual(self.buffer.getvalue(), "")
        self.config.get_setting.assert_called_with("suppress_console_logs", False)

    def test_without_config(self):
        handler = ConsoleHandler(self.console)
        handler.setFormatter(logging.Formatter("%(message)s"))
        record = logging.LogRecord("test", logging.WARNING, "", 0, "No config.", (), None)
        handler.emit(record)
        self.assertIn("Warning: No config.", self.buffer.getvalue())

    def test_print_failure_is_handled(self):
        broken = MagicMock()
        broken.print.side_effect = RuntimeError("closed")
        handler = ConsoleHandler(broken)
        handler.handleError = MagicMock()
        record = logging.LogRecord("test", logging.ERROR, "", 0, "Boom.", (), None)
        handler.emit(record)
        handler.handleError.assert_called_once_with(record)


if __name__ == "__main__":
    unittest.main()
