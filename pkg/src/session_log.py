"""
Session logging for the command line.
Short progress lines go to the terminal, detailed records to an optional log file.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, TextIO, Union

from src.config import LOG_LEVELS, config as default_config

_LEVELS = {name: getattr(logging, name) for name in LOG_LEVELS}


class SessionLogger:
    """
    Handles dual-logging:
    1. Concise output for the terminal (stderr, stdout carries results).
    2. Detailed, timestamped output for log files.
    """

    def __init__(self, command: str = 'distill', enable_file_logging: bool = False,
                 log_dir: Optional[Union[str, Path]] = None, stream: Optional[TextIO] = None):
        self.stream = stream
        self.file_logger = None
        self.log_path: Optional[Path] = None
        self._handler = None

        if enable_file_logging:
            directory = Path(log_dir or default_config.LOG_DIR)
            directory.mkdir(parents=True, exist_ok=True)
            self.log_path = directory / f"{command}_session_{datetime.now().strftime('%Y-%m-%d_%H-%M-%S')}.log"

            # one logger per session file, so repeated sessions never share handlers
            self.file_logger = logging.getLogger(f"session.{command}.{id(self)}")
            self.file_logger.setLevel(logging.DEBUG)
            self.file_logger.propagate = False
            self._handler = logging.FileHandler(self.log_path, encoding='utf-8')
            self._handler.setFormatter(logging.Formatter('%(asctime)s [%(levelname)s] %(message)s'))
            self.file_logger.addHandler(self._handler)
            self.log_terminal(f"Detailed log file created at: {self.log_path}")

    def log_terminal(self, msg: str):
        """Print to the terminal only"""
        print(msg, file=self.stream or sys.stderr)

    def log_file(self, msg: str, level: str = 'INFO'):
        """Write to the file only"""
        if self.file_logger:
            self.file_logger.log(_LEVELS.get(level.upper(), logging.INFO), msg)

    def log_both(self, terminal_msg: str, file_msg: Optional[str] = None, level: str = 'INFO'):
        """Log distinct messages to both destinations"""
        self.log_terminal(terminal_msg)
        self.log_file(file_msg if file_msg else terminal_msg, level)

    def close(self):
        if self.file_logger and self._handler:
            self._handler.close()
            self.file_logger.removeHandler(self._handler)
            self._handler = None
