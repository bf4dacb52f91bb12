import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Optional

from eliot import current_action, log_message
from pycomfort.logging import to_nice_file, to_nice_stdout

from cuspkit.cli.config import LogDestinations
from cuspkit.log_bus import CuspLogBus, SingletonMeta


class EliotLogger(metaclass=SingletonMeta):
    """
    Singleton that sets up eliot destinations once per process and forwards
    library diagnostics from ``CuspLogBus`` into the current eliot action.
    """

    _logger_output: LogDestinations
    _logdir: Optional[Path]
    log_path: Optional[Path]

    def __init__(self, log_dir: Path, temp_dir: Path, logger_output: LogDestinations = "none"):
        self._logger_output = logger_output or "none"
        self._logdir = None
        self.log_path = None
        if self._logger_output != "none":
            if not log_dir or not temp_dir:
                raise ValueError("logdir is not set")
            self._logdir = Path(log_dir)
            self._logdir.mkdir(parents=True, exist_ok=True)
            Path(temp_dir).mkdir(parents=True, exist_ok=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            uniq_name = f"{timestamp}_{uuid.uuid4().hex[:4]}"
            self.log_path = self._logdir / f"{uniq_name}.log"
            if self._logger_output in ("stdout", "both"):
                to_nice_stdout(output_file=Path(temp_dir) / f"{uniq_name}.json")
            if self._logger_output in ("file", "both"):
                to_nice_file(output_file=self._logdir / f"{uniq_name}.json.log", rendered_file=self.log_path)
        CuspLogBus().subscribe("*", self.forward)

    @staticmethod
    def forward(event_name: str, *args: Any, **kwargs: Any) -> None:
        """Log a bus event as an eliot message, inside the current action when there is one."""
        action_type = str(kwargs.pop("action", event_name))
        fields = {str(k): v if isinstance(v, (int, float, str, bool, type(None))) else str(v)
                  for k, v in kwargs.items()}
        action = current_action()
        if action is not None:
            action.log(message_type=action_type, source=event_name, **fields)
        else:
            log_message(message_type=action_type, source=event_name, **fields)
