"""
JSON-based laboratory settings
Defaults for seeds, trial budgets, tolerances and output, overridable by a
settings file and then by command-line flags
"""

import json
import logging
from pathlib import Path
from typing import Any, Optional

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS_FILE = "nicd_lab.json"


class LabSettings:
    """
    Manages laboratory settings using a JSON file

    Settings stored:
    - seed: 64-bit seed for every random draw
    - trials: default trial budget of a verification check
    - jobs: worker threads for searches and checks
    - tolerance / operator_tolerance: violation slack for probabilities
      and operator-norm comparisons
    - output_format: "json" or "csv"
    - eigen_solver: "jacobi" or "lapack"
    - log_level / log_file: logging configuration
    - brute_force_limit: largest n*|V| accepted by joint enumeration
    - max_states: largest Markov chain state space
    """

    DEFAULTS = {
        "seed": 20240611,
        "trials": 1000,
        "jobs": 1,
        "tolerance": 1e-10,
        "operator_tolerance": 1e-9,
        "output_format": "json",
        "eigen_solver": "jacobi",
        "log_level": "INFO",
        "log_file": None,
        "brute_force_limit": 24,
        "max_states": 4096,
    }

    def __init__(self, settings_file: Optional[Path] = None):
        """
        Initialize settings manager

        Args:
            settings_file: Path to a JSON settings file (defaults to
                nicd_lab.json in the working directory)
        """
        if settings_file is None:
            settings_file = Path.cwd() / DEFAULT_SETTINGS_FILE

        self.settings_file = Path(settings_file)
        self.settings = self._load_settings()

    def _load_settings(self) -> dict:
        """Load settings from the JSON file, falling back to defaults"""
        try:
            if self.settings_file.exists():
                with open(self.settings_file, 'r', encoding='utf-8') as f:
                    settings = json.load(f)
                if not isinstance(settings, dict):
                    raise ValueError("settings file must hold a JSON object")
                unknown = sorted(set(settings) - set(self.DEFAULTS))
                if unknown:
                    logger.warning(f"Ignoring unknown settings: {', '.join(unknown)}")
                logger.info(f"Loaded settings from {self.settings_file}")
                known = {k: v for k, v in settings.items() if k in self.DEFAULTS}
                return {**self.DEFAULTS, **known}
            else:
                logger.debug("No settings file found, using defaults")
                return self.DEFAULTS.copy()
        except Exception as e:
            logger.error(f"Error loading settings: {e}")
            return self.DEFAULTS.copy()

    def save(self):
        """Save settings to the JSON file"""
        try:
            with open(self.settings_file, 'w', encoding='utf-8') as f:
                json.dump(self.settings, f, indent=2, sort_keys=True)
            logger.debug(f"Settings saved to {self.settings_file}")
        except OSError as e:
            logger.error(f"Error saving settings: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get a setting value"""
        return self.settings.get(key, default)

    def set(self, key: str, value: Any):
        """Set a setting value for this run (not persisted until save())"""
        if key not in self.DEFAULTS:
            raise KeyError(f"unknown setting {key!r}")
        self.settings[key] = value

    def merged(self, overrides: dict) -> dict:
        """Settings with non-None overrides applied on top"""
        return {**self.settings, **{k: v for k, v in overrides.items() if v is not None}}

    # Convenience accessors

    @property
    def seed(self) -> int:
        return int(self.get("seed"))

    @property
    def tolerance(self) -> float:
        return float(self.get("tolerance"))

    @property
    def operator_tolerance(self) -> float:
        return float(self.get("operator_tolerance"))

    @property
    def eigen_solver(self) -> str:
        return str(self.get("eigen_solver"))
