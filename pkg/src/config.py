"""
Configuration Management
Numerical tolerances, protocol limits and CLI defaults for the simulator
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import dotenv_values

logger = logging.getLogger(__name__)

# Get the project root directory
BASE_DIR = Path(__file__).resolve().parent.parent

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


class Config:
    """Simulator configuration. Class attributes are the defaults."""

    # Density-matrix checks
    HERMITIAN_TOL = 1e-12
    TRACE_TOL = 1e-12
    PSD_TOL = 1e-10

    # Eigenvalues of rho * rho_tilde: imaginary / negative parts below this are rounding
    SPECTRUM_TOL = 1e-9
    # Eigenvalues of rho below this are treated as exact zeros in the concurrence
    RANK_CUTOFF = 1e-14

    # Protocol
    PROBABILITY_TOL = 1e-12
    DEGENERATE_PROB = 1e-15
    MAX_STEPS = 64

    # verify / limits commands
    DEFAULT_SEED = 42
    VERIFY_PAIRS = 20
    VERIFY_TOL = 1e-10
    LIMITS_GRID_STEP = 0.01

    # Application Settings
    LOG_LEVEL = 'WARNING'
    LOG_DIR = 'logs'

    _POSITIVE_KEYS = (
        'HERMITIAN_TOL', 'TRACE_TOL', 'PSD_TOL', 'SPECTRUM_TOL', 'RANK_CUTOFF',
        'PROBABILITY_TOL', 'DEGENERATE_PROB', 'VERIFY_TOL', 'LIMITS_GRID_STEP',
    )

    @classmethod
    def keys(cls):
        """Names of all configurable settings"""
        return [name for name in vars(Config) if name.isupper() and not name.startswith('_')]

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'Config':
        """
        Build a configuration with values overridden from a dotenv-format file.

        The file is parsed with dotenv_values, so nothing is written to the
        process environment.

        Args:
            path: KEY=value file, e.g. ``distill.env``

        Returns:
            Config instance carrying the overrides as instance attributes

        Raises:
            ValueError: If the file is missing or a value cannot be coerced
        """
        path = Path(path)
        if not path.exists():
            raise ValueError(f"Config file not found at: {path}")

        overrides = dotenv_values(path)
        config = cls()
        known = set(cls.keys())

        for key, raw in overrides.items():
            if key not in known:
                logger.warning(f"Ignoring unknown config key '{key}' in {path}")
                continue
            if raw is None:
                raise ValueError(f"Config key '{key}' has no value in {path}")

            default = getattr(Config, key)
            try:
                value = type(default)(raw)
            except (TypeError, ValueError):
                raise ValueError(f"Config key '{key}' expects {type(default).__name__}, got '{raw}'")
            setattr(config, key, value)
            logger.debug(f"Config override {key}={value!r}")

        config.validate()
        return config

    def validate(self) -> bool:
        """Validate tolerances and limits"""
        bad = [key for key in self._POSITIVE_KEYS if not getattr(self, key) > 0]
        if self.MAX_STEPS < 0:
            bad.append('MAX_STEPS')
        if self.VERIFY_PAIRS < 1:
            bad.append('VERIFY_PAIRS')
        if str(self.LOG_LEVEL).upper() not in LOG_LEVELS:
            bad.append('LOG_LEVEL')

        if bad:
            raise ValueError(f"Invalid configuration values: {', '.join(bad)}")
        return True

    @classmethod
    def get_base_dir(cls):
        """Get the project base directory"""
        return BASE_DIR


# Create a singleton instance for easy importing
config = Config()


def load_config(path: Optional[Union[str, Path]] = None) -> Config:
    """Return the default configuration, or one overridden from ``path``"""
    if path is None:
        return config
    return Config.from_file(path)


def get_config_status(cfg: Optional[Config] = None) -> Dict[str, Any]:
    """Get the active value of every setting"""
    cfg = cfg or config
    status = {key: getattr(cfg, key) for key in Config.keys()}
    status['base_dir'] = str(Config.get_base_dir())
    return status


# Display configuration status (for debugging)
if __name__ == "__main__":
    print("=" * 60)
    print("CONFIGURATION STATUS")
    print("=" * 60)

    for key, value in get_config_status().items():
        print(f"  {key:<18} {value}")

    print("\n" + "=" * 60)
