"""Configuration management for choquet-risk."""

import os
from dataclasses import dataclass

from .logger import disable_debug as _disable_debug
from .logger import enable_debug as _enable_debug

SEED_ENV_VAR = "CHOQUET_SEED"


@dataclass
class ChoquetConfig:
    """Configuration for the choquet-risk engine."""

    debug: bool = False
    max_workers: int = 4
    thread_name_prefix: str = "choquet-worker"
    auto_cleanup: bool = True
    tolerance: float = 1e-12
    seed: int = 0
    plugin_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.max_workers < 1:
            raise ValueError("max_workers must be at least 1")
        if self.max_workers > 32:
            raise ValueError("max_workers should not exceed 32")
        if not 0.0 <= self.tolerance < 1e-3:
            raise ValueError("tolerance must lie in [0, 1e-3)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not self.plugin_timeout > 0:
            raise ValueError("plugin_timeout must be positive")

        if self.debug:
            _enable_debug()
        else:
            _disable_debug()


_config: ChoquetConfig | None = None


def get_config() -> ChoquetConfig:
    """Get the global configuration."""
    global _config
    if _config is None:
        _config = ChoquetConfig()
    return _config


def set_config(config: ChoquetConfig) -> None:
    """Set the global configuration."""
    global _config
    _config = config
    if config.debug:
        _enable_debug()
    else:
        _disable_debug()


def enable_debug() -> None:
    """Enable debug mode."""
    config = get_config()
    config.debug = True
    _enable_debug()


def disable_debug() -> None:
    """Disable debug mode."""
    config = get_config()
    config.debug = False
    _disable_debug()


def reset_config() -> None:
    """Reset configuration to defaults."""
    global _config
    _config = ChoquetConfig()


def resolve_seed(flag: int | None = None, scenario_seed: int | None = None) -> int:
    """Pick the sampling seed: CLI flag, then $CHOQUET_SEED, then scenario, then config."""
    if flag is not None:
        return flag
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is not None and raw.strip():
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None
        if value < 0:
            raise ValueError(f"{SEED_ENV_VAR} must be non-negative, got {value}")
        return value
    if scenario_seed is not None:
        return scenario_seed
    return get_config().seed
