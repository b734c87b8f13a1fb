"""Configuration, figure presets, output files and the command line."""
from .config import ConfigError, ExperimentConfig, default_config, load_config, parse_config
from .output import OutputError, emit
from .presets import COLUMNS, PRESETS, ResultSet, Table, run_preset

__all__ = ["COLUMNS", "PRESETS", "ConfigError", "ExperimentConfig", "OutputError", "ResultSet", "Table",
           "default_config", "emit", "load_config", "parse_config", "run_preset"]
