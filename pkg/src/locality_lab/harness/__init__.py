"""Batch experiment runner: configs, records and the command line."""
from .config import PROTOCOLS, ExperimentConfig, load_config, parse_config
from .runner import RunRecord, run, suite

__all__ = ["PROTOCOLS", "ExperimentConfig", "load_config", "parse_config",
           "RunRecord", "run", "suite"]
