"""Batch experiment runner tying ingest, training, attack, defense and evaluation together."""

from advnet.harness.config import ConfigError, ExperimentConfig, load_config, parse_config
from advnet.harness.pipeline import run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "run_experiment"]
