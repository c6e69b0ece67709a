"""Adversarial evasion attacks, defenses and robustness metrics for network ML classifiers."""

__version__ = "0.1.0"
