"""Coreset-restricted meta-reweighting for noisy-label training."""

import json

from ._cwerm import (
    REPORT_SCHEMA,
    ConfigError,
    CwermError,
    broadcast_weights,
    make_blobs,
    make_two_moons,
    select_moderate,
    select_random,
)
from . import _cwerm

__all__ = [
    "REPORT_SCHEMA",
    "ConfigError",
    "CwermError",
    "broadcast_weights",
    "compare",
    "make_blobs",
    "make_two_moons",
    "run",
    "select_moderate",
    "select_random",
    "sweep",
    "validate_config",
]


def _dump(config):
    return config if isinstance(config, str) else json.dumps(config or {})


def validate_config(config=None):
    """Return the parsed configuration with defaults filled in."""
    return json.loads(_cwerm.validate_config(_dump(config)))


def run(config=None, method="CW-ERM", seed=0):
    """Run one method arm and return its report as a dict."""
    return json.loads(_cwerm.run(_dump(config), method, seed))


def sweep(config=None):
    """Run the coreset-ratio sweep and return its report as a dict."""
    return json.loads(_cwerm.sweep(_dump(config)))


def compare(config=None):
    """Compare method arms across seeds and return the report as a dict."""
    return json.loads(_cwerm.compare(_dump(config)))
