#!/usr/bin/env python3
"""
Configuration management for the hyperbolic graph experiments.

Settings live in hrg_config.json next to the code. Missing keys fall back to
DEFAULT_CONFIG, command-line flags override both.
"""

import json
import logging
import os

from errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_FILE = "hrg_config.json"

DEFAULT_CONFIG = {
    "alpha": 0.75,
    "bigc": 0.0,
    "n": 1024,
    "mode": "uniform",              # "uniform" or "poisson"
    "seed": 1,
    "tol": 1e-8,                    # residual tolerance of the gap solver
    "max_iter": 20000,
    "exact_cap": 3000,              # largest component certified by the flow module
    "diameter_exact_cap": 20000,
    "dense_cap": 512,               # dense reference gap up to this size
    "brute_force_cap": 20,          # exhaustive conductance up to this size
    "mincut_cap": 2000,
    "reference_angle": 0.0,         # half-disk reference direction (radians)
    "probe_eps": 0.5,
    "probe_balls": 32,
    "local_search_factor": 50,      # move evaluations per vertex in local search
    "nu_prime": None,               # None -> 2 ln R + ln ln R
    "nu": None,                     # None -> (1/alpha) ln R + ln ln R
    "flow_nu_prime": 0.0,           # slack used when certifying at desk scale
    "workers": 1,
    "log_level": "INFO",
}

MODES = ("uniform", "poisson")


def load_config(path=CONFIG_FILE):
    """Load configuration from a JSON file on top of DEFAULT_CONFIG"""
    config = dict(DEFAULT_CONFIG)
    try:
        with open(path, 'r') as f:
            config.update(json.load(f))
    except FileNotFoundError:
        logger.info("Config file %s not found, using defaults", path)
    except (OSError, ValueError) as e:
        logger.error("Error loading config %s: %s, using defaults", path, e)
    validate_config(config)
    return config


def validate_config(config):
    """Raise ConfigError for values outside the model's regime"""
    alpha = config.get("alpha")
    if alpha is not None and not 0.5 < float(alpha) < 1.0:
        raise ConfigError(f"alpha must lie in (1/2, 1), got {alpha}")
    n = config.get("n")
    if n is not None and int(n) < 2:
        raise ConfigError(f"n must be at least 2, got {n}")
    if config.get("mode") not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {config.get('mode')}")
    for key in ("tol", "exact_cap", "dense_cap", "brute_force_cap", "workers"):
        if key in config and config[key] is not None and float(config[key]) <= 0:
            raise ConfigError(f"{key} must be positive, got {config[key]}")
    return config


class Config:
    """Attribute-style view of the JSON configuration"""

    def __init__(self, path=CONFIG_FILE, overrides=None):
        self.config_file = path
        self.__dict__.update(load_config(path))
        if overrides:
            self.update({k: v for k, v in overrides.items() if v is not None})

    def update(self, values):
        merged = self.as_dict()
        merged.update(values)
        validate_config(merged)
        self.__dict__.update(values)

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if k != 'config_file'}

    def save_config(self, path=None):
        """Save configuration to file"""
        target = path or self.config_file
        try:
            with open(target, 'w') as f:
                json.dump(self.as_dict(), f, indent=2)
        except OSError as e:
            logger.error("Error saving config %s: %s", target, e)
            raise ConfigError(f"cannot write {target}: {e}") from e

    def exists(self):
        return os.path.exists(self.config_file)
