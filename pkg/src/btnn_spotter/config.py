"""Configuration loader for the keyword spotter."""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigurationError

DEFAULT_CONFIG_PATH = "./config/config.yaml"

DEFAULTS: Dict[str, Any] = {
    "features": {
        "sample_rate_hz": 16000,
        "num_bins": 40,
        "frame_length_ms": 25.0,
        "frame_hop_ms": 10.0,
        "fft_size": 512,
        "mel_low_hz": 20.0,
        "mel_high_hz": 8000.0,
        "log_floor": 1e-10,
        "running_mean": False,
    },
    "model": {
        "embedding": [
            {"type": "dense", "dim": 64, "activation": "relu"},
            {"type": "memory", "taps": 4},
            {"type": "dense", "dim": 64, "activation": "relu"},
        ],
        "tail_dims": [32, 16],
        "seed": 0,
    },
    "training": {
        "scale_pos": 4.0,
        "neg_pos_ratio": 1.0,
        "learning_rate": 0.01,
        "epochs": 40,
        "batch_size": 128,
        "optimizer": "adam",
        "joint": False,
        "seed": 0,
    },
    "calibration": {
        "segments": 100,
        "scale_pos": 4.0,
        "scale_neg": 1.0,
        "fusion": "complement",
        "grid": [0.5, 1.0, 2.0, 4.0, 8.0],
    },
    "graph": {
        "max_skip": 1,
        "punishment": 4.0,
    },
    "decode": {
        "beam": 32,
        "threshold": -1.0,
        "min_frames": 20,
        "refractory_frames": 50,
        "token_floor": -5.0,
    },
    "eval": {
        "fa_target": 1.0,
        "thresholds": [-3.0, -2.5, -2.0, -1.5, -1.25, -1.0, -0.75, -0.5],
    },
    "synth": {
        "num_states": 8,
        "feature_dim": 20,
        "frames_per_state": 10,
        "num_utterances": 500,
        "dev_utterances": 100,
        "test_utterances": 200,
        "positive_fraction": 0.5,
        "keyword_state_seqs": [[0, 1, 2, 3], [4, 5, 6, 7]],
        "noise_std": 0.3,
        "seed": 0,
    },
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        "datefmt": "%Y-%m-%d %H:%M:%S",
        "log_dir": "./logs",
    },
}

REQUIRED_SECTIONS = list(DEFAULTS.keys())


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from YAML file and environment variables.

    Args:
        config_path: Path to the YAML configuration file. Falls back to the
                     BTNN_CONFIG env var, then ./config/config.yaml if present,
                     then built-in defaults only.

    Returns:
        Dictionary with the file merged over the defaults

    Raises:
        FileNotFoundError: If an explicitly named config file doesn't exist
        ConfigurationError: If config is invalid
    """
    load_dotenv()

    explicit = config_path or os.getenv("BTNN_CONFIG")
    config = copy.deepcopy(DEFAULTS)

    if explicit:
        config_file = Path(explicit)
        if not config_file.exists():
            raise FileNotFoundError(
                f"Configuration file not found: {explicit}\n"
                f"Copy config/config.example.yaml to config/config.yaml and customize it."
            )
    else:
        config_file = Path(DEFAULT_CONFIG_PATH)
        if not config_file.exists():
            _validate_config(config)
            return config

    with open(config_file, "r") as f:
        loaded = yaml.safe_load(f) or {}

    if not isinstance(loaded, dict):
        raise ConfigurationError(f"Top level of {config_file} must be a mapping")

    _deep_merge(config, loaded)
    _validate_config(config)
    return config


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> None:
    """Merge override into base in place; nested dicts merge, everything else replaces."""
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value


def _validate_config(config: Dict[str, Any]) -> None:
    """Validate configuration structure."""
    for section in REQUIRED_SECTIONS:
        if not isinstance(config.get(section), dict):
            raise ConfigurationError(f"Missing required config section: {section}")

    features = config["features"]
    if features["frame_hop_ms"] > features["frame_length_ms"]:
        raise ConfigurationError("features.frame_hop_ms must not exceed frame_length_ms")

    if not config["model"].get("embedding"):
        raise ConfigurationError("model.embedding must list at least one layer")

    calibration = config["calibration"]
    if calibration["fusion"] not in ("complement", "literal"):
        raise ConfigurationError(
            f"calibration.fusion must be 'complement' or 'literal', got {calibration['fusion']!r}"
        )
    if calibration["scale_pos"] < 0 or calibration["scale_neg"] < 0:
        raise ConfigurationError("calibration scales must be non-negative")

    if config["graph"]["punishment"] < 0:
        raise ConfigurationError("graph.punishment must be non-negative")

    beam = config["decode"]["beam"]
    if beam is not None and beam < 1:
        raise ConfigurationError("decode.beam must be at least 1")

    level = config["logging"]["level"]
    if not isinstance(logging.getLevelName(str(level).upper()), int):
        raise ConfigurationError(f"logging.level {level!r} is not a log level name")


def get_env(key: str, default: str = None, required: bool = False) -> str:
    """
    Get environment variable with optional default and required check.

    Args:
        key: Environment variable name
        default: Default value if not set
        required: If True, raise error when not set

    Returns:
        Environment variable value

    Raises:
        ConfigurationError: If required and not set
    """
    value = os.getenv(key, default)
    if required and not value:
        raise ConfigurationError(f"Required environment variable not set: {key}")
    return value
