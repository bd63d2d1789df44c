"""
Run configuration.

A run config is one JSON object::

    {"encoder": {...}, "train": {...}, "flags": {...},
     "train_path": "...", "dev_path": "...", "test_path": "...",
     "ontology_path": "...", "output_dir": "..."}

Every section is optional and falls back to its defaults; unknown keys are
rejected at every level.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

from .deserializable import Deserializable
from .encoder import EncoderConfig
from .errors import ConfigError

logger = logging.getLogger(__name__)

EXPOSURE_MODES = ("gold-nodes", "predicted-nodes")
PATH_KEYS = ("train_path", "dev_path", "test_path", "ontology_path", "output_dir")


class TrainConfig(Deserializable):
    __strict__ = True

    batch_size: int = 8
    lr_encoder: float = 1e-5
    lr_other: float = 1e-3
    weight_decay: float = 0.01
    grad_clip: float = 5.0
    early_stop_patience: int = 20
    max_epochs: int = 100
    seed: int = 0
    model_variant: str = "joint"
    null_sample_rate: float = 1.0

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr_encoder <= 0 or self.lr_other <= 0:
            raise ConfigError("learning rates must be positive")
        if self.grad_clip <= 0:
            raise ConfigError("grad_clip must be positive")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not 0.0 < self.null_sample_rate <= 1.0:
            raise ConfigError("null_sample_rate must be in (0, 1]")


class Flags(Deserializable):
    __strict__ = True

    lu_mask: bool = True
    lu_mask_training: bool = True
    promote_singleton_pprd: bool = False
    deterministic: bool = True
    exposure: str = "gold-nodes"

    def validate(self) -> None:
        if self.exposure not in EXPOSURE_MODES:
            raise ConfigError(f"exposure must be one of {EXPOSURE_MODES}, got {self.exposure!r}")


class RunConfig(Deserializable):
    __strict__ = True

    encoder: EncoderConfig
    train: TrainConfig
    flags: Flags
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    ontology_path: Optional[str] = None
    output_dir: Optional[str] = None

    def require_paths(self, *names: str) -> None:
        """Fail unless every named read path is set and exists."""
        for name in names:
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"{name} is not set")
            if not Path(value).exists():
                raise ConfigError(f"{name} does not exist: {value}")

    def echo(self, directory: Union[str, Path]) -> Path:
        """Write the effective config (defaults resolved) as ``config.json`` in ``directory``."""
        path = Path(directory) / "config.json"
        path.write_text(self.model_dump_json() + "\n", encoding="utf-8")
        return path


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Load a run config; relative paths in it are taken relative to the config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON: {e.msg}") from e
    config = RunConfig.model_validate(obj)
    base = Path(path).parent
    for key in PATH_KEYS:
        value = getattr(config, key)
        if value and not Path(value).is_absolute():
            setattr(config, key, str(base / value))
    logger.debug("loaded run config from %s", path)
    return config
