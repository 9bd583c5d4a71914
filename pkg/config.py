"""
Configuration Module

Runtime settings for the engine. Values come from environment variables when
present and fall back to the defaults below. The CLI layers command-line
flags on top (flag > environment variable > default).

Environment variables:
    NC_SEED           master seed for randomized trials and corpora
    NC_MAX_NODES      expression store node budget
    NC_MAX_DEGREE     total-degree budget for rational functions
    NC_REDUCE_DEGREE  degree above which rational results are gcd-reduced
"""

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping


@dataclass(frozen=True)
class Settings:
    """Engine-wide tunables. See the module docstring for the environment mapping."""

    seed: int = 0
    max_nodes: int = 2_000_000
    max_degree: int = 512
    reduce_degree: int = 10
    sizes: tuple[int, ...] = (2, 3)
    order: int = 4
    trials: int = 10
    bound: int = 3


_ENV_FIELDS = {
    "NC_SEED": "seed",
    "NC_MAX_NODES": "max_nodes",
    "NC_MAX_DEGREE": "max_degree",
    "NC_REDUCE_DEGREE": "reduce_degree",
}


def load_settings(environ: Mapping[str, str] | None = None) -> Settings:
    """
    Build a Settings object from environment variables.

    Unset or empty variables keep their defaults.

    Args:
        environ: mapping to read from; defaults to os.environ

    Returns:
        Settings: the resolved settings

    Raises:
        ValueError: if a variable is set to something that is not an integer

    Examples:
        >>> load_settings({"NC_SEED": "7"}).seed
        7
        >>> load_settings({}).order
        4
    """
    environ = os.environ if environ is None else environ
    overrides = {}
    for name, field in _ENV_FIELDS.items():
        raw = environ.get(name, "").strip()
        if not raw:
            continue
        try:
            overrides[field] = int(raw)
        except ValueError:
            raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    return Settings(**overrides)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings, read once from the environment."""
    return load_settings()
