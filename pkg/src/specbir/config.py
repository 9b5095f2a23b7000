"""Run configuration: key:value files with command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

# Retrieval scopes follow the criterion when not set explicitly.
SCOPE_BY_CRITERION = {"BW": 10, "AL": 10, "BW+AL": 12}


@dataclass
class RunConfig:
    """All experiment knobs with their protocol defaults."""

    corpus_dir: str = "corpus"
    features_dir: str | None = None
    distmat_dir: str | None = None
    kinds: list[str] = field(default_factory=lambda: ["spectral"])
    classifiers: list[str] = field(default_factory=lambda: ["knn"])
    prototype_policies: list[str] = field(default_factory=lambda: ["online"])
    criteria: list[str] = field(default_factory=lambda: ["AL"])
    scope: int | None = None
    k: int = 7
    t_max: int = 5
    m: int = 5
    vca_runs: int = 20
    n_clusters: int = 10
    levels: int = 256
    seed: int = 0
    workers: int = 1
    # synth-only knobs
    n_categories: int = 3
    patches_per_category: list[int] = field(default_factory=lambda: [40, 40, 40])
    side: int = 16
    bands: int = 32
    noise_sigma: float = 0.0

    def scope_for(self, criterion: str) -> int:
        if self.scope is not None:
            return self.scope
        return SCOPE_BY_CRITERION[criterion]

    def resolved_features_dir(self) -> Path:
        if self.features_dir:
            return Path(self.features_dir)
        return Path(self.corpus_dir) / "features"

    def resolved_distmat_dir(self) -> Path:
        if self.distmat_dir:
            return Path(self.distmat_dir)
        return Path(self.corpus_dir)


_LIST_STR = {"kinds", "classifiers", "prototype_policies", "criteria"}
_LIST_INT = {"patches_per_category"}


def parse_config_file(path) -> dict:
    """Parse a ``key: value`` file; '#' starts a comment line."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key: value', got {raw!r}")
        key, text = (part.strip() for part in line.split(":", 1))
        values[key] = text
    return values


def _coerce(name: str, text: str, target_type):
    if name in _LIST_STR:
        return [part.strip() for part in text.split(",") if part.strip()]
    if name in _LIST_INT:
        return [int(part) for part in text.split(",") if part.strip()]
    if target_type in ("int", int) or target_type == "int | None":
        return int(text)
    if target_type in ("float", float):
        return float(text)
    return text


def build_config(config_path=None, **overrides) -> RunConfig:
    """Merge defaults, a config file and explicit overrides (strongest last)."""
    known = {f.name: f.type for f in fields(RunConfig)}
    merged: dict = {}
    if config_path is not None:
        for key, text in parse_config_file(config_path).items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                merged[key] = _coerce(key, text, known[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {text!r}") from exc
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
