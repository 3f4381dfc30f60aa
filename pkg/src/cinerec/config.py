"""Application configuration: defaults, optional JSON file, flag overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .catalog import ColumnMapping
from .collaborative import KnnConfig, TrainConfig
from .errors import UsageError
from .fetcher import FetchConfig
from .hybrid import HybridConfig
from .ratings import DEFAULT_SCALE, RatingColumns, SplitSpec

DATA_DIR_ENV = "CINEREC_DATA_DIR"
DEFAULT_DATA_DIR = "cinerec-data"


@dataclass(frozen=True)
class AppConfig:
    data_dir: Path = Path(DEFAULT_DATA_DIR)
    cache_dir: Optional[Path] = None
    model_path: Optional[Path] = None
    movie_columns: ColumnMapping = ColumnMapping()
    rating_columns: RatingColumns = RatingColumns()
    rating_scale: tuple[float, float] = DEFAULT_SCALE
    like_threshold: float = 3.5
    train: TrainConfig = TrainConfig()
    split: SplitSpec = SplitSpec()
    hybrid: HybridConfig = HybridConfig()
    knn: KnnConfig = KnnConfig()
    fetch: FetchConfig = FetchConfig()

    @property
    def catalog_path(self) -> Path:
        return self.data_dir / "catalog.json"

    @property
    def ratings_path(self) -> Path:
        return self.data_dir / "ratings.csv"

    @property
    def trending_path(self) -> Path:
        return self.data_dir / "trending.json"

    @property
    def resolved_model_path(self) -> Path:
        return self.model_path or self.data_dir / "model.cinerec"

    @property
    def resolved_cache_dir(self) -> Path:
        return self.cache_dir or self.data_dir / "cache"


_SECTIONS = {
    "movie_columns": ColumnMapping,
    "rating_columns": RatingColumns,
    "train": TrainConfig,
    "split": SplitSpec,
    "hybrid": HybridConfig,
    "knn": KnnConfig,
    "fetch": FetchConfig,
}


def _section(cls, base, values: dict):
    if not isinstance(values, dict):
        raise UsageError(f"config section for {cls.__name__} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise UsageError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return replace(base, **values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def load_config(path: Optional[str] = None, env=os.environ) -> AppConfig:
    """Defaults, then ``CINEREC_DATA_DIR``, then the JSON file at ``path``."""
    cfg = AppConfig()
    if env.get(DATA_DIR_ENV):
        cfg = replace(cfg, data_dir=Path(env[DATA_DIR_ENV]))
    if not path:
        return cfg
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    updates = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            updates[key] = _section(_SECTIONS[key], getattr(cfg, key), value)
        elif key in ("data_dir", "cache_dir", "model_path"):
            updates[key] = Path(value) if value else None
        elif key == "rating_scale":
            lo, hi = value
            if not lo < hi:
                raise UsageError("rating_scale must be [min, max] with min < max")
            updates[key] = (float(lo), float(hi))
        elif key == "like_threshold":
            updates[key] = float(value)
        else:
            raise UsageError(f"unknown config key {key!r}")
    return replace(cfg, **updates)
