"""Run configuration: one TOML file, overridable by CLI flags.

Example:

    version = "v1"
    inventory = "data/inventory_v1.tsv"
    corrections = "data/corrections.tsv"
    output_dir = "out"
    run_id = "run1"
    models = ["SD1-4", "SD2", "SD2-1", "AD"]
    languages = ["es", "ja", "zh"]
    n = 9
    k = 10
    seed = 17
    ci_level = 0.95
    endpoint = "http://localhost:8081"

    [stores]
    text = "stores/text.jsonl"
    [stores.images]
    "SD1-4" = "stores/images_sd14.jsonl"

    [templates]
    default = "a picture of a {}"
    ja = "{}の写真"

    [validation]
    blocklist = ["history", "film", "jump"]

Relative paths are resolved against the config file's directory. The
``EMBEDDER_URL`` environment variable overrides ``endpoint``; explicit CLI
flags override everything.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InputError
from .inventory import DEFAULT_INTANGIBLE_BLOCKLIST


@dataclass
class RunConfig:
    inventory: Path | None = None
    corrections: Path | None = None
    version: str = "v1"
    text_store: Path | None = None
    image_stores: dict[str, Path] = field(default_factory=dict)
    endpoint: str | None = None
    models: list[str] = field(default_factory=list)
    languages: list[str] = field(default_factory=list)
    n: int = 9
    k: int = 10
    seed: int = 0
    output_dir: Path = Path("out")
    run_id: str = "run"
    ci_level: float = 0.95
    templates: dict[str, str] = field(default_factory=lambda: {"default": "a picture of a {}"})
    blocklist: frozenset[str] = DEFAULT_INTANGIBLE_BLOCKLIST

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InputError(f"population size n must be >= 1, got {self.n}")
        if self.k < 1:
            raise InputError(f"pseudocorrection count k must be >= 1, got {self.k}")
        if not 0.0 < self.ci_level < 1.0:
            raise InputError(f"ci_level must be in (0, 1), got {self.ci_level}")

    def require_inventory(self) -> Path:
        if self.inventory is None:
            raise InputError("no inventory path configured (set 'inventory' or pass --inventory)")
        return self.inventory

    def require_corrections(self) -> Path:
        if self.corrections is None:
            raise InputError(
                "no corrections path configured (set 'corrections' or pass --corrections)"
            )
        return self.corrections

    def require_text_store(self) -> Path:
        if self.text_store is None:
            raise InputError("no text store configured (set [stores].text)")
        return self.text_store

    def require_image_store(self, model_id: str) -> Path:
        try:
            return self.image_stores[model_id]
        except KeyError:
            raise InputError(f"no image store configured for model {model_id!r}")

    def resolved_endpoint(self) -> str:
        url = os.environ.get("EMBEDDER_URL") or self.endpoint
        if not url:
            raise InputError("no provider endpoint (set 'endpoint' or EMBEDDER_URL)")
        return url.rstrip("/")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: invalid TOML: {exc}")

    base = path.parent

    def respath(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    stores = raw.get("stores", {})
    images = {m: respath(p) for m, p in stores.get("images", {}).items()}
    validation = raw.get("validation", {})

    cfg = RunConfig(
        inventory=respath(raw["inventory"]) if "inventory" in raw else None,
        corrections=respath(raw["corrections"]) if "corrections" in raw else None,
        version=raw.get("version", "v1"),
        text_store=respath(stores["text"]) if "text" in stores else None,
        image_stores=images,
        endpoint=raw.get("endpoint"),
        models=list(raw.get("models", [])),
        languages=list(raw.get("languages", [])),
        n=int(raw.get("n", 9)),
        k=int(raw.get("k", 10)),
        seed=int(raw.get("seed", 0)),
        output_dir=respath(raw.get("output_dir", "out")),
        run_id=str(raw.get("run_id", "run")),
        ci_level=float(raw.get("ci_level", 0.95)),
        templates={**{"default": "a picture of a {}"}, **raw.get("templates", {})},
        blocklist=frozenset(validation.get("blocklist", DEFAULT_INTANGIBLE_BLOCKLIST)),
    )
    return cfg
