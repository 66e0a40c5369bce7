"""Bundled parameter sets shipped with the package."""

from __future__ import annotations

from importlib import resources

from .configio import RunConfig, parse_config

TABLE_PRESETS = {
    # name -> (Mobius-only search, full two-piece search)
    "half-half": ("conrey-half", "thm1"),
    "four-sevenths": ("conrey-four-sevenths", "thm2"),
}


def preset_names() -> list[str]:
    root = resources.files(__package__) / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    path = resources.files(__package__) / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def load_preset(name: str) -> RunConfig:
    return parse_config(preset_text(name))
