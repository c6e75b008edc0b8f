"""Scenario files, bundled presets and scan execution."""
from importlib import resources

from .config import ConfigParseError, ScenarioConfig, load_config, loads, resolve
from .runner import RunOutcome, ScanError, run_scan


def preset_names() -> list[str]:
    files = resources.files(__name__).joinpath("presets").iterdir()
    return sorted(f.name[: -len(".yaml")] for f in files if f.name.endswith(".yaml"))


def load_preset(name: str) -> ScenarioConfig:
    path = resources.files(__name__).joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ConfigParseError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return loads(path.read_text(encoding="utf-8"), f"preset:{name}")


__all__ = [
    "ConfigParseError",
    "RunOutcome",
    "ScanError",
    "ScenarioConfig",
    "load_config",
    "load_preset",
    "loads",
    "preset_names",
    "resolve",
    "run_scan",
]
