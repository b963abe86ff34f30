"""Film-crew agent pipeline: environment catalog, script validation, and
replay-driven production runs backed by the C++ core."""

from pathlib import Path

from ._filmagent import (
    Environment,
    FilmagentError,
    apply_suggestions,
    estimate_durations,
    extract_json,
    load_environment,
    normalize_script,
    parse_script,
    produce_replay,
    render_storyboard,
    validate_script,
)

__all__ = [
    "Environment",
    "FilmagentError",
    "apply_suggestions",
    "data_path",
    "estimate_durations",
    "extract_json",
    "load_environment",
    "normalize_script",
    "parse_script",
    "produce_replay",
    "render_storyboard",
    "validate_script",
]


def data_path() -> Path:
    """Directory holding the shipped environment and prompt files, when the
    package was installed as a wheel."""
    return Path(__file__).resolve().parent / "data"
