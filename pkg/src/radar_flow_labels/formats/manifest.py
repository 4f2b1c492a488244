"""Run manifest: one ``manifest.json`` per output directory."""

from __future__ import annotations

from pathlib import Path

from pydantic import ValidationError

from ..exceptions import FrameFormatError
from ..models import RunManifest

MANIFEST_NAME = "manifest.json"


def write_manifest(manifest: RunManifest, output_dir: str | Path) -> Path:
    """Write (or replace) the manifest of ``output_dir``."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def read_manifest(output_dir: str | Path) -> RunManifest:
    path = Path(output_dir) / MANIFEST_NAME
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise FrameFormatError(f"missing manifest: {path}") from e
    except ValidationError as e:
        raise FrameFormatError(f"{path}: {e}") from e
