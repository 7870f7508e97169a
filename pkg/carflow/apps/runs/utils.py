"""
Utility functions for emitting run outputs and recording runs
"""

import csv
import logging
from enum import Enum

from django.conf import settings

from .models import EmittedFile, RunStatus, SimulationRun

logger = logging.getLogger(__name__)


def fmt(value):
    """Locale independent CSV cell"""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(path, header, rows, manifest=None):
    """Header row first, then rows; registers the file with the manifest"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(value) for value in row])
    if manifest is not None:
        manifest.add(path)
    return path


def write_text(path, text, manifest=None):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    if manifest is not None:
        manifest.add(path)
    return path


def record_run(manifest):
    """Persist a manifest as SimulationRun/EmittedFile rows"""
    if not getattr(settings, "CARFLOW_RECORD_RUNS", True):
        return None
    try:
        run = SimulationRun.objects.create(
            command=manifest.command,
            scenario_path=manifest.scenario_path or "",
            seed=manifest.seed or 0,
            output_dir=str(manifest.output_dir),
            status=manifest.status,
            details=manifest.details,
        )
        EmittedFile.objects.bulk_create(
            [
                EmittedFile(run=run, name=entry.name, sha256=entry.sha256, size=entry.size)
                for entry in manifest.files
            ]
        )
        return run

    except Exception as e:
        logger.error(f"Error recording {manifest.command} run: {e}")
        return None


def record_failure(manifest, error):
    manifest.status = RunStatus.FAILED.value
    manifest.details = {**manifest.details, "error": str(error)}
    return record_run(manifest)
