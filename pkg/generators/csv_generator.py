#!/usr/bin/env python3
"""Versioned CSV writing shared by every generator."""
import csv
import logging
from dataclasses import dataclass
from numbers import Integral, Real
from pathlib import Path

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of one CSV family. Bump version when columns change."""
    name: str
    version: int
    columns: tuple  # ((column, unit), ...); unit "" for dimensionless

    def header(self):
        return [f"{col} [{unit}]" if unit else col for col, unit in self.columns]


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    schema: str
    version: int
    rows: int


MANIFEST_SCHEMA = CsvSchema("manifest", 1, (("file", ""), ("schema", ""), ("version", ""),
                                            ("rows", "")))


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, Integral)):
        return str(int(value))
    if isinstance(value, Real):
        return format(float(value), ".10g")
    raise TypeError(f"cannot write {type(value).__name__} to CSV")


def generate_csv(out_dir: Path, filename: str, schema: CsvSchema, rows) -> ManifestEntry:
    """Write rows under the schema header; returns the manifest entry."""
    path = Path(out_dir) / filename
    count = 0
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)  # RFC 4180: CRLF line endings, minimal quoting
        writer.writerow(schema.header())
        for row in rows:
            if len(row) != len(schema.columns):
                raise ValueError(f"{filename}: row has {len(row)} values, "
                                 f"schema '{schema.name}' has {len(schema.columns)}")
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug("Wrote %s (%d rows)", path, count)
    return ManifestEntry(file=filename, schema=schema.name, version=schema.version, rows=count)


def generate_manifest(out_dir: Path, entries) -> ManifestEntry:
    rows = [(e.file, e.schema, e.version, e.rows) for e in sorted(entries, key=lambda e: e.file)]
    entry = generate_csv(out_dir, MANIFEST_NAME, MANIFEST_SCHEMA, rows)
    logger.info("Wrote %d CSV files to %s", len(rows), out_dir)
    return entry
