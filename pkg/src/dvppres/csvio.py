"""Deterministic CSV writers: '#' metadata lines, header row, %.*g numbers.

No wall-clock content goes into CSVs so reruns byte-reproduce them.
"""
from __future__ import annotations

import hashlib
import json
import os


def fmt(value, sig=9):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return "%.*g" % (sig, value)
    return str(value)


def write_csv(path, header, rows, meta=None, sig=9):
    """Write rows of mixed scalars; returns (n_rows, n_cols)."""
    lines = []
    for key, value in (meta or {}).items():
        lines.append("# %s: %s" % (key, value))
    lines.append(",".join(header))
    count = 0
    for row in rows:
        lines.append(",".join(fmt(v, sig) for v in row))
        count += 1
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return count, len(header)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Manifest:
    """Run manifest: config hash, versions, outputs with shape checks."""

    def __init__(self, config_hash, backend, version, timestamp):
        self.doc = {
            "config_sha256": config_hash,
            "package_version": version,
            "kernel_backend": backend,
            "timestamp": timestamp,   # excluded from determinism claims
            "outputs": {},
            "stages": {},
        }

    def add_output(self, path, rows, cols):
        self.doc["outputs"][os.path.basename(path)] = {"rows": rows, "cols": cols}

    def add_stage(self, name, summary):
        self.doc["stages"][name] = summary

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def verify_outputs(self, directory):
        """Each listed file exists and has the recorded data-row count."""
        problems = []
        for name, shape in self.doc["outputs"].items():
            path = os.path.join(directory, name)
            if not os.path.exists(path):
                problems.append("%s: missing" % name)
                continue
            with open(path, "r", encoding="utf-8") as fh:
                lines = [ln for ln in fh.read().splitlines()
                         if ln and not ln.startswith("#")]
            n_rows = max(0, len(lines) - 1)   # minus header
            if n_rows != shape["rows"]:
                problems.append("%s: %d rows recorded, %d found"
                                % (name, shape["rows"], n_rows))
        return problems
