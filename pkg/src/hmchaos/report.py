"""Table output for the experiment runner: CSV, JSON, and run manifests.

CSV is the primary format; JSON mirrors the same columns and rows with the
manifest embedded. Floats are rendered with repr (shortest round-trip), so
a re-run with the same configuration reproduces the bytes exactly.
"""

from __future__ import annotations

import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


def config_digest(config: dict) -> str:
    payload = json.dumps({k: str(v) for k, v in sorted(config.items())})
    return hashlib.sha256(payload.encode()).hexdigest()


def build_manifest(config: dict) -> dict:
    import numpy

    from . import __version__

    return {
        "config": {k: str(v) for k, v in sorted(config.items())},
        "config_sha256": config_digest(config),
        "seed": str(config.get("seed", "")),
        "package_version": __version__,
        "numpy_version": numpy.__version__,
    }


def _jsonable(value):
    if isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


_PLOT_Y_PREFERENCE = ("mean", "p_hat", "total_mass", "sigma2", "max_err")


def write_plot(out: str, columns: list[str], rows: list[tuple]) -> None:
    """Plain two-column plot file: first column vs the main estimate column."""
    y_index = next((columns.index(name) for name in _PLOT_Y_PREFERENCE
                    if name in columns), min(1, len(columns) - 1))
    text = "".join(f"{_cell(row[0])} {_cell(row[y_index])}\n" for row in rows)
    Path(out).write_text(text)


def write_table(out: str | None, fmt: str, columns: list[str], rows: list[tuple],
                manifest: dict) -> None:
    """Write one experiment table; CSV gets a sidecar manifest when given a path."""
    if fmt == "csv":
        text = ",".join(columns) + "\n"
        text += "".join(",".join(_cell(v) for v in row) + "\n" for row in rows)
        if out is None:
            sys.stdout.write(text)
        else:
            path = Path(out)
            path.write_text(text)
            sidecar = path.with_name(path.name + ".manifest.json")
            sidecar.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    elif fmt == "json":
        doc = {
            "manifest": manifest,
            "columns": columns,
            "rows": [[_jsonable(v) for v in row] for row in rows],
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if out is None:
            sys.stdout.write(text)
        else:
            Path(out).write_text(text)
    else:
        raise ValueError(f"unknown format {fmt!r}")
