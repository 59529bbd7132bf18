"""CSV, binary graymap and manifest writers."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path
from typing import Iterable

import numpy as np


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path: Path, rows: Iterable[dict], fields: list[str] | None = None) -> Path:
    rows = list(rows)
    if fields is None:
        fields = list(rows[0]) if rows else []
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r.get(f)) for f in fields])
    return path


def read_csv(path: Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_pgm(path: Path, img: np.ndarray) -> Path:
    """8-bit binary graymap (P5), row-major with the first row at the top."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("graymap needs a 2-D array")
    h, w = img.shape
    path = Path(path)
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())
    return path


def read_pgm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict[str, str]:
    import sympy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "sympy": sympy.__version__, "polyauto": __version__}


def write_manifest(out: Path, subcommand: str, config_hash: str, seed: int,
                   files: list[Path], params: dict) -> Path:
    """Manifest listing every artifact with its sha256.  No timestamps, so two
    equal runs give identical manifests."""
    out = Path(out)
    entry = {
        "subcommand": subcommand,
        "config_sha256": config_hash,
        "seed": seed,
        "params": params,
        "versions": versions(),
        "files": {Path(f).name: sha256_file(f) for f in sorted(files, key=lambda p: Path(p).name)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n")
    return path
