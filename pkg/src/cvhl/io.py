"""File helpers: atomic writes, density-matrix JSON, Wigner grid CSV."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .tomography.density import DensityMatrix, _jsonable


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(_jsonable(obj), indent=2) + "\n")


def read_json(path):
    with open(os.fspath(path), encoding="utf-8") as fh:
        return json.load(fh)


def write_density_matrix(path, rho: DensityMatrix):
    write_json(path, rho.to_json_dict())


def read_density_matrix(path) -> DensityMatrix:
    return DensityMatrix.from_json_dict(read_json(path))


def format_wigner_csv(grid) -> str:
    lines = [
        f"# x_min={grid.x[0]:.17g}",
        f"# x_max={grid.x[-1]:.17g}",
        f"# p_min={grid.p[0]:.17g}",
        f"# p_max={grid.p[-1]:.17g}",
        f"# step={grid.step:.17g}",
        "# rows=p ascending, columns=x ascending, canonical units (vacuum variance 1/2)",
    ]
    for row in grid.values:
        lines.append(",".join(format(v, ".10g") for v in row))
    return "\n".join(lines) + "\n"


def write_wigner_csv(path, grid):
    atomic_write_text(path, format_wigner_csv(grid))


def read_wigner_csv(path):
    meta = {}
    rows = []
    with open(os.fspath(path), encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition("=")
                if sep and key in ("x_min", "x_max", "p_min", "p_max", "step"):
                    meta[key] = float(value)
            elif line.strip():
                rows.append([float(v) for v in line.split(",")])
    return meta, np.array(rows)
