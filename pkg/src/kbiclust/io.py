"""CSV readers/writers and run manifests."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .data import CovariateLayout, DataError, DataMatrix, build_matrix

FLOAT_FMT = "%.17g"


def read_matrix_csv(path, covariates: int | None = None, grid_width: int = 1,
                    header: bool = False) -> DataMatrix:
    """Read a comma-separated numeric matrix, one data row per line.

    Covariates occupy contiguous blocks of ``grid_width`` columns. Errors name
    the 1-based line and column of the offending cell.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                values = [float(cell) for cell in record]
            except ValueError:
                col = next(i for i, cell in enumerate(record, start=1) if not _is_float(cell))
                raise DataError(f"{path}: line {lineno}, column {col}: "
                                f"not a number: {record[col - 1]!r}") from None
            if rows and len(values) != len(rows[0][1]):
                raise DataError(f"{path}: line {lineno} has {len(values)} columns, "
                                f"expected {len(rows[0][1])}")
            rows.append((lineno, values))
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array([v for _, v in rows])
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"{path}: line {rows[r][0]}, column {c + 1}: non-finite value")
    if covariates is None:
        if values.shape[1] % grid_width:
            raise DataError(f"{values.shape[1]} columns do not split into blocks of {grid_width}")
        covariates = values.shape[1] // grid_width
    return build_matrix(values, CovariateLayout(covariates, grid_width))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def write_matrix_csv(path, matrix: DataMatrix | np.ndarray) -> None:
    values = matrix.values if isinstance(matrix, DataMatrix) else np.asarray(matrix)
    np.savetxt(path, values, delimiter=",", fmt=FLOAT_FMT)


def read_labels(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"label file not found: {path}")
    labels = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            labels.append(int(line))
        except ValueError:
            raise DataError(f"{path}: line {lineno}: not an integer label: {line!r}") from None
    return np.array(labels, dtype=np.intp)


def write_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def write_rows_csv(path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def versions() -> dict:
    import scipy

    return {"kbiclust": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(out_dir, command: str, args: dict, resolved: dict, outputs: list,
                   timings: dict) -> Path:
    """Serialize a run manifest next to the outputs it describes."""
    path = Path(out_dir) / "manifest.json"
    manifest = {
        "command": command,
        "args": args,
        "resolved": resolved,
        "seed": args.get("seed"),
        "versions": versions(),
        "timings": timings,
        "outputs": sorted(str(Path(p).name) for p in outputs),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
