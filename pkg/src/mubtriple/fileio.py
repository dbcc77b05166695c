"""On-disk formats: coincidence grids (CSV, JSON), wavefunctions (CSV),
Gaussian states (JSON). Writers are byte-stable for identical inputs."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import GridFormatError, InvalidInputError
from .expsim import CoincidenceGrid
from .frft import SampledWavefunction
from .gaussian import GaussianState

GRID_FORMAT = "mubtriple-coincidence-grid"
GRID_VERSION = 1
GRID_COLUMNS = ["w1_index", "w2_index", "position1_m", "position2_m", "counts"]
WAVEFUNCTION_COLUMNS = ["q", "re", "im"]


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _grid_header(grid: CoincidenceGrid) -> dict:
    return {
        "format": GRID_FORMAT,
        "version": GRID_VERSION,
        "plane": grid.plane,
        "theta1": grid.theta1,
        "theta2": grid.theta2,
        "d_m": grid.d,
        "n_bins_per_axis": grid.n,
        "meta": grid.meta,
    }


def grid_to_csv(grid: CoincidenceGrid) -> str:
    buf = io.StringIO()
    buf.write(f"# {GRID_FORMAT} v{GRID_VERSION}\n")
    buf.write("# header: " + json.dumps(_grid_header(grid), sort_keys=True) + "\n")
    buf.write(",".join(GRID_COLUMNS) + "\n")
    a1 = [repr(float(v)) for v in grid.axis1]
    a2 = [repr(float(v)) for v in grid.axis2]
    counts = grid.counts
    lines = []
    for i in range(grid.n):
        row = counts[i]
        for j in range(grid.n):
            lines.append(f"{i},{j},{a1[i]},{a2[j]},{row[j]}")
    buf.write("\n".join(lines))
    buf.write("\n")
    return buf.getvalue()


def grid_from_csv(text: str) -> CoincidenceGrid:
    """Parse :func:`grid_to_csv` output; errors carry line numbers."""
    header = None
    rows = []
    columns_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("header:"):
                try:
                    header = json.loads(body[len("header:"):])
                except json.JSONDecodeError as exc:
                    raise GridFormatError(f"bad header JSON: {exc}", lineno) from None
            continue
        if not columns_seen:
            if [c.strip() for c in line.split(",")] != GRID_COLUMNS:
                raise GridFormatError(
                    f"expected columns {','.join(GRID_COLUMNS)}", lineno)
            columns_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise GridFormatError(f"expected 5 fields, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            x1, x2 = float(parts[2]), float(parts[3])
            c = int(parts[4])
        except ValueError as exc:
            raise GridFormatError(str(exc), lineno) from None
        if c < 0:
            raise GridFormatError("negative count", lineno)
        rows.append((lineno, i, j, x1, x2, c))
    if header is None:
        raise GridFormatError("missing '# header:' line")
    if not columns_seen:
        raise GridFormatError("missing column line")
    return _assemble(header, rows)


def _assemble(header, rows):
    try:
        n = int(header["n_bins_per_axis"])
        d = float(header["d_m"])
        theta1, theta2 = float(header["theta1"]), float(header["theta2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GridFormatError(f"incomplete header: {exc}") from None
    if len(rows) != n * n:
        raise GridFormatError(f"expected {n * n} data rows, found {len(rows)}")
    counts = np.zeros((n, n), dtype=np.int64)
    axis1 = np.full(n, np.nan)
    axis2 = np.full(n, np.nan)
    seen = np.zeros((n, n), dtype=bool)
    for lineno, i, j, x1, x2, c in rows:
        if not (0 <= i < n and 0 <= j < n):
            raise GridFormatError(f"index ({i}, {j}) outside {n}x{n} grid", lineno)
        if seen[i, j]:
            raise GridFormatError(f"duplicate cell ({i}, {j})", lineno)
        for axis, k, x in ((axis1, i, x1), (axis2, j, x2)):
            if math.isnan(axis[k]):
                axis[k] = x
            elif axis[k] != x:
                raise GridFormatError(f"inconsistent position for index {k}", lineno)
        seen[i, j] = True
        counts[i, j] = c
    try:
        return CoincidenceGrid(counts, axis1, axis2, d, theta1, theta2,
                               header.get("plane", ""), header.get("meta", {}))
    except InvalidInputError as exc:
        raise GridFormatError(str(exc)) from None


def grid_to_json(grid: CoincidenceGrid) -> str:
    doc = _grid_header(grid)
    doc["axis1_m"] = grid.axis1.tolist()
    doc["axis2_m"] = grid.axis2.tolist()
    doc["counts"] = grid.counts.tolist()
    return json.dumps(doc, sort_keys=True) + "\n"


def grid_from_json(text: str) -> CoincidenceGrid:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GridFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if doc.get("format") != GRID_FORMAT:
        raise GridFormatError("not a coincidence-grid document")
    try:
        return CoincidenceGrid(doc["counts"], doc["axis1_m"], doc["axis2_m"],
                               float(doc["d_m"]), float(doc["theta1"]),
                               float(doc["theta2"]), doc.get("plane", ""),
                               doc.get("meta", {}))
    except KeyError as exc:
        raise GridFormatError(f"missing field {exc}") from None
    except InvalidInputError as exc:
        raise GridFormatError(str(exc)) from None


def write_grid(grid: CoincidenceGrid, path) -> None:
    path = Path(path)
    text = grid_to_json(grid) if path.suffix == ".json" else grid_to_csv(grid)
    atomic_write_text(path, text)


def read_grid(path) -> CoincidenceGrid:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return grid_from_json(text)
    return grid_from_csv(text)


def wavefunction_to_csv(psi: SampledWavefunction) -> str:
    lines = [",".join(WAVEFUNCTION_COLUMNS)]
    for q, a in zip(psi.grid, psi.amplitudes):
        lines.append(f"{float(q)!r},{float(a.real)!r},{float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def wavefunction_from_csv(text: str, normalize: bool = False) -> SampledWavefunction:
    """Read (q, re, im) rows; the q column must be the centred uniform grid."""
    reader = csv.reader(io.StringIO(text))
    qs, amps = [], []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or row[0].startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in row] != WAVEFUNCTION_COLUMNS:
                raise GridFormatError("expected header q,re,im", lineno)
            header_seen = True
            continue
        if len(row) != 3:
            raise GridFormatError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            q, re_, im = (float(x) for x in row)
        except ValueError as exc:
            raise GridFormatError(str(exc), lineno) from None
        qs.append(q)
        amps.append(complex(re_, im))
    n = len(qs)
    if n < 2:
        raise GridFormatError("wavefunction needs at least two samples")
    q = np.array(qs)
    dq = q[n // 2 + 1] - q[n // 2]
    expected = (np.arange(n) - n // 2) * dq
    if not np.allclose(q, expected, rtol=0, atol=1e-9 * max(1.0, abs(q).max())):
        raise GridFormatError("q column is not a centred uniform grid (q_k = (k - n/2) dq)")
    a = np.array(amps)
    if normalize:
        a = a / math.sqrt(np.sum(np.abs(a) ** 2) * dq)
    try:
        return SampledWavefunction(a, dq)
    except InvalidInputError as exc:
        raise GridFormatError(str(exc)) from None


def read_state(path) -> GaussianState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GridFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict):
        raise InvalidInputError("state file must hold a JSON object")
    return GaussianState.from_dict(doc)


def write_state(state: GaussianState, path) -> None:
    atomic_write_text(path, dumps_json(state.to_dict()))
