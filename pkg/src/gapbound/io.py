"""Text formats: edge lists, matrix dumps, CSV series and JSON reports.

All writers are byte-deterministic for identical inputs. Floats in matrix
dumps use 17 significant digits (lossless round trip); CSV cells use the
shortest exact decimal representation.
"""

from __future__ import annotations

import json

import numpy as np

from .generator import GeneratorMatrix, build_generator

__all__ = [
    "FileFormatError",
    "read_edge_list",
    "write_edge_list",
    "read_matrix",
    "write_matrix",
    "write_trajectory_csv",
    "write_histogram_csv",
    "write_scan_csv",
    "report_to_json",
    "SCAN_CSV_HEADER",
]

EDGE_LIST_MAGIC = "masterq v1"

SCAN_CSV_HEADER = (
    "family,M,replica,seed,alpha,min_V,mu2,ratio,sigma,g,s,s_star,"
    "min_abs_u,ergodicity,verdict,wall_ms"
)


class FileFormatError(ValueError):
    """Malformed input file; ``line`` carries the 1-based offending line."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _content_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def read_edge_list(path) -> GeneratorMatrix:
    """Read the ``masterq v1 M=<size>`` edge-list format (1-based indices)."""
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FileFormatError("empty file: missing header", line=1) from None
    parts = header.split()
    if len(parts) != 3 or " ".join(parts[:2]) != EDGE_LIST_MAGIC or not parts[2].startswith("M="):
        raise FileFormatError(f"expected header '{EDGE_LIST_MAGIC} M=<size>', got {header!r}", line=lineno)
    try:
        M = int(parts[2][2:])
    except ValueError:
        raise FileFormatError(f"bad size in header: {parts[2]!r}", line=lineno) from None
    rates = []
    for lineno, text in lines:
        fields = text.split()
        if len(fields) != 3:
            raise FileFormatError(f"expected 'from to rate', got {text!r}", line=lineno)
        try:
            rates.append((int(fields[0]), int(fields[1]), float(fields[2])))
        except ValueError:
            raise FileFormatError(f"unparsable rate line {text!r}", line=lineno) from None
    try:
        return build_generator(M, rates)
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc


def write_edge_list(path, L: GeneratorMatrix) -> None:
    M = L.size
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{EDGE_LIST_MAGIC} M={M}\n")
        for n in range(M):
            for m in range(M):
                if m != n and L.matrix[m, n] != 0:
                    fh.write(f"{n + 1} {m + 1} {float(-L.matrix[m, n])!r}\n")


def read_matrix(path) -> np.ndarray:
    """Read the matrix dump: a header line ``M`` then M rows of M entries."""
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FileFormatError("empty file: missing size header", line=1) from None
    try:
        M = int(header)
    except ValueError:
        raise FileFormatError(f"expected matrix size, got {header!r}", line=lineno) from None
    if M < 1:
        raise FileFormatError(f"matrix size must be positive, got {M}", line=lineno)
    rows = []
    for lineno, text in lines:
        fields = text.split()
        if len(fields) != M:
            raise FileFormatError(f"expected {M} entries, got {len(fields)}", line=lineno)
        try:
            rows.append([float(x) for x in fields])
        except ValueError:
            raise FileFormatError(f"unparsable entry in row {text!r}", line=lineno) from None
    if len(rows) != M:
        raise FileFormatError(f"expected {M} rows, got {len(rows)}")
    return np.array(rows)


def write_matrix(path, matrix) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]}\n")
        for row in matrix:
            fh.write(" ".join(f"{x:.16e}" for x in row) + "\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_trajectory_csv(path, trajectory) -> None:
    M = trajectory.probabilities.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"p_{n + 1}" for n in range(M)) + ",d2,dTV\n")
        for j, t in enumerate(trajectory.times):
            cells = [t, *trajectory.probabilities[j], trajectory.d2[j], trajectory.dtv[j]]
            fh.write(",".join(_cell(float(c)) for c in cells) + "\n")


def write_histogram_csv(path, histogram) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("state,count,frequency\n")
        for n, (count, freq) in enumerate(zip(histogram.counts, histogram.frequencies)):
            fh.write(f"{n + 1},{int(count)},{_cell(float(freq))}\n")


def write_scan_csv(path, rows) -> None:
    """Write scan rows; byte-identical for identical spec and master seed.

    The wall_ms column is emitted as 0 to keep the file reproducible; the
    measured per-row timings live on the ScanRow objects and in the logs.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCAN_CSV_HEADER + "\n")
        for r in rows:
            cells = [
                r.family, r.M, r.replica, r.seed,
                _cell(r.alpha), _cell(r.min_V), _cell(r.mu2), _cell(r.ratio),
                _cell(r.sigma), _cell(r.g), _cell(r.s), _cell(r.s_star),
                _cell(r.min_abs_u), r.ergodicity, r.verdict.replace(",", ";"), 0,
            ]
            fh.write(",".join(str(c) for c in cells) + "\n")


def report_to_json(report) -> str:
    """Serialize a GapBoundReport with the exact agreed key set."""
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=False) + "\n"
