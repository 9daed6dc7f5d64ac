"""CSI trace files: CSV records with a JSON header block in # comments.

Layout:
    # {"format": "csi-trace", "version": 1, "sample_rate_hz": ..., "subcarriers": [...]}
    k,t_s,re000,im000,re001,im001,...
    0,0.0,1.0,-0.25,...

One record per frame: integer frame index, timestamp in seconds, then one
(real, imaginary) pair per grid position in grid order. The header carries
the grid definition (preamble field tag, physical subcarrier index, center
frequency for every column pair). Floats are written with repr so traces
round-trip bit-exactly and identical runs produce identical bytes.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, TraceFormatError
from .grid import SubcarrierGrid
from .simulate import CsiFrame, frames_to_matrix

FORMAT_NAME = "csi-trace"
FORMAT_VERSION = 1


def write_trace(
    path: str | Path,
    frames: list[CsiFrame],
    sample_rate_hz: float,
    grid: SubcarrierGrid | None = None,
) -> None:
    grid = grid or frames[0].grid
    if grid is None:
        raise ConfigurationError("a grid is required to write a trace")
    matrix = frames_to_matrix(frames)
    if matrix.shape[0] != grid.count:
        raise ConfigurationError("frame length does not match the grid")
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "sample_rate_hz": sample_rate_hz,
        "subcarriers": [
            {
                "field": grid.field_tag[m],
                "physical_index": int(grid.physical_index[m]),
                "center_frequency_hz": float(grid.center_frequency_hz[m]),
            }
            for m in range(grid.count)
        ],
    }
    columns = ["k", "t_s"]
    for m in range(grid.count):
        columns += [f"re{m:03d}", f"im{m:03d}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(columns) + "\n")
        for k, frame in enumerate(frames):
            cells = [str(frame.index), repr(float(frame.time_s))]
            for v in matrix[:, k]:
                cells.append(repr(float(v.real)))
                cells.append(repr(float(v.imag)))
            fh.write(",".join(cells) + "\n")


def read_trace(path: str | Path) -> tuple[list[CsiFrame], float, SubcarrierGrid]:
    """Parse a trace file; returns (frames, sample_rate_hz, grid)."""
    comment_lines: list[str] = []
    body_lines: list[str] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#"):
                    if not body_lines:
                        comment_lines.append(line[1:].strip())
                else:
                    body_lines.append(line)
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace: {exc}") from exc
    if not comment_lines:
        raise TraceFormatError("missing JSON header block")
    try:
        header = json.loads("\n".join(comment_lines))
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"header is not valid JSON: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise TraceFormatError("not a csi-trace file")
    if header.get("version") != FORMAT_VERSION:
        raise TraceFormatError(f"unsupported trace version {header.get('version')!r}")
    subcarriers = header.get("subcarriers")
    if not subcarriers:
        raise TraceFormatError("header lists no subcarriers")
    try:
        grid = SubcarrierGrid(
            field_tag=tuple(s["field"] for s in subcarriers),
            physical_index=np.array([s["physical_index"] for s in subcarriers]),
            center_frequency_hz=np.array(
                [s["center_frequency_hz"] for s in subcarriers]
            ),
        )
        sample_rate = float(header["sample_rate_hz"])
    except (KeyError, TypeError, ConfigurationError) as exc:
        raise TraceFormatError(f"bad grid definition: {exc}") from exc

    if not body_lines:
        raise TraceFormatError("trace has no data rows")
    expected_cols = 2 + 2 * grid.count
    first_fields = body_lines[0].strip().split(",")
    if first_fields[:2] != ["k", "t_s"] or len(first_fields) != expected_cols:
        raise TraceFormatError("column header does not match the grid")
    try:
        data = np.loadtxt(
            io.StringIO("".join(body_lines[1:])), delimiter=",", ndmin=2
        )
    except ValueError as exc:
        raise TraceFormatError(f"malformed data row: {exc}") from exc
    if data.shape[1] != expected_cols:
        raise TraceFormatError(
            f"rows have {data.shape[1]} columns, expected {expected_cols}"
        )
    if not np.all(np.isfinite(data)):
        raise TraceFormatError("trace contains non-finite values")
    values = data[:, 2::2] + 1j * data[:, 3::2]
    return (
        [
            CsiFrame(
                index=int(data[k, 0]),
                time_s=float(data[k, 1]),
                values=values[k],
                grid=grid,
            )
            for k in range(data.shape[0])
        ],
        sample_rate,
        grid,
    )
