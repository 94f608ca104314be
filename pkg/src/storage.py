# ABOUTME: Text formats for masks, dense matrices, sweep tables and key=value reports
# ABOUTME: Pure format/parse functions plus async file helpers built on aiofiles

import io
import math
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import aiofiles
import numpy as np

from .errors import InputError
from .graphs import SampleMask, sample_mask
from .linalg import as_matrix

if TYPE_CHECKING:
    from .experiments.engine import DegreeSweepRecord, PhaseSweepRecord

SWEEP_HEADER = "rank,trials,successes,success_rate,mean_relative_error,mean_iterations"
DEGREE_HEADER = "degree,critical_rank,ratio"


def format_value(value) -> str:
    """
    Render one report value.

    Floats use 12 significant digits and always show a decimal point
    ("6.0", not "6"); booleans are lowercase; sequences are joined by ';'.
    """
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        text = format(value, ".12g")
        if not any(marker in text for marker in (".", "e")):
            text += ".0"
        return text
    if isinstance(value, (list, tuple)):
        return ";".join(format_value(v) if not isinstance(v, str) else v for v in value) or "none"
    return str(value)


def format_pairs(pairs: Iterable[tuple[str, object]]) -> str:
    """key=value lines, one per pair, LF-terminated."""
    return "".join(f"{key}={format_value(value)}\n" for key, value in pairs)


def format_mask(mask: SampleMask) -> str:
    """
    Canonical mask file: header `n_rows n_cols nnz`, then one 1-based `i j`
    line per sampled entry in (row, col) order.
    """
    lines = [f"{mask.n_rows} {mask.n_cols} {mask.m}"]
    lines.extend(f"{i + 1} {j + 1}" for i, j in zip(mask.rows.tolist(), mask.cols.tolist()))
    return "\n".join(lines) + "\n"


def _parse_ints(line: str, count: int, line_number: int) -> list[int]:
    fields = line.split()
    if len(fields) != count:
        raise InputError(f"Line {line_number}: expected {count} integers, got {len(fields)} field(s)")
    try:
        return [int(f) for f in fields]
    except ValueError as exc:
        raise InputError(f"Line {line_number}: {exc}") from exc


def parse_mask(text: str) -> SampleMask:
    """
    Read a mask file. Entry lines may come in any order; duplicates are rejected.

    Raises:
        InputError: On a malformed header or entry, an index out of range,
            a duplicate entry, or an entry count different from the header
    """
    lines = [(n, line) for n, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise InputError("Mask file is empty")

    header_number, header = lines[0]
    n_rows, n_cols, nnz = _parse_ints(header, 3, header_number)
    if n_rows < 1 or n_cols < 1:
        raise InputError(f"Mask dimensions must be positive, got {n_rows}x{n_cols}")

    entries = []
    for number, line in lines[1:]:
        i, j = _parse_ints(line, 2, number)
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise InputError(f"Line {number}: entry ({i}, {j}) outside {n_rows}x{n_cols}")
        entries.append((i - 1, j - 1))

    if len(entries) != nnz:
        raise InputError(f"Header declares {nnz} entries, found {len(entries)}")
    return sample_mask(entries, n_rows, n_cols)


def format_matrix(a) -> str:
    """Headerless CSV with round-trip precision."""
    matrix = as_matrix(a)
    return "".join(",".join(format(x, ".17g") for x in row) + "\n" for row in matrix.tolist())


def parse_matrix(text: str) -> np.ndarray:
    """
    Read a headerless numeric CSV.

    Raises:
        InputError: On a non-numeric field or rows of different lengths
    """
    if not text.strip():
        raise InputError("Matrix file is empty")
    try:
        rows = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"Malformed matrix CSV: {exc}") from exc
    return as_matrix(rows)


def format_sweep_csv(records: "Iterable[PhaseSweepRecord]") -> str:
    lines = [SWEEP_HEADER]
    for record in records:
        lines.append(
            ",".join(
                [
                    str(record.rank),
                    str(record.trials),
                    str(record.successes),
                    f"{record.success_rate:.6f}",
                    format_value(record.mean_relative_error),
                    format_value(record.mean_iterations),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def format_degree_csv(records: "Iterable[DegreeSweepRecord]", baseline: bool = False) -> str:
    """One row per mask; the baseline columns hold the random mask at matched m."""
    header = DEGREE_HEADER + (",baseline_critical_rank,baseline_ratio" if baseline else "")
    lines = [header]
    for record in records:
        fields = [format(record.degree, "g"), format_value(record.critical_rank), _format_ratio(record.ratio)]
        if baseline:
            fields += [format_value(record.baseline_critical_rank), _format_ratio(record.baseline_ratio)]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def _format_ratio(ratio: float | None) -> str:
    return "none" if ratio is None else f"{ratio:.6f}"


async def read_text(path: Path) -> str:
    """
    Raises:
        FileNotFoundError: If the file does not exist
        InputError: If the path cannot be read or is not UTF-8 text
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File '{path}' not found")
    try:
        async with aiofiles.open(path, "r", encoding="utf-8") as f:
            return await f.read()
    except UnicodeDecodeError as exc:
        raise InputError(f"File '{path}' is not UTF-8 text: {exc.reason} at byte {exc.start}") from exc
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise InputError(f"Cannot read '{path}': {exc.strerror or exc}") from exc


async def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8", newline="\n") as f:
        await f.write(text)


async def load_mask(path: Path) -> SampleMask:
    return parse_mask(await read_text(path))


async def save_mask(path: Path, mask: SampleMask) -> None:
    await write_text(path, format_mask(mask))


async def load_matrix(path: Path) -> np.ndarray:
    return parse_matrix(await read_text(path))


async def save_matrix(path: Path, a) -> None:
    await write_text(path, format_matrix(a))


async def save_sweep(path: Path, records: "Iterable[PhaseSweepRecord]") -> None:
    await write_text(path, format_sweep_csv(records))


async def save_degree_sweep(path: Path, records: "Iterable[DegreeSweepRecord]", baseline: bool = False) -> None:
    await write_text(path, format_degree_csv(records, baseline))
