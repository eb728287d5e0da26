"""CSV record logs: one MaxRecord per n, header `n,max_abs,first_loc,occurrences,sign`."""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import pandas as pd

from qpochmax.common import MalformedRowError, MaxRecord, RecordLog

COLUMNS = ["n", "max_abs", "first_loc", "occurrences", "sign"]

# M_n has thousands of decimal digits well before n = 75,000.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


def _to_frame(records: Sequence[MaxRecord]) -> pd.DataFrame:
    rows = [
        [str(r.n), str(r.max_abs), str(r.first_loc), str(r.occurrences), str(r.sign_at_first)]
        for r in records
    ]
    return pd.DataFrame(rows, columns=COLUMNS)


def _parse_row(row: dict, line: int) -> MaxRecord:
    try:
        record = MaxRecord(
            n=int(row["n"]),
            max_abs=int(row["max_abs"]),
            first_loc=int(row["first_loc"]),
            occurrences=int(row["occurrences"]),
            sign_at_first=int(row["sign"]),
        )
    except (TypeError, ValueError) as e:
        raise MalformedRowError(f"Line {line}: {e}") from e
    if record.sign_at_first not in (-1, 1) or record.max_abs < 1 or record.occurrences < 1:
        raise MalformedRowError(f"Line {line}: impossible values {row}.")
    return record


def read_records(path: Path | str) -> RecordLog:
    """Parses a record log, rejecting malformed rows and gaps in n."""
    path = Path(path)
    if os.path.getsize(path) == 0:
        return RecordLog()
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != COLUMNS:
        raise MalformedRowError(
            f"'{path}' has columns {list(df.columns)}, expected {COLUMNS}."
        )
    # Line 1 is the header.
    records = [_parse_row(row, line) for line, row in enumerate(df.to_dict("records"), start=2)]
    return RecordLog(records)


def write_records(path: Path | str, log: RecordLog) -> None:
    """Replaces `path` with the whole log."""
    path = Path(path)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        _to_frame(log.records).to_csv(temp_path, index=False, lineterminator="\n")
        os.replace(temp_path, path)
    finally:
        if temp_path.exists():
            os.remove(temp_path)


def append_records(log: RecordLog, records: Sequence[MaxRecord], path: Path | str | None = None) -> None:
    """
    Appends the rows to the CSV at `path`, when given, then extends `log`.

    Raises RecordGapError before touching the file if the records do not
    continue the log's n range. A failed write leaves `log` unchanged.
    """
    if not records:
        return
    log.check_continues(records)
    if path is None:
        log.extend(records)
        return
    path = Path(path)
    write_header = not path.exists() or path.stat().st_size == 0
    _to_frame(records).to_csv(
        path, mode="a", header=write_header, index=False, lineterminator="\n"
    )
    log.extend(records)
    logging.debug(f"Appended {len(records)} records to '{path}' (last n={records[-1].n}).")


def truncate_records(path: Path | str, last_n: int) -> RecordLog:
    """Drops rows past `last_n`, used when resuming from an older checkpoint."""
    log = read_records(path)
    if log.last_n is not None and log.last_n > last_n:
        logging.warning(
            f"Record log '{path}' runs to n={log.last_n}; truncating to n={last_n}."
        )
        log = log.truncated(last_n)
        write_records(path, log)
    return log
