"""
Artifact files: CSV tables and other text outputs, written atomically
"""

import csv
import io
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, Union

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '.12e'


def format_value(value) -> str:
    """Deterministic text for one CSV cell"""
    if isinstance(value, bool) or value is None:
        return '' if value is None else str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, 'dtype'):
        number = float(value)
        if math.isnan(number):
            return 'nan'
        if math.isinf(number):
            return 'inf' if number > 0 else '-inf'
        return format(number, FLOAT_FORMAT)
    return str(value)


def write_text(path: Union[str, Path], text: str) -> Path:
    """Write UTF-8 text with LF endings via a temporary file and a rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {path}")
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """CSV with a header row, LF line endings and `.12e` floats"""
    return write_text(path, csv_text(header, rows))
