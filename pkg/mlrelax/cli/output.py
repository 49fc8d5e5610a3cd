"""Deterministic CSV emission: fixed digits, '.' separator, '\\n' line endings."""
import csv
import io
from pathlib import Path

import click
from flask import current_app


def format_value(value, digits=None):
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    digits = digits or current_app.config['CSV_SIGNIFICANT_DIGITS']
    return f'{float(value):.{digits}g}'


def render_csv(header, rows, sort=True):
    """Render rows under header; rows are sorted on their leading columns unless sort is False."""
    rows = sorted(rows) if sort else list(rows)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def emit_csv(header, rows, out=None, sort=True):
    """Write the CSV to the file named by out, or to stdout."""
    text = render_csv(header, rows, sort=sort)
    if out is None or out == '-':
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(text)
    current_app.logger.info('Wrote %d rows to %s', text.count('\n') - 1, path)
