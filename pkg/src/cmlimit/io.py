"""Deterministic CSV/JSON output with atomic placement."""
import csv
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def format_number(x):
    """17 significant digits for floats; integers verbatim; empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format_number(x)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json(str(k), indent, level + 1)}: {_json(v, indent, level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_json(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent=2):
    """JSON with sorted keys and floats at 17 significant digits."""
    return _json(obj, indent, 0) + "\n"


class OutputStage:
    """Collect output files in a scratch directory; move them into place on commit.

    Nothing appears in ``out_dir`` unless :meth:`commit` runs, so an aborted
    run leaves no partial files behind.
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self._tmp = None
        self.files = []

    def __enter__(self):
        self._tmp = Path(tempfile.mkdtemp(prefix=".cmlimit-"))
        return self

    def __exit__(self, exc_type, exc, tb):
        if self._tmp is not None:
            shutil.rmtree(self._tmp, ignore_errors=True)
        return False

    def path(self, name):
        self.files.append(name)
        return self._tmp / name

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_number(v) if not isinstance(v, str) else v for v in row])

    def write_json(self, name, obj):
        self.path(name).write_text(dumps_json(obj))

    def commit(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name in self.files:
            src = self._tmp / name
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.out_dir)
            os.close(fd)
            shutil.copyfile(src, tmp)
            os.replace(tmp, self.out_dir / name)
        return [self.out_dir / name for name in self.files]
