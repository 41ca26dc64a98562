"""Report records and deterministic JSON output."""

import json
import os
import tempfile

import numpy as np

SCHEMA = "opsys-report/1"


def number(v):
    """JSON-safe float: non-finite values become their ``repr`` string."""
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else repr(v)


def check(name, value, verdict, bound=None, tolerance=None, **extra):
    out = {
        "check": name,
        "value": number(value),
        "bound": number(bound),
        "tolerance": number(tolerance),
        "verdict": bool(verdict),
    }
    out.update(extra)
    return out


def all_pass(obj):
    """True when every ``verdict`` found anywhere inside ``obj`` is true."""
    if isinstance(obj, dict):
        if obj.get("verdict") is False:
            return False
        return all(all_pass(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(all_pass(v) for v in obj)
    return True


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return number(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
