"""Dense matrix files: Matrix Market array format or headerless CSV."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.io

from .exceptions import ShapeMismatch

FORMATS = ("mtx", "csv")


def detect_format(path):
    """``"mtx"`` if the file starts with ``%`` (Matrix Market banner), else ``"csv"``."""
    with open(path, "rb") as fh:
        first = fh.read(1)
    return "mtx" if first == b"%" else "csv"


def read_matrix(path, fmt=None):
    """Read a dense matrix; returns ``(array, format)``."""
    fmt = fmt or detect_format(path)
    try:
        if fmt == "mtx":
            M = scipy.io.mmread(path)
            M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        else:
            M = np.loadtxt(path, delimiter=",", ndmin=2)
    except (ValueError, OSError) as exc:
        raise ShapeMismatch(f"cannot parse {path} as {fmt}: {exc}") from exc
    return np.asarray(M, dtype=float), fmt


def read_vector(path, fmt=None):
    M, _ = read_matrix(path, fmt)
    if 1 not in M.shape:
        raise ShapeMismatch(f"{path} holds a {M.shape} matrix, expected a vector")
    return M.ravel()


def _atomic_write(path, write):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_matrix(path, M, fmt="mtx"):
    """Write with 17 significant digits so values round-trip exactly."""
    M = np.atleast_2d(np.asarray(M))
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    integer = np.issubdtype(M.dtype, np.integer)
    if fmt == "mtx":
        def dump(p):
            # a file handle stops mmwrite from appending its own extension
            with open(p, "wb") as fh:
                scipy.io.mmwrite(fh, M, precision=17, symmetry="general")

        _atomic_write(path, dump)
    else:
        _atomic_write(path, lambda p: np.savetxt(p, M, delimiter=",", fmt="%d" if integer else "%.17g"))


def write_json(path, obj):
    def dump(p):
        with open(p, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=False, default=_json_default)
            fh.write("\n")

    _atomic_write(path, dump)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
