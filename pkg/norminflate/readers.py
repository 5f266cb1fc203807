import io
import json
import os
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, InvalidArgument
from .grid import GridField
from .utilities import detect_encoding


def load_config(path: str) -> Dict[str, Any]:
    """Read a JSON run configuration in whatever encoding it was saved."""
    if not os.path.isfile(path):
        raise ConfigError("File or path not found: {}".format(path))
    with open(path, "rb") as f:
        encoding = detect_encoding(f)
        f.seek(0)
        raw = f.read()
    try:
        values = json.loads(raw.decode(encoding or "utf-8"))
    except (UnicodeDecodeError, LookupError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return values


def _header(lines) -> Dict[str, str]:
    meta = {}
    for line in lines:
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("=")
        if sep:
            meta[key.strip()] = value.strip()
    return meta


def load_snapshot(path: str) -> Tuple[float, GridField]:
    """Read a field written by ``writers.dump_snapshot``."""
    if not os.path.isfile(path):
        raise InvalidArgument("File or path not found: {}".format(path))
    with open(path, encoding="utf-8") as f:
        text = f.read()
    meta = _header(text.splitlines())
    try:
        N, t, dim = int(meta["N"]), float(meta["t"]), int(meta["dim"])
    except (KeyError, ValueError) as e:
        raise InvalidArgument(f"Snapshot {path} has an incomplete header: {e}") from e

    df = pd.read_csv(io.StringIO(text), comment="#")
    coeffs = np.zeros((dim, N, N, N), dtype=complex)
    idx = (
        df["component"].to_numpy(dtype=int),
        df["k1"].to_numpy(dtype=int) % N,
        df["k2"].to_numpy(dtype=int) % N,
        df["k3"].to_numpy(dtype=int) % N,
    )
    coeffs[idx] = df["re"].to_numpy(dtype=float) + 1j * df["im"].to_numpy(dtype=float)
    return t, GridField(coeffs)
