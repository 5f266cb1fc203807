import json
import os
import sys
import tempfile
from threading import Lock
from typing import Any, Iterable, Mapping, Optional, Sequence

from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
import numpy as np
import pandas as pd

from .grid import GridField, wavenumbers
from .lacunary import WaveTriple
from .reports import SweepResult

# output writing is serialized across sweep threads
_write_lock = Lock()

WAVE_COLUMNS = ["index", "kbar", "kprime", "kfull", "v1", "v2", "v3"]


def _write_atomic(path: str, text: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with _write_lock:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    return path


def _frame_text(frame: pd.DataFrame, header: Optional[str]) -> str:
    body = frame.to_csv(index=False, lineterminator="\n")
    return body if header is None else f"# {header}\n{body}"


def emit_csv(
    result: SweepResult, path: str, header: Optional[str] = None
) -> str:
    """Write the result table as UTF-8 CSV with LF line endings.

    ``header`` becomes a leading ``#`` comment line.
    """
    return _write_atomic(path, _frame_text(result.frame, header))


def emit_frame(frame: pd.DataFrame, path: str, header: Optional[str] = None) -> str:
    return _write_atomic(path, _frame_text(frame, header))


def _series(frame: pd.DataFrame, columns: Optional[Sequence[str]]):
    x = "r" if "r" in frame.columns and frame["r"].notna().any() else "t"
    if columns is not None:
        for col in columns:
            yield col, x, frame
    elif "rho10_besov" in frame.columns:
        for col in ("rho10_besov", "rho10_normalized"):
            if col in frame.columns:
                yield col, x, frame
    elif "implied_constant" in frame.columns:
        for name, group in frame.groupby("name", sort=True):
            yield name, x, group.rename(columns={"implied_constant": name})


def emit_plot(
    result: SweepResult,
    path: str,
    columns: Optional[Sequence[str]] = None,
    loglog: bool = True,
) -> str:
    """A standalone SVG line chart of the result table."""
    frame = result.frame
    with rc_context({"svg.hashsalt": "norminflate", "svg.fonttype": "path"}):
        fig = Figure(figsize=(6, 4))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        x_label = None
        if not frame.empty:
            for label, x, data in _series(frame, columns):
                data = data[[x, label]].dropna()
                if loglog:
                    data = data[(data[x] > 0) & (data[label] > 0)]
                if data.empty:
                    continue
                data = data.groupby(x)[label].max()
                ax.plot(data.index.to_numpy(), data.to_numpy(), marker="o", label=label)
                x_label = x
            if x_label is not None:
                if loglog:
                    ax.set_xscale("log")
                    ax.set_yscale("log")
                ax.set_xlabel(x_label)
                ax.legend(loc="best", fontsize="small")
        ax.set_title(result.name)
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with _write_lock:
            fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def write_resolved_config(values: Mapping[str, Any], path: str) -> str:
    text = json.dumps(dict(values), indent=2, sort_keys=True) + "\n"
    return _write_atomic(path, text)


def waves_frame(waves: Iterable[WaveTriple]) -> pd.DataFrame:
    rows = [
        {
            "index": w.index,
            # as text: frequencies outgrow int64
            "kbar": str(w.kbar),
            "kprime": " ".join(str(x) for x in w.kprime),
            "kfull": " ".join(str(x) for x in w.kfull),
            "v1": w.v[0],
            "v2": w.v[1],
            "v3": w.v[2],
        }
        for w in waves
    ]
    return pd.DataFrame(rows, columns=WAVE_COLUMNS)


def dump_snapshot(field: GridField, t: float, path: str) -> str:
    """Nonzero spectral coefficients of a grid field as CSV.

    The values are decimal text; the header notes the platform byte order
    only for provenance.
    """
    N, dim = field.N, field.dim
    k = wavenumbers(N).astype(int)
    comp, i1, i2, i3 = np.nonzero(field.coeffs)
    values = field.coeffs[comp, i1, i2, i3]
    frame = pd.DataFrame(
        {
            "component": comp,
            "k1": k[0][i1, i2, i3],
            "k2": k[1][i1, i2, i3],
            "k3": k[2][i1, i2, i3],
            "re": values.real,
            "im": values.imag,
        }
    )
    header = "\n".join(
        [
            "# norminflate snapshot",
            f"# N={N}",
            f"# t={t!r}",
            f"# dim={dim}",
            f"# byteorder={sys.byteorder}",
        ]
    )
    body = frame.to_csv(index=False, lineterminator="\n")
    return _write_atomic(path, f"{header}\n{body}")
