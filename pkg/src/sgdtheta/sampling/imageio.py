"""Flat binary image export with a text sidecar, plus 8-bit previews.

``<name>.bin`` holds little-endian float64 values in row-major order;
``<name>.bin.hdr`` holds ``key = value`` lines (always ``shape``).
"""

from pathlib import Path

import numpy as np

__all__ = ["write_image", "read_image", "write_pgm"]


def _fmt(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt(x) for x in np.asarray(v).ravel().tolist())
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_image(path, image, **meta):
    path = Path(path)
    a = np.asarray(image, dtype="<f8")
    path.write_bytes(a.tobytes(order="C"))
    lines = [f"shape = {','.join(str(s) for s in a.shape)}", "dtype = float64-le"]
    lines += [f"{k} = {_fmt(v)}" for k, v in meta.items()]
    Path(str(path) + ".hdr").write_text("\n".join(lines) + "\n")


def read_image(path):
    """Return ``(array, header_dict)``."""
    path = Path(path)
    header = {}
    for line in Path(str(path) + ".hdr").read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            header[k.strip()] = v.strip()
    shape = tuple(int(s) for s in header["shape"].split(",") if s)
    a = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(shape)
    return a.copy(), header


def write_pgm(path, image, vmin=None, vmax=None):
    """Binary 8-bit PGM preview, linearly scaled to ``[vmin, vmax]``."""
    a = np.asarray(image, dtype=float)
    if a.ndim == 1:
        n = int(round(np.sqrt(a.size)))
        a = a.reshape(n, n)
    lo = a.min() if vmin is None else vmin
    hi = a.max() if vmax is None else vmax
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    b = np.clip(np.rint((a - lo) * scale), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{b.shape[1]} {b.shape[0]}\n255\n".encode())
        fh.write(b.tobytes())
