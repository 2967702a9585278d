"""Test objects: the Shepp-Logan head and a piecewise constant schlieren target."""

import numpy as np

__all__ = ["shepp_logan", "piecewise_constant_inclusions", "SHEPP_LOGAN_ELLIPSES"]

# (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

_MODIFIED_INTENSITIES = (1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1)


def shepp_logan(n, modified=False):
    """``n x n`` Shepp-Logan phantom clipped to ``[0, 1]``.

    Row 0 is the top of the head. ``modified=True`` uses the higher contrast
    intensity table.
    """
    if n < 16:
        raise ValueError("phantom grid must be at least 16 x 16")
    ax = (np.arange(n) - (n - 1) / 2.0) / ((n - 1) / 2.0)
    x, y = np.meshgrid(ax, ax[::-1])
    img = np.zeros((n, n))
    for k, (val, a, b, x0, y0, phi) in enumerate(SHEPP_LOGAN_ELLIPSES):
        if modified:
            val = _MODIFIED_INTENSITIES[k]
        c, s = np.cos(np.deg2rad(phi)), np.sin(np.deg2rad(phi))
        dx, dy = x - x0, y - y0
        inside = ((dx * c + dy * s) / a) ** 2 + ((dy * c - dx * s) / b) ** 2 <= 1.0
        img[inside] += val
    return np.clip(img, 0.0, 1.0)


def piecewise_constant_inclusions(n):
    """Two constant inclusions on the ``n x n`` node grid over ``[-1, 1]^2``.

    A disk of value 1 and a square of value 0.5, both well inside the domain
    so the object vanishes on the boundary. ``f[i, j] = f(x_j, y_i)``.
    """
    if n < 3:
        raise ValueError("grid needs at least 3 nodes per axis")
    ax = np.linspace(-1.0, 1.0, n)
    x, y = np.meshgrid(ax, ax)
    img = np.zeros((n, n))
    img[(x + 0.25) ** 2 + (y - 0.2) ** 2 <= 0.35 ** 2] = 1.0
    img[(np.abs(x - 0.35) <= 0.2) & (np.abs(y + 0.3) <= 0.2)] = 0.5
    return img
