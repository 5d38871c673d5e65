"""Builtin geometry and test problems with known exact solutions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import BoundaryGeometry, FourierCurve, Orientation, build_geometry

DEFAULT_BOX = ((-0.5, -0.5), 1.0)


def default_curves():
    outer = FourierCurve(0.25, {5: 0.02, 6: 0.01, 8: 0.01, 10: 0.01}, {3: 0.01}, orientation=Orientation.OUTER)
    inner = FourierCurve(0.05, {2: 0.005, 5: 0.005, 7: 0.005}, {3: 0.005}, orientation=Orientation.INNER)
    return [outer, inner]


_GEOM = {}


def default_geometry(panels="auto") -> BoundaryGeometry:
    """Multiply connected test domain in the box [-0.5, 0.5]^2 (shared instance per panel choice)."""
    key = str(panels)
    if key not in _GEOM:
        _GEOM[key] = build_geometry(default_curves(), panels, box=DEFAULT_BOX)
    return _GEOM[key]


@dataclass(frozen=True)
class Builtin:
    name: str
    u: Callable
    grad: Callable
    f: Callable  # Laplacian of u, smooth on the whole plane


def _xy(p):
    p = np.atleast_2d(p)
    return p[:, 0], p[:, 1]


def _u1(p):
    x, y = _xy(p)
    return np.sin(10 * (x + y)) + x**2 - 3 * y + 8


def _g1(p):
    x, y = _xy(p)
    c = 10 * np.cos(10 * (x + y))
    return np.stack([c + 2 * x, c - 3], -1)


def _f1(p):
    x, y = _xy(p)
    return -200 * np.sin(10 * (x + y)) + 2


def _u2(p):
    x, _ = _xy(p)
    return _u1(p) + np.exp(-500 * x**2)


def _g2(p):
    x, _ = _xy(p)
    g = _g1(p)
    g[:, 0] += -1000 * x * np.exp(-500 * x**2)
    return g


def _f2(p):
    x, _ = _xy(p)
    return _f1(p) + (-1000 + 1e6 * x**2) * np.exp(-500 * x**2)


def _uh(p):
    x, y = _xy(p)
    return x**3 - 3 * x * y**2


def _gh(p):
    x, y = _xy(p)
    return np.stack([3 * x**2 - 3 * y**2, -6 * x * y], -1)


def _fh(p):
    return np.zeros(len(np.atleast_2d(p)))


BUILTINS = {
    "example1": Builtin("example1", _u1, _g1, _f1),
    "example2": Builtin("example2", _u2, _g2, _f2),
    "custom-harmonic": Builtin("custom-harmonic", _uh, _gh, _fh),
}
