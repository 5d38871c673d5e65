"""Extension of the right-hand side f from the domain to the whole box.

continuous   f_e = w outside, w the bounded harmonic function with w = f on the
             boundary, represented as D sigma + W sigma (extension SKIE)
zero         f_e = 0 outside
smooth_user  f_e given globally by the caller
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import bie, qbx
from .geometry import BoundaryGeometry


class ExtensionMode(str, Enum):
    CONTINUOUS = "continuous"
    ZERO = "zero"
    SMOOTH_USER = "smooth_user"


@dataclass
class ExtendedDensity:
    f: Callable
    geom: BoundaryGeometry
    mode: ExtensionMode
    cache: qbx.FieldCache | None = None
    density: bie.LayerDensity | None = None
    f_global: Callable | None = None

    def __call__(self, points):
        return eval_extension(self, points)


def _call(f, pts):
    out = np.asarray(f(pts), dtype=float)
    if out.shape != (len(pts),):
        out = np.broadcast_to(out, (len(pts),)).copy()
    return out


def build_extension(f, geom: BoundaryGeometry, mode=ExtensionMode.CONTINUOUS, f_global=None, weights=None,
                    system=None, p=12, eps=1e-13) -> ExtendedDensity:
    """f: vectorized callable (n, 2) -> (n,) valid on the closed domain.

    smooth_user mode needs f_global, valid on the whole box. system may carry a factorized
    extension system to reuse across right-hand sides."""
    mode = ExtensionMode(mode)
    if mode == ExtensionMode.SMOOTH_USER:
        if f_global is None:
            raise ValueError("smooth_user extension needs f_global")
        return ExtendedDensity(f, geom, mode, f_global=f_global)
    if mode == ExtensionMode.ZERO:
        return ExtendedDensity(f, geom, mode)
    if system is None:
        system = bie.assemble_extension_system(geom, weights)
    rhs = _call(f, geom.nodes)
    sigma = bie.solve(system, rhs)
    cache = qbx.build_cache(geom, sigma, qbx.Side.EXTERIOR, p=p, eps=eps, gradient=False)
    return ExtendedDensity(f, geom, mode, cache, sigma)


def eval_extension(ext: ExtendedDensity, points, codes=None):
    """f_e at points of the box; codes (1 in, 0 out, 2 boundary) may be passed if known."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if ext.mode == ExtensionMode.SMOOTH_USER:
        return _call(ext.f_global, pts)
    if codes is None:
        codes, _, _ = ext.geom.classify(pts)
    out = np.zeros(len(pts))
    ins = codes != 0
    if np.any(ins):
        out[ins] = _call(ext.f, pts[ins])
    if ext.mode == ExtensionMode.CONTINUOUS and np.any(~ins):
        out[~ins] = qbx.eval(ext.cache, pts[~ins], grad=False, check_side=False).values
    return out


def sample_grid(ext: ExtendedDensity, n=201):
    """f_e on an n x n grid of cell centres covering the box (heat-map data); rows (x, y, f_e)."""
    corner, width = ext.geom.box
    s = (np.arange(n) + 0.5) / n * width
    X, Y = np.meshgrid(corner[0] + s, corner[1] + s)
    pts = np.stack([X.ravel(), Y.ravel()], -1)
    return np.column_stack([pts, eval_extension(ext, pts)])
