"""Near-field tables for the box code.

For a unit target box [0,1]^2 and a source box of width 2^-dl at integer offset
(in units of the finer width), the tables map the 16 source collocation values to
    potential  int G(x_t, y) f(y) dy        (16 x 16)
    gradient   int grad_x G(x_t, y) f(y) dy (2 x 16 x 16)
at the target collocation nodes, with G = -log|x - y| / 2pi.

Self interactions are computed semi-analytically: each tensor Lagrange basis function
is re-expanded in monomials about the target, the square is written as a fan of
triangles from the target to its edges, the radial integral is done in closed form and
the edge integral by graded Gauss-Legendre quadrature. Targets outside the source box
use tensor Gauss rules on sub-boxes graded toward the target.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .quadtree import CHEB_1D, REF_NODES, REF_WEIGHTS, tensor_basis

TABLE_VERSION = 1
TABLE_PRECISION = 1e-13
_MAGIC = b"BXTB"
_GX, _GW = np.polynomial.legendre.leggauss(20)


def _cheb_monomials():
    """Power coefficients (in u) of the 1D Lagrange basis on CHEB_1D: rows i, cols power."""
    V = np.vander(CHEB_1D, 4, increasing=True)
    return np.linalg.inv(V).T  # l_i(u) = sum_m C[i, m] u^m


_LCOEF = _cheb_monomials()


def _shifted_coeffs(alpha, beta):
    """Coefficients of l_i(alpha + beta v) in powers of v: (4 basis, 4 powers)."""
    out = np.zeros((4, 4))
    for i in range(4):
        poly = np.polynomial.Polynomial(_LCOEF[i])
        sub = poly(np.polynomial.Polynomial([alpha, beta]))
        c = sub.coef
        out[i, : len(c)] = c
    return out


def _edge_nodes(s0, pabs, length):
    """Graded Gauss nodes on [0, length] refined toward s0 on the scale pabs."""
    bps = [0.0, length]
    k = 0
    while True:
        d = pabs * (2.0**k - 1.0)
        added = False
        for b in (s0 - d, s0 + d):
            if 0.0 < b < length:
                bps.append(b)
                added = True
        if not added and (s0 - d <= 0.0 and s0 + d >= length):
            break
        k += 1
        if k > 80:
            break
    bps = np.unique(bps)
    a, b = bps[:-1], bps[1:]
    s = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * _GX
    w = (0.5 * (b - a))[:, None] * _GW
    return s.ravel(), w.ravel()


def monomial_integrals(x, corner, width):
    """int_S G(x,y) (y-x)^(a,b) dy and its x-gradient, a, b = 0..3, S the square."""
    c = np.asarray(corner, dtype=float)
    verts = [c, c + [width, 0], c + [width, width], c + [0, width]]
    pot = np.zeros((4, 4))
    grad = np.zeros((2, 4, 4))
    a = np.arange(4)
    n = a[:, None] + a[None, :]
    for e in range(4):
        A, B = verts[e], verts[(e + 1) % 4]
        tv = (B - A) / width
        Ax = A - x
        p = Ax[0] * tv[1] - Ax[1] * tv[0]
        if abs(p) < 1e-15 * width:
            continue
        s0 = -(Ax @ tv)
        s, w = _edge_nodes(s0, abs(p), width)
        dx = Ax[0] + s * tv[0]
        dy = Ax[1] + s * tv[1]
        R2 = dx * dx + dy * dy
        logR = 0.5 * np.log(R2)
        px = dx[:, None] ** a  # (q, 4)
        py = dy[:, None] ** a
        mono = px[:, :, None] * py[:, None, :]  # (q, a, b)
        radial = logR[:, None, None] / (n + 2) - 1.0 / (n + 2) ** 2
        pot += -(p / (2 * np.pi)) * np.einsum("q,qab->ab", w, mono * radial)
        gfac = (p / (2 * np.pi)) * w / R2
        gm = mono / (n + 1)
        grad[0] += np.einsum("q,qab->ab", gfac * dx, gm)
        grad[1] += np.einsum("q,qab->ab", gfac * dy, gm)
    return pot, grad


def config_geometry(dl, ox, oy):
    sw = 2.0 ** (-dl)
    unit = min(1.0, sw)
    return np.array([ox * unit, oy * unit]), sw


_QX, _QW = np.polynomial.legendre.leggauss(12)


def _graded_points(x, corner, width):
    """Tensor Gauss points on the square, boxes subdivided until their distance to x
    is at least their width (x must lie outside the square)."""
    pts, wts = [], []
    stack = [(np.asarray(corner, dtype=float), float(width))]
    ref = 0.5 * (_QX + 1)
    while stack:
        c, w = stack.pop()
        gap = np.maximum(np.maximum(c - x, x - (c + w)), 0.0)
        if np.hypot(*gap) >= w or w < 1e-12:
            X, Y = np.meshgrid(c[0] + w * ref, c[1] + w * ref, indexing="ij")
            pts.append(np.stack([X.ravel(), Y.ravel()], -1))
            wts.append((0.25 * w * w * np.outer(_QW, _QW)).ravel())
        else:
            h = 0.5 * w
            stack += [(c + [i * h, j * h], h) for i in (0, 1) for j in (0, 1)]
    return np.concatenate(pts), np.concatenate(wts)


def compute_table(dl, ox, oy):
    """(pot 16x16, grad 2x16x16) for the configuration on the unit target box."""
    corner, sw = config_geometry(dl, ox, oy)
    pot = np.zeros((16, 16))
    grad = np.zeros((2, 16, 16))
    self_box = (dl, ox, oy) == (0, 0, 0)
    for t, x in enumerate(REF_NODES):
        if self_box:
            # target inside the source: closed-form radial integrals about the target
            P, Gd = monomial_integrals(x, corner, sw)
            cx = _shifted_coeffs((x[0] - corner[0]) / sw, 1.0 / sw)
            cy = _shifted_coeffs((x[1] - corner[1]) / sw, 1.0 / sw)
            # source basis k = 4*j + i -> sum_ab cx[i,a] cy[j,b] M[a,b]
            pot[t] = np.einsum("ia,jb,ab->ji", cx, cy, P).reshape(16)
            for d in range(2):
                grad[d, t] = np.einsum("ia,jb,ab->ji", cx, cy, Gd[d]).reshape(16)
        else:
            y, w = _graded_points(x, corner, sw)
            B = tensor_basis((y - corner) / sw) * w[:, None]
            d = y - x
            r2 = np.sum(d * d, 1)
            pot[t] = (-np.log(r2) / (4 * np.pi)) @ B
            grad[:, t] = (d.T / (2 * np.pi * r2)) @ B
    return pot, grad


def standard_configs():
    """All (dl, ox, oy) near-field configurations of a 2:1 balanced tree."""
    out = [(0, dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    for ox in range(-1, 3):
        for oy in range(-1, 3):
            if not (ox in (0, 1) and oy in (0, 1)):
                out.append((1, ox, oy))
    for ox in range(-3, 3):
        for oy in range(-3, 3):
            if ox in (-1, 0) and oy in (-1, 0):
                continue  # would overlap the target
            out.append((-1, ox, oy))
    return out


@dataclass
class NearFieldTable:
    configuration_id: tuple
    matrix: np.ndarray
    gradient: np.ndarray
    log_correction: np.ndarray  # source basis integrals on the unit configuration


class NearTables:
    """Lazily filled set of near-field tables, optionally persisted to a binary cache."""

    def __init__(self, eps=TABLE_PRECISION, p_local=4):
        self.eps = eps
        self.p_local = p_local
        self.tables = {}

    def get(self, key):
        key = tuple(int(v) for v in key)
        if key not in self.tables:
            pot, grad = compute_table(*key)
            sw = 2.0 ** (-key[0])
            self.tables[key] = NearFieldTable(key, pot, grad, sw * sw * REF_WEIGHTS)
        return self.tables[key]

    def fill(self, keys=None):
        for k in standard_configs() if keys is None else keys:
            self.get(k)
        return self

    # ---- binary cache: header (magic, version, eps, p_local, count) + records
    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(_MAGIC + struct.pack("<IdII", TABLE_VERSION, self.eps, self.p_local, len(self.tables)))
            for key in sorted(self.tables):
                t = self.tables[key]
                fh.write(struct.pack("<iii", *key))
                fh.write(np.ascontiguousarray(t.matrix, "<f8").tobytes())
                fh.write(np.ascontiguousarray(t.gradient, "<f8").tobytes())
                fh.write(np.ascontiguousarray(t.log_correction, "<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != _MAGIC:
            raise ValueError("not a near-field table cache")
        version, eps, p_local, count = struct.unpack_from("<IdII", data, 4)
        if version != TABLE_VERSION:
            raise ValueError(f"table cache version {version} != {TABLE_VERSION}")
        obj = cls(eps, p_local)
        off = 4 + struct.calcsize("<IdII")
        for _ in range(count):
            key = struct.unpack_from("<iii", data, off)
            off += 12
            mat = np.frombuffer(data, "<f8", 256, off).reshape(16, 16).copy()
            off += 256 * 8
            grad = np.frombuffer(data, "<f8", 512, off).reshape(2, 16, 16).copy()
            off += 512 * 8
            lc = np.frombuffer(data, "<f8", 16, off).copy()
            off += 16 * 8
            obj.tables[tuple(key)] = NearFieldTable(tuple(key), mat, grad, lc)
        return obj


def default_cache_path():
    base = os.environ.get("BOXPOISSON_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "boxpoisson"))
    return os.path.join(base, f"near_tables_v{TABLE_VERSION}.bin")


_SHARED = None


def build_near_tables(eps=TABLE_PRECISION, p_local=4, cache_path=None, use_cache=True) -> NearTables:
    """Full standard table set; read from / written to the binary cache when possible."""
    global _SHARED
    if _SHARED is not None and cache_path is None:
        return _SHARED
    path = cache_path or default_cache_path()
    tabs = None
    if use_cache and os.path.exists(path):
        try:
            tabs = NearTables.load(path)
            if tabs.p_local != p_local or tabs.eps > eps:
                tabs = None
        except (ValueError, struct.error):
            tabs = None
    if tabs is None:
        tabs = NearTables(eps, p_local).fill()
        if use_cache:
            try:
                os.makedirs(os.path.dirname(path), exist_ok=True)
                tabs.save(path)
            except OSError:
                pass
    if cache_path is None:
        _SHARED = tabs
    return tabs
