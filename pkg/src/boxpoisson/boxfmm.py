"""Volume potential V f = int G(x, y) f(y) dy of a piecewise polynomial density on a
2:1 balanced quad-tree, with G = -log|x - y| / 2pi, evaluated with its gradient at all
leaf collocation nodes (the box code).

Far field: leaf multipoles, M2M, M2L (V list), P2L tables (X list into non-leaf boxes),
L2L, then per-leaf local expansions plus M2P from W-list boxes. Near field: precomputed
tables for adjacent leaves and for coarse X-list leaves.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expansions as ex
from .errors import PrecisionUnachievable
from .quadtree import REF_NODES, REF_WEIGHTS, QuadTree, fmm_lists, interpolate_tree, tensor_basis
from .tables import TABLE_PRECISION, build_near_tables

_INV2PI = 1.0 / (2 * np.pi)


@dataclass
class VolumeField:
    """Potential and gradient at the collocation nodes (rows indexed by box id)."""

    tree: QuadTree
    potential: np.ndarray  # (n_boxes, 16)
    gradient: np.ndarray  # (n_boxes, 16, 2)
    density: np.ndarray  # (n_boxes, 16)
    eps: float
    p: int
    f_l1: float
    local: np.ndarray | None = None  # (n_boxes, p+1) local expansions (far field Phi_j)
    multipole: np.ndarray | None = None
    w_tgt: np.ndarray | None = None
    w_src: np.ndarray | None = None

    def leaf_potential(self):
        return self.potential[self.tree.leaves()]

    def leaf_gradient(self):
        return self.gradient[self.tree.leaves()]


def _gauss_square(n, corner=(-0.5, -0.5), width=1.0, split=1):
    g, w = np.polynomial.legendre.leggauss(n)
    pts, wts = [], []
    h = width / split
    for i in range(split):
        for j in range(split):
            x = corner[0] + h * (i + 0.5 * (g + 1))
            y = corner[1] + h * (j + 0.5 * (g + 1))
            X, Y = np.meshgrid(x, y, indexing="ij")
            pts.append(np.stack([X.ravel(), Y.ravel()], -1))
            wts.append((0.25 * h * h * np.outer(w, w)).ravel())
    return np.concatenate(pts), np.concatenate(wts)


@lru_cache(maxsize=None)
def p2m_unit(p):
    """(16, p+1): multipole about the centre (scale = width = 1) of a unit box density."""
    y, w = _gauss_square(max(24, p // 2 + 4))
    B = tensor_basis(y + 0.5) * w[:, None]  # (nq, 16)
    z = y[:, 0] + 1j * y[:, 1]
    q = -_INV2PI * B  # per basis
    M = np.zeros((16, p + 1), complex)
    M[:, 0] = q.sum(0)
    zp = np.ones_like(z)
    for l in range(1, p + 1):
        zp = zp * z
        M[:, l] = -(q.T @ zp) / l
    return M


@lru_cache(maxsize=None)
def p2l_unit(ox, oy, p):
    """(16, p+1): local expansion about the centre of the unit box [0,1]^2 from the
    density on the width-2 box with corner (ox, oy); scale 1, no log(scale) term."""
    y, w = _gauss_square(24, (ox, oy), 2.0, split=2)
    B = tensor_basis((y - [ox, oy]) / 2.0) * w[:, None]
    q = -_INV2PI * B
    wz = (y[:, 0] - 0.5) + 1j * (y[:, 1] - 0.5)
    M = np.zeros((16, p + 1), complex)
    M[:, 0] = q.T @ np.log(-wz)
    ip = np.ones_like(wz)
    for l in range(1, p + 1):
        ip = ip / wz
        M[:, l] = -(q.T @ ip) / l
    return M


@lru_cache(maxsize=None)
def _l2p_unit(p):
    u = (REF_NODES[:, 0] - 0.5) + 1j * (REF_NODES[:, 1] - 0.5)
    E = u[None, :] ** np.arange(p + 1)[:, None]
    dE = np.zeros_like(E)
    dE[1:] = np.arange(1, p + 1)[:, None] * u[None, :] ** np.arange(p)[:, None]
    return E, dE


@lru_cache(maxsize=None)
def _m2p_unit(offx, offy, p):
    """Multipole of a half-width box whose centre is (offx, offy) source widths away
    from the target leaf centre, evaluated at the leaf nodes (scale = source width)."""
    u = 2 * (REF_NODES[:, 0] - 0.5) - offx + 1j * (2 * (REF_NODES[:, 1] - 0.5) - offy)
    k = np.arange(1, p + 1)[:, None]
    M = np.zeros((p + 1, 16), complex)
    dM = np.zeros((p + 1, 16), complex)
    M[0] = np.log(u)
    M[1:] = u[None, :] ** (-k)
    dM[0] = 1.0 / u
    dM[1:] = -k * u[None, :] ** (-k - 1)
    return M, dM


@lru_cache(maxsize=None)
def _translation_ops(p):
    m2m = [ex.m2m_operator(((cx - 0.5) + 1j * (cy - 0.5)) / 2, 0.5, p) for cy in (0, 1) for cx in (0, 1)]
    l2l = [ex.l2l_operator(((cx - 0.5) + 1j * (cy - 0.5)) / 2, 0.5, p) for cy in (0, 1) for cx in (0, 1)]
    return m2m, l2l


@lru_cache(maxsize=None)
def _m2l(dx, dy, p):
    return ex.m2l_operator(complex(dx, dy), p)


def _apply_near(pot, grad, tabs, tgt, src, keys, dens, h):
    """Table application grouped by configuration key (each target unique per key)."""
    code = (keys[:, 0] + 2) * 10000 + (keys[:, 1] + 50) * 100 + (keys[:, 2] + 50)
    for c in np.unique(code):
        m = np.flatnonzero(code == c)
        key = (int(c // 10000) - 2, int((c // 100) % 100) - 50, int(c % 100) - 50)
        tb = tabs.get(key)
        t, s = tgt[m], src[m]
        v = dens[s]
        hh = h[t]
        pot[t] += (hh**2)[:, None] * (v @ tb.matrix.T) - (hh**2 * np.log(hh) * _INV2PI * (v @ tb.log_correction))[:, None]
        grad[t, :, 0] += hh[:, None] * (v @ tb.gradient[0].T)
        grad[t, :, 1] += hh[:, None] * (v @ tb.gradient[1].T)


def volume_potential(tree: QuadTree, values=None, eps=1e-9, tables=None, keep_expansions=True) -> VolumeField:
    """Potential and gradient of the volume integral at every leaf collocation node.

    values: (n_leaves, 16) aligned with tree.leaves() (defaults to tree.leaf_values)."""
    if eps < TABLE_PRECISION:
        raise PrecisionUnachievable(f"eps_V = {eps:g} below table precision {TABLE_PRECISION:g}")
    tabs = tables if tables is not None else build_near_tables()
    leaves = tree.leaves()
    vals = tree.leaf_values if values is None else np.asarray(values, dtype=float)
    nb = tree.n_boxes
    dens = np.zeros((nb, 16))
    dens[leaves] = vals
    ids = np.arange(nb)
    h = tree.box_width(ids)
    p = ex.fmm_order(eps)
    L = fmm_lists(tree)
    pot = np.zeros((nb, 16))
    grad = np.zeros((nb, 16, 2))
    f_l1 = float(np.sum(h[leaves] ** 2 * (np.abs(vals) @ REF_WEIGHTS)))

    # upward pass
    mp = np.zeros((nb, p + 1), complex)
    mp[leaves] = (vals @ p2m_unit(p)) * (h[leaves] ** 2)[:, None]
    m2m, l2l = _translation_ops(p)
    for lev in range(tree.max_level, 0, -1):
        b = np.flatnonzero(tree.level == lev)
        slot = 2 * (tree.iy[b] & 1) + (tree.ix[b] & 1)
        for s in range(4):
            bs = b[slot == s]
            mp[tree.parent[bs]] += mp[bs] @ m2m[s]

    # downward pass
    loc = np.zeros((nb, p + 1), complex)
    for dx, dy in {(int(a), int(b)) for a, b in L.v_off}:
        m = np.flatnonzero((L.v_off[:, 0] == dx) & (L.v_off[:, 1] == dy))
        t, s = L.v_tgt[m], L.v_src[m]
        loc[t] += mp[s] @ _m2l(dx, dy, p)
        loc[t, 0] += mp[s, 0] * np.log(h[t])
    is_leaf = tree.is_leaf
    xl = is_leaf[L.x_tgt]
    # X list into non-leaf boxes: density of the coarse leaf straight into the local expansion
    xt, xs, xo = L.x_tgt[~xl], L.x_src[~xl], L.x_off[~xl]
    for ox, oy in {(int(a), int(b)) for a, b in xo}:
        m = np.flatnonzero((xo[:, 0] == ox) & (xo[:, 1] == oy))
        t, s = xt[m], xs[m]
        ht = h[t]
        v = dens[s]
        loc[t] += (v @ p2l_unit(ox, oy, p)) * (ht**2)[:, None]
        loc[t, 0] += ht**2 * np.log(ht) * (-_INV2PI) * (v @ (4.0 * REF_WEIGHTS))
    for lev in range(1, tree.max_level + 1):
        b = np.flatnonzero(tree.level == lev)
        slot = 2 * (tree.iy[b] & 1) + (tree.ix[b] & 1)
        for s in range(4):
            bs = b[slot == s]
            loc[bs] += loc[tree.parent[bs]] @ l2l[s]

    # far field at leaf nodes
    E, dE = _l2p_unit(p)
    pot[leaves] = (loc[leaves] @ E).real
    dphi = (loc[leaves] @ dE) / h[leaves][:, None]
    grad[leaves, :, 0] = dphi.real
    grad[leaves, :, 1] = -dphi.imag
    for ox2, oy2 in {(float(a), float(b)) for a, b in L.w_off}:
        m = np.flatnonzero((L.w_off[:, 0] == ox2) & (L.w_off[:, 1] == oy2))
        t, s = L.w_tgt[m], L.w_src[m]
        M, dM = _m2p_unit(ox2, oy2, p)
        hs = h[s]
        pot[t] += (mp[s] @ M).real + (mp[s, 0].real * np.log(hs))[:, None]
        dphi = (mp[s] @ dM) / hs[:, None]
        grad[t, :, 0] += dphi.real
        grad[t, :, 1] -= dphi.imag

    # near field
    ukeys = np.concatenate([L.u_dl[:, None], L.u_off], 1)
    _apply_near(pot, grad, tabs, L.u_tgt, L.u_src, ukeys, dens, h)
    xt, xs, xo = L.x_tgt[xl], L.x_src[xl], L.x_off[xl]
    xkeys = np.concatenate([np.full((len(xt), 1), -1), xo], 1)
    _apply_near(pot, grad, tabs, xt, xs, xkeys, dens, h)

    field = VolumeField(tree, pot, grad, dens, eps, p, f_l1)
    if keep_expansions:
        field.local, field.multipole = loc, mp
        field.w_tgt, field.w_src = L.w_tgt, L.w_src
    return field


def eval_field(field: VolumeField, points):
    """Interpolated potential (n,) and gradient (n, 2) at arbitrary points of the box."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    pot = interpolate_tree(field.tree, field.potential, pts)
    grad = interpolate_tree(field.tree, field.gradient, pts)
    return pot, grad


def far_field(field: VolumeField, leaf: int, points):
    """Phi_j: the leaf's local expansion plus its W-list multipoles at given points."""
    tree = field.tree
    z = np.asarray(points, dtype=float)
    z = z[:, 0] + 1j * z[:, 1]
    c = tree.box_center(leaf)
    h = tree.box_width(leaf)
    u = (z - (c[0] + 1j * c[1])) / h
    val = np.polyval(field.local[leaf][::-1], u).real
    for s in field.w_src[field.w_tgt == leaf]:
        cs = tree.box_center(s)
        hs = tree.box_width(s)
        us = (z - (cs[0] + 1j * cs[1])) / hs
        a = field.multipole[s]
        val += (a[0] * (np.log(hs) + np.log(us)) + np.polyval(np.r_[a[1:][::-1], 0.0], 1.0 / us)).real
    return val
