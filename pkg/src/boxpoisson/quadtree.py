"""Level-restricted adaptive quad-tree with 4x4 Chebyshev collocation grids on leaves.

Boxes are stored in flat arrays (level, integer position, parent, children) so that
list construction and point location are vectorized. Child slot q = 2*cy + cx.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import MaxLevelExceeded, PointOutsideLeaf

# first-kind Chebyshev nodes mapped to [0, 1]
CHEB_1D = np.sort(0.5 * (1.0 + np.cos((2 * np.arange(1, 5) - 1) * np.pi / 8)))


def lagrange_1d(t, nodes=CHEB_1D):
    """Lagrange basis values l_i(t) for the given nodes; t of any shape -> (..., n)."""
    t = np.asarray(t, dtype=float)[..., None]
    n = len(nodes)
    out = np.ones(t.shape[:-1] + (n,))
    for i in range(n):
        for m in range(n):
            if m != i:
                out[..., i] *= (t[..., 0] - nodes[m]) / (nodes[i] - nodes[m])
    return out


def _basis_integrals(nodes):
    g, w = np.polynomial.legendre.leggauss(8)
    t = 0.5 * (g + 1)
    return lagrange_1d(t, nodes).T @ (0.5 * w)


CHEB_W1 = _basis_integrals(CHEB_1D)
# collocation index k = 4*j + i  <->  (x = CHEB_1D[i], y = CHEB_1D[j])
REF_NODES = np.stack(np.meshgrid(CHEB_1D, CHEB_1D, indexing="xy"), -1).reshape(16, 2)
REF_WEIGHTS = np.outer(CHEB_W1, CHEB_W1).reshape(16)
PROBE_1D = np.sort(0.5 * (1.0 + np.cos((2 * np.arange(1, 9) - 1) * np.pi / 16)))
PROBE_NODES = np.stack(np.meshgrid(PROBE_1D, PROBE_1D, indexing="xy"), -1).reshape(64, 2)


def tensor_basis(ref_points):
    """(n, 2) reference coordinates in [0,1]^2 -> (n, 16) tensor Lagrange values."""
    ref_points = np.asarray(ref_points, dtype=float)
    lx = lagrange_1d(ref_points[:, 0])
    ly = lagrange_1d(ref_points[:, 1])
    return (ly[:, :, None] * lx[:, None, :]).reshape(len(ref_points), 16)


PROBE_INTERP = tensor_basis(PROBE_NODES)

_LSHIFT = 50
_XSHIFT = 25


def _key(level, ix, iy):
    return (np.asarray(level, np.int64) << _LSHIFT) | (np.asarray(ix, np.int64) << _XSHIFT) | np.asarray(iy, np.int64)


class QuadTree:
    """Quad-tree over the square [corner, corner + width]^2."""

    def __init__(self, corner, width):
        self.corner = np.asarray(corner, dtype=float).reshape(2)
        self.width = float(width)
        self.level = np.zeros(1, np.int64)
        self.ix = np.zeros(1, np.int64)
        self.iy = np.zeros(1, np.int64)
        self.parent = np.full(1, -1, np.int64)
        self.children = np.full((1, 4), -1, np.int64)
        self.leaf_values = None  # (n_leaves, 16) aligned with leaves(), optional
        self.boundary_flag = None  # (n_boxes,) bool, optional
        self._sorted = None

    # ---- basic queries
    @property
    def n_boxes(self):
        return len(self.level)

    @property
    def is_leaf(self):
        return self.children[:, 0] < 0

    def leaves(self):
        return np.flatnonzero(self.is_leaf)

    @property
    def max_level(self):
        return int(self.level.max())

    def box_width(self, ids):
        return self.width / 2.0 ** self.level[ids]

    def box_corner(self, ids):
        w = self.box_width(ids)
        return self.corner + np.stack([self.ix[ids] * w, self.iy[ids] * w], -1)

    def box_center(self, ids):
        return self.box_corner(ids) + 0.5 * self.box_width(ids)[..., None]

    def collocation_points(self, ids):
        """(n, 16, 2) collocation points of the given boxes."""
        ids = np.asarray(ids)
        return self.box_corner(ids)[:, None, :] + self.box_width(ids)[:, None, None] * REF_NODES

    def copy(self):
        t = QuadTree(self.corner, self.width)
        for name in ("level", "ix", "iy", "parent", "children"):
            setattr(t, name, getattr(self, name).copy())
        return t

    # ---- modification
    def split(self, ids):
        """Split the given leaves; returns (n, 4) new child ids."""
        ids = np.unique(np.asarray(ids, np.int64))
        if len(ids) == 0:
            return np.zeros((0, 4), np.int64)
        assert np.all(self.is_leaf[ids])
        n0 = self.n_boxes
        cx = np.array([0, 1, 0, 1])
        cy = np.array([0, 0, 1, 1])
        new = n0 + np.arange(4 * len(ids)).reshape(-1, 4)
        self.level = np.concatenate([self.level, np.repeat(self.level[ids] + 1, 4)])
        self.ix = np.concatenate([self.ix, (2 * self.ix[ids][:, None] + cx).ravel()])
        self.iy = np.concatenate([self.iy, (2 * self.iy[ids][:, None] + cy).ravel()])
        self.parent = np.concatenate([self.parent, np.repeat(ids, 4)])
        self.children = np.concatenate([self.children, np.full((4 * len(ids), 4), -1, np.int64)])
        self.children[ids] = new
        if self.boundary_flag is not None:
            self.boundary_flag = np.concatenate([self.boundary_flag, np.repeat(self.boundary_flag[ids], 4)])
        self.leaf_values = None
        self._sorted = None
        return new

    # ---- lookup
    def lookup(self, level, ix, iy):
        """Box id at integer position, or -1 when absent or out of range."""
        level = np.asarray(level, np.int64)
        ix = np.asarray(ix, np.int64)
        iy = np.asarray(iy, np.int64)
        if self._sorted is None:
            keys = _key(self.level, self.ix, self.iy)
            order = np.argsort(keys)
            self._sorted = (keys[order], order)
        skeys, order = self._sorted
        n = np.int64(1) << np.maximum(level, 0)
        valid = (level >= 0) & (ix >= 0) & (iy >= 0) & (ix < n) & (iy < n)
        k = _key(np.where(valid, level, 0), np.where(valid, ix, 0), np.where(valid, iy, 0))
        pos = np.clip(np.searchsorted(skeys, k), 0, len(skeys) - 1)
        found = valid & (skeys[pos] == k)
        return np.where(found, order[pos], -1)

    def locate(self, points):
        """Leaf id containing each point (-1 outside the root box)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - self.corner) / self.width
        out = np.full(len(pts), -1, np.int64)
        inside = np.all((u >= 0) & (u <= 1), axis=1)
        cur = np.zeros(int(inside.sum()), np.int64)
        uu = u[inside]
        active = np.arange(len(cur))
        leaf = self.is_leaf
        while len(active):
            b = cur[active]
            nl = ~leaf[b]
            active = active[nl]
            if not len(active):
                break
            b = cur[active]
            lev = self.level[b] + 1
            scale = (np.int64(1) << lev).astype(float)
            jx = np.minimum(np.floor(uu[active, 0] * scale).astype(np.int64), (np.int64(1) << lev) - 1)
            jy = np.minimum(np.floor(uu[active, 1] * scale).astype(np.int64), (np.int64(1) << lev) - 1)
            jx = np.clip(jx - 2 * self.ix[b], 0, 1)
            jy = np.clip(jy - 2 * self.iy[b], 0, 1)
            cur[active] = self.children[b, 2 * jy + jx]
        out[inside] = cur
        return out

    def covering_leaf(self, level, ix, iy):
        """Deepest existing box containing position (level, ix, iy) at or above that level."""
        level = np.asarray(level, np.int64).copy()
        ix = np.asarray(ix, np.int64).copy()
        iy = np.asarray(iy, np.int64).copy()
        res = self.lookup(level, ix, iy)
        miss = res < 0
        while np.any(miss):
            level[miss] -= 1
            ix[miss] >>= 1
            iy[miss] >>= 1
            res[miss] = self.lookup(level[miss], ix[miss], iy[miss])
            miss = (res < 0) & (level > 0)
        return res

    def leaf_areas(self):
        lv = self.leaves()
        return self.box_width(lv) ** 2


@dataclass
class LeafGrid:
    """Collocation points of one leaf, with optional values."""

    node_id: int
    corner: np.ndarray
    width: float
    values: np.ndarray | None = None

    @property
    def points(self):
        return self.corner + self.width * REF_NODES


def leaf_grid(tree: QuadTree, node_id: int, values=None) -> LeafGrid:
    return LeafGrid(int(node_id), tree.box_corner(node_id), float(tree.box_width(node_id)), values)


def interpolate_leaf(grid: LeafGrid, point, values=None, tol=1e-12):
    """Degree-3 tensor interpolant through the 16 collocation values, evaluated at `point`."""
    vals = grid.values if values is None else values
    p = np.atleast_2d(np.asarray(point, dtype=float))
    ref = (p - grid.corner) / grid.width
    if np.any(ref < -tol) or np.any(ref > 1 + tol):
        raise PointOutsideLeaf(f"point {p.tolist()} outside leaf {grid.node_id}")
    out = tensor_basis(ref) @ np.asarray(vals)
    return out[0] if np.ndim(point) == 1 else out


def interpolate_tree(tree: QuadTree, leaf_data, points):
    """Evaluate per-leaf interpolants at arbitrary points.

    leaf_data: (n_boxes, 16, ...) values indexed by box id (only leaf rows used).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lf = tree.locate(pts)
    if np.any(lf < 0):
        raise PointOutsideLeaf("point outside root box")
    ref = (pts - tree.box_corner(lf)) / tree.box_width(lf)[:, None]
    B = tensor_basis(np.clip(ref, 0.0, 1.0))
    vals = leaf_data[lf]
    return np.einsum("nk,nk...->n...", B, vals)


# ---------------------------------------------------------------- adjacency helpers
def boxes_adjacent(l1, i1, j1, l2, i2, j2):
    """Closed boxes touch but interiors are disjoint."""
    L = np.maximum(l1, l2)
    s1 = np.int64(1) << (L - l1)
    s2 = np.int64(1) << (L - l2)
    a1, b1 = i1 * s1, (i1 + 1) * s1
    a2, b2 = i2 * s2, (i2 + 1) * s2
    c1, d1 = j1 * s1, (j1 + 1) * s1
    c2, d2 = j2 * s2, (j2 + 1) * s2
    touch = (a1 <= b2) & (a2 <= b1) & (c1 <= d2) & (c2 <= d1)
    overlap = (a1 < b2) & (a2 < b1) & (c1 < d2) & (c2 < d1)
    return touch & ~overlap


def _tree_adjacent(tree, a, b):
    return boxes_adjacent(tree.level[a], tree.ix[a], tree.iy[a], tree.level[b], tree.ix[b], tree.iy[b])


def is_balanced(tree: QuadTree) -> bool:
    """Brute-force-free check: every non-leaf box has all in-range colleague positions present."""
    nl = np.flatnonzero(~tree.is_leaf)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == dy == 0:
                continue
            lev = tree.level[nl]
            x, y = tree.ix[nl] + dx, tree.iy[nl] + dy
            n = np.int64(1) << lev
            inr = (x >= 0) & (y >= 0) & (x < n) & (y < n)
            if np.any(tree.lookup(lev[inr], x[inr], y[inr]) < 0):
                return False
    return True


def balance_2to1(tree: QuadTree) -> QuadTree:
    """Refine (never coarsen) until adjacent leaves differ by at most one level. In place."""
    for m in range(tree.max_level, 0, -1):
        while True:
            nl = np.flatnonzero((~tree.is_leaf) & (tree.level == m))
            if not len(nl):
                break
            todo = []
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == dy == 0:
                        continue
                    x, y = tree.ix[nl] + dx, tree.iy[nl] + dy
                    n = np.int64(1) << m
                    inr = (x >= 0) & (y >= 0) & (x < n) & (y < n)
                    x, y = x[inr], y[inr]
                    miss = tree.lookup(np.full(len(x), m), x, y) < 0
                    if np.any(miss):
                        todo.append(tree.covering_leaf(np.full(int(miss.sum()), m), x[miss], y[miss]))
            if not todo:
                break
            tree.split(np.unique(np.concatenate(todo)))
    return tree


# ---------------------------------------------------------------- FMM lists
@dataclass
class FmmLists:
    """Interaction pairs for a 2:1 balanced tree.

    U: leaf-leaf adjacent pairs (incl. self); X: for any box, leaves at level l-1 that are
    adjacent to its parent but not to it; W: level l+1 boxes separated from a leaf (dual of
    X); V: same-level
    well separated pairs with offset (dx, dy) in [-3, 3]^2.
    Offsets for U/X are source corner minus target corner in units of the finer width.
    """

    u_tgt: np.ndarray
    u_src: np.ndarray
    u_dl: np.ndarray
    u_off: np.ndarray
    x_tgt: np.ndarray
    x_src: np.ndarray
    x_off: np.ndarray
    w_tgt: np.ndarray
    w_src: np.ndarray
    w_off: np.ndarray  # (n, 2) source center minus target center in units of the source width
    v_tgt: np.ndarray
    v_src: np.ndarray
    v_off: np.ndarray  # (n, 2) source minus target position, same level


def _rel_offset(tree, tgt, src):
    """Source corner minus target corner in units of the finer of the two widths."""
    lt, ls = tree.level[tgt], tree.level[src]
    L = np.maximum(lt, ls)
    ox = tree.ix[src] * (np.int64(1) << (L - ls)) - tree.ix[tgt] * (np.int64(1) << (L - lt))
    oy = tree.iy[src] * (np.int64(1) << (L - ls)) - tree.iy[tgt] * (np.int64(1) << (L - lt))
    return np.stack([ox, oy], -1)


def _cat(parts, dtype=np.int64):
    return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)


def fmm_lists(tree: QuadTree) -> FmmLists:
    leaves = tree.leaves()
    lev, ix, iy = tree.level[leaves], tree.ix[leaves], tree.iy[leaves]
    is_leaf = tree.is_leaf
    u_t, u_s, x_t, x_s, w_t, w_s = [], [], [], [], [], []
    offs8 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    u_t.append(leaves)
    u_s.append(leaves)
    coarse_t, coarse_s = [], []
    for dx, dy in offs8:
        nb = tree.lookup(lev, ix + dx, iy + dy)
        n = np.int64(1) << lev
        inr = (ix + dx >= 0) & (iy + dy >= 0) & (ix + dx < n) & (iy + dy < n)
        same = nb >= 0
        sl = same & is_leaf[np.maximum(nb, 0)]
        u_t.append(leaves[sl])
        u_s.append(nb[sl])
        # finer neighbours: children of a non-leaf colleague
        fine = same & ~is_leaf[np.maximum(nb, 0)]
        if np.any(fine):
            tg = np.repeat(leaves[fine], 4)
            ch = tree.children[nb[fine]].ravel()
            adj = _tree_adjacent(tree, tg, ch)
            u_t.append(tg[adj])
            u_s.append(ch[adj])
            w_t.append(tg[~adj])
            w_s.append(ch[~adj])
        # coarser neighbours
        miss = inr & ~same & (lev > 0)
        if np.any(miss):
            c = tree.lookup(lev[miss] - 1, (ix[miss] + dx) >> 1, (iy[miss] + dy) >> 1)
            ok = c >= 0
            coarse_t.append(leaves[miss][ok])
            coarse_s.append(c[ok])
    if coarse_t:
        ct, cs = _cat(coarse_t), _cat(coarse_s)
        pair = np.unique(np.stack([ct, cs], -1), axis=0)
        u_t.append(pair[:, 0])
        u_s.append(pair[:, 1])
    # X list: coarse leaves adjacent to the parent but not to the box (any box, the dual of W)
    lv1 = np.flatnonzero(tree.level > 0)
    px, py, pl = tree.ix[lv1] >> 1, tree.iy[lv1] >> 1, tree.level[lv1] - 1
    for dx, dy in offs8:
        c = tree.lookup(pl, px + dx, py + dy)
        ok = c >= 0
        ok[ok] = is_leaf[c[ok]]
        if np.any(ok):
            tg, sc = lv1[ok], c[ok]
            nadj = ~_tree_adjacent(tree, tg, sc)
            x_t.append(tg[nadj])
            x_s.append(sc[nadj])
    u_tgt, u_src = _cat(u_t), _cat(u_s)
    x_tgt, x_src = _cat(x_t), _cat(x_s)
    w_tgt, w_src = _cat(w_t), _cat(w_s)
    # V list over all boxes of level >= 2
    allb = np.flatnonzero(tree.level >= 2)
    bl, bx, by = tree.level[allb], tree.ix[allb], tree.iy[allb]
    v_t, v_s, v_o = [], [], []
    for dx in range(-3, 4):
        for dy in range(-3, 4):
            if max(abs(dx), abs(dy)) < 2:
                continue
            x, y = bx + dx, by + dy
            pc = (np.abs((x >> 1) - (bx >> 1)) <= 1) & (np.abs((y >> 1) - (by >> 1)) <= 1)
            nb = tree.lookup(bl, x, y)
            ok = pc & (nb >= 0)
            v_t.append(allb[ok])
            v_s.append(nb[ok])
            v_o.append(np.tile([dx, dy], (int(ok.sum()), 1)))
    v_tgt, v_src = _cat(v_t), _cat(v_s)
    v_off = np.concatenate(v_o).astype(np.int64) if v_o else np.zeros((0, 2), np.int64)
    u_dl = tree.level[u_src] - tree.level[u_tgt]
    w_off = 2.0 * (tree.box_center(w_src) - tree.box_center(w_tgt)) / tree.box_width(w_tgt)[:, None]
    return FmmLists(
        u_tgt, u_src, u_dl, _rel_offset(tree, u_tgt, u_src),
        x_tgt, x_src, _rel_offset(tree, x_tgt, x_src),
        w_tgt, w_src, np.rint(2 * w_off) / 2,
        v_tgt, v_src, v_off,
    )


# ---------------------------------------------------------------- literal near and far lists
@dataclass
class InteractionLists:
    """near[j]: leaves whose interior meets the 3h box of leaf j.
    far[j]: the set F(B_j) of leaves B_i for which B_j lies in B_i's far field."""

    leaves: np.ndarray
    near: list = field(default_factory=list)
    far: list = field(default_factory=list)


def _leaf_descendants(tree, b):
    out, stack = [], [int(b)]
    while stack:
        c = stack.pop()
        if tree.children[c, 0] < 0:
            out.append(c)
        else:
            stack.extend(tree.children[c].tolist())
    return out


def interaction_lists(tree: QuadTree) -> InteractionLists:
    """Per-leaf near-field and F(B_j) lists (quadratic in leaf count for F; meant for
    inspection and validation, the FMM uses fmm_lists)."""
    leaves = tree.leaves()
    res = InteractionLists(leaves)
    for k, b in enumerate(leaves):
        l, x, y = tree.level[b], tree.ix[b], tree.iy[b]
        near = set()
        n = 1 << int(l)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if not (0 <= x + dx < n and 0 <= y + dy < n):
                    continue
                c = int(tree.covering_leaf([l], [x + dx], [y + dy])[0])
                if tree.level[c] == l:
                    near.update(_leaf_descendants(tree, c))
                else:
                    near.add(c)
        res.near.append(np.array(sorted(near), np.int64))
    # B_i is in F(B_j) when B_j is outside the near field of B_i
    near_of = [set(n.tolist()) for n in res.near]
    for b in leaves:
        res.far.append(np.array([int(c) for k, c in enumerate(leaves) if int(b) not in near_of[k]], np.int64))
    return res


# ---------------------------------------------------------------- refinement
class Weighting(str, Enum):
    AREA = "area"
    SIDELENGTH = "sidelength"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class RefinementRule:
    """tolerance == 0 means: refine uniformly to max_level."""

    tolerance: float
    weighting: Weighting = Weighting.HYBRID
    max_level: int = 8

    def __post_init__(self):
        if not (self.tolerance >= 0):
            raise ValueError("tolerance must be non-negative")
        if self.max_level < 0:
            raise ValueError("max_level must be non-negative")
        object.__setattr__(self, "weighting", Weighting(self.weighting))


def boundary_flags(tree: QuadTree, ids, geom):
    """Leaf touches the boundary: contains a boundary node, or corner classification differs."""
    ids = np.asarray(ids, np.int64)
    flag = np.zeros(len(ids), bool)
    if geom is None or not len(ids):
        return flag
    owner = tree.locate(geom.nodes)
    flag |= np.isin(ids, owner)
    c = tree.box_corner(ids)
    w = tree.box_width(ids)[:, None]
    corners = np.concatenate([c, c + w * [1, 0], c + w * [0, 1], c + w])
    inside = geom.inside(corners).reshape(4, len(ids))
    flag |= inside.any(0) & ~inside.all(0)
    return flag


def build_tree(f_e, rule: RefinementRule, box, geom=None) -> QuadTree:
    """Refine until every leaf interpolates f_e to the weighted tolerance; then 2:1 balance.

    f_e: vectorized callable (n, 2) -> (n,). box: (corner, width).
    Leaf values of f_e are attached as tree.leaf_values (aligned with tree.leaves()).
    """
    corner, width = box
    tree = QuadTree(corner, width)
    if rule.tolerance == 0:
        for _ in range(rule.max_level):
            tree.split(tree.leaves())
    else:
        pending = np.array([0])
        tree.boundary_flag = np.zeros(1, bool)
        while len(pending):
            pts = np.concatenate([tree.collocation_points(pending), (tree.box_corner(pending)[:, None, :]
                                  + tree.box_width(pending)[:, None, None] * PROBE_NODES)], axis=1)
            vals = np.asarray(f_e(pts.reshape(-1, 2)), dtype=float).reshape(len(pending), 80)
            err = np.max(np.abs(vals[:, 16:] - vals[:, :16] @ PROBE_INTERP.T), axis=1)
            h = tree.box_width(pending)
            bflag = boundary_flags(tree, pending, geom) if geom is not None else np.zeros(len(pending), bool)
            tree.boundary_flag[pending] = bflag
            if rule.weighting == Weighting.AREA:
                werr = err * h**2
            elif rule.weighting == Weighting.SIDELENGTH:
                werr = err * h
            else:
                werr = np.where(bflag, err * h**2, err * h)
            bad = werr > rule.tolerance
            at_max = tree.level[pending] >= rule.max_level
            if np.any(bad & at_max):
                k = np.argmax(np.where(bad & at_max, werr, -1))
                b = pending[k]
                raise MaxLevelExceeded(
                    f"refinement criterion unmet at max_level={rule.max_level}; worst leaf at "
                    f"corner {tree.box_corner(b).tolist()} width {tree.box_width(b):.3e}, weighted error {werr[k]:.3e}"
                )
            pending = tree.split(pending[bad]).ravel()
    balance_2to1(tree)
    lv = tree.leaves()
    if geom is not None and (tree.boundary_flag is None or len(tree.boundary_flag) != tree.n_boxes):
        tree.boundary_flag = np.zeros(tree.n_boxes, bool)
        tree.boundary_flag[lv] = boundary_flags(tree, lv, geom)
    elif geom is not None:
        # balance splits inherit flags from parents; recompute for accuracy on leaves
        tree.boundary_flag[lv] = boundary_flags(tree, lv, geom)
    tree.leaf_values = np.asarray(f_e(tree.collocation_points(lv).reshape(-1, 2)), dtype=float).reshape(len(lv), 16)
    return tree


def uniform_tree(box, level) -> QuadTree:
    tree = QuadTree(*box)
    for _ in range(level):
        tree.split(tree.leaves())
    return tree


def dump_tree_csv(tree: QuadTree, path):
    """Per-leaf records: level, corner_x, corner_y, width, boundary_flag."""
    lv = tree.leaves()
    c = tree.box_corner(lv)
    w = tree.box_width(lv)
    bf = tree.boundary_flag[lv] if tree.boundary_flag is not None else np.zeros(len(lv), bool)
    with open(path, "w") as fh:
        fh.write("level,corner_x,corner_y,width,boundary_flag\n")
        for k in range(len(lv)):
            fh.write(f"{tree.level[lv[k]]},{c[k, 0]:.17g},{c[k, 1]:.17g},{w[k]:.17g},{int(bf[k])}\n")
