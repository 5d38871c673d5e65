"""Adaptive FMM for point charges and dipoles in the complex-log formulation.

phi(z) = sum_j q_j log(z - xi_j) + d_j / (z - xi_j), several channels at once. The box
expansions are kept after the passes so that any number of targets can be evaluated
later in O(p) per target plus near-source sums (no new pass).
"""
from __future__ import annotations

import numpy as np

from . import expansions as ex
from .quadtree import QuadTree, balance_2to1, fmm_lists

_CHUNK = 40000


def _segments(keys, n):
    """Start/end of each key value 0..n-1 in a sorted key array."""
    ar = np.arange(n)
    return np.searchsorted(keys, ar, "left"), np.searchsorted(keys, ar, "right")


def _expand_ranges(starts, ends):
    """Concatenated index ranges plus the owning range index."""
    cnt = ends - starts
    tot = int(cnt.sum())
    owner = np.repeat(np.arange(len(starts)), cnt)
    offs = np.cumsum(cnt) - cnt
    idx = starts[owner] + (np.arange(tot) - offs[owner])
    return idx, owner


class PointFMM:
    """Build once for given sources and densities, evaluate at arbitrary targets."""

    def __init__(self, sources, charges=None, dipoles=None, eps=1e-13, box=None, leaf_size=40, p=None):
        src = np.asarray(sources, dtype=float).reshape(-1, 2)
        self.z = src[:, 0] + 1j * src[:, 1]
        if charges is None and dipoles is None:
            raise ValueError("need charges or dipoles")
        self.q = None if charges is None else np.asarray(charges, complex).reshape(len(src), -1)
        self.d = None if dipoles is None else np.asarray(dipoles, complex).reshape(len(src), -1)
        self.nch = (self.q if self.q is not None else self.d).shape[1]
        self.p = p if p is not None else ex.fmm_order(eps)
        if box is None:
            lo, hi = src.min(0), src.max(0)
            w = max(hi - lo) * 1.02 + 1e-300
            box = ((lo + hi) / 2 - w / 2, w)
        self.tree = tree = QuadTree(*box)
        leaf_of = np.zeros(len(src), np.int64)
        while True:
            counts = np.bincount(leaf_of, minlength=tree.n_boxes)
            big = np.flatnonzero((counts > leaf_size) & tree.is_leaf & (tree.level < 30))
            if not len(big):
                break
            tree.split(big)
            leaf_of = tree.locate(src)
        balance_2to1(tree)
        leaf_of = tree.locate(src)
        if np.any(leaf_of < 0):
            raise ValueError("sources outside the FMM box")
        self.perm = np.argsort(leaf_of, kind="stable")
        self.leaf_sorted = leaf_of[self.perm]
        self.zs = self.z[self.perm]
        self.qs = None if self.q is None else self.q[self.perm]
        self.ds = None if self.d is None else self.d[self.perm]
        self.sstart, self.send = _segments(self.leaf_sorted, tree.n_boxes)
        self.lists = fmm_lists(tree)
        nb = tree.n_boxes
        self.r = tree.box_width(np.arange(nb))
        cen = tree.box_center(np.arange(nb))
        self.c = cen[:, 0] + 1j * cen[:, 1]
        self._upward()
        self._downward()

    # ------------------------------------------------------------------ passes
    def _zeros(self, n):
        return np.zeros((n, self.nch), complex)

    def _qd(self, idx):
        q = self.qs[idx] if self.qs is not None else self._zeros(len(idx))
        d = self.ds[idx] if self.ds is not None else self._zeros(len(idx))
        return q, d

    def _upward(self):
        tree, p = self.tree, self.p
        nb = tree.n_boxes
        self.mp = mp = np.zeros((nb, self.nch, p + 1), complex)
        for a in range(0, len(self.zs), _CHUNK):
            sl = slice(a, min(a + _CHUNK, len(self.zs)))
            lf = self.leaf_sorted[sl]
            q, d = self._qd(np.arange(sl.start, sl.stop))
            contrib = ex.p2m((self.zs[sl] - self.c[lf]) / self.r[lf], q, d, self.r[lf], p)
            starts = np.flatnonzero(np.r_[True, lf[1:] != lf[:-1]])
            mp[lf[starts]] += np.add.reduceat(contrib, starts, axis=0)
        # subtree source counts (to skip empty boxes)
        cnt = (self.send - self.sstart).astype(np.int64)
        self.ops_m2m = [ex.m2m_operator(((cx - 0.5) + 1j * (cy - 0.5)) / 2, 0.5, p) for cy in (0, 1) for cx in (0, 1)]
        for lev in range(tree.max_level, 0, -1):
            b = np.flatnonzero(tree.level == lev)
            slot = 2 * (tree.iy[b] & 1) + (tree.ix[b] & 1)
            for s in range(4):
                bs = b[slot == s]
                par = tree.parent[bs]
                mp[par] += mp[bs] @ self.ops_m2m[s]
                cnt[par] += cnt[bs]
        self.count = cnt

    def _downward(self):
        tree, p, L = self.tree, self.p, self.lists
        nb = tree.n_boxes
        self.loc = loc = np.zeros((nb, self.nch, p + 1), complex)
        keep = self.count[L.v_src] > 0
        vt, vs, vo = L.v_tgt[keep], L.v_src[keep], L.v_off[keep]
        code = (vo[:, 0] + 3) * 7 + (vo[:, 1] + 3)
        for cval in np.unique(code):
            m = code == cval
            dx, dy = divmod(int(cval), 7)
            T = ex.m2l_operator(complex(dx - 3, dy - 3), p)
            t, s = vt[m], vs[m]
            loc[t] += self.mp[s] @ T
            loc[t, :, 0] += self.mp[s, :, 0] * np.log(self.r[t])[:, None]
        # X list: sources of coarse leaves straight into the target's local expansion
        keep = self.count[L.x_src] > 0
        xt, xs = L.x_tgt[keep], L.x_src[keep]
        order = np.argsort(xt, kind="stable")
        xt, xs = xt[order], xs[order]
        idx, owner = _expand_ranges(self.sstart[xs], self.send[xs])
        for a in range(0, len(idx), _CHUNK):
            sl = slice(a, min(a + _CHUNK, len(idx)))
            tg = xt[owner[sl]]
            q, d = self._qd(idx[sl])
            contrib = ex.p2l((self.zs[idx[sl]] - self.c[tg]) / self.r[tg], q, d, self.r[tg], p)
            starts = np.flatnonzero(np.r_[True, tg[1:] != tg[:-1]])
            np.add.at(loc, tg[starts], np.add.reduceat(contrib, starts, axis=0))
        self.ops_l2l = [ex.l2l_operator(((cx - 0.5) + 1j * (cy - 0.5)) / 2, 0.5, p) for cy in (0, 1) for cx in (0, 1)]
        for lev in range(1, tree.max_level + 1):
            b = np.flatnonzero(tree.level == lev)
            slot = 2 * (tree.iy[b] & 1) + (tree.ix[b] & 1)
            for s in range(4):
                bs = b[slot == s]
                loc[bs] += loc[tree.parent[bs]] @ self.ops_l2l[s]
        # per-leaf concatenated U-list sources, W lists
        ut = L.u_tgt
        order = np.argsort(ut, kind="stable")
        self.u_tgt, self.u_src = ut[order], L.u_src[order]
        self.ustart, self.uend = _segments(self.u_tgt, nb)
        keep = self.count[L.w_src] > 0
        order = np.argsort(L.w_tgt[keep], kind="stable")
        self.w_tgt, self.w_src = L.w_tgt[keep][order], L.w_src[keep][order]
        self.wstart, self.wend = _segments(self.w_tgt, nb)

    # ------------------------------------------------------------------ evaluation
    def evaluate(self, targets, grad=True):
        """Returns phi (n, nch) and phi' (n, nch) (None if grad is False)."""
        t = np.asarray(targets)
        zt = t if np.iscomplexobj(t) else t[..., 0] + 1j * t[..., 1]
        zt = np.ravel(zt)
        n = len(zt)
        phi = self._zeros(n)
        dphi = self._zeros(n) if grad else None
        pts = np.stack([zt.real, zt.imag], -1)
        lf = self.tree.locate(pts)
        out = np.flatnonzero(lf < 0)
        if len(out):
            self._eval_outside(zt[out], out, phi, dphi, grad)
        ins = np.flatnonzero(lf >= 0)
        order = ins[np.argsort(lf[ins], kind="stable")]
        lsort = lf[order]
        zo = zt[order]
        # local expansions
        for a in range(0, len(order), _CHUNK):
            sl = slice(a, min(a + _CHUNK, len(order)))
            b = lsort[sl]
            f, df = ex.l2p(self.loc[b], (zo[sl] - self.c[b]) / self.r[b], self.r[b], grad)
            phi[order[sl]] += f
            if grad:
                dphi[order[sl]] += df
        nbx = self.tree.n_boxes
        tstart, tend = _segments(lsort, nbx)
        # W list: multipoles of small separated boxes
        wt, ws = self.w_tgt, self.w_src
        sel = tend[wt] > tstart[wt]
        wt, ws = wt[sel], ws[sel]
        idx, owner = _expand_ranges(tstart[wt], tend[wt])
        for a in range(0, len(idx), _CHUNK):
            sl = slice(a, min(a + _CHUNK, len(idx)))
            sb = ws[owner[sl]]
            f, df = ex.m2p(self.mp[sb], (zo[idx[sl]] - self.c[sb]) / self.r[sb], self.r[sb], grad)
            np.add.at(phi, order[idx[sl]], f)
            if grad:
                np.add.at(dphi, order[idx[sl]], df)
        # U list: direct sums
        for b in np.flatnonzero(tend > tstart):
            srcb = self.u_src[self.ustart[b]:self.uend[b]]
            sidx = _expand_ranges(self.sstart[srcb], self.send[srcb])[0]
            if not len(sidx):
                continue
            tsl = slice(tstart[b], tend[b])
            q = self.qs[sidx] if self.qs is not None else None
            d = self.ds[sidx] if self.ds is not None else None
            f, df = ex.direct_sum(zo[tsl], self.zs[sidx], q, d, grad)
            phi[order[tsl]] += f
            if grad:
                dphi[order[tsl]] += df
        return phi, dphi

    def _eval_outside(self, zt, where, phi, dphi, grad):
        far = np.abs(zt - self.c[0]) > 1.5 * self.r[0]
        if np.any(far):
            k = where[far]
            f, df = ex.m2p(self.mp[np.zeros(len(k), np.int64)], (zt[far] - self.c[0]) / self.r[0], np.full(len(k), self.r[0]), grad)
            phi[k] += f
            if grad:
                dphi[k] += df
        near = np.flatnonzero(~far)
        for a in range(0, len(near), 256):
            k = near[a:a + 256]
            f, df = ex.direct_sum(zt[k], self.zs, self.qs, self.ds, grad)
            phi[where[k]] += f
            if grad:
                dphi[where[k]] += df


