"""Multiply connected boundary made of Fourier-polar curves, discretized into
16-point Gauss-Legendre panels, plus point classification and the enclosing box.

Conventions: the outer curve is traversed counter-clockwise, inner curves clockwise,
and n = (tau_2, -tau_1) is the right normal, so n points away from the domain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .errors import CurveIntersection, NonPositiveRadius

NQ = 16
GL_X, GL_W = np.polynomial.legendre.leggauss(NQ)


def bary_weights(x):
    w = np.array([1.0 / np.prod(x[j] - np.delete(x, j)) for j in range(len(x))])
    return w / np.abs(w).max()


GL_BARY = bary_weights(GL_X)


def lagrange_matrix(x_nodes, x_eval, bw=None):
    """Matrix L with L[i, j] = l_j(x_eval[i]) (barycentric, exact at nodes)."""
    x_eval = np.asarray(x_eval, dtype=float)
    bw = bary_weights(x_nodes) if bw is None else bw
    diff = x_eval[:, None] - x_nodes[None, :]
    hit = diff == 0
    diff[hit] = 1.0
    tmp = bw / diff
    L = tmp / tmp.sum(1, keepdims=True)
    rows = np.flatnonzero(hit.any(1))
    L[rows] = hit[rows].astype(float)
    return L


def _diff_matrix(x):
    bw = bary_weights(x)
    n = len(x)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = bw[j] / bw[i] / (x[i] - x[j])
        D[i, i] = -D[i].sum()
    return D


def _integration_matrix(x):
    """I[i, j] = int_{-1}^{x_i} l_j(t) dt for the Gauss-Legendre nodes."""
    V = np.polynomial.legendre.legvander(x, len(x) - 1)
    coef = np.linalg.inv(V)  # values -> Legendre coefficients
    out = np.zeros((len(x), len(x)))
    for j in range(len(x)):
        c = np.polynomial.legendre.legint(coef[:, j], lbnd=-1)
        out[:, j] = np.polynomial.legendre.legval(x, c)
    return out


GL_D = _diff_matrix(GL_X)
GL_INT = _integration_matrix(GL_X)


class Orientation(str, Enum):
    OUTER = "outer"
    INNER = "inner"


@dataclass(frozen=True)
class FourierCurve:
    """r(theta) = c0 + sum_j c_j cos(j theta) + d_j sin(j theta) about `center`."""

    c0: float
    cos_coeffs: dict = field(default_factory=dict)
    sin_coeffs: dict = field(default_factory=dict)
    center: tuple = (0.0, 0.0)
    orientation: Orientation = Orientation.OUTER

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    def radius(self, theta, deriv=0):
        theta = np.asarray(theta, dtype=float)
        r = np.full(theta.shape, float(self.c0) if deriv == 0 else 0.0)
        for j, c in self.cos_coeffs.items():
            r = r + c * j**deriv * np.cos(j * theta + deriv * np.pi / 2)
        for j, d in self.sin_coeffs.items():
            r = r + d * j**deriv * np.sin(j * theta + deriv * np.pi / 2)
        return r

    @property
    def sigma(self):
        return 1.0 if self.orientation == Orientation.OUTER else -1.0

    def evaluate(self, t):
        """Position, first and second derivatives w.r.t. the traversal parameter t."""
        th = self.sigma * np.asarray(t, dtype=float)
        r, r1, r2 = self.radius(th), self.radius(th, 1), self.radius(th, 2)
        e = np.stack([np.cos(th), np.sin(th)], -1)
        ep = np.stack([-np.sin(th), np.cos(th)], -1)
        x = np.asarray(self.center) + r[..., None] * e
        x1 = self.sigma * (r1[..., None] * e + r[..., None] * ep)
        x2 = r2[..., None] * e + 2 * r1[..., None] * ep - r[..., None] * e
        return x, x1, x2

    def polar_inside(self, pts):
        """Cheap star-shaped test (used only for validating curve nesting)."""
        d = np.asarray(pts) - np.asarray(self.center)
        return np.hypot(d[:, 0], d[:, 1]) < self.radius(np.arctan2(d[:, 1], d[:, 0]))


@dataclass
class Panel:
    curve_id: int
    parameter_interval: tuple
    nodes: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    speed: np.ndarray
    smooth_weights: np.ndarray
    arc_length: float


class Location(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside_in_box"
    BOUNDARY = "on_boundary"


@dataclass
class LocateResult:
    location: Location
    distance: float
    nearest_node: int


@dataclass
class PanelSet:
    """Flat node arrays of a panel discretization (16 nodes per panel)."""

    nodes: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    speed: np.ndarray
    weights: np.ndarray
    t: np.ndarray
    curvature: np.ndarray
    panel_of: np.ndarray


def _discretize(curves, curve_of_panel, ta, tb, xq=GL_X, wq=GL_W):
    n_p = len(ta)
    m = len(xq)
    t = 0.5 * (ta + tb)[:, None] + 0.5 * (tb - ta)[:, None] * xq[None, :]
    x = np.zeros((n_p, m, 2))
    x1 = np.zeros_like(x)
    x2 = np.zeros_like(x)
    for c, curve in enumerate(curves):
        sel = curve_of_panel == c
        x[sel], x1[sel], x2[sel] = curve.evaluate(t[sel])
    speed = np.hypot(x1[..., 0], x1[..., 1])
    tau = x1 / speed[..., None]
    nrm = np.stack([tau[..., 1], -tau[..., 0]], -1)
    w = 0.5 * (tb - ta)[:, None] * wq[None, :] * speed
    # signed curvature w.r.t. the traversal direction
    curv = (x1[..., 0] * x2[..., 1] - x1[..., 1] * x2[..., 0]) / speed**3
    return PanelSet(
        x.reshape(-1, 2), nrm.reshape(-1, 2), tau.reshape(-1, 2), speed.ravel(), w.ravel(), t.ravel(),
        curv.ravel(), np.repeat(np.arange(n_p), m),
    )


class BoundaryGeometry:
    """Panels of all curves in flat arrays plus the enclosing square box."""

    def __init__(self, curves, panels_per_curve, box):
        self.curves = list(curves)
        self.panels_per_curve = list(panels_per_curve)
        cur, ta, tb, prev, nxt = [], [], [], [], []
        base = 0
        for c, n in enumerate(self.panels_per_curve):
            edges = np.linspace(0, 2 * np.pi, n + 1)
            cur += [c] * n
            ta.append(edges[:-1])
            tb.append(edges[1:])
            k = np.arange(n)
            prev.append(base + (k - 1) % n)
            nxt.append(base + (k + 1) % n)
            base += n
        self.panel_curve = np.array(cur, np.int64)
        self.ta = np.concatenate(ta)
        self.tb = np.concatenate(tb)
        self.prev_panel = np.concatenate(prev)
        self.next_panel = np.concatenate(nxt)
        ps = _discretize(self.curves, self.panel_curve, self.ta, self.tb)
        self.nodes, self.normals, self.tangents = ps.nodes, ps.normals, ps.tangents
        self.speed, self.weights, self.t, self.curvature = ps.speed, ps.weights, ps.t, ps.curvature
        self.panel_of = ps.panel_of
        self.curve_of = self.panel_curve[self.panel_of]
        self.panel_length = self.weights.reshape(-1, NQ).sum(1)
        corner, width = box
        self.box_corner = np.asarray(corner, dtype=float)
        self.box_width = float(width)
        self._cache = {}

    # ---- basic properties
    @property
    def box(self):
        return self.box_corner, self.box_width

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_panels(self):
        return len(self.ta)

    @property
    def node_h(self):
        return self.panel_length[self.panel_of]

    def panel(self, i) -> Panel:
        sl = slice(NQ * i, NQ * (i + 1))
        return Panel(int(self.panel_curve[i]), (float(self.ta[i]), float(self.tb[i])), self.nodes[sl], self.normals[sl],
                     self.tangents[sl], self.speed[sl], self.weights[sl], float(self.panel_length[i]))

    @property
    def panels(self):
        return [self.panel(i) for i in range(self.n_panels)]

    def perimeter(self):
        return float(self.weights.sum())

    def oversampled(self, k):
        """Panels split into k equal parameter pieces: PanelSet plus per-panel interpolation matrix."""
        key = ("over", k)
        if key not in self._cache:
            frac = np.linspace(-1, 1, k + 1)
            xq = np.concatenate([0.5 * (frac[i] + frac[i + 1]) + 0.5 * (frac[i + 1] - frac[i]) * GL_X for i in range(k)])
            wq = np.concatenate([GL_W / k] * k)
            ps = _discretize(self.curves, self.panel_curve, self.ta, self.tb, xq, wq)
            interp = lagrange_matrix(GL_X, xq, GL_BARY)
            self._cache[key] = (ps, interp)
        return self._cache[key]

    # ---- classification
    def _fine(self):
        if "fine" not in self._cache:
            ps, _ = self.oversampled(4)
            self._cache["fine"] = (ps, cKDTree(ps.nodes))
        return self._cache["fine"]

    def nearest(self, points):
        """Distance to the curve (parametric refinement), side sign and nearest node index.

        side > 0 means the point lies on the side the normal points to (away from the domain)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ps, kd = self._fine()
        _, j = kd.query(pts)
        t = ps.t[j].copy()
        pan = ps.panel_of[j]
        cur = self.panel_curve[pan]
        lo, hi = self.ta[pan], self.tb[pan]
        span = hi - lo
        x = np.zeros_like(pts)
        x1 = np.zeros_like(pts)
        for it in range(8):
            x2 = np.zeros_like(pts)
            for c, curve in enumerate(self.curves):
                s = cur == c
                if np.any(s):
                    x[s], x1[s], x2[s] = curve.evaluate(t[s])
            r = x - pts
            g = np.sum(r * x1, 1)
            H = np.sum(x1 * x1, 1) + np.sum(r * x2, 1)
            H = np.where(H > 0, H, np.sum(x1 * x1, 1))
            step = np.clip(g / H, -0.5 * span, 0.5 * span)
            t = np.clip(t - step, lo - 0.5 * span, hi + 0.5 * span)
        for c, curve in enumerate(self.curves):
            s = cur == c
            if np.any(s):
                x[s], x1[s], _ = curve.evaluate(t[s])
        d = pts - x
        dist = np.hypot(d[:, 0], d[:, 1])
        nrm = np.stack([x1[:, 1], -x1[:, 0]], -1)
        side = np.sign(np.sum(d * nrm, 1))
        _, node = self._node_tree().query(pts)
        return dist, side, node

    def _node_tree(self):
        if "nodes" not in self._cache:
            self._cache["nodes"] = cKDTree(self.nodes)
        return self._cache["nodes"]

    def gauss_fmm(self):
        """Point FMM for the double layer of unit density (cached)."""
        if "gauss" not in self._cache:
            from .pointfmm import PointFMM

            dip = (self.weights * (self.normals[:, 0] + 1j * self.normals[:, 1]) / (2 * np.pi))[:, None]
            self._cache["gauss"] = PointFMM(self.nodes, dipoles=dip, eps=1e-13, box=self.fmm_box())
        return self._cache["gauss"]

    def fmm_box(self, margin=0.25):
        w = self.box_width * (1 + 2 * margin)
        return self.box_corner - margin * self.box_width, w

    def double_layer_of_one(self, points):
        """Discretized D[1] by smooth quadrature (FMM)."""
        phi, _ = self.gauss_fmm().evaluate(np.atleast_2d(points), grad=False)
        return phi[:, 0].real

    def classify(self, points, tol=1e-12):
        """Codes: 1 inside, 0 outside (in box or beyond), 2 on boundary; plus distance and nearest node."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts), np.int8)
        kd = self._node_tree()
        dnode, node = kd.query(pts)
        hloc = self.node_h[node]
        near = dnode < 2.0 * hloc
        dist = dnode.copy()
        if np.any(near):
            dn, side, nn = self.nearest(pts[near])
            dist[near] = dn
            out[near] = np.where(side < 0, 1, 0)
            node[near] = nn
        far = ~near
        if np.any(far):
            out[far] = np.where(self.double_layer_of_one(pts[far]) < -0.5, 1, 0)
        out[dist < tol] = 2
        return out, dist, node

    def inside(self, points, include_boundary=True):
        code, _, _ = self.classify(points)
        return (code == 1) | ((code == 2) if include_boundary else False)


def tangential_derivative(values, geom: BoundaryGeometry):
    """d/ds along the traversal direction via per-panel spectral differentiation."""
    v = np.asarray(values).reshape(-1, NQ)
    half = 0.5 * (geom.tb - geom.ta)
    dv = (v @ GL_D.T) / half[:, None]
    return (dv.ravel() / geom.speed).astype(np.result_type(values, float))


def panel_antiderivative(values, geom: BoundaryGeometry):
    """Per-panel int_{s(panel start)}^{s} values ds (spectral integration in arc length)."""
    v = np.asarray(values).reshape(-1, NQ) * geom.speed.reshape(-1, NQ)
    half = 0.5 * (geom.tb - geom.ta)
    return ((v @ GL_INT.T) * half[:, None]).ravel()


def locate(point, geom: BoundaryGeometry, tol=1e-12) -> LocateResult:
    code, dist, node = geom.classify(np.asarray(point, dtype=float).reshape(1, 2), tol)
    loc = {1: Location.INSIDE, 0: Location.OUTSIDE, 2: Location.BOUNDARY}[int(code[0])]
    return LocateResult(loc, float(dist[0]), int(node[0]))


# ---------------------------------------------------------------- construction
def _check_curves(curves):
    n_outer = sum(c.orientation == Orientation.OUTER for c in curves)
    if n_outer != 1:
        raise CurveIntersection(f"expected exactly one outer curve, got {n_outer}")
    th = np.linspace(0, 2 * np.pi, 8192, endpoint=False)
    samples = []
    for i, c in enumerate(curves):
        r = c.radius(th)
        if r.min() <= 0:
            raise NonPositiveRadius(f"curve {i}: r(theta) = {r.min():.3e} at theta = {th[np.argmin(r)]:.4f}")
        samples.append(c.evaluate(th)[0])
    outer = next(i for i, c in enumerate(curves) if c.orientation == Orientation.OUTER)
    scale = max(np.ptp(samples[outer], 0))
    tol = 1e-6 * scale
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            d, _ = cKDTree(samples[j]).query(samples[i])
            if d.min() < tol:
                raise CurveIntersection(f"curves {i} and {j} come within {d.min():.3e}")
        if i != outer and not curves[outer].polar_inside(samples[i]).all():
            raise CurveIntersection(f"inner curve {i} is not inside the outer curve")
        for j in range(len(curves)):
            if i != outer and j != outer and i != j and curves[j].polar_inside(samples[i]).any():
                raise CurveIntersection(f"curves {i} and {j} overlap")


def _curve_ok(curve, n, tol):
    g1 = BoundaryGeometry([curve], [n], ((0, 0), 1))
    g2 = BoundaryGeometry([curve], [2 * n], ((0, 0), 1))
    if abs(g1.perimeter() - g2.perimeter()) > tol * g2.perimeter():
        return False
    h = g1.panel_length
    if np.max(h[:, None] * np.abs(g1.curvature.reshape(-1, NQ))) > 0.5:
        return False
    ratio = h / h[g1.next_panel]
    return bool(np.all((ratio <= 2) & (ratio >= 0.5)))


def _separation_violations(geom):
    """Curves owning a node too close to a non-adjacent panel for 16-point smooth quadrature."""
    kd = cKDTree(geom.nodes)
    h = geom.node_h
    pairs = kd.query_pairs(r=0.75 * h.max(), output_type="ndarray")
    bad = set()
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        pi, pj = geom.panel_of[i], geom.panel_of[j]
        nonadj = (pi != pj) & (geom.prev_panel[pi] != pj) & (geom.next_panel[pi] != pj)
        d = np.hypot(*(geom.nodes[i] - geom.nodes[j]).T)
        viol = nonadj & (d < 0.75 * np.maximum(h[i], h[j]))
        bad.update(geom.curve_of[i[viol]].tolist())
        bad.update(geom.curve_of[j[viol]].tolist())
    return bad


def _interior_probe(curves, geom):
    """A point inside the domain far from the boundary (coarse grid search)."""
    c, w = geom.box
    g = np.linspace(0.05, 0.95, 41)
    P = c + w * np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    ok = np.ones(len(P), bool)
    for cv in curves:
        pin = cv.polar_inside(P)
        ok &= pin if cv.orientation == Orientation.OUTER else ~pin
    P = P[ok]
    d, _ = cKDTree(geom.nodes).query(P)
    return P[np.argmax(d)]


def default_box(curves, padding):
    th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    pts = np.concatenate([c.evaluate(th)[0] for c in curves])
    lo, hi = pts.min(0), pts.max(0)
    pad = padding * np.hypot(*(hi - lo))
    side = max(hi - lo) + 2 * pad
    return (lo + hi) / 2 - side / 2, side


def build_geometry(curves, panels_per_curve="auto", box_padding=0.1, box=None, tol=1e-12) -> BoundaryGeometry:
    """Discretize curves into Gauss-Legendre panels and set up the enclosing box."""
    curves = list(curves)
    _check_curves(curves)
    if box is None:
        box = default_box(curves, box_padding)
    corner, width = np.asarray(box[0], dtype=float), float(box[1])
    th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    for c in curves:
        x = c.evaluate(th)[0]
        if np.any(x <= corner) or np.any(x >= corner + width):
            raise CurveIntersection("curve leaves the enclosing box")
    if panels_per_curve == "auto":
        counts = []
        for c in curves:
            n = 16
            while not _curve_ok(c, n, tol) and n < 4096:
                n *= 2
            counts.append(n)
        while True:
            geom = BoundaryGeometry(curves, counts, (corner, width))
            bad = _separation_violations(geom)
            if not bad:
                break
            counts = [n * 2 if i in bad else n for i, n in enumerate(counts)]
        probe = _interior_probe(curves, geom)
        while True:
            g2 = BoundaryGeometry(curves, [2 * n for n in counts], (corner, width))
            a = _probe_layer(geom, probe)
            b = _probe_layer(g2, probe)
            if abs(a - b) <= tol * max(1.0, abs(b)) or max(counts) >= 4096:
                break
            counts = [2 * n for n in counts]
            geom = g2
        return geom
    if np.isscalar(panels_per_curve):
        panels_per_curve = [int(panels_per_curve)] * len(curves)
    return BoundaryGeometry(curves, [int(n) for n in panels_per_curve], (corner, width))


def _probe_layer(geom, x):
    """S[1] + D[1] at x by smooth quadrature."""
    d = geom.nodes - x
    r2 = np.sum(d * d, 1)
    s = -np.log(r2) / (4 * np.pi)
    dl = -np.sum(d * geom.normals, 1) / (2 * np.pi * r2)
    return float(np.sum((s + dl) * geom.weights))
