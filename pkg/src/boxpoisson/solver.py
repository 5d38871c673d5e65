"""Poisson solver pipeline: u = v + u^H.

    f_e      extension of f to the box
    v        volume potential with Laplacian f_e (box code)
    u^H      harmonic correction S mu + D mu with u^H = g - v on the boundary

Boundary data for the correction:
    v1   v interpolated from the tree at the boundary nodes
    v2   panel-wise arc-length antiderivative of the interpolated tangential derivative
         tau . grad v, each panel's constant fitted to the interpolated v in the weighted mean
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import bie, qbx
from .boxfmm import VolumeField, eval_field, volume_potential
from .errors import BoxPoissonError, PointOutsideDomain
from .extension import ExtendedDensity, ExtensionMode, build_extension, eval_extension
from .geometry import NQ, BoundaryGeometry, panel_antiderivative
from .quadtree import PROBE_INTERP, PROBE_NODES, QuadTree, RefinementRule, boundary_flags, build_tree, uniform_tree
from .tables import _graded_points


class CorrectionVersion(str, Enum):
    V1 = "v1"
    V2 = "v2"


@dataclass
class PoissonProblem:
    geometry: BoundaryGeometry
    f: Callable  # (n, 2) -> (n,) on the closed domain
    g: Callable  # (n, 2) -> (n,) on the boundary
    extension: ExtensionMode = ExtensionMode.CONTINUOUS
    rule: RefinementRule = field(default_factory=lambda: RefinementRule(1e-6))
    eps_v: float = 1e-10
    qbx_order: int = 12
    correction_version: CorrectionVersion = CorrectionVersion.V1
    f_global: Callable | None = None  # smooth_user extension


@dataclass
class Diagnostics:
    n_omega: int
    n_v: int
    m: int
    t_ext: float
    t_tree: float
    t_v: float
    t_qp: float
    t_qe: float
    f_l1: float
    interp_error: float
    c_omega: float
    bound: float
    p_fmm: int
    n_leaves: int
    max_level: int

    def volume_row(self):
        """Box code timing columns: N_Omega, N_V, t_V, N_Omega/t_V, N_V/t_V."""
        return [self.n_omega, self.n_v, self.t_v, self.n_omega / self.t_v, self.n_v / self.t_v]

    def qbx_row(self):
        """QBX timing columns: N_Omega, t_QP, t_QE, N_Omega/(t_QP+t_QE), N_Omega/t_QE."""
        return [self.n_omega, self.t_qp, self.t_qe, self.n_omega / (self.t_qp + self.t_qe), self.n_omega / self.t_qe]


@dataclass
class PoissonSolution:
    problem: PoissonProblem
    volume: VolumeField
    correction: qbx.FieldCache
    extension: ExtendedDensity
    tree: QuadTree
    density: bie.LayerDensity
    boundary_v: np.ndarray  # boundary data taken from v (v1 or v2)
    node_points: np.ndarray  # interior collocation nodes (N_Omega, 2)
    node_u: np.ndarray
    node_grad: np.ndarray
    diagnostics: Diagnostics


@contextmanager
def _stage(name):
    try:
        yield
    except BoxPoissonError as e:
        if e.stage is None:
            e.stage = name
        raise


def _geom_cached(geom, key, build):
    if key not in geom._cache:
        geom._cache[key] = build()
    return geom._cache[key]


def singular_weights(geom):
    return _geom_cached(geom, "bie_weights", lambda: bie.build_singular_weights(geom))


def correction_system(geom):
    return _geom_cached(geom, "bie_correction", lambda: bie.assemble_correction_system(geom, singular_weights(geom)))


def extension_system(geom):
    return _geom_cached(geom, "bie_extension", lambda: bie.assemble_extension_system(geom, singular_weights(geom)))


def green_bound(box):
    """C = max_x int_box |G(x, y)| dy over the box centre, an edge midpoint and a corner."""
    corner, width = np.asarray(box[0], dtype=float), float(box[1])
    best = 0.0
    for rel in ((0.5, 0.5), (0.5, 0.0), (0.0, 0.0)):
        x = corner + width * np.asarray(rel)
        tot = 0.0
        for i in (0, 1):
            for j in (0, 1):
                c = x + np.array([i - 1.0, j - 1.0]) * width
                lo = np.maximum(c, corner)
                hi = np.minimum(c + width, corner + width)
                if np.any(hi - lo <= 0):
                    continue
                # quadrant rectangles are squares of the unit box only at the centre; use
                # squares of the short side that tile the rectangle
                s = float(min(hi - lo))
                nx, ny = int(round((hi - lo)[0] / s)), int(round((hi - lo)[1] / s))
                for a in range(nx):
                    for b in range(ny):
                        y, w = _graded_points(x, lo + s * np.array([a, b]), s)
                        r = np.hypot(*(y - x).T)
                        tot += np.sum(w * np.abs(np.log(r))) / (2 * np.pi)
        best = max(best, tot)
    return best


def _interp_error(tree, f_e, rng, max_leaves=4096):
    """max over (a sample of) leaves of |f_e - interpolant| on the 8x8 probe grid."""
    lv = tree.leaves()
    if len(lv) > max_leaves:
        lv = rng.choice(lv, max_leaves, replace=False)
    vals = tree.leaf_values
    pos = np.searchsorted(tree.leaves(), lv)
    pts = tree.box_corner(lv)[:, None, :] + tree.box_width(lv)[:, None, None] * PROBE_NODES
    fp = f_e(pts.reshape(-1, 2)).reshape(len(lv), -1)
    return float(np.max(np.abs(fp - vals[pos] @ PROBE_INTERP.T)))


def boundary_data_from_volume(field: VolumeField, geom: BoundaryGeometry, version):
    """v on the boundary nodes, by direct interpolation (v1) or by integrating the
    interpolated tangential derivative (v2)."""
    pot, grad = eval_field(field, geom.nodes)
    if CorrectionVersion(version) == CorrectionVersion.V1:
        return pot
    dvds = np.sum(grad * geom.tangents, 1)
    A = panel_antiderivative(dvds, geom).reshape(-1, NQ)
    w = geom.weights.reshape(-1, NQ)
    c = np.sum(w * (pot.reshape(-1, NQ) - A), 1) / w.sum(1)
    return (A + c[:, None]).ravel()


def solve(problem: PoissonProblem, seed=0) -> PoissonSolution:
    geom = problem.geometry
    rule = problem.rule
    mode = ExtensionMode(problem.extension)
    with _stage("extension"):
        ext_sys = extension_system(geom) if mode == ExtensionMode.CONTINUOUS else None
    t0 = time.perf_counter()
    with _stage("extension"):
        ext = build_extension(problem.f, geom, mode, f_global=problem.f_global, system=ext_sys, p=problem.qbx_order)
    t_ext = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("quadtree"):
        if rule.tolerance == 0:
            tree = uniform_tree(geom.box, rule.max_level)
            lv = tree.leaves()
            pts = tree.collocation_points(lv).reshape(-1, 2)
            codes, _, _ = geom.classify(pts)
            tree.leaf_values = eval_extension(ext, pts, codes).reshape(len(lv), 16)
            tree.boundary_flag = np.zeros(tree.n_boxes, bool)
            tree.boundary_flag[lv] = boundary_flags(tree, lv, geom)
        else:
            tree = build_tree(ext, rule, geom.box, geom)
            lv = tree.leaves()
            pts = tree.collocation_points(lv).reshape(-1, 2)
            codes, _, _ = geom.classify(pts)
    t_tree = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("boxfmm"):
        field = volume_potential(tree, -tree.leaf_values, eps=problem.eps_v)
    t_v = time.perf_counter() - t0

    with _stage("bie"):
        system = correction_system(geom)  # once per geometry, not part of the timings
    t0 = time.perf_counter()
    with _stage("bie"):
        vb = boundary_data_from_volume(field, geom, problem.correction_version)
        rhs = np.asarray(problem.g(geom.nodes), dtype=float) - vb
        mu = bie.solve(system, rhs)
    with _stage("qbx"):
        cache = qbx.build_cache(geom, mu, qbx.Side.INTERIOR, p=problem.qbx_order)
    t_qp = time.perf_counter() - t0

    ins = codes != 0
    node_pts = pts[ins]
    t0 = time.perf_counter()
    with _stage("qbx"):
        uh = qbx.eval(cache, node_pts, grad=True, check_side=False)
    t_qe = time.perf_counter() - t0
    node_u = field.potential[lv].reshape(-1)[ins] + uh.values
    node_grad = field.gradient[lv].reshape(-1, 2)[ins] + uh.gradients

    rng = np.random.default_rng(seed)
    interp = _interp_error(tree, ext, rng)
    c_omega = _geom_cached(geom, "c_omega", lambda: green_bound(geom.box))
    diag = Diagnostics(
        n_omega=int(ins.sum()), n_v=int(len(pts)), m=geom.n_nodes, t_ext=t_ext, t_tree=t_tree, t_v=t_v, t_qp=t_qp,
        t_qe=t_qe, f_l1=field.f_l1, interp_error=interp, c_omega=c_omega,
        bound=problem.eps_v * field.f_l1 + c_omega * interp, p_fmm=field.p, n_leaves=len(lv), max_level=tree.max_level,
    )
    return PoissonSolution(problem, field, cache, ext, tree, mu, vb, node_pts, node_u, node_grad, diag)


def eval_solution(sol: PoissonSolution, points, codes=None):
    """u and grad u at points of the closed domain."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if codes is None:
        codes, _, _ = sol.problem.geometry.classify(pts)
    if np.any(codes == 0):
        i = int(np.flatnonzero(codes == 0)[0])
        raise PointOutsideDomain(f"point {pts[i].tolist()} lies outside the domain")
    pot, grad = eval_field(sol.volume, pts)
    uh = qbx.eval(sol.correction, pts, grad=True, check_side=False)
    return pot + uh.values, grad + uh.gradients


def sample_domain(geom: BoundaryGeometry, n, seed=0):
    """n seeded uniform samples of the open domain by rejection from the box."""
    rng = np.random.default_rng(seed)
    corner, width = geom.box
    out = []
    got = 0
    while got < n:
        p = corner + width * rng.random((max(2 * (n - got), 64), 2))
        code, _, _ = geom.classify(p)
        p = p[code == 1]
        out.append(p)
        got += len(p)
    return np.concatenate(out)[:n]


def relative_error(exact, approx):
    exact = np.asarray(exact, dtype=float)
    return float(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)))


def error_report(sol, exact_u, exact_grad, n_samples=10_000, seed=0, points=None):
    """Relative max errors E(u) and E(grad u) = sqrt(E(u_x)^2 + E(u_y)^2) over seeded samples."""
    pts = sample_domain(sol.problem.geometry, n_samples, seed) if points is None else points
    if isinstance(sol, PoissonSolution):
        u, g = eval_solution(sol, pts, np.ones(len(pts), np.int8))
    else:
        u, g = sol(pts)
    ue = np.asarray(exact_u(pts), dtype=float)
    ge = np.asarray(exact_grad(pts), dtype=float)
    eu = relative_error(ue, u)
    eg = float(np.hypot(relative_error(ge[:, 0], g[:, 0]), relative_error(ge[:, 1], g[:, 1])))
    return {"E_u": eu, "E_grad": eg, "n_samples": len(pts), "seed": seed}
