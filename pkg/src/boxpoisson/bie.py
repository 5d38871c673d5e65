"""Nystrom discretization of the boundary integral equations.

Correction density (interior Dirichlet, u^H = S mu + D mu):   -1/2 mu + S mu + D mu = g - v
Extension density (exterior, w = D sigma + W sigma):         +1/2 sigma + D sigma + W sigma = f
with W sigma = sum_j sigma_j w_j (integral of sigma), G = -log|x - y| / 2pi and n pointing
away from the domain.

The log-singular single-layer kernel on self and neighbouring panels is integrated
against the panel Lagrange basis by graded Gauss-Legendre quadrature; the stored weights
already include the kernel (matrix entries), see SingularWeights. The double-layer kernel
is smooth on a smooth curve and uses the panel rule with the curvature limit on the
diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import QuadratureNonConvergent, SingularMatrix, SolveFailed
from .geometry import GL_BARY, GL_X, NQ, BoundaryGeometry, lagrange_matrix

_INV2PI = 1.0 / (2 * np.pi)


class DensityKind(str, Enum):
    CORRECTION = "correction_mu"
    EXTENSION = "extension_sigma"


@dataclass
class LayerDensity:
    values: np.ndarray
    kind: DensityKind
    constant_term: float = 0.0  # W sigma for the extension density


@dataclass
class SingularWeights:
    """single[P, m, i, j]: int G(x_i, y) l_j(y) ds over panel neighbours[P, m] (m = prev,
    self, next) for target node i of panel P and basis function j of the source panel;
    double[P, m, i, j]: the matching double-layer entries (smooth rule)."""

    neighbours: np.ndarray  # (n_panels, 3)
    single: np.ndarray  # (n_panels, 3, 16, 16)
    double: np.ndarray

    def entries(self, node):
        """(source node, w_s, w_d) triples of one target node."""
        P, i = divmod(int(node), NQ)
        out = []
        for m in range(3):
            Q = self.neighbours[P, m]
            for j in range(NQ):
                out.append((Q * NQ + j, self.single[P, m, i, j], self.double[P, m, i, j]))
        return out


@lru_cache(maxsize=None)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


def _graded_nodes(sig, n, inner_depth=52):
    """Gauss nodes on [-1, 1] graded geometrically toward sig (inside or outside)."""
    gx, gw = _gauss(n)
    if -1.0 < sig < 1.0:
        bps = [-1.0, 1.0, sig]
        for k in range(inner_depth + 1):
            d = 2.0 ** (1 - k)
            for b in (sig - d, sig + d):
                if -1.0 < b < 1.0:
                    bps.append(b)
    else:
        e = 1.0 if sig > 1 else -1.0
        d0 = abs(sig - e)
        bps = [-1.0, 1.0]
        k = 1
        while True:
            b = e - np.sign(e) * d0 * (2.0**k - 1.0)
            if not -1.0 < b < 1.0:
                break
            bps.append(b)
            k += 1
            if k > 200:
                raise QuadratureNonConvergent("graded panel rule did not close")
    bps = np.unique(bps)
    a, b = bps[:-1], bps[1:]
    x = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * gx
    w = (0.5 * (b - a))[:, None] * gw
    return x.ravel(), w.ravel()


def _single_block(geom, P, Q, where, n=None):
    """16x16 product-integration block for targets on P, sources on Q.

    where: 0 -> Q precedes P, 1 -> Q == P, 2 -> Q follows P. Intervals of the self rule
    have distance/width ratio 1 toward the singularity, those of the neighbour rule 1/2,
    hence the different default point counts."""
    if n is None:
        n = 10 if where == 1 else 16
    curve = geom.curves[geom.panel_curve[Q]]
    aQ, bQ = geom.ta[Q], geom.tb[Q]
    halfQ = 0.5 * (bQ - aQ)
    ratio = (geom.tb[P] - geom.ta[P]) / (bQ - aQ)
    X = geom.nodes[NQ * P:NQ * (P + 1)]
    out = np.zeros((NQ, NQ))
    for i in range(NQ):
        if where == 1:
            sig = GL_X[i]
        elif where == 2:
            sig = -1.0 - (1.0 - GL_X[i]) * ratio
        else:
            sig = 1.0 + (GL_X[i] + 1.0) * ratio
        s, w = _graded_nodes(sig, n)
        y, y1, _ = curve.evaluate(0.5 * (aQ + bQ) + halfQ * s)
        speed = np.hypot(y1[:, 0], y1[:, 1])
        d = y - X[i]
        r2 = np.sum(d * d, 1)
        r2[r2 == 0] = np.finfo(float).tiny
        kern = -np.log(r2) / (4 * np.pi) * speed * w * halfQ
        out[i] = kern @ lagrange_matrix(GL_X, s, GL_BARY)
    return out


def _double_kernel(x, y, ny, wy):
    d = y[None, :, :] - x[:, None, :]
    r2 = np.sum(d * d, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = -_INV2PI * np.sum(d * ny[None], -1) / r2 * wy[None]
    return K


def build_singular_weights(geom: BoundaryGeometry, check=True) -> SingularWeights:
    npan = geom.n_panels
    nb = np.stack([geom.prev_panel, np.arange(npan), geom.next_panel], 1)
    single = np.zeros((npan, 3, NQ, NQ))
    double = np.zeros((npan, 3, NQ, NQ))
    for P in range(npan):
        X = geom.nodes[NQ * P:NQ * (P + 1)]
        for m in range(3):
            Q = nb[P, m]
            single[P, m] = _single_block(geom, P, Q, m)
            sl = slice(NQ * Q, NQ * (Q + 1))
            K = _double_kernel(X, geom.nodes[sl], geom.normals[sl], geom.weights[sl])
            if m == 1:
                K[np.diag_indices(NQ)] = -geom.curvature[sl] / (4 * np.pi) * geom.weights[sl]
            double[P, m] = K
    if check:
        # refinement check on one panel: more Gauss points per graded interval must agree
        ref = np.stack([_single_block(geom, 0, nb[0, m], m, n=(14 if m == 1 else 22)) for m in range(3)])
        if np.max(np.abs(ref - single[0])) > 1e-12 * max(1.0, np.abs(ref).max()):
            raise QuadratureNonConvergent("single-layer product integration not converged")
    return SingularWeights(nb, single, double)


def _dense_layers(geom: BoundaryGeometry, weights: SingularWeights, single=True):
    """Dense S (if requested) and D matrices with near-panel blocks corrected."""
    x, n, w = geom.nodes, geom.normals, geom.weights
    M = len(x)
    D = np.empty((M, M))
    S = np.empty((M, M)) if single else None
    step = 1024
    for a in range(0, M, step):
        sl = slice(a, min(a + step, M))
        d = x[None, :, :] - x[sl, None, :]
        r2 = np.sum(d * d, -1)
        r2[r2 == 0] = 1.0
        D[sl] = -_INV2PI * np.sum(d * n[None], -1) / r2 * w[None]
        if single:
            S[sl] = -np.log(r2) / (4 * np.pi) * w[None]
    for P in range(geom.n_panels):
        rows = slice(NQ * P, NQ * (P + 1))
        for m in range(3):
            Q = weights.neighbours[P, m]
            cols = slice(NQ * Q, NQ * (Q + 1))
            D[rows, cols] = weights.double[P, m]
            if single:
                S[rows, cols] = weights.single[P, m]
    return S, D


@dataclass
class BieSystem:
    matrix: np.ndarray
    lu: tuple
    kind: DensityKind
    rcond: float
    w_row: np.ndarray | None = None  # quadrature weights of the rank-one W term (extension only)

    @property
    def size(self):
        return self.matrix.shape[0]


def _factor(A, kind):
    lu = sla.lu_factor(A, check_finite=True)
    anorm = np.abs(A).sum(0).max()
    rcond, info = sla.lapack.dgecon(lu[0], anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < 1e-13:
        raise SingularMatrix(f"{kind.value} system is numerically singular (rcond = {rcond:.2e})")
    return BieSystem(A, lu, kind, float(rcond))


def assemble_correction_system(geom: BoundaryGeometry, weights: SingularWeights | None = None) -> BieSystem:
    weights = build_singular_weights(geom) if weights is None else weights
    S, D = _dense_layers(geom, weights, single=True)
    A = S
    A += D
    del D
    A[np.diag_indices_from(A)] -= 0.5
    return _factor(A, DensityKind.CORRECTION)


def assemble_extension_system(geom: BoundaryGeometry, weights: SingularWeights | None = None) -> BieSystem:
    weights = build_singular_weights(geom) if weights is None else weights
    _, A = _dense_layers(geom, weights, single=False)
    A += geom.weights[None, :]
    A[np.diag_indices_from(A)] += 0.5
    system = _factor(A, DensityKind.EXTENSION)
    system.w_row = geom.weights.copy()
    return system


def solve(system: BieSystem, rhs) -> LayerDensity:
    b = np.asarray(rhs, dtype=float)
    if not np.all(np.isfinite(b)):
        raise SolveFailed("right-hand side is not finite")
    x = sla.lu_solve(system.lu, b)
    bn = max(np.abs(b).max(), np.finfo(float).tiny)
    for _ in range(3):
        res = b - system.matrix @ x
        if np.abs(res).max() <= 1e-12 * bn:
            break
        x = x + sla.lu_solve(system.lu, res)  # iterative refinement
    else:
        res = b - system.matrix @ x
        if np.abs(res).max() > 1e-12 * bn:
            raise SolveFailed(f"residual {np.abs(res).max() / bn:.2e} above 1e-12")
    if np.abs(b).max() == 0:
        x = np.zeros_like(b)
    const = float(x @ system.w_row) if system.w_row is not None else 0.0
    return LayerDensity(x, system.kind, const)


def layer_potentials_smooth(geom, density, targets, single=True, double=True):
    """Plain smooth-quadrature S and D at targets away from the boundary (reference path)."""
    t = np.atleast_2d(targets)
    d = geom.nodes[None, :, :] - t[:, None, :]
    r2 = np.sum(d * d, -1)
    out = np.zeros(len(t))
    if single:
        out += (-np.log(r2) / (4 * np.pi) * geom.weights) @ density
    if double:
        out += (-_INV2PI * np.sum(d * geom.normals[None], -1) / r2 * geom.weights) @ density
    return out
