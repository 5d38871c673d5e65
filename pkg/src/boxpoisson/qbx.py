"""Quadrature by expansion for layer potentials near the boundary.

One center per boundary node, c_i = x_i -+ r_i n_i on the requested side, r_i = panel
length. The layer potential is sampled on a ring of radius r_i / 2 with the smooth rule
on a 4x oversampled boundary (one point FMM pass); power-series coefficients follow from
the discrete Fourier transform of the ring values. Targets within r_i / 2 of their
nearest node use that node's series, all others the FMM expansions kept from the pass.

Complex form: phi(z) = sum q log(z - xi) + d / (z - xi), u = Re phi, (d/dx - i d/dy) u = phi'.
    single layer   q = -mu w / 2pi
    double layer   d = mu w n / 2pi         (n as a complex number)
    grad of D mu   Cauchy field  -i mu_s w / 2pi / (z - xi)   (mu_s = d mu / ds)
    grad of S mu   Cauchy field  -mu w / 2pi / (z - xi)
Gradients near the boundary come from separate series of the two Cauchy fields; the
derivative of the potential series loses several digits at the edge of the disc.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bie import DensityKind, LayerDensity
from .errors import CenterCollision, WrongSide
from .geometry import NQ, BoundaryGeometry, tangential_derivative
from .pointfmm import PointFMM

_INV2PI = 1.0 / (2 * np.pi)


class Side(str, Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"


@dataclass
class QbxCenter:
    node: int
    center: np.ndarray
    radius: float
    ring: np.ndarray  # (M_qbx, 2)
    alpha: np.ndarray  # (p+1,) complex, coefficients of the full layer potential


@dataclass
class QbxResult:
    values: np.ndarray
    gradients: np.ndarray | None = None


@dataclass
class FieldCache:
    geom: BoundaryGeometry
    side: Side
    kind: DensityKind
    p: int
    m_qbx: int
    centers: np.ndarray  # (M, 2)
    radius: np.ndarray  # (M,)
    alpha: np.ndarray  # (M, n_channels, p+1) complex
    fmm: PointFMM
    constant: float  # W sigma (density.constant_term) for extension densities, 0 otherwise
    density: np.ndarray
    ring_values: np.ndarray | None = None  # (M, M_qbx, n_channels)

    @property
    def has_gradient(self):
        return self.alpha.shape[1] == 4

    def center(self, i) -> QbxCenter:
        th = 2 * np.pi * np.arange(self.m_qbx) / self.m_qbx
        ring = self.centers[i] + 0.5 * self.radius[i] * np.stack([np.cos(th), np.sin(th)], -1)
        return QbxCenter(int(i), self.centers[i].copy(), float(self.radius[i]), ring,
                         self.alpha[i, :2].sum(0) if self.has_gradient else self.alpha[i, 0].copy())


def _channels(geom, ps, interp, mu, kind, with_gradient):
    """Charges and dipoles (n_fine, nch) on the oversampled boundary."""
    mu_f = (mu.reshape(-1, NQ) @ interp.T).ravel()
    nc = ps.normals[:, 0] + 1j * ps.normals[:, 1]
    dip_d = mu_f * ps.weights * nc * _INV2PI
    if kind == DensityKind.EXTENSION or not with_gradient:
        if kind == DensityKind.EXTENSION:
            return None, dip_d[:, None]
        q = np.stack([-mu_f * ps.weights * _INV2PI, np.zeros_like(mu_f)], 1)
        return q, np.stack([np.zeros_like(dip_d), dip_d], 1)
    mus = tangential_derivative(mu, geom)
    mus_f = (mus.reshape(-1, NQ) @ interp.T).ravel()
    q = np.zeros((len(mu_f), 4), complex)
    d = np.zeros((len(mu_f), 4), complex)
    q[:, 0] = -mu_f * ps.weights * _INV2PI
    d[:, 1] = dip_d
    d[:, 2] = -1j * mus_f * ps.weights * _INV2PI
    d[:, 3] = q[:, 0]
    return q, d


def _place_centers(geom, side, r0):
    sgn = -1.0 if side == Side.INTERIOR else 1.0
    r = r0.copy()
    kd = geom._node_tree()
    for attempt in range(4):
        c = geom.nodes + sgn * r[:, None] * geom.normals
        # any boundary node strictly inside the disc (the own node sits on the circle)
        d, _ = kd.query(c)
        bad = d < r * (1 - 1e-10)
        if not np.any(bad):
            return c, r
        if attempt == 3:
            i = int(np.flatnonzero(bad)[0])
            raise CenterCollision(f"QBX disc of node {i} still contains a boundary node after 3 halvings")
        r[bad] *= 0.5
    return c, r


def build_cache(geom: BoundaryGeometry, density: LayerDensity, side=Side.INTERIOR, p=12, m_qbx=None, eps=1e-13,
                gradient=True, keep_ring=False, r_factor=0.3) -> FieldCache:
    """Centers, ring coefficients and FMM expansions for the layer potential of density.

    correction densities represent S mu + D mu, extension densities D sigma + W sigma."""
    side = Side(side)
    m_qbx = 4 * p if m_qbx is None else int(m_qbx)
    if m_qbx <= 2 * p:
        raise ValueError("M_QBX must exceed 2p")
    mu = np.asarray(density.values, dtype=float)
    grad = gradient and density.kind == DensityKind.CORRECTION
    ps, interp = geom.oversampled(4)
    q, d = _channels(geom, ps, interp, mu, density.kind, grad)
    fmm = PointFMM(ps.nodes, charges=q, dipoles=d, eps=eps, box=geom.fmm_box())
    centers, r = _place_centers(geom, side, r_factor * geom.node_h)
    th = 2 * np.pi * np.arange(m_qbx) / m_qbx
    e = np.exp(1j * th)
    zc = centers[:, 0] + 1j * centers[:, 1]
    rho = 0.5 * r
    ring = zc[:, None] + rho[:, None] * e[None, :]
    phi, _ = fmm.evaluate(ring.ravel(), grad=False)
    nch = phi.shape[1]
    vals = phi.reshape(len(zc), m_qbx, nch)
    U = np.fft.fft(vals, axis=1)[:, : p + 1, :] / m_qbx  # (M, p+1, nch)
    scale = rho[:, None] ** -np.arange(p + 1)[None, :]
    alpha = np.empty((len(zc), nch, p + 1), complex)
    for ch in range(nch):
        if density.kind == DensityKind.CORRECTION and ch >= 2:
            alpha[:, ch] = U[:, :, ch] * scale  # analytic Cauchy field
        else:
            Ur = np.fft.fft(vals[:, :, ch].real, axis=1)[:, : p + 1] / m_qbx
            a = 2 * Ur * scale
            a[:, 0] = Ur[:, 0].real
            alpha[:, ch] = a
    const = float(density.constant_term) if density.kind == DensityKind.EXTENSION else 0.0
    return FieldCache(geom, side, density.kind, p, m_qbx, centers, r, alpha, fmm, const, mu,
                      vals if keep_ring else None)


def _split_targets(cache, pts, check_side):
    geom = cache.geom
    dnode, node = geom._node_tree().query(pts)
    near = dnode < 0.5 * cache.radius[node]
    if check_side:
        code, dist, _ = geom.classify(pts, tol=1e-14)
        want = 1 if cache.side == Side.INTERIOR else 0
        wrong = (code != want) & (code != 2)
        if np.any(wrong):
            i = int(np.flatnonzero(wrong)[0])
            raise WrongSide(f"target {pts[i].tolist()} is not on the {cache.side.value} side")
    return near, node


def _series(alpha, w):
    """sum_l alpha_l w^l by Horner's rule."""
    p = alpha.shape[-1] - 1
    out = alpha[..., p].copy()
    for l in range(p - 1, -1, -1):
        out = out * w + alpha[..., l]
    return out


def eval(cache: FieldCache, targets, grad=True, check_side=True) -> QbxResult:
    """Layer potential (and gradient for correction caches) at targets on the cache's side."""
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    n = len(pts)
    grad = grad and cache.has_gradient
    val = np.zeros(n)
    g = np.zeros((n, 2)) if grad else None
    if n == 0:
        return QbxResult(val, g)
    near, node = _split_targets(cache, pts, check_side)
    ni = np.flatnonzero(near)
    if len(ni):
        k = node[ni]
        w = (pts[ni, 0] - cache.centers[k, 0]) + 1j * (pts[ni, 1] - cache.centers[k, 1])
        a = cache.alpha[k]
        if cache.kind == DensityKind.CORRECTION:
            val[ni] = (_series(a[:, 0], w) + _series(a[:, 1], w)).real
            if grad:
                dz = _series(a[:, 2] + a[:, 3], w)
                g[ni] = np.stack([dz.real, -dz.imag], -1)
        else:
            val[ni] = _series(a[:, 0], w).real
    fi = np.flatnonzero(~near)
    if len(fi):
        phi, dphi = cache.fmm.evaluate(pts[fi], grad=grad)
        if cache.kind == DensityKind.CORRECTION:
            val[fi] = phi[:, 0].real + phi[:, 1].real
            if grad:
                dz = dphi[:, 0] + dphi[:, 1]
                g[fi] = np.stack([dz.real, -dz.imag], -1)
        else:
            val[fi] = phi[:, 0].real
    val += cache.constant
    return QbxResult(val, g)


def eval_gradient_double_layer(cache: FieldCache, density, targets, check_side=True):
    """Gradient (n, 2) of the double layer alone, near targets through the Cauchy series of
    the tangential derivative of the density."""
    if not cache.has_gradient:
        raise ValueError("cache was built without gradient channels")
    mu = np.asarray(getattr(density, "values", density), dtype=float)
    if not np.array_equal(mu, cache.density):
        raise ValueError("density differs from the cached one")
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.zeros((len(pts), 2))
    near, node = _split_targets(cache, pts, check_side)
    ni = np.flatnonzero(near)
    if len(ni):
        k = node[ni]
        w = (pts[ni, 0] - cache.centers[k, 0]) + 1j * (pts[ni, 1] - cache.centers[k, 1])
        dz = _series(cache.alpha[k, 2], w)
        out[ni] = np.stack([dz.real, -dz.imag], -1)
    fi = np.flatnonzero(~near)
    if len(fi):
        _, dphi = cache.fmm.evaluate(pts[fi], grad=True)
        out[fi] = np.stack([dphi[:, 1].real, -dphi[:, 1].imag], -1)
    return out
