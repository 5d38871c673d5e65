"""Independent reference computations used by the tests.

Nothing here calls the solver's tables, FMMs or product-integration weights: volume
integrals use recursive square subdivision toward the target with plain tensor Gauss
rules, layer potentials use scipy's adaptive quadrature in the curve parameter.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from boxpoisson.quadtree import tensor_basis

_GX, _GW = np.polynomial.legendre.leggauss(12)
_REF = 0.5 * (_GX + 1)
_W2 = 0.25 * np.outer(_GW, _GW).ravel()


def _monomials(u):
    """u^i v^j, i, j < 4, at points u (n, 2) of the unit square."""
    p = u[:, :, None] ** np.arange(4)
    return (p[:, 0, :, None] * p[:, 1, None, :]).reshape(len(u), 16)


# nodal values -> monomial coefficients of the same bicubic
_G4 = np.stack(np.meshgrid(np.linspace(0, 1, 4), np.linspace(0, 1, 4)), -1).reshape(-1, 2)
_TO_MONO = np.linalg.solve(_monomials(_G4), tensor_basis(_G4))


def _graded_boxes(x, corner, width, min_width):
    """Squares tiling the box, subdivided until dist(x, square) >= width; squares
    narrower than min_width that still touch x are dropped (their share is O(min_width))."""
    out = []
    stack = [(np.asarray(corner, dtype=float), float(width))]
    while stack:
        c, w = stack.pop()
        gap = np.maximum(np.maximum(c - x, x - (c + w)), 0.0)
        if np.hypot(*gap) >= w:
            out.append((c, w))
        elif w > min_width:
            h = 0.5 * w
            stack += [(c + [i * h, j * h], h) for i in (0, 1) for j in (0, 1)]
    return out


def volume_integral(x, corner, width, coeffs, min_rel=1e-13):
    """int_box G(x, y) p(y) dy and its x-gradient for the tensor Chebyshev interpolant
    with nodal values coeffs (16,) on the square box; G = -log|x - y| / 2pi."""
    boxes = _graded_boxes(np.asarray(x, dtype=float), corner, width, min_rel * width)
    c = np.array([b[0] for b in boxes])
    w = np.array([b[1] for b in boxes])
    X = c[:, None, 0] + w[:, None] * np.repeat(_REF, 12)[None, :]
    Y = c[:, None, 1] + w[:, None] * np.tile(_REF, 12)[None, :]
    wt = (w[:, None] ** 2) * _W2[None, :]
    y = np.stack([X.ravel(), Y.ravel()], -1)
    wt = wt.ravel()
    u = (y - corner) / width
    f = np.polynomial.polynomial.polyval2d(u[:, 0], u[:, 1], (_TO_MONO @ coeffs).reshape(4, 4))
    d = y - x
    r2 = np.sum(d * d, 1)
    pot = np.sum(-np.log(r2) / (4 * np.pi) * f * wt)
    grad = (d.T / (2 * np.pi * r2)) @ (f * wt)
    return pot, grad


def _h(a, b):
    """Antiderivative with d2H/da db = a / (a^2 + b^2)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = a * a + b * b
        t = np.where(r2 > 0, 0.5 * b * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        return t - b + np.where(a != 0, a * np.arctan(b / np.where(a != 0, a, 1.0)), 0.0)


def rect_gradient(x, corner, width):
    """Closed form of grad_x int_square G(x, y) dy, any x (the integral converges)."""
    lo = x - np.asarray(corner) - np.asarray(width)[..., None]
    hi = x - np.asarray(corner)

    def box(k):
        j = 1 - k
        return (_h(hi[..., k], hi[..., j]) - _h(hi[..., k], lo[..., j]) - _h(lo[..., k], hi[..., j])
                + _h(lo[..., k], lo[..., j]))

    return -np.stack([box(0), box(1)], -1) / (2 * np.pi)


def _graded_near(x, corners, widths, mono, min_rel):
    """Sum of volume_integral over several leaves at once: level-synchronous subdivision of
    all their squares, then one Gauss evaluation. mono: (n_leaves, 4, 4) monomial coefficients.
    The gradient integrates f(y) - f(x) (bounded kernel) plus f(x) times the closed form."""
    c, w, k, w0 = corners.copy(), widths.copy(), np.arange(len(widths)), widths.copy()
    keep_c, keep_w, keep_k = [], [], []
    while len(w):
        gap = np.maximum(np.maximum(c - x, x - (c + w[:, None])), 0.0)
        done = np.hypot(gap[:, 0], gap[:, 1]) >= w
        keep_c.append(c[done]), keep_w.append(w[done]), keep_k.append(k[done])
        split = ~done & (w > min_rel * w0[k])
        c, w, k = c[split], 0.5 * w[split], k[split]
        c = np.concatenate([c + np.stack([i * w, j * w], -1) for i in (0, 1) for j in (0, 1)])
        w, k = np.tile(w, 4), np.tile(k, 4)
    c, w, k = np.concatenate(keep_c), np.concatenate(keep_w), np.concatenate(keep_k)
    y = c[:, None, :] + w[:, None, None] * np.stack([np.repeat(_REF, 12), np.tile(_REF, 12)], -1)[None]
    wt = w[:, None] ** 2 * _W2[None, :]
    u = (y - corners[k][:, None, :]) / widths[k][:, None, None]
    pu, pv = u[..., 0, None] ** np.arange(4), u[..., 1, None] ** np.arange(4)
    f = np.einsum("bqi,bqi->bq", pu, np.einsum("bij,bqj->bqi", mono[k], pv))
    ux = (x - corners) / widths[:, None]
    fx = np.einsum("li,lij,lj->l", ux[:, 0, None] ** np.arange(4), mono, ux[:, 1, None] ** np.arange(4))
    d = y - x
    r2 = np.sum(d * d, -1)
    pot = np.sum(-np.log(r2) / (4 * np.pi) * f * wt)
    grad = np.einsum("bqc,bq->c", d / (2 * np.pi * r2[..., None]), (f - fx[k][:, None]) * wt)
    grad += fx @ rect_gradient(x, corners, widths)
    return pot, grad


def tree_volume_oracle(tree, leaf_values, targets, min_rel=1e-13):
    """O(N^2) direct volume potential of the piecewise interpolant on all leaves.

    Leaves at distance >= their width from a target take a single 12x12 Gauss rule; the
    others are graded toward the target as in volume_integral. Squares dropped at min_rel
    carry O((min_rel h)^2 log) of the integral."""
    lv = tree.leaves()
    corners = tree.box_corner(lv)
    widths = tree.box_width(lv)
    leaf_values = np.asarray(leaf_values)
    mono = (leaf_values @ _TO_MONO.T).reshape(-1, 4, 4)
    ref = np.stack([np.repeat(_REF, 12), np.tile(_REF, 12)], -1)
    qy = corners[:, None, :] + widths[:, None, None] * ref[None]
    qf = np.einsum("qk,lk->lq", tensor_basis(ref), leaf_values) * (widths[:, None] ** 2 * _W2[None, :])
    pot = np.zeros(len(targets))
    grad = np.zeros((len(targets), 2))
    for t, x in enumerate(np.asarray(targets, dtype=float)):
        gap = np.maximum(np.maximum(corners - x, x - (corners + widths[:, None])), 0.0)
        far = np.hypot(gap[:, 0], gap[:, 1]) >= widths
        d = qy[far] - x
        r2 = np.sum(d * d, -1)
        pot[t] = np.sum(-np.log(r2) / (4 * np.pi) * qf[far])
        grad[t] = np.einsum("lqc,lq->c", d / (2 * np.pi * r2[..., None]), qf[far])
        if np.any(~far):
            p, g = _graded_near(x, corners[~far], widths[~far], mono[~far], min_rel)
            pot[t] += p
            grad[t] += g
    return pot, grad


# ------------------------------------------------------------------ layer potentials
def _curve_point(curve, t):
    x, x1, _ = curve.evaluate(np.atleast_1d(t))
    return x[0], x1[0]


def layer_potential(curve, density, x, kind="single", breaks=()):
    """S or D of density(t) over one curve at target x by adaptive quadrature in t.

    breaks: parameters to split at (near-singular or singular points)."""
    x = np.asarray(x, dtype=float)

    def integrand(t):
        y, y1 = _curve_point(curve, t)
        sp = np.hypot(*y1)
        d = y - x
        r2 = d @ d
        if kind == "single":
            k = -np.log(r2) / (4 * np.pi)
        else:
            n = np.array([y1[1], -y1[0]]) / sp
            k = -(d @ n) / (2 * np.pi * r2)
        return k * density(t) * sp

    pts = sorted({0.0, 2 * np.pi, *[float(b) % (2 * np.pi) for b in breaks]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        with warnings.catch_warnings():
            # the PV kernel cancels at the target; quad flags roundoff there, the value is still accurate
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, _ = integrate.quad(integrand, a, b, epsabs=1e-15, epsrel=1e-13, limit=2000)
        total += v
    return total


def nearest_parameter(curve, x, n=20000):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    y = curve.evaluate(t)[0]
    k = int(np.argmin(np.sum((y - x) ** 2, 1)))
    lo, hi = t[k] - 2 * np.pi / n, t[k] + 2 * np.pi / n
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda s: np.sum((_curve_point(curve, s)[0] - x) ** 2), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-15})
    return float(res.x)


def near_breaks(t0, depth=9):
    """Breakpoints graded geometrically toward parameter t0 (for targets very close to the curve)."""
    return [t0] + [t0 + s * 10.0 ** -k for k in range(1, depth + 1) for s in (-1, 1)]


# ------------------------------------------------------------------ smooth volume potentials
def box_potential_green(w, grad_w, x, corner, width):
    """int_B G(x, y) lap w(y) dy and its x-gradient for smooth w, by Green's third identity:
    int_B G lap w = -w(x) + int_dB (G dw/dn - w dG/dn_y) ds. Only 1D edge integrals."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(corner, dtype=float)
    edges = [(c, np.array([1.0, 0.0]), np.array([0.0, -1.0])),
             (c + [width, 0.0], np.array([0.0, 1.0]), np.array([1.0, 0.0])),
             (c + [width, width], np.array([-1.0, 0.0]), np.array([0.0, 1.0])),
             (c + [0.0, width], np.array([0.0, -1.0]), np.array([-1.0, 0.0]))]
    pot = -w(x[None])[0]
    grad = -grad_w(x[None])[0]

    def integrand(s, a, t, n, comp):
        y = a + s * t
        d = x - y
        r2 = d @ d
        wy = w(y[None])[0]
        dn = grad_w(y[None])[0] @ n
        if comp < 0:
            # G dw/dn - w dG/dn_y, dG/dn_y = (d . n) / (2 pi r2)
            return -np.log(r2) / (4 * np.pi) * dn - wy * (d @ n) / (2 * np.pi * r2)
        # x-derivatives of the same
        gx = -d[comp] / (2 * np.pi * r2)
        k = n[comp] / (2 * np.pi * r2) - (d @ n) * d[comp] / (np.pi * r2 * r2)
        return gx * dn - wy * k

    for a, t, n in edges:
        s0 = float(np.clip((x - a) @ t, 0, width))
        brk = [b for b in (s0 + sgn * width * 10.0**-k for k in range(1, 6) for sgn in (-1, 1)) if 0 < b < width]
        if 0 < s0 < width:
            brk.append(s0)
        for comp in (-1, 0, 1):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val = integrate.quad(integrand, 0.0, width, args=(a, t, n, comp), points=sorted(brk) or None,
                                     limit=400, epsabs=1e-15, epsrel=1e-13)[0]
            if comp < 0:
                pot += val
            else:
                grad[comp] += val
    return pot, grad
