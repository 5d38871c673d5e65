"""Scaled complex multipole / local expansions for the 2D Laplace kernel.

A box of centre c and scale r carries
    multipole  phi(z) = a_0 log(z - c) + sum_k a_k (r / (z - c))^k
    local      phi(z) = sum_l b_l ((z - c) / r)^l
for sources phi(z) = sum q log(z - xi) + d / (z - xi). The physical potential is Re(phi)
and (d/dx - i d/dy) Re(phi) = phi'(z).

Translation operators act on coefficient rows: out = coeffs @ T.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import comb


@lru_cache(maxsize=None)
def _binom(n):
    k = np.arange(n + 1)
    return comb(k[:, None], k[None, :])


def m2m_operator(t: complex, rho: float, p: int):
    """Child multipole (scale rho*r2, centre c2 + t*r2) -> parent multipole (scale r2, centre c2)."""
    C = _binom(2 * p + 1)
    T = np.zeros((p + 1, p + 1), complex)
    T[0, 0] = 1.0
    l = np.arange(1, p + 1)
    T[0, 1:] = -(t**l) / l
    for ll in range(1, p + 1):
        k = np.arange(1, ll + 1)
        T[k, ll] = rho**k * t ** (ll - k) * C[ll - 1, k - 1]
    return T


def m2l_operator(t: complex, p: int):
    """Same-scale multipole at c_t + t*r -> local at c_t. The a_0 log(r) term is added separately."""
    C = _binom(2 * p + 1)
    T = np.zeros((p + 1, p + 1), complex)
    k = np.arange(1, p + 1)
    l = np.arange(1, p + 1)
    T[0, 0] = np.log(-t)
    T[0, 1:] = -(t ** (-l)) / l
    sgn = (-1.0) ** k
    T[1:, 0] = sgn * t ** (-k)
    K, L = np.meshgrid(k, l, indexing="ij")
    T[1:, 1:] = sgn[:, None] * C[L + K - 1, K - 1] * t ** (-(K + L))
    return T


def l2l_operator(t: complex, rho: float, p: int):
    """Parent local (scale r1, centre c1) -> child local (scale rho*r1, centre c1 + t*r1)."""
    C = _binom(p + 1)
    T = np.zeros((p + 1, p + 1), complex)
    for k in range(p + 1):
        l = np.arange(k + 1)
        T[k, l] = C[k, l] * rho**l * t ** (k - l)
    return T


def _powers(w, p):
    """w: (n,) complex -> (n, p+1) with w^0..w^p."""
    out = np.empty(np.shape(w) + (p + 1,), complex)
    out[..., 0] = 1.0
    for k in range(1, p + 1):
        out[..., k] = out[..., k - 1] * w
    return out


# Coefficient arrays use the layout (n, nch, p+1).


def p2m(w, q, d, r, p):
    """Per-source multipole contributions: w = (xi - c)/r, q and d (n, nch), r (n,).

    Returns (n, nch, p+1); the caller sums per box."""
    wp = _powers(w, p)
    k = np.arange(1, p + 1)
    out = np.zeros((len(w), q.shape[1], p + 1), complex)
    out[:, :, 0] = q
    out[:, :, 1:] = -q[:, :, None] * (wp[:, None, 1:] / k) + (d / r[:, None])[:, :, None] * wp[:, None, :-1]
    return out


def p2l(w, q, d, r, p):
    """Local contributions about c (scale r) from sources at w = (xi - c)/r, |w| > 1."""
    ip = _powers(1.0 / w, p + 1)
    l = np.arange(1, p + 1)
    out = np.zeros((len(w), q.shape[1], p + 1), complex)
    out[:, :, 0] = q * (np.log(r) + np.log(-w))[:, None] - d * (ip[:, 1] / r)[:, None]
    out[:, :, 1:] = -q[:, :, None] * (ip[:, None, 1:p + 1] / l) - (d / r[:, None])[:, :, None] * ip[:, None, 2:]
    return out


def m2p(coeffs, u, r, grad=True):
    """Evaluate multipoles (n, nch, p+1) at u = (z - c)/r. Returns phi, phi' of shape (n, nch)."""
    p = coeffs.shape[-1] - 1
    inv = 1.0 / u
    ip = _powers(inv, p + 1)
    a0 = coeffs[:, :, 0]
    phi = a0 * (np.log(r) + np.log(u))[:, None] + np.einsum("nk,nck->nc", ip[:, 1:p + 1], coeffs[:, :, 1:])
    if not grad:
        return phi, None
    k = np.arange(1, p + 1)
    dphi = (a0 * inv[:, None] - np.einsum("nk,nck->nc", k * ip[:, 2:], coeffs[:, :, 1:])) / r[:, None]
    return phi, dphi


def l2p(coeffs, u, r, grad=True):
    """Evaluate locals (n, nch, p+1) at u = (z - c)/r."""
    p = coeffs.shape[-1] - 1
    up = _powers(u, p)
    phi = np.einsum("nk,nck->nc", up, coeffs)
    if not grad:
        return phi, None
    k = np.arange(1, p + 1)
    dphi = np.einsum("nk,nck->nc", k * up[:, :-1], coeffs[:, :, 1:]) / r[:, None]
    return phi, dphi


def direct_sum(targets, sources, q, d, grad=True):
    """phi(z) = sum q log(z - xi) + d/(z - xi) directly; q or d may be None.

    targets, sources complex; q, d (n_src, nch). Coincident pairs are skipped."""
    diff = targets[:, None] - sources[None, :]
    zero = diff == 0
    if np.any(zero):
        diff = np.where(zero, 1.0, diff)
    inv = 1.0 / diff
    if np.any(zero):
        inv[zero] = 0.0
    nch = (q if q is not None else d).shape[1]
    phi = np.zeros((len(targets), nch), complex)
    dphi = np.zeros((len(targets), nch), complex) if grad else None
    if q is not None:
        lg = np.log(diff)
        if np.any(zero):
            lg[zero] = 0.0
        phi += lg @ q
        if grad:
            dphi += inv @ q
    if d is not None:
        phi += inv @ d
        if grad:
            dphi -= (inv * inv) @ d
    return phi, dphi


def fmm_order(eps):
    """Expansion order for relative precision eps with separation ratio ~0.55 (V-list worst case)."""
    return int(np.ceil(np.log(eps) / np.log(0.55))) + 2
