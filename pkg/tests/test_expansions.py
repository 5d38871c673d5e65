import numpy as np
import pytest

from boxpoisson import expansions as ex
from boxpoisson.pointfmm import PointFMM


def _cloud(rng, n, c=0.0, r=1.0):
    return c + r * (rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-0.5, 0.5, n))


def _charges(rng, n, nch=2):
    # real charges: Re(q log) with complex q would depend on the branch of log
    q = rng.standard_normal((n, nch)).astype(complex)
    d = rng.standard_normal((n, nch)) + 1j * rng.standard_normal((n, nch))
    return q, d


def test_multipole_matches_direct(rng):
    p = 30
    src = _cloud(rng, 50)
    q, d = _charges(rng, 50)
    M = ex.p2m(src, q, d, np.ones(50), p).sum(0)[None]
    z = 3.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, 20))
    phi, dphi = ex.m2p(np.repeat(M, 20, 0), z, np.ones(20))
    ref, dref = ex.direct_sum(z, src, q, d)
    assert np.abs(phi.real - ref.real).max() < 1e-12 * np.abs(ref).max()
    assert np.abs(dphi - dref).max() < 1e-12 * np.abs(dref).max()


def test_translations_chain(rng):
    p = 40
    src = _cloud(rng, 40, c=0.25 + 0.25j, r=0.5)
    q, d = _charges(rng, 40, 1)
    child = ex.p2m((src - (0.25 + 0.25j)) / 0.5, q, d, np.full(40, 0.5), p).sum(0)
    # child (centre 0.25+0.25i, scale 0.5) -> parent (centre 0, scale 1)
    parent = child @ ex.m2m_operator(0.25 + 0.25j, 0.5, p)
    t = 4.0 + 1.0j  # local centre at the origin + t, same scale
    loc = parent @ ex.m2l_operator(-t, p)  # multipole centre relative to the local centre
    z = t + 0.3 * np.exp(1j * np.linspace(0, 2 * np.pi, 9))
    phi_l, dphi_l = ex.l2p(np.repeat(loc[None], 9, 0), (z - t), np.ones(9))
    ref, dref = ex.direct_sum(z, src, q, d)
    off = np.mean(phi_l.real - ref.real)  # m2l omits the constant a0 log r (r = 1 here, so zero)
    assert abs(off) < 1e-10
    assert np.abs(dphi_l - dref).max() < 1e-11 * np.abs(dref).max()
    # shift to a child local
    child_loc = loc @ ex.l2l_operator(0.1 - 0.05j, 0.5, p)
    c2 = t + 0.1 - 0.05j
    z2 = c2 + 0.2 * np.exp(1j * np.linspace(0, 2 * np.pi, 7))
    p2, d2 = ex.l2p(np.repeat(child_loc[None], 7, 0), (z2 - c2) / 0.5, np.full(7, 0.5))
    r2, dr2 = ex.direct_sum(z2, src, q, d)
    assert np.abs(p2.real - r2.real).max() < 1e-10
    assert np.abs(d2 - dr2).max() < 1e-11 * np.abs(dr2).max()


def test_fmm_order_monotone():
    assert ex.fmm_order(1e-6) < ex.fmm_order(1e-9) < ex.fmm_order(1e-12)


@pytest.mark.parametrize("n", [300, 3000])
def test_point_fmm_matches_direct(rng, n):
    src = _cloud(rng, n)
    q, d = _charges(rng, n)
    fmm = PointFMM(np.stack([src.real, src.imag], -1), q, d, eps=1e-12)
    tgt = np.concatenate([src[:200], _cloud(rng, 200, r=1.6)])  # some targets outside the tree box
    phi, dphi = fmm.evaluate(tgt)
    ref, dref = ex.direct_sum(tgt, src, q, d)
    scale = np.abs(q).sum() + np.abs(d).sum() / 1e-3
    assert np.abs(phi.real - ref.real).max() < 1e-10 * scale
    assert np.abs(dphi - dref).max() < 1e-10 * scale


def test_point_fmm_linearity(rng):
    src = _cloud(rng, 500)
    pts = np.stack([src.real, src.imag], -1)
    a = rng.standard_normal(500)
    b = rng.standard_normal(500)
    tgt = _cloud(rng, 100)
    fa = PointFMM(pts, a, eps=1e-12).evaluate(tgt)[0]
    fb = PointFMM(pts, b, eps=1e-12).evaluate(tgt)[0]
    fab = PointFMM(pts, 2 * a - 3 * b, eps=1e-12).evaluate(tgt)[0]
    assert np.abs(fab.real - (2 * fa.real - 3 * fb.real)).max() < 1e-10
