import numpy as np
import pytest

from boxpoisson.bie import (
    DensityKind, _dense_layers, assemble_correction_system, assemble_extension_system, build_singular_weights,
    layer_potentials_smooth, solve,
)
from boxpoisson.errors import SingularMatrix
from boxpoisson.geometry import FourierCurve, build_geometry

from oracles import layer_potential


@pytest.fixture(scope="module")
def circle_layers(circle_geom):
    w = build_singular_weights(circle_geom)
    return _dense_layers(circle_geom, w)


@pytest.fixture(scope="module")
def domain_systems(domain_geom):
    w = build_singular_weights(domain_geom)
    return w, assemble_correction_system(domain_geom, w), assemble_extension_system(domain_geom, w)


def test_circle_constant_density(circle_layers):
    S, D = circle_layers
    R = 0.25
    one = np.ones(S.shape[0])
    assert np.abs(S @ one + R * np.log(R)).max() < 1e-12
    assert np.abs(D @ one + 0.5).max() < 1e-11


def test_unit_circle_pv_gauss():
    g = build_geometry([FourierCurve(1.0)], 16)
    _, D = _dense_layers(g, build_singular_weights(g), single=False)
    assert np.abs(D.sum(1) + 0.5).max() < 1e-11


def test_outer_curve_against_adaptive_oracle(domain_geom, domain_systems, rng):
    w, _, _ = domain_systems
    S, D = _dense_layers(domain_geom, w)
    outer = domain_geom.curve_of == 0
    dens = np.where(outer, np.cos(domain_geom.t), 0.0)
    curve = domain_geom.curves[0]
    for i in rng.choice(np.flatnonzero(outer), 5, replace=False):
        x, t = domain_geom.nodes[i], domain_geom.t[i]
        s_ref = layer_potential(curve, np.cos, x, "single", breaks=[t])
        d_ref = layer_potential(curve, np.cos, x, "double", breaks=[t])
        assert abs(S[i] @ dens - s_ref) < 1e-11
        # the discrete D row is the principal value; the oracle integrates the continuous PV kernel
        assert abs(D[i] @ dens - d_ref) < 1e-11


def test_circle_fourier_modes():
    R = 0.25
    g = build_geometry([FourierCurve(R)], 32, box=((-0.5, -0.5), 1.0))  # mode 32 needs one period per panel
    A = assemble_correction_system(g).matrix
    th = np.arctan2(g.nodes[:, 1], g.nodes[:, 0])
    resid = []
    for k in (1, 8, 32):
        phi = np.cos(k * th)
        assert np.abs(A @ phi - (-0.5 + R / (2 * k)) * phi).max() < 1e-11
        resid.append(np.abs(A @ phi + 0.5 * phi).max())
    assert resid[0] > resid[1] > resid[2]


def test_small_circle_conditioning(circle_geom):
    A = assemble_correction_system(circle_geom).matrix
    assert np.linalg.cond(A) < 50


def test_unit_circle_correction_is_singular():
    g = build_geometry([FourierCurve(1.0)], 16)
    with pytest.raises(SingularMatrix):
        assemble_correction_system(g)


def test_log_reproduction_multiply_connected(domain_geom, domain_systems, rng):
    _, corr, _ = domain_systems
    x0 = np.array([0.01, -0.02])  # inside the hole
    u = lambda x: np.log(np.hypot(*(np.atleast_2d(x) - x0).T))
    mu = solve(corr, u(domain_geom.nodes))
    assert mu.kind == DensityKind.CORRECTION
    pts = rng.uniform(-0.5, 0.5, (4000, 2))
    code, dist, node = domain_geom.classify(pts)
    keep = (code == 1) & (dist > 4 * domain_geom.node_h[node])
    got = layer_potentials_smooth(domain_geom, mu.values, pts[keep])
    assert keep.sum() > 200
    assert np.abs(got - u(pts[keep])).max() < 1e-10


def _extension_value(geom, dens, pts):
    return layer_potentials_smooth(geom, dens.values, pts, single=False) + dens.constant_term


def test_extension_of_constant(circle_geom):
    ext = assemble_extension_system(circle_geom)
    dens = solve(ext, np.full(circle_geom.n_nodes, 2.5))
    probe = np.array([[3.0, 1.0], [0.4, -0.3]])
    assert np.abs(_extension_value(circle_geom, dens, probe) - 2.5).max() < 1e-11


def test_extension_reproduces_exterior_harmonic(circle_geom):
    ext = assemble_extension_system(circle_geom)
    z = circle_geom.nodes[:, 0] + 1j * circle_geom.nodes[:, 1]
    dens = solve(ext, (1 / z).real)
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    probe = np.stack([0.45 * np.cos(ang), 0.45 * np.sin(ang)], -1)
    zp = probe[:, 0] + 1j * probe[:, 1]
    assert np.abs(_extension_value(circle_geom, dens, probe) - (1 / zp).real).max() < 1e-10
    far = np.array([[1e6, 0.0], [0.0, -1e6]])
    f = (1 / z).real
    val = _extension_value(circle_geom, dens, far)
    assert np.all(val >= f.min() - 1e-8) and np.all(val <= f.max() + 1e-8)


def test_zero_rhs_and_identity_column(circle_geom):
    sysm = assemble_correction_system(circle_geom)
    assert not np.any(solve(sysm, np.zeros(sysm.size)).values)
    e = np.zeros(sysm.size)
    e[17] = 1.0
    d = solve(sysm, e).values
    assert np.abs(sysm.matrix @ d - e).max() < 1e-12
    inv_col = np.linalg.inv(sysm.matrix)[:, 17]
    assert np.abs(d - inv_col).max() < 1e-12 * np.abs(inv_col).max() * 10


def test_domain_systems_well_conditioned(domain_systems):
    _, corr, ext = domain_systems
    assert corr.rcond > 1e-4 and ext.rcond > 1e-4
