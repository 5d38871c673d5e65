import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from boxpoisson.errors import CurveIntersection, NonPositiveRadius
from boxpoisson.geometry import (
    FourierCurve, Location, Orientation, build_geometry, locate, panel_antiderivative, tangential_derivative,
)


def test_unit_circle_nodes_and_normals():
    g = build_geometry([FourierCurve(1.0)], 8, box_padding=0.25)
    assert g.n_nodes == 128
    r = np.hypot(*g.nodes.T)
    assert np.abs(r - 1).max() < 1e-14
    assert np.abs(g.normals - g.nodes / r[:, None]).max() < 1e-14


def test_default_geometry_normals_point_away(domain_geom):
    g = domain_geom
    # frozen from the auto-resolution run: 128 panels on each curve
    assert g.panels_per_curve == [128, 128]
    inner = g.curve_of == 1
    # inner curve is centred at the origin; its normals point toward the origin
    assert np.all(np.sum(g.normals[inner] * g.nodes[inner], 1) < 0)
    assert np.all(np.sum(g.normals[~inner] * g.nodes[~inner], 1) > 0)
    assert g.curves[1].orientation == Orientation.INNER


def test_ellipse_like_perimeter_matches_adaptive_arclength():
    c = FourierCurve(1.0, {2: 0.3})
    g = build_geometry([c], "auto")
    L, _ = integrate.quad(lambda t: np.hypot(*c.evaluate(np.array([t]))[1][0]), 0, 2 * np.pi, epsabs=0,
                          epsrel=1e-13, limit=500)
    assert abs(g.perimeter() - L) < 1e-12 * L


def test_nonpositive_radius_rejected():
    with pytest.raises(NonPositiveRadius):
        build_geometry([FourierCurve(0.1, {3: 0.2})], 16)


def test_intersecting_curves_rejected():
    outer = FourierCurve(0.25)
    inner = FourierCurve(0.1, center=(0.2, 0.0), orientation="inner")
    with pytest.raises(CurveIntersection):
        build_geometry([outer, inner], 16)


def test_locate_examples(domain_geom):
    assert locate([0.0, 0.0], domain_geom).location == Location.OUTSIDE  # inside the hole
    assert locate([-0.5, -0.5], domain_geom).location == Location.OUTSIDE
    assert locate([0.15, 0.0], domain_geom).location == Location.INSIDE
    gc = build_geometry([FourierCurve(0.2)], 8, 0.25)
    r = locate([0.2, 0.0], gc)
    assert r.location == Location.BOUNDARY and r.distance < 1e-14


def _ray_cast_inside(poly, p):
    """Even-odd rule against a closed polygon."""
    x, y = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    cross = ((y <= p[1]) != (y2 <= p[1]))
    xi = x + (p[1] - y) * (x2 - x) / np.where(y2 != y, y2 - y, 1)
    return bool(np.sum(cross & (xi > p[0])) % 2)


def test_classification_matches_ray_casting(domain_geom, rng):
    th = np.linspace(0, 2 * np.pi, 20000, endpoint=False)
    polys = [c.evaluate(th)[0] for c in domain_geom.curves]
    pts = rng.uniform(-0.45, 0.45, (400, 2))
    code, dist, _ = domain_geom.classify(pts)
    keep = dist > 1e-4  # polygon error is ~1e-6
    expect = np.array([_ray_cast_inside(polys[0], p) and not _ray_cast_inside(polys[1], p) for p in pts[keep]])
    assert np.array_equal(code[keep] == 1, expect)


def test_tangential_derivative_examples(domain_geom):
    g1 = build_geometry([FourierCurve(1.0)], 16)
    assert np.abs(tangential_derivative(np.full(g1.n_nodes, 3.0), g1)).max() < 1e-12
    th = g1.t
    assert np.abs(tangential_derivative(np.sin(th), g1) - np.cos(th)).max() < 1e-10
    # x1^2 on the outer test curve against centred differences in the parameter
    g = domain_geom
    sel = np.flatnonzero(g.curve_of == 0)[::97]
    c = g.curves[0]
    d = tangential_derivative(g.nodes[:, 0] ** 2, g)[sel]
    h = 1e-6
    xp, xm = c.evaluate(g.t[sel] + h)[0], c.evaluate(g.t[sel] - h)[0]
    fd = (xp[:, 0] ** 2 - xm[:, 0] ** 2) / (2 * h) / g.speed[sel]
    assert np.abs(d - fd).max() < 1e-8


def test_panel_antiderivative_inverts_derivative(domain_geom):
    v = np.sin(7 * domain_geom.nodes[:, 0]) * domain_geom.nodes[:, 1]
    A = panel_antiderivative(tangential_derivative(v, domain_geom), domain_geom).reshape(-1, 16)
    vv = v.reshape(-1, 16)
    shift = vv - A
    assert np.abs(shift - shift[:, :1]).max() < 1e-11


# ------------------------------------------------------------------ invariants
def test_gauss_identity(domain_geom, rng):
    g = domain_geom
    pts = rng.uniform(-0.5, 0.5, (3000, 2))
    code, dist, node = g.classify(pts)
    far = dist > 2 * g.node_h[node]
    d1 = g.double_layer_of_one(pts[far])
    assert np.abs(d1[code[far] == 1] + 1).max() < 1e-10
    assert np.abs(d1[code[far] == 0]).max() < 1e-10
    assert (code[far] == 1).sum() > 100 and (code[far] == 0).sum() > 100


def test_reparametrization_stability(domain_geom):
    g2 = build_geometry(domain_geom.curves, [2 * n for n in domain_geom.panels_per_curve], box=domain_geom.box)
    assert abs(g2.perimeter() - domain_geom.perimeter()) < 1e-12 * g2.perimeter()


def test_normal_orthogonality(domain_geom):
    assert np.abs(np.sum(domain_geom.normals * domain_geom.tangents, 1)).max() < 1e-14


def test_box_strictly_contains_domain(domain_geom):
    lo = domain_geom.box_corner
    hi = lo + domain_geom.box_width
    assert np.all(domain_geom.nodes > lo) and np.all(domain_geom.nodes < hi)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.3), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1), st.floats(0.0, 0.3))
def test_circle_classification_property(r, cx, cy, amp):
    """Random perturbed circles: classification agrees with the polar test away from the curve."""
    c = FourierCurve(r, {3: amp * r}, center=(cx, cy))
    g = build_geometry([c], "auto", box=((-0.6, -0.6), 1.2))
    pts = np.random.default_rng(0).uniform(-0.6, 0.6, (300, 2))
    code, dist, _ = g.classify(pts)
    keep = dist > 1e-6
    assert np.array_equal(code[keep] == 1, c.polar_inside(pts[keep]))
    # weights sum to the perimeter independent of the panel count
    g2 = build_geometry([c], [2 * n for n in g.panels_per_curve], box=g.box)
    assert abs(g.perimeter() - g2.perimeter()) < 1e-12 * g.perimeter()
