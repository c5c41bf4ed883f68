import numpy as np
import pytest

from polydet.errors import (
    CircleTooLarge,
    NonConvex,
    PoleQuery,
    ValidationFailure,
    VertexQuery,
)
from polydet.geometry import build_polygon
from polydet.scmap import (
    SCConfig,
    SCMap,
    derivative_prefactor,
    map_forward,
    map_inverse,
    map_on_side,
    sc_derivative,
    schwarzian_xz,
    schwarzian_zx,
    schwarzian_zx_at_z,
    solve_parameter_problem,
    vertex_expansion,
    _mapped_vertices,
)
from conftest import random_convex_polygon


@pytest.fixture(scope="module")
def square_map():
    return solve_parameter_problem(build_polygon([0, 1, 1 + 1j, 1j]))


@pytest.fixture(scope="module")
def rect_map():
    return solve_parameter_problem(build_polygon([0, 2, 2 + 1j, 1j]))


@pytest.fixture(scope="module")
def tri_map():
    return solve_parameter_problem(build_polygon([0, 1, 1j]))


class TestParameterProblem:
    def test_triangle_has_no_unknowns(self, tri_map):
        assert tri_map.prevertices == (-1.0, 0.0, 1.0)
        assert tri_map.residual == 0.0

    def test_square_side_lengths(self, square_map):
        xk = _mapped_vertices(square_map)
        sides = np.abs(np.diff(xk))
        assert np.all(np.abs(sides - 1.0) < 1e-10)
        # exact gauge value for the square: interior prevertex at 1/3
        assert square_map.prevertices[2] == pytest.approx(1 / 3, abs=1e-12)

    def test_rectangle_ratio(self, rect_map):
        xk = _mapped_vertices(rect_map)
        sides = np.abs(np.diff(xk))
        assert sides[0] / sides[1] == pytest.approx(2.0, rel=1e-10)
        assert sides[2] / sides[1] == pytest.approx(2.0, rel=1e-10)

    def test_exponent_range(self, square_map):
        for e in square_map.exponents:
            assert -1 < e < 0

    def test_random_polygon_regression(self, rng):
        for _ in range(20):
            p = random_convex_polygon(rng)
            m = solve_parameter_problem(p)
            xk = _mapped_vertices(m)
            L = np.asarray(p.side_lengths)[: p.n - 1]
            rel = np.abs(np.abs(np.diff(xk)) - L) / L
            assert rel.max() < 1e-10


class TestMapForward:
    def test_prevertex_images(self, square_map):
        verts = square_map.polygon.vertex_array()
        for k, zk in enumerate(square_map.prevertices):
            assert abs(map_forward(square_map, zk) - verts[k]) < 1e-10

    def test_path_independence(self, square_map):
        pts = [0.3 + 0.7j, -0.5 + 1.2j, 0.9 + 0.1j]
        for z in pts:
            vals = [map_forward(square_map, z, start=k) for k in range(4)]
            assert max(abs(v - vals[0]) for v in vals) < 1e-10

    def test_square_conformal_center(self, square_map):
        # under this gauge the square's symmetry point is (1+2j)/5 exactly
        # (Moebius image of the symmetric-gauge fixed point)
        x = map_forward(square_map, (1 + 2j) / 5)
        assert abs(x - (0.5 + 0.5j)) < 1e-8

    def test_boundary_correspondence(self, square_map, rng):
        zk = square_map.prevertex_array()
        verts = square_map.polygon.vertex_array()
        for j in range(3):
            for t in rng.uniform(0.05, 0.95, 4):
                z = zk[j] + t * (zk[j + 1] - zk[j])
                x = map_forward(square_map, z)
                a, b = verts[j], verts[(j + 1) % 4]
                tau = (b - a) / abs(b - a)
                off = ((x - a) * np.conj(tau)).imag
                assert abs(off) < 1e-9

    def test_map_on_side_consistency(self, rect_map):
        z0, z1 = rect_map.prevertices[0], rect_map.prevertices[1]
        nodes = np.linspace(z0 + 0.05, z1 - 0.05, 9)
        xs = map_on_side(rect_map, 0, nodes)
        for node, x in zip(nodes[::4], xs[::4]):
            assert abs(map_forward(rect_map, node) - x) < 1e-11


class TestMapInverse:
    def test_round_trip_random_interior(self, square_map, rng):
        zs = rng.uniform(-2, 2, 100) + 1j * rng.uniform(0.05, 3.0, 100)
        for z in zs:
            x = map_forward(square_map, z)
            z_back = map_inverse(square_map, x)
            assert abs(z_back - z) < 1e-9 * max(1.0, abs(z))

    def test_boundary_approach(self, square_map):
        # x_k + eps along a side: preimage approaches z_k
        verts = square_map.polygon.vertex_array()
        tau = (verts[2] - verts[1]) / abs(verts[2] - verts[1])
        gaps = []
        for eps in [1e-2, 1e-3, 1e-4]:
            z = map_inverse(square_map, verts[1] + eps * tau)
            gaps.append(abs(z - square_map.prevertices[1]))
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[2] < 1e-2

    def test_centroid_of_square(self, square_map):
        z = map_inverse(square_map, 0.5 + 0.5j)
        assert abs(z - (1 + 2j) / 5) < 1e-9

    def test_vertex_query(self, square_map):
        with pytest.raises(VertexQuery):
            map_inverse(square_map, 1 + 1j)


class TestSchwarzian:
    def test_flat_data_is_moebius(self):
        poly = build_polygon([0, 1, 1j])
        flat = SCMap(prevertices=(-1.0, 0.0, 1.0), exponents=(0.0, 0.0, 0.0),
                     prefactor=1.0 + 0j, base_point=0j, polygon=poly)
        zs = np.array([0.5 + 0.5j, -1.2 + 2j, 3 + 0.1j])
        assert np.max(np.abs(schwarzian_xz(flat, zs))) == 0.0

    def test_leading_coefficient_at_prevertex(self, rect_map):
        # eps must sit well below the smallest prevertex gap (~0.015 here)
        for i in range(3):
            zi = rect_map.prevertices[i]
            a = rect_map.polygon.angles[i]
            expect = (np.pi**2 - a**2) / (2 * np.pi**2)
            v1 = (1e-5 * 1j) ** 2 * schwarzian_xz(rect_map, zi + 1e-5 * 1j)
            v2 = (5e-6 * 1j) ** 2 * schwarzian_xz(rect_map, zi + 5e-6 * 1j)
            rich = 2 * v2 - v1
            assert abs(rich - expect) < 1e-6

    def test_finite_difference_schwarzian(self, square_map):
        # five-point finite differences of log x' at z = 2i
        z0, h = 2j, 1e-2
        f = lambda z: np.log(sc_derivative(square_map, z))
        d1 = (-f(z0 + 2 * h) + 8 * f(z0 + h) - 8 * f(z0 - h) + f(z0 - 2 * h)) / (12 * h)
        d2 = (-f(z0 + 2 * h) + 16 * f(z0 + h) - 30 * f(z0) + 16 * f(z0 - h) - f(z0 - 2 * h)) / (12 * h**2)
        fd = d2 - 0.5 * d1**2  # {x,z} = (log x')'' + ... using log-derivative form
        assert abs(fd - schwarzian_xz(square_map, z0)) < 1e-6

    def test_pole_query(self, square_map):
        with pytest.raises(PoleQuery):
            schwarzian_xz(square_map, square_map.prevertices[1])

    def test_chain_rule_identity(self, square_map, rng):
        zs = rng.uniform(-2, 2, 50) + 1j * rng.uniform(0.1, 2.5, 50)
        for z in zs:
            sxz = schwarzian_xz(square_map, z)
            szx = schwarzian_zx_at_z(square_map, z)
            xp = sc_derivative(square_map, z)
            assert abs(szx * xp**2 + sxz) < 1e-9 * max(1.0, abs(sxz))

    def test_half_plane_identity_data(self):
        poly = build_polygon([0, 1, 1j])
        flat = SCMap(prevertices=(-1.0, 0.0, 1.0), exponents=(0.0, 0.0, 0.0),
                     prefactor=1.0 + 0j, base_point=0j, polygon=poly)
        assert schwarzian_zx_at_z(flat, 0.4 + 1.1j) == 0

    def test_near_vertex_limit(self, square_map):
        # (x-a)^2 {z,x} -> (1 - pi^2/alpha^2)/2, Richardson-checked
        verts = square_map.polygon.vertex_array()
        a = verts[1]
        alpha = square_map.polygon.angles[1]
        expect = (1 - np.pi**2 / alpha**2) / 2
        inward = np.exp(1j * (np.angle(verts[2] - a) + alpha / 2))
        vals = []
        for eps in [1e-3, 1e-4]:
            x = a + eps * inward
            vals.append((x - a) ** 2 * schwarzian_zx(square_map, x))
        # leading correction is O(eps^{pi/alpha}) = O(eps^2) here
        assert abs(vals[1] - expect) < 1e-6
        assert abs(vals[1] - expect) < abs(vals[0] - expect)


class TestVertexExpansion:
    def test_leading_coefficient_closed_form(self, rect_map):
        zk = rect_map.prevertex_array()
        g = np.asarray(rect_map.exponents)
        for i in range(rect_map.n):
            ve = vertex_expansion(rect_map, i, order=3)
            # C_i = (pi/alpha_i) C prod_{k != i} (z_i - z_k)^{g_k}, UHP branch
            s = 0j
            for k in range(rect_map.n):
                if k == i:
                    continue
                d = zk[i] - zk[k]
                s += g[k] * (np.log(abs(d)) + 1j * np.pi * (d < 0))
            closed = (np.pi / rect_map.polygon.angles[i]) * rect_map.prefactor * np.exp(s)
            assert abs(ve.leading - closed) < 1e-10 * abs(closed)
            assert abs(ve.derivative_leading - derivative_prefactor(rect_map, i)) < 1e-12

    def test_expansion_matches_map(self, tri_map):
        for i in range(3):
            ve = vertex_expansion(tri_map, i, order=4)
            zi = tri_map.prevertices[i]
            xi = tri_map.polygon.vertices[i]
            for w in [1e-3 * np.exp(0.4j), 1e-3]:
                ex = xi + ve.evaluate(w)
                fw = map_forward(tri_map, zi + w)
                assert abs(ex - fw) < 1e-9 * abs(fw - xi) + 1e-13

    def test_invariant_tolerance(self, square_map):
        ve = vertex_expansion(square_map, 2, order=3)
        w = 1e-3 * np.exp(1j * 0.8)
        ex = square_map.polygon.vertices[2] + ve.evaluate(w)
        fw = map_forward(square_map, square_map.prevertices[2] + w)
        assert abs(ex - fw) / abs(fw - square_map.polygon.vertices[2]) < 1e-8

    def test_order0_truncation_slope(self, square_map):
        i = 2
        ve = vertex_expansion(square_map, i, order=4)
        apio = ve.alpha / np.pi
        rs = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
        errs = []
        for r in rs:
            w = r * np.exp(0.9j)
            lead = ve.leading * np.exp(apio * np.log(w))
            fw = map_forward(square_map, ve.prevertex + w) - square_map.polygon.vertices[i]
            errs.append(abs(lead - fw))
        slope = np.polyfit(np.log(rs), np.log(errs), 1)[0]
        assert abs(slope - (apio + 1)) < 0.05

    def test_circle_too_large(self, square_map):
        with pytest.raises(CircleTooLarge):
            vertex_expansion(square_map, 2, order=3, radius=0.9)

    def test_order_capped(self, square_map):
        with pytest.raises(ValidationFailure):
            vertex_expansion(square_map, 2, order=9)


class TestGaugeRobustness:
    def test_jittered_initialization_same_map(self):
        p = build_polygon([0, 1.4, 1.9 + 1.1j, 0.4 + 1.7j, -0.5 + 0.9j])
        m0 = solve_parameter_problem(p)
        m1 = solve_parameter_problem(p, SCConfig(init_jitter=0.4, init_seed=11))
        assert np.allclose(m0.prevertices, m1.prevertices, atol=1e-11)

    def test_nonconvex_rejected_upstream(self):
        with pytest.raises(NonConvex):
            build_polygon([0, 2, 2 + 2j, 1 + 0.5j, 2j])
