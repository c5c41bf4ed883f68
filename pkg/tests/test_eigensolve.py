import numpy as np
import pytest

from polydet.errors import DegenerateEigenvalue, ValidationFailure
from polydet.eigensolve import (
    EigConfig,
    MPSSolver,
    dirichlet_eigenvalues,
    hadamard_eigenvalue_variation,
    polygon_hash,
    rectangle_spectrum,
    weyl_count_check,
)
from polydet.geometry import build_polygon, field_from_vertex_velocities, move_polygon
from conftest import dilation_field, side_shift_field


@pytest.fixture(scope="module")
def unit_square_p():
    return build_polygon([0, 1, 1 + 1j, 1j])


@pytest.fixture(scope="module")
def square_spec(unit_square_p):
    return dirichlet_eigenvalues(unit_square_p, 450.0)


class TestRectangleSpectrum:
    def test_first_three_unit_square(self):
        s = rectangle_spectrum(1, 1, 50.0 * np.pi**2 / 9)
        eigs = s.eigenvalue_array()
        assert eigs[0] == pytest.approx(2 * np.pi**2, rel=1e-14)
        assert eigs[1] == pytest.approx(5 * np.pi**2, rel=1e-14)
        assert eigs[2] == pytest.approx(5 * np.pi**2, rel=1e-14)

    def test_rect21_lambda1(self):
        s = rectangle_spectrum(2, 1, 50.0)
        assert s.eigenvalues[0] == pytest.approx(5 * np.pi**2 / 4, rel=1e-14)

    def test_counting_matches_lattice(self):
        lam_max = 300.0
        s = rectangle_spectrum(1.3, 0.8, lam_max)
        count = sum(1 for m in range(1, 40) for n in range(1, 40)
                    if (np.pi * m / 1.3) ** 2 + (np.pi * n / 0.8) ** 2 <= lam_max)
        assert s.n_eigs == count

    def test_weyl_check_passes(self):
        s = rectangle_spectrum(1, 1, 800.0)
        assert s.count_check["ok"]

    def test_invalid_input(self):
        with pytest.raises(ValidationFailure):
            rectangle_spectrum(-1, 1, 10)


class TestMPS:
    def test_square_first_30_vs_exact(self, square_spec):
        exact = rectangle_spectrum(1, 1, 450.0).eigenvalue_array()
        got = square_spec.eigenvalue_array()
        assert len(got) == len(exact)
        k = min(30, len(got))
        assert np.max(np.abs(got[:k] - exact[:k]) / exact[:k]) < 1e-8

    def test_lambda1_value(self, square_spec):
        assert square_spec.eigenvalues[0] == pytest.approx(19.7392088021787, abs=1e-8)

    def test_error_estimates_cover_truth(self, square_spec):
        exact = rectangle_spectrum(1, 1, 450.0).eigenvalue_array()
        got = square_spec.eigenvalue_array()
        errs = np.asarray(square_spec.errors)
        # estimates are heuristic; require them within two orders of the truth
        assert np.all(np.abs(got - exact) < np.maximum(100 * errs, 1e-7))

    def test_equilateral_lambda1(self):
        tri = build_polygon([0, 1, 0.5 + 1j * np.sqrt(3) / 2])
        spec = dirichlet_eigenvalues(tri, 80.0)
        assert spec.eigenvalues[0] == pytest.approx(16 * np.pi**2 / 3, rel=1e-10)

    def test_rigid_motion_invariance(self):
        cfg = EigConfig()
        p1 = build_polygon([0, 1, 1 + 1j, 1j])
        rot = np.exp(0.37j)
        p2 = build_polygon([rot * v + (0.4 - 0.2j) for v in p1.vertices])
        s1 = dirichlet_eigenvalues(p1, 120.0, cfg).eigenvalue_array()
        s2 = dirichlet_eigenvalues(p2, 120.0, cfg).eigenvalue_array()
        assert len(s1) == len(s2)
        assert np.max(np.abs(s1 - s2) / s1) < 1e-10

    def test_polygon_hash_stable(self, unit_square_p):
        assert polygon_hash(unit_square_p) == polygon_hash(build_polygon([0, 1, 1 + 1j, 1j]))


class TestNormalization:
    def test_l2_norm_against_interior_quadrature(self, unit_square_p):
        # Rellich-based norm vs direct interior quadrature of u^2 for the
        # square's ground state
        solver = MPSSolver(unit_square_p, 60.0)
        spec = solver.solve()
        lam = spec.eigenvalues[0]
        func, C = solver.eigenfunction(lam)
        norm_rellich = solver.l2_norm_sq(lam, C)[0]

        from polydet.quadrature import leggauss
        x, w = leggauss(40)
        xs = 0.5 * (1 + x)
        ws = 0.5 * w
        X, Y = np.meshgrid(xs, xs)
        pts = (X + 1j * Y).ravel()
        vals = func(pts)[:, 0]
        norm_grid = float(np.sum((ws[:, None] * ws[None, :]).ravel() * vals**2))
        assert norm_rellich == pytest.approx(norm_grid, rel=1e-8)


class TestHadamardVariation:
    def test_square_stretch(self, unit_square_p):
        f = field_from_vertex_velocities(unit_square_p, [0, 1, 1, 0])
        dl = hadamard_eigenvalue_variation(unit_square_p, f, 1)
        assert dl == pytest.approx(-2 * np.pi**2, rel=1e-6)

    def test_dilation(self, unit_square_p):
        f = dilation_field(unit_square_p)
        dl = hadamard_eigenvalue_variation(unit_square_p, f, 1)
        assert dl == pytest.approx(-4 * np.pi**2, rel=1e-6)

    def test_rectangle_family_exact_derivative(self):
        # a x 1 family: d lambda_1 / da = -2 pi^2 / a^3 at a = 1.2
        a = 1.2
        p = build_polygon([0, a, a + 1j, 1j])
        f = field_from_vertex_velocities(p, [0, 1, 1, 0])
        dl = hadamard_eigenvalue_variation(p, f, 1)
        assert dl == pytest.approx(-2 * np.pi**2 / a**3, rel=1e-6)

    def test_side_rotation_matches_finite_difference(self, unit_square_p):
        # tilt the right side about its midpoint
        p = unit_square_p
        f = field_from_vertex_velocities(p, [0, -0.5, 0.5, 0])
        dl = hadamard_eigenvalue_variation(p, f, 1)
        t = 1e-4
        lp = dirichlet_eigenvalues(move_polygon(p, f, t), 30.0).eigenvalues[0]
        lm = dirichlet_eigenvalues(move_polygon(p, f, -t), 30.0).eigenvalues[0]
        fd = (lp - lm) / (2 * t)
        assert dl == pytest.approx(fd, rel=1e-4, abs=1e-4)

    def test_degenerate_rejected(self, unit_square_p):
        f = dilation_field(unit_square_p)
        with pytest.raises(DegenerateEigenvalue):
            hadamard_eigenvalue_variation(unit_square_p, f, 2)  # 5 pi^2 is double


class TestWeylCheck:
    def test_thinned_spectrum_flagged(self, unit_square_p):
        full = rectangle_spectrum(1, 1, 800.0).eigenvalue_array()
        thinned = np.delete(full, np.arange(3, len(full), 4))
        check = weyl_count_check(unit_square_p, thinned, 800.0)
        assert not check["ok"]

    def test_full_spectrum_ok(self, unit_square_p):
        full = rectangle_spectrum(1, 1, 800.0).eigenvalue_array()
        assert weyl_count_check(unit_square_p, full, 800.0)["ok"]
