import numpy as np
import pytest

from polydet.errors import TailNotConverged, ValidationFailure
from polydet.eigensolve import rectangle_spectrum
from polydet.geometry import build_polygon
from polydet.zetadet import (
    ZetaConfig,
    heat_coefficients,
    rectangle_logdet_bruteforce,
    rectangle_logdet_exact,
    scaling_variation,
    zeta_logdet,
)


class TestHeatCoefficients:
    def test_unit_square(self):
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        assert h.a1 == pytest.approx(1 / (4 * np.pi), rel=1e-14)
        assert h.a2 == pytest.approx(-0.5, rel=1e-14)
        assert h.b1 == pytest.approx(0.25, rel=1e-13)

    def test_equilateral_triangle(self):
        p = build_polygon([0, 1, 0.5 + 1j * np.sqrt(3) / 2])
        assert heat_coefficients(p).b1 == pytest.approx(1 / 3, rel=1e-12)

    def test_right_isoceles(self):
        p = build_polygon([0, 1, 1j])
        assert heat_coefficients(p).b1 == pytest.approx(3 / 8, rel=1e-12)

    def test_any_rectangle_b1_quarter(self, rng):
        for _ in range(5):
            a, b = rng.uniform(0.5, 3, 2)
            p = build_polygon([0, a, a + 1j * b, 1j * b])
            assert heat_coefficients(p).b1 == pytest.approx(0.25, rel=1e-12)

    def test_hexagon(self):
        p = build_polygon(np.exp(1j * np.pi * np.arange(6) / 3))
        assert heat_coefficients(p).b1 == pytest.approx(5 / 24, rel=1e-12)


class TestScalingVariation:
    def test_values(self):
        assert scaling_variation(build_polygon([0, 1, 1 + 1j, 1j])) == pytest.approx(-0.5)
        tri = build_polygon([0, 1, 0.5 + 1j * np.sqrt(3) / 2])
        assert scaling_variation(tri) == pytest.approx(-2 / 3)
        hexa = build_polygon(np.exp(1j * np.pi * np.arange(6) / 3))
        assert scaling_variation(hexa) == pytest.approx(-5 / 12)


class TestRectangleExact:
    def test_symmetry(self):
        assert rectangle_logdet_exact(2, 1) == pytest.approx(
            rectangle_logdet_exact(1, 2), abs=1e-12)
        assert rectangle_logdet_exact(1.7, 0.4) == pytest.approx(
            rectangle_logdet_exact(0.4, 1.7), abs=1e-12)

    def test_scaling_identity(self):
        c = 2.0
        diff = rectangle_logdet_exact(c, c) - rectangle_logdet_exact(1, 1)
        assert diff == pytest.approx(-0.5 * np.log(c), abs=1e-12)

    def test_brute_force_agreement(self):
        for a, b in [(1, 1), (2, 1)]:
            assert abs(rectangle_logdet_exact(a, b)
                       - rectangle_logdet_bruteforce(a, b)) < 1e-8

    def test_invalid(self):
        with pytest.raises(ValidationFailure):
            rectangle_logdet_exact(0, 1)


class TestZetaLogdet:
    def test_unit_square_vs_exact(self):
        spec = rectangle_spectrum(1, 1, 600.0)
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        ld = zeta_logdet(spec, h, ZetaConfig(tau0=0.05))
        assert abs(ld.value - rectangle_logdet_exact(1, 1)) < 1e-6

    def test_rect21_vs_exact(self):
        spec = rectangle_spectrum(2, 1, 600.0)
        h = heat_coefficients(build_polygon([0, 2, 2 + 1j, 1j]))
        ld = zeta_logdet(spec, h, ZetaConfig(tau0=0.05))
        assert abs(ld.value - rectangle_logdet_exact(2, 1)) < 1e-6

    def test_scaled_square(self):
        # logdet(c P) - logdet(P) = -2 b1 log c = -log(c)/2
        c = 2.0
        h1 = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        hc = heat_coefficients(build_polygon([0, c, c + 1j * c, 1j * c]))
        ld1 = zeta_logdet(rectangle_spectrum(1, 1, 800.0), h1, ZetaConfig(tau0=0.04))
        ldc = zeta_logdet(rectangle_spectrum(c, c, 800.0 / c**2), hc,
                          ZetaConfig(tau0=0.04 * c**2))
        assert ldc.value - ld1.value == pytest.approx(-0.5 * np.log(c), abs=1e-6)

    def test_error_estimate_bounds_doubling(self):
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        ld_small = zeta_logdet(rectangle_spectrum(1, 1, 400.0), h, ZetaConfig(tau0=0.06))
        ld_big = zeta_logdet(rectangle_spectrum(1, 1, 800.0), h, ZetaConfig(tau0=0.06))
        observed = abs(ld_big.value - ld_small.value)
        assert observed <= ld_small.error_estimate + 1e-9

    def test_diagnostic_shrinks_with_lambda_max(self):
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        prev = None
        for lam_max in (300.0, 600.0, 1200.0):
            ld = zeta_logdet(rectangle_spectrum(1, 1, lam_max), h,
                             ZetaConfig(tau0=25.0 / lam_max, tail_tol=1.0))
            if prev is not None:
                assert ld.error_estimate < prev
            prev = ld.error_estimate

    def test_tail_not_converged(self):
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        spec = rectangle_spectrum(1, 1, 60.0)
        with pytest.raises(TailNotConverged):
            zeta_logdet(spec, h, ZetaConfig(tau0=0.002, tail_tol=1e-8))

    def test_weyl_gate(self):
        import dataclasses
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        spec = rectangle_spectrum(1, 1, 600.0)
        bad = dataclasses.replace(spec, count_check={"ok": False})
        with pytest.raises(ValidationFailure):
            zeta_logdet(bad, h, ZetaConfig(tau0=0.05))

    def test_report_payload(self):
        h = heat_coefficients(build_polygon([0, 1, 1 + 1j, 1j]))
        ld = zeta_logdet(rectangle_spectrum(1, 1, 600.0), h, ZetaConfig(tau0=0.05))
        d = ld.to_json_dict()
        assert set(d) == {"logdet", "error", "n_eigs", "diagnostics"}
        assert d["n_eigs"] == ld.n_eigs_used
