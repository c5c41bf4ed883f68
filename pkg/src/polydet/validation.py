"""Validation suites: every acceptance check as a callable record producer.

Each check returns a dict with the measured discrepancy, its tolerance and a
pass flag; the CLI renders them as a table and the test suite asserts them.
Suites: geometry, scmap, eigs, det, var, wz, all.
"""

import time

import numpy as np

from . import varform
from .eigensolve import (
    EigConfig,
    MPSSolver,
    dirichlet_eigenvalues,
    hadamard_eigenvalue_variation,
    rectangle_spectrum,
)
from .errors import MissedEigenvalue
from .geometry import build_polygon, field_from_vertex_velocities, move_polygon
from .scmap import map_forward, solve_parameter_problem, _mapped_vertices
from .smoothwz import SmoothDomain, alvarez_logdet, disk, wz_variation, wz_vs_alvarez_fd
from .varform import (
    VarConfig,
    contour_shift_integral,
    corner_constant,
    corner_constant_by_contour,
    main_formula,
)
from .zetadet import (
    ZetaConfig,
    heat_coefficients,
    rectangle_logdet_exact,
    scaling_variation,
    zeta_logdet,
)


def _record(name, value, tol, detail=""):
    return {
        "criterion": name,
        "measured": float(value),
        "tolerance": float(tol),
        "passed": bool(value <= tol),
        "detail": detail,
    }


def _timed(fn):
    t0 = time.perf_counter()
    recs = fn()
    dt = time.perf_counter() - t0
    for r in recs:
        r.setdefault("runtime_s", round(dt / max(len(recs), 1), 3))
    return recs


# ---------------------------------------------------------------------------
# geometry helpers shared by suites
# ---------------------------------------------------------------------------

def _random_convex(rng, n_min=3, n_max=8):
    while True:
        n = rng.integers(n_min, n_max + 1)
        th = np.sort(rng.uniform(0, 2 * np.pi, n))
        if np.min(np.diff(np.concatenate([th, [th[0] + 2 * np.pi]]))) < 0.3:
            continue
        v = rng.uniform(0.75, 1.25, n) * np.exp(1j * th)
        try:
            p = build_polygon(v)
        except Exception:
            continue
        if min(p.angles) < 0.35 or max(p.angles) > np.pi - 0.25:
            continue
        if min(p.side_lengths) < 0.3:
            continue
        return p


def _side_shift(p, j, speed=1.0):
    n = p.n
    vel = [0j] * n
    nu = p.side_normal(j)
    for vtx, other in ((j, (j - 1) % n), ((j + 1) % n, (j + 1) % n)):
        tau_o = p.side_tangent(other)
        vel[vtx] = speed * tau_o / (np.conj(nu) * tau_o).real
    return field_from_vertex_velocities(p, vel)


def _dilation(p):
    return field_from_vertex_velocities(p, list(p.vertices))


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def check_disk_law():
    """Criterion 1: wz_variation(disk, V=w) = -1/3 within 1e-8."""
    v = wz_variation(disk(1.0), [0.0, 1.0])
    return [_record("1 disk law wz(disk, V=w) = -1/3", abs(v + 1.0 / 3.0), 1e-8,
                    f"value {v:.12f}")]


def check_wz_alvarez():
    """Criterion 2: |wz_variation - d/deps alvarez| < 1e-6 on 15 cases."""
    domains = [
        disk(1.0),
        SmoothDomain((0.1, 1.0, 0.08)),
        SmoothDomain((0.0, 1.0, 0.05 + 0.04j, 0.03)),
        SmoothDomain((0.0, 0.9, 0.0, 0.12)),
        SmoothDomain((0.2j, 1.1, 0.06, -0.02j, 0.02)),
    ]
    perturbations = [[0.0, 1.0], [0.0, 0.3, 0.5], [0.1, 0.0, 0.0, 0.4j]]
    worst = 0.0
    for d in domains:
        for V in perturbations:
            f, fd = wz_vs_alvarez_fd(d, V, eps=1e-4)
            worst = max(worst, abs(f - fd))
    return [_record("2 WZ vs Alvarez finite difference (15 cases)", worst, 1e-6)]


def check_corner_constant():
    """Criterion 3: contour evaluation matches the closed form."""
    worst = 0.0
    for beta in (np.pi / 2, np.pi, 3.0, 2 * np.pi, 3 * np.pi):
        worst = max(worst, abs(corner_constant_by_contour(beta) - corner_constant(beta)))
    return [_record("3 corner constant contour vs closed form", worst, 1e-8)]


def check_rectangle_oracle(fast=False):
    """Criterion 4: MPS + zeta pipeline vs the exact rectangle formula."""
    recs = []
    cases = [((1.0, 1.0), 560.0, 0.05), ((2.0, 1.0), 520.0, 0.048)]
    for (a, b), lam_max, tau0 in cases:
        p = build_polygon([0, a, a + 1j * b, 1j * b])
        spec = dirichlet_eigenvalues(p, lam_max)
        ld = zeta_logdet(spec, heat_coefficients(p), ZetaConfig(tau0=tau0))
        exact = rectangle_logdet_exact(a, b)
        recs.append(_record(f"4 rectangle oracle ({a:g},{b:g})",
                            abs(ld.value - exact), 1e-5,
                            f"pipeline {ld.value:.8f} exact {exact:.8f} "
                            f"n_eigs {ld.n_eigs_used}"))
    return recs


def check_main_vs_rectangle_derivative():
    """Criterion 5: side shift of the unit square vs d/da of the exact formula."""
    p = build_polygon([0, 1, 1 + 1j, 1j])
    m = solve_parameter_problem(p)
    f = _side_shift(p, 1)
    dv = main_formula(p, m, f)
    h = 1e-4
    d1 = (rectangle_logdet_exact(1 + h, 1) - rectangle_logdet_exact(1 - h, 1)) / (2 * h)
    d2 = (rectangle_logdet_exact(1 + h / 2, 1) - rectangle_logdet_exact(1 - h / 2, 1)) / h
    deriv = (4 * d2 - d1) / 3
    return [_record("5 main formula vs exact rectangle derivative",
                    abs(dv.total - deriv), 1e-5,
                    f"formula {dv.total:.10f} exact {deriv:.10f} "
                    f"corner term {dv.corner_term:.1e}")]


def check_scaling_law():
    """Criterion 6: main_formula(dilation) = -2 b1 for three benchmark shapes."""
    recs = []
    shapes = [
        ("square", [0, 1, 1 + 1j, 1j]),
        ("right isoceles", [0, 1, 1j]),
        ("regular hexagon", np.exp(1j * np.pi * np.arange(6) / 3)),
    ]
    for name, verts in shapes:
        p = build_polygon(verts)
        m = solve_parameter_problem(p)
        dv = main_formula(p, m, _dilation(p))
        target = scaling_variation(p)
        recs.append(_record(f"6 scaling law ({name})", abs(dv.total - target), 1e-5,
                            f"formula {dv.total:.9f} exact {target:.9f}"))
    return recs


def _aligned_spectra(p, f, ts, lam_max, cfg=None):
    """Spectra of the moved polygons with mutual integrity checks.

    A single missed or spurious eigenvalue in one sweep corrupts a finite
    difference far below any counting alarm's resolution, so the spectra of
    the slightly-moved polygons are matched index by index on a safe range.
    A defective sweep is healed by a targeted scan at the location the other
    sweeps predict (linear interpolation in t), which is far more reliable
    than re-running blind on a finer grid.
    """
    import dataclasses

    from .eigensolve import MPSSolver, Spectrum, weyl_count_check

    cfg = cfg or EigConfig()
    t_span = max(abs(t) for t in ts)
    drift_tol = 15 * t_span
    out = {t: dirichlet_eigenvalues(move_polygon(p, f, t), lam_max, cfg) for t in ts}

    def heal(t_bad, lam_pred):
        solver = MPSSolver(move_polygon(p, f, t_bad), lam_max, cfg)
        lo, hi = lam_pred * (1 - 0.02), lam_pred * (1 + 0.02)
        fine = np.linspace(lo, hi, 13)
        fvals = np.array([solver.sigma(l) for l in fine])
        k = min(max(int(np.argmin(fvals)), 1), len(fine) - 2)
        lam_star, err = solver._refine_checked(fine[k - 1], fine[k], fine[k + 1],
                                               fvals[k - 1], fvals[k], fvals[k + 1])
        if lam_star is None:
            return False
        sig = solver.sigmas(lam_star, count=4)
        mult = int((sig < cfg.mult_tol).sum())
        if mult == 0 or any(abs(lam_star - e) < 1e-7 * lam_star
                            for e in out[t_bad].eigenvalues):
            return False
        old = out[t_bad]
        eigs = sorted(list(old.eigenvalues) + [float(lam_star)] * mult)
        errs = list(old.errors) + [float(err)] * mult
        out[t_bad] = dataclasses.replace(
            old, eigenvalues=tuple(eigs), errors=tuple(sorted(errs)),
            count_check=weyl_count_check(move_polygon(p, f, t_bad), eigs, lam_max))
        return True

    # an interior miss shows as a persistent index shift against the location
    # interpolated (linearly in t) from two other sweeps: every later entry
    # matches the *next* predicted one.  Isolated deviations are avoided
    # crossings (curvature of the eigenvalue branches in t), and eigenvalues
    # drifting across lambda_max at the very top are harmless.
    for _ in range(6):
        defects = []
        blip_max = 0.0
        ts_sorted = sorted(ts)
        for t_bad in ts:
            g1, g2 = [t for t in ts_sorted if t != t_bad][:2]
            e1 = out[g1].eigenvalue_array()
            e2 = out[g2].eigenvalue_array()
            eb = out[t_bad].eigenvalue_array()
            n = min(len(e1), len(e2), len(eb))
            pred = e1[:n] + (e2[:n] - e1[:n]) * ((t_bad - g1) / (g2 - g1))
            dev = np.abs(eb[:n] - pred) / pred
            bad_idx = np.nonzero(dev > drift_tol)[0]
            if len(bad_idx) == 0:
                continue
            i = int(bad_idx[0])
            m = min(n - 1 - i, 6)
            shifted = np.mean(np.abs(eb[i:i + m] - pred[i + 1:i + 1 + m])
                              / pred[i + 1:i + 1 + m]) if m > 0 else np.inf
            transposed = (i + 1 < n
                          and abs(eb[i] - pred[i + 1]) < drift_tol * pred[i + 1]
                          and abs(eb[i + 1] - pred[i]) < drift_tol * pred[i])
            if shifted < drift_tol / 2 and not transposed:
                defects.append((t_bad, float(pred[i])))
            else:
                blip_max = max(blip_max, float(dev[i]))
        if not defects:
            if blip_max > 0.12:
                raise MissedEigenvalue(
                    f"eigenvalue branches deviate by {blip_max:.3f} between moved "
                    "polygons; not explainable as an avoided crossing")
            return out
        healed_any = False
        for t_bad, lam_pred in defects:
            healed_any = heal(t_bad, lam_pred) or healed_any
        if not healed_any:
            raise MissedEigenvalue(
                "moved-polygon spectra failed to align for the finite difference")
    raise MissedEigenvalue("healing did not converge")


def fd_logdet_derivative(p, f, lam_max, tau0, t=4e-3):
    """Richardson central difference of the determinant pipeline along f,
    with defect-checked spectra."""
    zcfg = ZetaConfig(tau0=tau0, tail_tol=1.0)
    ts = (t, -t, t / 2, -t / 2)
    specs = _aligned_spectra(p, f, ts, lam_max)

    def ld(tt):
        pt = move_polygon(p, f, tt)
        return zeta_logdet(specs[tt], heat_coefficients(pt), zcfg).value

    d1 = (ld(t) - ld(-t)) / (2 * t)
    d2 = (ld(t / 2) - ld(-t / 2)) / t
    return (4 * d2 - d1) / 3


def check_corner_term_activation():
    """Criterion 7: sliding-vertex triangle, formula vs determinant FD.

    The apex of the triangle (0, 1, 0.3+0.8i) moves horizontally; the angles
    change, so the corner sum is active.  The reference is a Richardson
    central difference of the MPS + zeta determinant with defect-checked
    spectra.
    """
    verts = [0.0, 1.0, 0.3 + 0.8j]
    p = build_polygon(verts)
    vel = [0.0, 0.0, 1.0 + 0.0j]
    f = field_from_vertex_velocities(p, vel)
    m = solve_parameter_problem(p)
    dv = main_formula(p, m, f)
    fd = fd_logdet_derivative(p, f, lam_max=1500.0, tau0=0.018)
    rel = abs(dv.total - fd) / abs(fd)
    return [_record("7 corner-term activation (triangle family)", rel, 1e-2,
                    f"formula {dv.total:.7f} fd {fd:.7f} "
                    f"corner term {dv.corner_term:.2e}")]


def check_two_routes(n_polygons=10, seed=20837):
    """Criterion 8: hadamard vs contour-shift routes on random polygons."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_polygons):
        p = _random_convex(rng, n_min=4, n_max=7)
        m = solve_parameter_problem(p)
        j = int(rng.integers(0, p.n - 1))
        f = _side_shift(p, j)
        v1 = main_formula(p, m, f).total
        v2 = contour_shift_integral(m, f)
        worst = max(worst, abs(v1 - v2))
    return [_record(f"8 two-route agreement ({n_polygons} random polygons)",
                    worst, 1e-6)]


def check_hadamard_eigenvalue():
    """Criterion 9: square stretch, d lambda_1 = -2 pi^2 within 1e-4 relative."""
    p = build_polygon([0, 1, 1 + 1j, 1j])
    f = field_from_vertex_velocities(p, [0, 1, 1, 0])
    dl = hadamard_eigenvalue_variation(p, f, 1)
    rel = abs(dl + 2 * np.pi**2) / (2 * np.pi**2)
    return [_record("9 Hadamard eigenvalue variation (square stretch)", rel, 1e-4,
                    f"formula {dl:.8f} exact {-2 * np.pi**2:.8f}")]


def check_rigid_and_linear(n_polygons=20, seed=11):
    """Criterion 10: rigid-motion nullity and field linearity."""
    rng = np.random.default_rng(seed)
    worst_rigid = 0.0
    worst_lin = 0.0
    for _ in range(n_polygons):
        p = _random_convex(rng, n_min=4, n_max=7)
        m = solve_parameter_problem(p)
        f_tr = field_from_vertex_velocities(p, [0.6 - 0.3j] * p.n)
        f_rot = field_from_vertex_velocities(p, [1j * v for v in p.vertices])
        for fr in (f_tr, f_rot):
            worst_rigid = max(worst_rigid, abs(main_formula(p, m, fr).total))
        v1 = rng.normal(size=p.n) + 1j * rng.normal(size=p.n)
        v2 = rng.normal(size=p.n) + 1j * rng.normal(size=p.n)
        f1 = field_from_vertex_velocities(p, v1)
        f2 = field_from_vertex_velocities(p, v2)
        f12 = field_from_vertex_velocities(p, v1 + v2)
        lin = abs(main_formula(p, m, f12).total - main_formula(p, m, f1).total
                  - main_formula(p, m, f2).total)
        worst_lin = max(worst_lin, lin)
    return [
        _record(f"10a rigid-motion nullity ({n_polygons} polygons)", worst_rigid, 1e-8),
        _record(f"10b field linearity ({n_polygons} polygons)", worst_lin, 1e-9),
    ]


# fast structural checks for the cheap suites ------------------------------

def check_geometry_invariants(seed=5):
    rng = np.random.default_rng(seed)
    worst_sum = worst_fd = 0.0
    for _ in range(20):
        p = _random_convex(rng)
        vel = rng.normal(size=p.n) + 1j * rng.normal(size=p.n)
        f = field_from_vertex_velocities(p, vel)
        worst_sum = max(worst_sum, abs(sum(f.delta_angles)))
        t = 1e-4
        ap = np.asarray(move_polygon(p, f, t).angles)
        am = np.asarray(move_polygon(p, f, -t).angles)
        worst_fd = max(worst_fd, np.max(np.abs((ap - am) / (2 * t) - f.delta_angles)))
    return [
        _record("geometry: sum of delta angles", worst_sum, 1e-12),
        _record("geometry: delta angles vs finite differences", worst_fd, 1e-6),
    ]


def check_scmap_invariants(seed=6):
    rng = np.random.default_rng(seed)
    worst_side = worst_bc = 0.0
    for _ in range(20):
        p = _random_convex(rng)
        m = solve_parameter_problem(p)
        xk = _mapped_vertices(m)
        L = np.asarray(p.side_lengths)[: p.n - 1]
        worst_side = max(worst_side, np.max(np.abs(np.abs(np.diff(xk)) - L) / L))
        j = int(rng.integers(0, p.n - 1))
        z = m.prevertices[j] + rng.uniform(0.2, 0.8) * (
            m.prevertices[j + 1] - m.prevertices[j])
        x = map_forward(m, z)
        tau = p.side_tangent(j)
        off = abs(((x - p.vertices[j]) * np.conj(tau)).imag)
        worst_bc = max(worst_bc, off)
    return [
        _record("scmap: side-length residual (20 random polygons)", worst_side, 1e-10),
        _record("scmap: boundary correspondence", worst_bc, 1e-9),
    ]


def check_mps_rectangle(n_eigs=30):
    lam_max = 450.0
    p = build_polygon([0, 1, 1 + 1j, 1j])
    spec = dirichlet_eigenvalues(p, lam_max)
    exact = rectangle_spectrum(1, 1, lam_max).eigenvalue_array()
    got = spec.eigenvalue_array()
    k = min(n_eigs, len(exact), len(got))
    if len(got) != len(exact):
        return [_record("eigs: rectangle spectrum count", abs(len(got) - len(exact)), 0)]
    rel = np.max(np.abs(got[:k] - exact[:k]) / exact[:k])
    return [_record(f"eigs: first {k} square eigenvalues vs exact", rel, 1e-8)]


SUITES = {
    "geometry": [check_geometry_invariants, check_rigid_and_linear],
    "scmap": [check_scmap_invariants],
    "eigs": [check_mps_rectangle, check_hadamard_eigenvalue],
    "det": [check_rectangle_oracle],
    "var": [check_corner_constant, check_main_vs_rectangle_derivative,
            check_scaling_law, check_two_routes, check_corner_term_activation],
    "wz": [check_disk_law, check_wz_alvarez],
}
SUITES["all"] = (SUITES["geometry"] + SUITES["scmap"] + SUITES["eigs"]
                 + SUITES["det"] + SUITES["var"] + SUITES["wz"])


def run_suite(name):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    records = []
    for fn in SUITES[name]:
        records.extend(_timed(fn))
    return records
