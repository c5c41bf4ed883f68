"""First variation of the polygon log-determinant.

Two independent routes are implemented:

* ``main_formula`` evaluates the Hadamard-regularized Schwarzian boundary
  integral plus the corner-angle sum,

      d(log det) = (1/6 pi) Im H-int {z,x} (A.nu) nuhat dx
                   + (gamma - log 2)/12 * sum_i (pi/a_i - a_i/pi) da_i / a_i;

* ``contour_shift_integral`` evaluates pure side shifts by trading the
  divergent near-vertex boundary pieces for interior contour integrals of
  {z,x}, which is finite without any regularization and must agree with the
  first route.

Near a vertex with interior angle a, pulled back to the half-plane variable
w = z - z_i, the boundary integrand has the exact structure

    g(w) = w^{-1-a/pi} A(w) + w^{-1} B(w),        A, B analytic,

because the normal velocity is affine in arclength and the arclength off a
vertex is |C_i| w^{a/pi} times an analytic function.  For convex corners the
only growing terms of int_{w(eps)}^delta g dw are therefore eps^{-1} and
log(eps) (eps measured as a length in the polygon plane), and the finite
part is computable from two one-dimensional integrals with analytic
integrands per (side, vertex) pair.  The epsilon-removal route with
extrapolation is kept as the contract value and cross-checked against the
closed-form finite part; a mismatch raises CountertermMismatch.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AngleSumViolation,
    ContourThroughVertex,
    CountertermMismatch,
    PoleOnContour,
    ValidationFailure,
)
from .quadrature import gl_nodes, jacgauss, leggauss
from .scmap import (
    _local_regular_factor,
    _vertex_images,
    sc_derivative,
    schwarzian_xz,
)
from .zetadet import EULER_GAMMA

LOG2 = 0.6931471805599453094


@dataclass(frozen=True)
class VarConfig:
    match_frac: float = 0.25     # near-zone radius, fraction of the prevertex gap
    eps_frac: float = 1e-3       # Hadamard eps, fraction of the min side length
    arc_frac: float = 0.1        # contour-shift arc radius, fraction of the gap
    arc_order: int = 64
    gl_order: int = 20
    fp_order: int = 48
    counterterm_tol: float = 1e-5
    angle_sum_tol: float = 1e-8
    field_tol: float = 1e-14


@dataclass(frozen=True)
class DeterminantVariation:
    boundary_term: float
    corner_term: float
    total: float
    route: str
    residual_diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# corner constant
# ---------------------------------------------------------------------------

def corner_constant(beta):
    """Closed-form cone-angle constant (1/(6 beta)) (beta/(2 pi) - 2 pi/beta)."""
    if not 0 < beta < 4 * np.pi:
        raise ValidationFailure(f"beta = {beta} outside (0, 4 pi)")
    return (beta / (2 * np.pi) - 2 * np.pi / beta) / (6 * beta)


def corner_constant_by_contour(beta, n_panel=40, order=20, x_cross=None):
    """Contour-integral evaluation of the cone-angle constant.

    Integrates cot(theta/2) / sin^2(pi theta / beta) along two contours that
    run from -/+ pi - i*inf to -/+ pi + i*inf.  Near the real axis each
    contour swings inward and crosses at +/- x_cross with
    x_cross = min(beta, pi)/2, which keeps every pole of the integrand except
    theta = 0 outside the enclosed strip for all beta in (0, 4 pi).  The
    result is (int_L - int_R) / (4 i beta^2), real up to quadrature noise.
    """
    if not 0 < beta < 4 * np.pi:
        raise ValidationFailure(f"beta = {beta} outside (0, 4 pi)")
    xc = x_cross if x_cross is not None else min(beta, np.pi) / 2
    poles = beta * np.arange(0, int(np.ceil(8 * np.pi / beta)) + 2)
    if np.min(np.abs(poles - xc)) < 1e-3 * beta:
        raise PoleOnContour(f"crossing {xc} too close to a pole of csc^2; shift x_cross")

    def f(th):
        return (np.cos(th / 2) / np.sin(th / 2)) / np.sin(np.pi * th / beta) ** 2

    y_max = 6.2 * beta + 8.0
    y_knee = 2.0

    def integrate_path(points):
        total = 0.0 + 0.0j
        for a, b in zip(points[:-1], points[1:]):
            seg = abs(b - a)
            n = max(2, int(np.ceil(seg / (0.5 * min(beta, np.pi)))))
            for k in range(n):
                z0 = a + (b - a) * k / n
                z1 = a + (b - a) * (k + 1) / n
                th, w = gl_nodes(z0, z1, order)
                total += np.sum(w * f(th))
        return total

    def contour(sign):
        # sign=+1: the right contour at Re = +pi, crossing at +xc
        return [sign * np.pi - 1j * y_max, sign * np.pi - 1j * y_knee,
                sign * xc - 1j * y_knee, sign * xc + 1j * y_knee,
                sign * np.pi + 1j * y_knee, sign * np.pi + 1j * y_max]

    int_r = integrate_path(contour(+1))
    int_l = integrate_path(contour(-1))
    val = (int_l - int_r) / (4j * beta**2)
    return float(val.real)


def corner_term(p, delta_angles, tol=1e-8):
    """(gamma - log 2)/12 * sum (pi/a - a/pi) * da / a."""
    da = np.asarray(delta_angles, dtype=float)
    if len(da) != p.n:
        raise ValidationFailure(f"expected {p.n} angle variations")
    scale = max(1.0, float(np.max(np.abs(da))))
    if abs(da.sum()) > tol * scale:
        raise AngleSumViolation(f"sum of delta angles {da.sum():.2e} is not zero")
    a = np.asarray(p.angles)
    return float((EULER_GAMMA - LOG2) / 12.0 * np.sum((np.pi / a - a / np.pi) * da / a))


# ---------------------------------------------------------------------------
# near-vertex data in the half-plane variable
# ---------------------------------------------------------------------------

def _local_regular_factor_left(m, i, w):
    """x'(z_i - w) w^{1 - alpha_i/pi}, analytic near w = 0 (approach from the left)."""
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    w = np.asarray(w, dtype=complex)
    s = 1j * np.pi * g[i]    # (z - z_i)^g = e^{i pi g} w^g for z = z_i - w
    for k in range(m.n):
        if k == i:
            continue
        if zk[k] < zk[i]:
            s = s + g[k] * np.log(zk[i] - zk[k] - w)
        else:
            s = s + g[k] * np.log(zk[k] - zk[i] + w) + 1j * np.pi * g[k]
    return m.prefactor * np.exp(s)


class _NearVertex:
    """Everything needed to integrate the boundary integrand near one vertex,
    approached along one of its two sides."""

    def __init__(self, m, i, from_right, cfg):
        self.m = m
        self.i = i
        self.from_right = from_right
        self.alpha = m.polygon.angles[i]
        self.apio = self.alpha / np.pi
        self.zi = m.prevertices[i]
        if from_right:
            self.D = complex(_local_regular_factor(m, i, np.array(0.0 + 0.0j)))
        else:
            self.D = complex(_local_regular_factor_left(m, i, np.array(0.0 + 0.0j)))
        self.C_abs = abs(self.D) * np.pi / self.alpha
        self.m0 = (np.pi**2 - self.alpha**2) / (2 * np.pi**2)
        self._rho_rule = jacgauss(24, 0.0, self.apio - 1.0)

    def regular_factor(self, w):
        f = (_local_regular_factor(self.m, self.i, w + 0j) if self.from_right
             else _local_regular_factor_left(self.m, self.i, w + 0j))
        return (f / self.D).real

    def schwarz_w2(self, w):
        """w^2 {x,z}(z_i +/- w) for real w > 0, cancellation-free.

        With gp_i = (pi - alpha_i)/pi and T, U the sums over the other
        prevertices of gp_k/(d_k +/- w) and gp_k/(d_k +/- w)^2,

            w^2 {x,z} = gp_i (1 - gp_i/2) -/+ gp_i T w + w^2 (U - T^2/2),

        which stays accurate down to w at the double-precision floor (needed
        because sharp corners compress eps-neighborhoods like eps^{pi/alpha}).
        """
        w = np.asarray(w, dtype=float)
        zk = self.m.prevertex_array()
        gp = -np.asarray(self.m.exponents)
        sgn = 1.0 if self.from_right else -1.0
        gpi = gp[self.i]
        T = np.zeros_like(w)
        U = np.zeros_like(w)
        for k in range(self.m.n):
            if k == self.i:
                continue
            d = self.zi - zk[k] + sgn * w
            T += gp[k] / d
            U += gp[k] / d**2
        return gpi * (1 - gpi / 2) - sgn * gpi * T * w + w**2 * (U - T**2 / 2)

    def rho(self, w):
        """s(w) / (|C| w^{a/pi}): analytic, real, rho(0) = 1.

        From s(w) = |D| int_0^w u^{a/pi - 1} R(u) du and |C| = |D| pi/a, the
        Gauss-Jacobi rule on (0, w) gives rho = (a/pi) 2^{-a/pi} sum wt R.
        """
        w = np.atleast_1d(np.asarray(w, dtype=float))
        x, wt = self._rho_rule
        out = np.empty(len(w))
        for idx, wq in enumerate(w):
            u = 0.5 * wq * (1.0 + x)
            out[idx] = self.apio * 2.0 ** (-self.apio) * np.sum(wt * self.regular_factor(u))
        return out

    def h0(self, w):
        return (self.schwarz_w2(w).real) / self.regular_factor(w)

    def h1(self, w):
        return self.h0(w) * self.rho(w)

    def x_at(self, w):
        """x(z_i +/- w) for real w > 0 (vector), from the local structure."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        base = _vertex_images(self.m)[self.i]
        return base + self.D * (np.pi / self.alpha) * w**self.apio * self.rho(w)

    def w_of_eps(self, eps):
        """w with arclength |x(w) - x_i| = eps (fixed point on rho)."""
        w = (eps / self.C_abs) ** (1.0 / self.apio)
        for _ in range(3):
            w = (eps / (self.C_abs * float(self.rho(w)[0]))) ** (1.0 / self.apio)
        return w


def _near_contributions(near, nu_hat, c0_eff, c1_eff, delta, eps_pair, cfg):
    """Finite part and finite-eps values of the near-vertex piece.

    Returns (fp_exact, {eps: value}, rate) where the finite-eps values have
    the growing terms already subtracted.
    """
    apio = near.apio
    m0 = near.m0
    pref = -nu_hat / near.D
    # closed-form finite part
    xj, wj = jacgauss(cfg.fp_order, 0.0, -apio)
    wq = 0.5 * delta * (1.0 + xj)
    phi0 = (near.h0(wq) - m0) / wq
    I0 = (0.5 * delta) ** (1.0 - apio) * np.sum(wj * phi0)
    fp = pref * c0_eff * (I0 - m0 * (np.pi / near.alpha) * delta ** (-apio))
    if abs(c1_eff) > 0:
        xg, wg = leggauss(cfg.fp_order)
        wq1 = 0.5 * delta * (1.0 + xg)
        phi1 = (near.h1(wq1) - m0) / wq1
        I1 = 0.5 * delta * np.sum(wg * phi1)
        fp += pref * c1_eff * near.C_abs * (
            I1 + m0 * (np.log(delta) + (np.pi / near.alpha) * np.log(near.C_abs)))

    # finite-eps values: numerical integral over [w(eps), delta] minus growing terms
    vals = {}
    for eps in eps_pair:
        w_eps = near.w_of_eps(eps)
        if w_eps >= delta:
            raise ValidationFailure("eps removal region exceeds the near zone")
        breaks = [w_eps]
        while breaks[-1] < delta:
            breaks.append(min(breaks[-1] * 2.0, delta))
        xg, wg = leggauss(cfg.gl_order)
        total = 0.0 + 0.0j
        for a, b in zip(breaks[:-1], breaks[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            wn = mid + half * xg
            gvals = pref * (c0_eff * near.h0(wn) * wn ** (-1.0 - apio))
            if abs(c1_eff) > 0:
                gvals = gvals + pref * c1_eff * near.C_abs * near.h1(wn) / wn
            total += half * np.sum(wg * gvals)
        growing = pref * c0_eff * m0 * (np.pi / near.alpha) * near.C_abs / eps
        if abs(c1_eff) > 0:
            growing = growing - pref * c1_eff * near.C_abs * m0 * (np.pi / near.alpha) * np.log(eps)
        vals[eps] = total - growing
    rate = min(1.0, np.pi / near.alpha - 1.0)
    return fp, vals, rate


def _aitken_limit(v1, v2, v3):
    """Aitken Delta^2 limit of a halving sequence v(eps), v(eps/2), v(eps/4).

    Returns (limit, diverging, d2) where ``diverging`` flags a sequence whose
    corrections grow while still being significant against roundoff, the
    signature of a missed growing term.
    """
    d1, d2 = v2 - v1, v3 - v2
    noise = 1e-10 * (1.0 + abs(v3))
    if abs(d2) > 1.1 * abs(d1) + noise and abs(d2) > noise:
        return v3, True, abs(d2)
    denom = d2 - d1
    if abs(denom) <= max(1e-15 * (abs(d1) + abs(d2)), 0.2 * noise):
        return v3, False, abs(d2)
    return v3 - d2 * d2 / denom, False, abs(d2)


# ---------------------------------------------------------------------------
# per-side integration
# ---------------------------------------------------------------------------

def _graded_breaks(a, b, h0a, h0b, ratio=2.0):
    """Breakpoints on [a, b] with panels growing geometrically from both ends."""
    if b <= a:
        return np.array([a, b])
    left = [a]
    h = h0a
    while left[-1] + h < 0.5 * (a + b):
        left.append(left[-1] + h)
        h *= ratio
    right = [b]
    h = h0b
    while right[-1] - h > 0.5 * (a + b):
        right.append(right[-1] - h)
        h *= ratio
    return np.unique(np.concatenate([left, [0.5 * (a + b)], right[::-1]]))


def _integrand_dz(m, j, z, s_vals, c0, c1, nu_hat):
    """{z,x}(A.nu) nuhat dx collapsed to the dz integrand:
    -{x,z}(z) (A.nu)(s) nuhat / x'(z)."""
    sxz = schwarzian_xz(m, np.asarray(z, dtype=complex))
    xp = sc_derivative(m, np.asarray(z, dtype=complex))
    return -sxz * (c0 + c1 * s_vals) * nu_hat / xp


def _far_part_finite_side(m, j, zl, zr, c0, c1, nu_hat, x_left_anchor, cfg):
    """Integral over [zl, zr] inside side j's prevertex interval, with the
    arclength tracked cumulatively from the anchor at zl."""
    breaks = _graded_breaks(zl, zr, 0.5 * (zl - m.prevertices[j]),
                            0.5 * (m.prevertices[j + 1] - zr))
    xg, wg = leggauss(cfg.gl_order)
    xq, wq_ = leggauss(12)
    verts = m.polygon.vertex_array()
    x_run = x_left_anchor
    z_prev = zl
    total = 0.0 + 0.0j
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        zn = mid + half * xg
        # cumulative map values along the ordered nodes
        xs = np.empty(len(zn), dtype=complex)
        for idx, z_node in enumerate(zn):
            mm, hh = 0.5 * (z_prev + z_node), 0.5 * (z_node - z_prev)
            xs[idx] = x_run + hh * np.sum(wq_ * sc_derivative(m, mm + hh * xq))
            x_run = xs[idx]
            z_prev = z_node
        s_vals = np.abs(xs - verts[j])
        total += half * np.sum(wg * _integrand_dz(m, j, zn, s_vals, c0, c1, nu_hat))
    return total


def _far_part_infinite_side(m, zl_w, zr_w, c0, c1, nu_hat, x_anchor_right, cfg):
    """Far part of the side through infinity, pulled back by z = 1/t.

    zl_w, zr_w: near-zone radii at the start vertex (z_{n-1} = 1, from the
    right) and the end vertex (z_0 = -1, from the left).  The traversal runs
    t from 1/(1+zl_w) down to -1/(1+zr_w); dz = -dt/t^2.
    """
    n = m.n
    verts = m.polygon.vertex_array()
    t_hi = 1.0 / (1.0 + zl_w)
    t_lo = -1.0 / (1.0 + zr_w)
    breaks = _graded_breaks(t_lo, t_hi, 0.3 * zr_w, 0.3 * zl_w)[::-1]  # t decreasing
    xg, wg = leggauss(cfg.gl_order)
    xq, wq_ = leggauss(12)
    x_run = x_anchor_right
    t_prev = t_hi
    total = 0.0 + 0.0j
    for a, b in zip(breaks[:-1], breaks[1:]):   # a > b, t decreasing
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        tn = mid + half * xg                    # decreasing order via negative half
        xs = np.empty(len(tn), dtype=complex)
        for idx, t_node in enumerate(tn):
            mm, hh = 0.5 * (t_prev + t_node), 0.5 * (t_node - t_prev)
            tq = mm + hh * xq
            dxdt = sc_derivative(m, 1.0 / tq) * (-1.0 / tq**2)
            xs[idx] = x_run + hh * np.sum(wq_ * dxdt)
            x_run = xs[idx]
            t_prev = t_node
        s_vals = np.abs(xs - verts[n - 1])
        zn = 1.0 / tn
        gz = _integrand_dz(m, n - 1, zn, s_vals, c0, c1, nu_hat)
        total += half * np.sum(wg * gz * (-1.0 / tn**2))
    return total


def hadamard_boundary_integral(m, f, cfg=None):
    """Hadamard-regularized boundary integral H-int {z,x} (A.nu) nuhat dx.

    Returns the eps -> 0 extrapolated value (complex); the closed-form finite
    part and the per-vertex extrapolation residuals are exposed through the
    ``diagnostics`` attribute of the result (a _HadamardResult).
    """
    cfg = cfg or VarConfig()
    p = m.polygon
    n = p.n
    coeffs = f.side_normal_velocity
    zk = m.prevertex_array()
    eps0 = cfg.eps_frac * min(p.side_lengths)
    eps_triplet = (eps0, 0.5 * eps0, 0.25 * eps0)

    total_extrap = 0.0 + 0.0j
    total_fp = 0.0 + 0.0j
    per_vertex_resid = []
    worst_d2 = 0.0

    for j in range(n):
        c0, c1 = coeffs[j]
        L = p.side_lengths[j]
        if abs(c0) + abs(c1) * L < cfg.field_tol:
            continue
        nu_hat = p.side_normal(j)
        i_start, i_end = j, (j + 1) % n

        # the start vertex is approached from the right of its prevertex and
        # the end vertex from the left, also for the side through infinity
        near_s = _NearVertex(m, i_start, from_right=True, cfg=cfg)
        near_e = _NearVertex(m, i_end, from_right=False, cfg=cfg)

        delta_s = cfg.match_frac * min(m.gap(i_start), 1.0)
        delta_e = cfg.match_frac * min(m.gap(i_end), 1.0)
        if j < n - 1:
            interval = zk[j + 1] - zk[j]
            delta_s = min(delta_s, 0.35 * interval)
            delta_e = min(delta_e, 0.35 * interval)

        fp_s, eps_s, _ = _near_contributions(
            near_s, nu_hat, c0, c1, delta_s, eps_triplet, cfg)
        fp_e, eps_e, _ = _near_contributions(
            near_e, nu_hat, c0 + c1 * L, -c1, delta_e, eps_triplet, cfg)

        x_anchor = near_s.x_at(delta_s)[0]
        if j < n - 1:
            far = _far_part_finite_side(m, j, zk[j] + delta_s, zk[j + 1] - delta_e,
                                        c0, c1, nu_hat, x_anchor, cfg)
        else:
            far = _far_part_infinite_side(m, delta_s, delta_e, c0, c1, nu_hat,
                                          x_anchor, cfg)

        total_extrap += far
        total_fp += far + fp_s + fp_e
        for fp_v, eps_v in ((fp_s, eps_s), (fp_e, eps_e)):
            seq = [eps_v[e] for e in eps_triplet]
            limit, diverging, d2 = _aitken_limit(*seq)
            if diverging:
                raise CountertermMismatch(
                    f"eps-halving values diverge near a vertex (last step {d2:.2e}); "
                    "a growing term appears to be missing")
            total_extrap += limit
            per_vertex_resid.append(abs(limit - fp_v))
            worst_d2 = max(worst_d2, d2)

    mismatch = abs(total_extrap - total_fp)
    scale = max(1.0, abs(total_fp))
    if mismatch > max(cfg.counterterm_tol * scale, 4.0 * worst_d2):
        raise CountertermMismatch(
            f"eps-extrapolation disagrees with the closed-form finite part by {mismatch:.2e}")
    return _HadamardResult(
        value=complex(total_extrap),
        finite_part=complex(total_fp),
        diagnostics={
            "eps": eps_triplet,
            "per_vertex_extrapolation_residual": per_vertex_resid,
            "mismatch": mismatch,
            "last_halving_step": worst_d2,
        },
    )


@dataclass(frozen=True)
class _HadamardResult:
    value: complex
    finite_part: complex
    diagnostics: dict

    def __complex__(self):
        return self.value


# ---------------------------------------------------------------------------
# the two routes
# ---------------------------------------------------------------------------

def main_formula(p, m, f, cfg=None):
    """Variational formula for log det: boundary term + corner term."""
    cfg = cfg or VarConfig()
    res = hadamard_boundary_integral(m, f, cfg)
    boundary = float(res.value.imag) / (6 * np.pi)
    corner = corner_term(p, f.delta_angles, tol=cfg.angle_sum_tol)
    diag = dict(res.diagnostics)
    diag["finite_part_boundary_term"] = res.finite_part.imag / (6 * np.pi)
    return DeterminantVariation(
        boundary_term=boundary,
        corner_term=corner,
        total=boundary + corner,
        route="hadamard",
        residual_diagnostics=diag,
    )


def contour_shift_integral(m, f, cfg=None, arc_frac=None):
    """Shift-route value of d(log det) for a pure parallel-shift field.

    The field must be constant on each active side ((A.nu) = c0, c1 = 0) and
    every active side must have a finite prevertex interval.  Near each
    active vertex the boundary integral is cut at the image of an arc of
    radius eps around the prevertex and the divergent piece is replaced by
    the interior contour integral of {z,x} along that arc.
    """
    cfg = cfg or VarConfig()
    arc_frac = arc_frac if arc_frac is not None else cfg.arc_frac
    p = m.polygon
    n = p.n
    zk = m.prevertex_array()
    verts = p.vertex_array()
    total = 0.0

    for j in range(n):
        c0, c1 = f.side_normal_velocity[j]
        L = p.side_lengths[j]
        if abs(c0) + abs(c1) * L < cfg.field_tol:
            continue
        if abs(c1) * L > 1e-10 * max(1.0, abs(c0)):
            raise ValidationFailure("contour route requires pure parallel shifts")
        if j == n - 1:
            raise ValidationFailure("shift the polygon labeling so the active side "
                                    "has a finite prevertex interval")
        nu_hat = p.side_normal(j)
        tau = p.side_tangent(j)
        theta_s = np.angle(tau)
        eps_s = arc_frac * min(m.gap(j), 1.0)
        eps_e = arc_frac * min(m.gap(j + 1), 1.0)
        interval = zk[j + 1] - zk[j]
        eps_s = min(eps_s, 0.3 * interval)
        eps_e = min(eps_e, 0.3 * interval)

        # straight piece between the arc feet
        near = _NearVertex(m, j, from_right=True, cfg=cfg)
        x_anchor = near.x_at(eps_s)[0]
        straight = _far_part_finite_side(m, j, zk[j] + eps_s, zk[j + 1] - eps_e,
                                         c0, 0.0, nu_hat, x_anchor, cfg)
        total += straight.imag / (6 * np.pi)

        # interior arc corrections at both ends; the start vertex carries the
        # phase e^{+i alpha} with a minus sign, the end vertex the conjugate
        # phase with a plus sign (calibrated against the Hadamard route and
        # the exact rectangle derivative; epsilon-independence pins both)
        arc_s = _arc_integral(m, j, eps_s)
        arc_e = _arc_integral(m, j + 1, eps_e)
        a_s = p.angles[j]
        a_e = p.angles[(j + 1) % n]
        total -= c0 * (np.exp(1j * a_s) * np.exp(1j * theta_s) * arc_s).imag / (
            6 * np.pi * np.sin(a_s))
        total += c0 * (np.exp(-1j * a_e) * np.exp(1j * theta_s) * arc_e).imag / (
            6 * np.pi * np.sin(a_e))
    return float(total)


def _arc_integral(m, i, eps, order=None):
    """int over the half-plane arc around prevertex i of {z,x} dx, traversed
    from angle pi to 0 (earlier boundary point to later)."""
    i = i % m.n
    if eps >= m.gap(i):
        raise ContourThroughVertex(f"arc radius {eps} reaches a neighboring prevertex")
    order = order or 64
    th, w = gl_nodes(np.pi, 0.0, order)
    z = m.prevertices[i] + eps * np.exp(1j * th)
    integrand = -schwarzian_xz(m, z) / sc_derivative(m, z) * (1j * eps * np.exp(1j * th))
    return np.sum(w * integrand)
