"""Schwarz-Christoffel maps from the upper half-plane onto convex polygons.

The map is x(z) = base + C * int_{z_1}^{z} prod_k (zeta - z_k)^(alpha_k/pi - 1) dzeta
with all n prevertices finite and the Moebius gauge fixed by
z_1 = -1, z_2 = 0, z_n = +1.  Pinning the first and last prevertices keeps
the n-3 unknowns inside the bounded cell 0 < z_3 < ... < z_{n-1} < 1, so no
prevertex can escape to infinity (pinning the first *three* does not have
this property: for the unit square it forces z_4 = infinity exactly).  The
side from vertex n back to vertex 1 is the one mapped through z = infinity.

Powers use the principal branch evaluated from the closed upper half-plane,
so on the real axis arg(z - z_k) is 0 to the right of z_k and pi to the
left.  The parameter problem (side-length ratios) is solved in log-gap
variables, which keeps the ordering built in and is robust against mild
crowding.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    CircleTooLarge,
    CrowdingWarning,
    NewtonDivergence,
    NoConvergence,
    PoleQuery,
    QuadratureFailure,
    ValidationFailure,
    VertexQuery,
)
from .geometry import Polygon
from .quadrature import gl_nodes, jacgauss, leggauss


@dataclass(frozen=True)
class SCConfig:
    quad_order: int = 24
    quad_tol: float = 1e-10
    solver_tol: float = 1e-12
    solver_max_iter: int = 200
    newton_tol: float = 1e-12
    newton_max_iter: int = 40
    init_jitter: float = 0.0
    init_seed: int = 0


@dataclass(frozen=True)
class SCMap:
    """Solved Schwarz-Christoffel map (immutable after construction)."""

    prevertices: tuple
    exponents: tuple          # alpha_k/pi - 1, in (-1, 0) for convex targets
    prefactor: complex
    base_point: complex       # image of prevertices[0], i.e. the first vertex
    polygon: Polygon
    anchor_z: complex = field(default=1j, repr=False)
    anchor_x: complex = field(default=0j, repr=False)
    residual: float = 0.0

    @property
    def n(self):
        return len(self.prevertices)

    def prevertex_array(self):
        return np.asarray(self.prevertices, dtype=float)

    def gap(self, i):
        """Distance from prevertex i to its nearest neighbour."""
        zk = self.prevertex_array()
        d = np.abs(zk - zk[i])
        d[i] = np.inf
        return float(d.min())

    def to_json_dict(self):
        return {
            "prevertices": list(self.prevertices),
            "C": [self.prefactor.real, self.prefactor.imag],
            "base": [self.base_point.real, self.base_point.imag],
        }


# ---------------------------------------------------------------------------
# derivative evaluation with the closed-UHP branch
# ---------------------------------------------------------------------------

def _log_uhp(w):
    """log with arg in (-pi, pi], forcing arg = +pi on the negative real axis.

    Points with tiny negative imaginary part (roundoff below the axis) are
    treated as boundary points approached from above.
    """
    w = np.asarray(w, dtype=complex)
    out = np.log(np.abs(w)) + 1j * np.angle(w)
    fix = (w.imag < 0) & (np.abs(w.imag) < 1e-13 * np.abs(w.real)) & (w.real < 0)
    if np.any(fix):
        out = np.where(fix, np.log(np.abs(w)) + 1j * np.pi, out)
    return out


def sc_derivative(m, z):
    """x'(z) = C * prod (z - z_k)^{gamma_k}, valid on the closed half-plane."""
    z = np.asarray(z, dtype=complex)
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    s = np.zeros(z.shape, dtype=complex)
    for k in range(m.n):
        s = s + g[k] * _log_uhp(z - zk[k])
    return m.prefactor * np.exp(s)


def _unnormalized_derivative(zk, g, z):
    z = np.asarray(z, dtype=complex)
    s = np.zeros(z.shape, dtype=complex)
    for k in range(len(zk)):
        s = s + g[k] * _log_uhp(z - zk[k])
    return np.exp(s)


# ---------------------------------------------------------------------------
# compound quadrature of x' along a straight segment
# ---------------------------------------------------------------------------

def _panel_breaks(a, b, sing_pts, anchored, order_frac=0.45, max_depth=48):
    """Breakpoints 0 = t0 < ... < tM = |b-a| for panels along [a, b].

    Each panel must be shorter than ``order_frac`` times its distance to the
    nearest singular point.  The panel touching t = 0 ignores the anchored
    singularity there, since a Gauss-Jacobi weight absorbs it exactly.
    """
    T = abs(b - a)
    u = (b - a) / T
    stack = [(0.0, T, 0)]
    accepted = []
    while stack:
        t0, t1, depth = stack.pop()
        mid = a + u * (0.5 * (t0 + t1))
        d = np.abs(np.asarray(sing_pts, dtype=complex) - mid)
        if anchored is not None and t0 == 0.0:
            d[anchored] = np.inf
        dist = max(float(d.min()) - 0.5 * (t1 - t0), 0.0)
        if (t1 - t0) <= order_frac * dist or depth >= max_depth or (t1 - t0) < 1e-15 * T:
            accepted.append((t0, t1))
        else:
            mid_t = 0.5 * (t0 + t1)
            stack.append((t0, mid_t, depth + 1))
            stack.append((mid_t, t1, depth + 1))
    accepted.sort()
    return accepted, u


def integrate_sc_segment(zk, g, a, b, sing_index=None, order=24, prefactor=1.0):
    """Integral of prefactor * prod (zeta - z_k)^{g_k} along the segment [a, b].

    ``sing_index``: index k such that a == z_k; the (zeta - z_k)^{g_k} factor
    is then absorbed into a Gauss-Jacobi weight on the panel touching a.
    """
    if a == b:
        return 0.0 + 0.0j
    zk = np.asarray(zk, dtype=float)
    g = np.asarray(g, dtype=float)
    panels, u = _panel_breaks(a, b, zk, sing_index)
    total = 0.0 + 0.0j
    for (t0, t1) in panels:
        h = t1 - t0
        if t0 == 0.0 and sing_index is not None:
            gamma = g[sing_index]
            x, w = jacgauss(order, 0.0, gamma)
            t = 0.5 * h * (1.0 + x)
            zeta = a + u * t
            others = np.concatenate([zk[:sing_index], zk[sing_index + 1:]])
            gothers = np.concatenate([g[:sing_index], g[sing_index + 1:]])
            val = _unnormalized_derivative(others, gothers, zeta)
            scale = np.exp((gamma + 1) * (np.log(0.5 * h) + _log_uhp(np.array(u))[()]))
            total += scale * np.sum(w * val)
        else:
            z0, z1 = a + u * t0, a + u * t1
            zeta, w = gl_nodes(z0, z1, order)
            total += np.sum(w * _unnormalized_derivative(zk, g, zeta))
    return prefactor * total


def _mapped_side_lengths(zk, g, order):
    """|integral of the SC derivative| over each finite prevertex interval."""
    n = len(zk)
    out = np.empty(n - 1)
    for k in range(n - 1):
        mid = 0.5 * (zk[k] + zk[k + 1])
        left = integrate_sc_segment(zk, g, zk[k], mid, sing_index=k, order=order)
        right = integrate_sc_segment(zk, g, zk[k + 1], mid, sing_index=k + 1, order=order)
        out[k] = abs(left - right)
    return out


# ---------------------------------------------------------------------------
# parameter problem
# ---------------------------------------------------------------------------

def _initial_gap_logs(L):
    """Crude prevertex initialization: disk prevertices at arc lengths
    proportional to the side lengths, sent to the half-plane by the Moebius
    matching the (-1, 0, 1) pins.  Returns log-gap variables."""
    n = len(L)
    phi = np.concatenate([[0.0], 2 * np.pi * np.cumsum(L) / np.sum(L)])[:n]
    om = np.exp(1j * phi)

    def f(w):
        return (w - om[0]) * (om[1] - om[n - 1]) / ((w - om[n - 1]) * (om[1] - om[0]))

    z = ((f(om[2:n - 1]) - 1) / (f(om[2:n - 1]) + 1)).real
    inner = np.clip(np.sort(z), 1e-8, 1 - 1e-8)
    gaps = np.diff(np.concatenate([[0.0], inner, [1.0]]))
    gaps = np.maximum(gaps, 1e-10)
    return np.log(gaps[:-1] / gaps[-1])


def solve_parameter_problem(p, cfg=None):
    """Solve the SC parameter problem for polygon p.

    Prevertices are normalized to z_1 = -1, z_2 = 0, z_n = 1; the n-3
    interior prevertices in (0, 1) are solved in log-gap variables so that
    the mapped side-length ratios match the polygon.  The prefactor and base
    point are fixed by matching vertex x_1 and the side [x_1, x_2].
    """
    cfg = cfg or SCConfig()
    n = p.n
    g = np.asarray(p.angles) / np.pi - 1.0
    L = np.asarray(p.side_lengths)
    target = np.log(L[1:n - 1] / L[0])

    def assemble(u):
        # gaps of (0, z_3, ..., z_{n-1}, 1): softmax of (u_1..u_{n-3}, 0)
        e = np.exp(np.concatenate([u, [0.0]]))
        gaps = e / e.sum()
        return np.concatenate([[-1.0, 0.0], np.cumsum(gaps)])

    if n == 3:
        zk = np.array([-1.0, 0.0, 1.0])
        resid = 0.0
    else:
        u0 = _initial_gap_logs(L)
        if cfg.init_jitter:
            rng = np.random.default_rng(cfg.init_seed)
            u0 = u0 + cfg.init_jitter * rng.standard_normal(u0.shape)

        def residuals(u):
            zk = assemble(u)
            ell = _mapped_side_lengths(zk, g, cfg.quad_order)
            return np.log(ell[1:] / ell[0]) - target

        sol = least_squares(residuals, u0, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=cfg.solver_max_iter * max(1, n - 3))
        zk = assemble(sol.x)
        resid = float(np.max(np.abs(sol.fun)))
        if resid > 1e-9:
            raise NoConvergence(
                f"parameter problem residual {resid:.3e} above tolerance", residual=resid)

    gaps = np.diff(zk)
    if gaps.min() < 1e-12:
        warnings.warn(f"prevertex gap {gaps.min():.3e} below 1e-12", CrowdingWarning)

    # fix C and the base point from the first side, split so each half is
    # anchored at its own endpoint singularity
    mid = 0.5 * (zk[0] + zk[1])
    side1 = (integrate_sc_segment(zk, g, zk[0], mid, sing_index=0, order=cfg.quad_order)
             - integrate_sc_segment(zk, g, zk[1], mid, sing_index=1, order=cfg.quad_order))
    verts = p.vertex_array()
    C = (verts[1] - verts[0]) / side1

    m = SCMap(
        prevertices=tuple(float(z) for z in zk),
        exponents=tuple(float(x) for x in g),
        prefactor=complex(C),
        base_point=complex(verts[0]),
        polygon=p,
        residual=resid,
    )

    # verify mapped vertices against the target polygon
    xk = _mapped_vertices(m)
    err = np.max(np.abs(xk - verts)) / max(1.0, float(np.max(np.abs(verts))))
    if err > cfg.quad_tol * 100:
        raise NoConvergence(f"mapped vertices off by {err:.3e}", residual=err)

    anchor_z = 1j
    anchor_x = map_forward(m, anchor_z)
    object.__setattr__(m, "anchor_x", complex(anchor_x))
    return m


def _mapped_vertices(m):
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    xs = [m.base_point]
    for k in range(m.n - 1):
        mid = 0.5 * (zk[k] + zk[k + 1])
        seg = (integrate_sc_segment(zk, g, zk[k], mid, sing_index=k, order=24)
               - integrate_sc_segment(zk, g, zk[k + 1], mid, sing_index=k + 1, order=24))
        xs.append(xs[-1] + m.prefactor * seg)
    return np.asarray(xs)


# ---------------------------------------------------------------------------
# forward and inverse evaluation
# ---------------------------------------------------------------------------

def map_forward(m, z, start=None, order=None, check=False, tol=None):
    """Evaluate x(z) for z in the closed upper half-plane.

    Integrates x' along the straight segment from a prevertex (default: the
    nearest one) to z with compound Gauss-Jacobi/Legendre panels.  With
    ``check=True`` the quadrature is repeated at higher order and a
    QuadratureFailure is raised if the two disagree beyond ``tol``.
    """
    z = complex(z)
    if z.imag < -1e-12:
        raise ValidationFailure(f"z = {z} not in the closed upper half-plane")
    z = complex(z.real, max(z.imag, 0.0))
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    if start is None:
        start = int(np.argmin(np.abs(zk - z)))
    xk = _vertex_images(m)
    if z == zk[start]:
        return complex(xk[start])
    order = order or 24
    seg = integrate_sc_segment(zk, g, zk[start], z, sing_index=start, order=order)
    val = xk[start] + m.prefactor * seg
    if check:
        seg2 = integrate_sc_segment(zk, g, zk[start], z, sing_index=start, order=order + 12)
        err = abs(seg2 - seg) * abs(m.prefactor)
        if err > (tol or 1e-10) * max(1.0, abs(val)):
            raise QuadratureFailure(f"quadrature error estimate {err:.3e}")
    return complex(val)


def _vertex_images(m):
    got = m.__dict__.get("_vimages")
    if got is None:
        got = _mapped_vertices(m)
        object.__setattr__(m, "_vimages", got)
    return got


def map_inverse(m, x, cfg=None):
    """Preimage z of x under the SC map, Newton-polished to ~1e-12.

    The initial guess integrates dz/dx = 1/x'(z) along the segment from the
    cached interior anchor to x.
    """
    cfg = cfg or SCConfig()
    x = complex(x)
    verts = m.polygon.vertex_array()
    scale = float(np.max(np.abs(verts - verts.mean())))
    dv = np.abs(verts - x)
    iv = int(np.argmin(dv))
    if dv[iv] < 1e-11 * scale:
        raise VertexQuery(f"{x} is a polygon vertex; the inverse is singular there")

    if dv[iv] < 0.1 * min(m.polygon.side_lengths):
        # near a vertex the map is non-smooth; invert the local expansion
        ve = vertex_expansion(m, iv, order=4)
        apio = ve.alpha / np.pi
        w = np.exp((1.0 / apio) * np.log((x - verts[iv]) / ve.leading))
        for _ in range(4):
            corr = 1.0 + sum(c * w**j for j, c in enumerate(ve.coefficients, start=1))
            w = np.exp((1.0 / apio) * np.log((x - verts[iv]) / (ve.leading * corr)))
        z = complex(m.prevertices[iv] + w)
    else:
        # RK4 warm start along the straight segment anchor_x -> x
        z = m.anchor_z
        n_steps = 24
        dx = (x - m.anchor_x) / n_steps
        for _ in range(n_steps):
            k1 = 1.0 / sc_derivative(m, z)
            k2 = 1.0 / sc_derivative(m, z + 0.5 * dx * k1)
            k3 = 1.0 / sc_derivative(m, z + 0.5 * dx * k2)
            k4 = 1.0 / sc_derivative(m, z + dx * k3)
            z = z + dx * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            if z.imag < 0:
                z = complex(z.real, 0.0)

    path = [z]
    f_scale = max(1.0, scale)
    for _ in range(cfg.newton_max_iter):
        fz = map_forward(m, z) - x
        if abs(fz) < cfg.newton_tol * f_scale:
            return z if z.imag > 0 else complex(z.real, 0.0)
        step = fz / sc_derivative(m, z)
        z_new = z - step
        if z_new.imag < 0:
            if z_new.imag > -1e-9 * max(1.0, abs(z_new.real)):
                z_new = complex(z_new.real, 0.0)
            else:
                z_new = complex(z_new.real, 0.25 * abs(z.imag) if z.imag > 0 else 0.0)
        z = z_new
        path.append(z)
    raise NewtonDivergence(f"Newton failed to reach {x}", path=path)


# ---------------------------------------------------------------------------
# Schwarzians
# ---------------------------------------------------------------------------

def schwarzian_xz(m, z):
    """Schwarzian {x, z}: closed-form rational function of the prevertices."""
    z = np.asarray(z, dtype=complex)
    zk = m.prevertex_array()
    gp = -np.asarray(m.exponents)        # (pi - alpha_k)/pi
    if np.min(np.abs(z[..., None] - zk)) < 1e-13 * max(1.0, float(np.max(np.abs(zk)))):
        raise PoleQuery("z coincides with a prevertex")
    d = z[..., None] - zk
    s1 = np.sum(gp / d, axis=-1)
    s2 = np.sum(gp / d**2, axis=-1)
    out = s2 - 0.5 * s1**2
    return complex(out) if out.ndim == 0 else out


def schwarzian_zx(m, x, cfg=None):
    """Schwarzian {z, x} = -(dz/dx)^2 {x, z} evaluated at z = map_inverse(x)."""
    z = map_inverse(m, x, cfg)
    return schwarzian_zx_at_z(m, z)


def schwarzian_zx_at_z(m, z):
    """{z, x} expressed through the half-plane point z: -{x,z}/x'(z)^2."""
    xp = sc_derivative(m, z)
    return -schwarzian_xz(m, z) / xp**2


# ---------------------------------------------------------------------------
# vertex expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexExpansion:
    """Local behavior x(z) - x_i = C_i (z-z_i)^(a_i/pi) (1 + c_1 w + c_2 w^2 + ...)."""

    vertex_index: int
    leading: complex           # C_i
    coefficients: tuple        # (c_1, ..., c_order)
    derivative_leading: complex  # D_i with x'(z) ~ D_i w^(a_i/pi - 1)
    alpha: float
    prevertex: float
    radius: float

    def evaluate(self, w):
        """x(z_i + w) - x_i from the truncated expansion."""
        w = np.asarray(w, dtype=complex)
        corr = np.ones_like(w)
        for j, c in enumerate(self.coefficients, start=1):
            corr = corr + c * w**j
        frac = np.exp((self.alpha / np.pi) * _log_uhp(w))
        out = self.leading * frac * corr
        return complex(out) if out.ndim == 0 else out


def _local_regular_factor(m, i, w):
    """F(w) = x'(z_i + w) * w^{1 - alpha_i/pi}, analytic near w = 0.

    Branch-safe product: factors anchored at prevertices right of z_i are
    rewritten with positive real part so the principal branch is analytic in
    the full disk (the upper-half-plane limit is matched on the real axis).
    """
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    w = np.asarray(w, dtype=complex)
    s = np.zeros(w.shape, dtype=complex)
    for k in range(m.n):
        if k == i:
            continue
        if zk[k] < zk[i]:
            s = s + g[k] * np.log(zk[i] - zk[k] + w)
        else:
            # (z - z_k)^g = e^{i pi g} (z_k - z)^g on the UHP side of the cut
            s = s + g[k] * np.log(zk[k] - zk[i] - w) + 1j * np.pi * g[k]
    return m.prefactor * np.exp(s)


def derivative_prefactor(m, i):
    """D_i = lim_{w->0+} x'(z_i + w) w^{1-alpha_i/pi} (approach from the right)."""
    return complex(_local_regular_factor(m, i, np.array(0.0 + 0.0j)))


def vertex_expansion(m, i, order, radius=None):
    """Taylor data of the regular factor at vertex i via a circle DFT.

    Evaluates x'(z) (z - z_i)^{1 - alpha_i/pi} on a small circle around the
    prevertex and reads off Taylor coefficients by FFT.
    """
    if not 0 <= i < m.n:
        raise ValidationFailure(f"vertex index {i} out of range")
    if order > 6:
        raise ValidationFailure("expansion order capped at 6")
    gap = m.gap(i)
    if radius is None:
        radius = 0.3 * gap
    elif radius > 0.5 * gap:
        raise CircleTooLarge(f"radius {radius} exceeds half the prevertex gap {gap}")
    M = 64
    th = 2 * np.pi * np.arange(M) / M
    w = radius * np.exp(1j * th)
    F = _local_regular_factor(m, i, w)
    coef = np.fft.fft(F) / (M * radius ** np.arange(M))
    D = complex(coef[0])
    apio = m.polygon.angles[i] / np.pi
    r = coef[1:order + 1] / D
    c = np.array([rj * apio / (apio + j) for j, rj in enumerate(r, start=1)])
    return VertexExpansion(
        vertex_index=i,
        leading=D / apio,
        coefficients=tuple(complex(x) for x in c),
        derivative_leading=D,
        alpha=float(m.polygon.angles[i]),
        prevertex=float(m.prevertices[i]),
        radius=float(radius),
    )


# ---------------------------------------------------------------------------
# side utilities shared with the variational formula
# ---------------------------------------------------------------------------

def side_prevertex_interval(m, j):
    """Prevertex interval (z_j, z_{j+1}) for side j; side n-1 is the one
    through infinity and has no finite interval."""
    if j == m.n - 1:
        raise ValidationFailure("the last side maps through infinity")
    return m.prevertices[j], m.prevertices[j + 1]


def map_on_side(m, j, z_nodes):
    """Images x(z) for sorted nodes inside side j's prevertex interval.

    Cumulative Gauss-Legendre integration between consecutive nodes, anchored
    at the left vertex by a Gauss-Jacobi segment.
    """
    zk = m.prevertex_array()
    g = np.asarray(m.exponents)
    z_nodes = np.asarray(z_nodes, dtype=float)
    xs = np.empty(len(z_nodes), dtype=complex)
    xs[0] = _vertex_images(m)[j] + m.prefactor * integrate_sc_segment(
        zk, g, zk[j], z_nodes[0], sing_index=j, order=24)
    xq, wq = leggauss(12)
    for idx in range(1, len(z_nodes)):
        a, b = z_nodes[idx - 1], z_nodes[idx]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        zeta = mid + half * xq
        xs[idx] = xs[idx - 1] + m.prefactor * half * np.sum(wq * _unnormalized_derivative(zk, g, zeta))
    return xs
