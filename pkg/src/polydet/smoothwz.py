"""Smooth-boundary determinant variations on analytic simply connected domains.

The domain is the image of the unit disk under z(w) = sum a_k w^k, analytic
and univalent slightly beyond the closed disk.  Two operations:

* ``alvarez_logdet``: the boundary-integral comparison value
  -(1/12 pi) [ int phi d_r phi dt + 2 int phi dt ] with phi = log|z'(e^{it})|,
  defined up to a domain-independent additive constant (only differences
  between domains are meaningful);

* ``wz_variation``: the first variation of log det under z -> z + eps V for
  a holomorphic V, as a boundary integral of the Schwarzian of the inverse
  map and the squared curvature.

Both are evaluated by uniform trapezoid sums on the circle, which are
spectrally accurate for the analytic data assumed here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, MapDegenerate, ValidationFailure


@dataclass(frozen=True)
class SmoothDomain:
    """Domain given by a finite Taylor series z(w), valid past |w| = 1."""

    coefficients: tuple   # a_0, a_1, ... of z(w) = sum a_k w^k

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if len(c) < 2:
            raise ValidationFailure("need at least a linear coefficient")
        # univalence margin: z' must not vanish near the closed disk
        for r in (0.5, 0.8, 1.0, 1.05):
            w = r * np.exp(2j * np.pi * np.arange(512) / 512)
            if np.min(np.abs(self.dz(w))) < 1e-12:
                raise MapDegenerate(f"z'(w) vanishes near |w| = {r}")

    def coeff_array(self):
        return np.asarray(self.coefficients, dtype=complex)

    def z(self, w):
        return np.polynomial.polynomial.polyval(w, self.coeff_array())

    def dz(self, w):
        c = self.coeff_array()
        return np.polynomial.polynomial.polyval(w, np.polynomial.polynomial.polyder(c))

    def d2z(self, w):
        c = self.coeff_array()
        return np.polynomial.polynomial.polyval(w, np.polynomial.polynomial.polyder(c, 2))

    def d3z(self, w):
        c = self.coeff_array()
        return np.polynomial.polynomial.polyval(w, np.polynomial.polynomial.polyder(c, 3))

    def perturbed(self, V, eps):
        """Domain with map z + eps V (V a Taylor series, possibly shorter)."""
        a = list(self.coefficients)
        v = list(np.asarray(V, dtype=complex))
        n = max(len(a), len(v))
        a += [0.0] * (n - len(a))
        v += [0.0] * (n - len(v))
        return SmoothDomain(tuple(ai + eps * vi for ai, vi in zip(a, v)))

    def to_json_dict(self):
        return {"taylor": [[c.real, c.imag] for c in self.coeff_array()]}


def domain_from_json_dict(d):
    return SmoothDomain(tuple(complex(x, y) for x, y in d["taylor"]))


def disk(radius=1.0):
    return SmoothDomain((0.0, complex(radius)))


def _circle(n_grid):
    t = 2 * np.pi * np.arange(n_grid) / n_grid
    return t, np.exp(1j * t)


def _check_grid(n_grid):
    if n_grid < 256 or (n_grid & (n_grid - 1)) != 0:
        raise ValidationFailure("n_grid must be a power of two >= 256")


def alvarez_logdet(d, n_grid=512, check=True):
    """Boundary comparison value of log det (additive constant omitted).

    phi = log |z'| on the unit circle and its radial derivative
    d_r phi = Re(w z''/z') enter the two circle integrals; the trapezoid rule
    on the periodic analytic integrand converges spectrally.
    """
    _check_grid(n_grid)

    def value(n):
        t, w = _circle(n)
        zp = d.dz(w)
        phi = np.log(np.abs(zp))
        dr_phi = (w * d.d2z(w) / zp).real
        dt = 2 * np.pi / n
        return (-1.0 / (12 * np.pi)) * (np.sum(phi * dr_phi) + 2 * np.sum(phi)) * dt

    v = value(n_grid)
    if check:
        v2 = value(2 * n_grid)
        if abs(v2 - v) > 1e-10 * (1 + abs(v)):
            raise GridTooCoarse(
                f"doubling n_grid moves the Alvarez value by {abs(v2 - v):.2e}")
        v = v2
    return float(v)


def wz_variation(d, V, n_grid=512, check=True):
    """d(log det)/d eps at eps = 0 for the deformation z -> z + eps V.

    Evaluates (1/6 pi) Re int_Gamma V(w(z)) conj(nu) (Re(nu^2 {w,z}) - k^2) |dz|
    on the circle, with nu = |w'| w / w', k = |w'| Re(1 + w z''/z'), and
    {w,z} = -{z,w} / z'^2 from the Schwarzian chain rule (no inverse map is
    ever constructed).
    """
    _check_grid(n_grid)
    V = np.asarray(V, dtype=complex)

    def value(n):
        t, w = _circle(n)
        zp, zpp, zppp = d.dz(w), d.d2z(w), d.d3z(w)
        s_zw = zppp / zp - 1.5 * (zpp / zp) ** 2        # {z, w}
        s_wz = -s_zw / zp**2                             # {w, z}
        nu = w * zp / np.abs(zp)                         # = |w'| w / w'
        curv = (1.0 + (w * zpp / zp)).real / np.abs(zp)  # k = |w'| Re(1 + w z''/z')
        v_vals = np.polynomial.polynomial.polyval(w, V)
        integrand = v_vals * np.conj(nu) * ((nu**2 * s_wz).real - curv**2)
        # |dz| = |z'| dt
        dt = 2 * np.pi / n
        return (1.0 / (6 * np.pi)) * np.sum(integrand * np.abs(zp)).real * dt

    v = value(n_grid)
    if check:
        v2 = value(2 * n_grid)
        if abs(v2 - v) > 1e-10 * (1 + abs(v)):
            raise GridTooCoarse(
                f"doubling n_grid moves the variation by {abs(v2 - v):.2e}")
        v = v2
    return float(v)


def wz_vs_alvarez_fd(d, V, eps=1e-4, n_grid=512):
    """(formula, finite difference) pair for the same deformation.

    The finite difference is the central difference of alvarez_logdet between
    the maps z +/- eps V; the caller asserts agreement.
    """
    formula = wz_variation(d, V, n_grid)
    plus = d.perturbed(V, eps)
    minus = d.perturbed(V, -eps)
    fd = (alvarez_logdet(plus, n_grid) - alvarez_logdet(minus, n_grid)) / (2 * eps)
    return formula, fd


def curvature_identity_check(d, n_grid=512):
    """Max residual of the curvature identity
    4 k^2/|w'|^2 = |2 + w z''/z'|^2 + 2 Re(w^2 (z''/z')^2) + ... ,
    written out as the sum of the six boundary terms; zero for exact data."""
    _check_grid(n_grid)
    t, w = _circle(n_grid)
    zp, zpp = d.dz(w), d.d2z(w)
    q = zpp / zp
    curv = (1.0 + (w * q)).real / np.abs(zp)
    lhs = 4 * curv**2 * np.abs(zp) ** 2     # 4 k^2 / |w'|^2 with w' = 1/z'
    rhs = (4.0 + (w**2 * q**2) + np.conj(w**2 * q**2)
           + 4 * w * q + 4 * np.conj(w * q) + 2 * np.abs(q) ** 2).real
    return float(np.max(np.abs(lhs - rhs)))
