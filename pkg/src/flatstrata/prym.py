"""Prym eigenform charts in H(1,1) built from the 3-cylinder model.

A discriminant D >= 5, D = 0 or 1 mod 4, admits finitely many integer
parameter tuples (a, d, e) with e^2 + 4ad = D, a > 0, d > 0.  Together
with an integer b in a bounded range, each tuple determines a chart
(theta, r, u, v) -> surface: three horizontal cylinders with widths
proportional to (lambda, a, lambda + a), lambda = (e + sqrt(D))/2, and
crossing periods u, z2, v where

    z2 = (d/lambda) u + (d/lambda - 1) v + (b/lambda) |a1|.

The generator of the quadratic order acts on the symplectic basis
(alpha1, beta1, alpha2, beta2) by the integer matrix T below, and the
period vector of every chart surface is an eigenvector: omega T =
lambda omega.
"""

import cmath
import math
from dataclasses import dataclass

from .catalog import build_cylinder_surface
from .errors import BadDiscriminant, DomainViolation

H11_NAMES = ("a1", "a2", "a3", "a4")


@dataclass(frozen=True)
class PrymH11Params:
    """Integer chart data for one eigenform family."""

    D: int
    a: int
    d: int
    e: int
    b: int = 0

    def __post_init__(self):
        if self.D < 5 or self.D % 4 not in (0, 1):
            raise BadDiscriminant(f"D = {self.D}")
        if self.e * self.e + 4 * self.a * self.d != self.D:
            raise BadDiscriminant("e^2 + 4ad != D")
        if self.a <= 0 or self.d <= 0:
            raise BadDiscriminant("need a > 0 and d > 0")
        lo, hi = self.b_range()
        if not (lo - 1e-12 <= self.b <= hi + 1e-12):
            raise DomainViolation(f"b = {self.b} outside [{lo:.6f}, {hi:.6f}]")

    @property
    def lam(self) -> float:
        return (self.e + math.sqrt(self.D)) / 2.0

    def b_range(self):
        lam = (self.e + math.sqrt(self.D)) / 2.0
        return (-self.d * (2.0 + self.a / lam), 2.0 * self.a + lam)

    def widths(self, normalize: bool = False):
        """Horizontal lengths per unit r for (a1, a2, a3, a4)."""
        lam = self.lam
        w = (lam, float(self.a), lam, float(self.a))
        if normalize:
            s = sum(w)
            w = tuple(x / s for x in w)
        return w

    def matrix(self):
        """Generator of O_D on (alpha1, beta1, alpha2, beta2); c = 0."""
        a, b, d, e = self.a, self.b, self.d, self.e
        c = 0
        return ((e, 0, a, b),
                (0, e, c, d),
                (d, -b, 0, 0),
                (-c, a, 0, 0))


@dataclass(frozen=True)
class PrymChartPoint:
    theta: float
    r: float
    u: complex
    v: complex


def prym_h11_enumerate(D: int):
    """All (a, d, e) with e^2 + 4ad = D, a > 0, d > 0, as PrymH11Params
    (b = 0, always inside the admissible range), sorted by (e, a, d)."""
    if D < 5 or D % 4 not in (0, 1):
        raise BadDiscriminant(f"D = {D} (need D >= 5 and D = 0, 1 mod 4)")
    out = []
    emax = int(math.isqrt(D))
    for e in range(-emax, emax + 1):
        rem = D - e * e
        if rem <= 0 or rem % 4 != 0:
            continue
        ad = rem // 4
        for a in range(1, ad + 1):
            if ad % a == 0:
                out.append(PrymH11Params(D, a, ad // a, e))
    out.sort(key=lambda p: (p.e, p.a, p.d))
    return out


def chart_functions(params: PrymH11Params, normalize: bool = False):
    """Crossing-period coefficients ((xi_j, zeta_j, f_j), widths lhat_j).

    z_j = xi_j u + zeta_j v + f_j r for j = 1, 2, 3; lhat_j r is the
    width of cylinder j.
    """
    lam = params.lam
    w = params.widths(normalize)
    dl = params.d / lam
    coeff = (
        (1.0, 0.0, 0.0),
        (dl, dl - 1.0, params.b / lam * w[0]),
        (0.0, 1.0, 0.0),
    )
    lhat = (w[0], w[1], w[0] + w[3])
    return coeff, lhat


def _crossing_periods(params, point, normalize):
    coeff, lhat = chart_functions(params, normalize)
    zs = []
    for xi, zeta, f in coeff:
        zs.append(xi * point.u + zeta * point.v + f * point.r)
    return zs, lhat


def check_domain(params: PrymH11Params, point: PrymChartPoint,
                 normalize: bool = False):
    """Raise DomainViolation unless the point satisfies the chart domain."""
    if point.r <= 0:
        raise DomainViolation("r must be positive")
    zs, lhat = _crossing_periods(params, point, normalize)
    for j, z in enumerate(zs):
        if z.imag <= 0:
            raise DomainViolation(f"cylinder {j + 1}: height {z.imag:.3e} <= 0")
        if not (0 <= z.real < lhat[j] * point.r):
            raise DomainViolation(
                f"cylinder {j + 1}: twist {z.real:.6f} outside [0, {lhat[j] * point.r:.6f})")


def prym_chart_build(params: PrymH11Params, point: PrymChartPoint,
                     normalize: bool = False):
    """Surface realizing the 3-cylinder model at a chart point."""
    surface, _ = prym_chart_build_with_ids(params, point, normalize)
    return surface


def prym_chart_build_with_ids(params: PrymH11Params, point: PrymChartPoint,
                              normalize: bool = False):
    check_domain(params, point, normalize)
    (z1, z2, z3), _ = _crossing_periods(params, point, normalize)
    w = params.widths(normalize)
    r = point.r
    lengths = dict(zip(H11_NAMES, (w[0] * r, w[1] * r, w[2] * r, w[3] * r)))
    cylinders = [
        (["a3"], ["a1"], z1),
        (["a2"], ["a4"], z2),
        (["a1", "a4"], ["a3", "a2"], z3),
    ]
    surface, ids = build_cylinder_surface(lengths, cylinders)
    if point.theta:
        from .surface import transform
        surface = transform(surface, cmath.exp(1j * point.theta))
    return surface, ids


def absolute_periods(params: PrymH11Params, point: PrymChartPoint,
                     normalize: bool = False):
    """Periods on (alpha1, beta1, alpha2, beta2) as chart functions.

    beta-periods depend on u and v only through the sum u + v, which the
    kernel foliation preserves exactly.
    """
    lam = params.lam
    w = params.widths(normalize)
    rot = cmath.exp(1j * point.theta)
    s = point.u + point.v
    return (rot * (w[0] * point.r),
            rot * s,
            rot * (w[1] * point.r),
            rot * ((params.d / lam) * s + (params.b / lam) * w[0] * point.r))


def periods_from_surface(surface, ids, theta_frame: complex = 1.0):
    """Period vector measured on the built mesh edges."""
    z = surface.edge_vectors
    a1 = z[ids["a1"]]
    a2 = z[ids["a2"]]
    s1 = z[ids[("side", 0)]]
    s2 = z[ids[("side", 1)]]
    s3 = z[ids[("side", 2)]]
    return (a1, s1 + s3, a2, s2 + s3)


def eigen_residual(params: PrymH11Params, omega) -> float:
    """|omega T - lambda omega| relative to |omega|."""
    T = params.matrix()
    lam = params.lam
    res = 0.0
    norm = 0.0
    for j in range(4):
        col = sum(omega[i] * T[i][j] for i in range(4))
        res += abs(col - lam * omega[j]) ** 2
        norm += abs(omega[j]) ** 2
    return math.sqrt(res) / math.sqrt(norm)


def chart_area(params: PrymH11Params, point: PrymChartPoint,
               normalize: bool = False):
    """Area and the two height coefficients (c1, c2).

    A = r (c1 Im u + c2 Im v) with c1 = c2 = sqrt(D) per unit widths; the
    coefficients are assembled structurally from the cylinder data, not
    assumed equal.
    """
    coeff, lhat = chart_functions(params, normalize)
    c1 = sum(lhat[j] * coeff[j][0] for j in range(3))
    c2 = sum(lhat[j] * coeff[j][1] for j in range(3))
    A = point.r * (c1 * point.u.imag + c2 * point.v.imag)
    return A, c1, c2


def kernel_foliation_move(params: PrymH11Params, point: PrymChartPoint,
                          t: float, normalize: bool = False) -> PrymChartPoint:
    """Move along the kernel foliation: u -> u + it, v -> v - it.

    Absolute periods and area are unchanged; raises DomainViolation if
    the moved point leaves the chart.
    """
    moved = PrymChartPoint(point.theta, point.r,
                           point.u + complex(0.0, t),
                           point.v - complex(0.0, t))
    check_domain(params, moved, normalize)
    return moved
