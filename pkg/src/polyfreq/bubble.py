"""Equilibrium size of a polygonal electron bubble.

For the regular n-gon ``P_n`` of area ``pi`` dilated by ``a`` the energy is

    h(a) = Psi lambda(P_n) / a^2 + Sigma H1(dP_n) a + Pi pi a^2,

and ``h'(a) = 0`` is, after multiplying by ``a^3 / (Sigma H1)``,

    -2 Psi lambda / (Sigma H1) + a^3 + (2 Pi pi / (Sigma H1)) a^4 = 0.

Units are abstract; physical constants enter only through ``Psi``.
"""

import math
from dataclasses import dataclass, asdict

from .errors import DomainError, NoEquilibrium
from .geometry import regular_polygon


@dataclass(frozen=True)
class BubbleParams:
    psi: float
    sigma: float
    pressure: float
    n: int
    lambda_Pn: float
    perim_Pn: float
    allow_negative_pressure: bool = False

    def __post_init__(self):
        if self.psi <= 0 or self.sigma <= 0:
            raise DomainError("psi and sigma must be positive")
        if self.pressure < 0 and not self.allow_negative_pressure:
            raise DomainError("negative pressure requires allow_negative_pressure=True")
        if self.lambda_Pn <= 0 or self.perim_Pn <= 0:
            raise DomainError("lambda_Pn and perim_Pn must be positive")

    @classmethod
    def for_polygon(cls, psi, sigma, pressure, n, refine=6, lambda_Pn=None, **kw):
        """Parameters with lambda and perimeter of the area-pi regular n-gon.

        ``lambda_Pn`` is computed by FEM at level ``refine`` unless given.
        """
        P = regular_polygon(n, area=math.pi)
        if lambda_Pn is None:
            from .fem import eigen
            lambda_Pn = eigen(P, refine).lambda1
        return cls(psi, sigma, pressure, n, float(lambda_Pn), P.perimeter, **kw)

    def to_json(self):
        return asdict(self)


def energy(params, scale):
    """h(a) = Psi lambda / a^2 + Sigma perim a + Pi pi a^2."""
    if scale <= 0:
        raise DomainError("scale must be positive")
    p = params
    return p.psi * p.lambda_Pn / scale ** 2 + p.sigma * p.perim_Pn * scale + p.pressure * math.pi * scale ** 2


def energy_derivative(params, scale):
    p = params
    return (-2 * p.psi * p.lambda_Pn / scale ** 3 + p.sigma * p.perim_Pn
            + 2 * p.pressure * math.pi * scale)


def quartic(params, a):
    """-2 Psi lambda/(Sigma H1) + a^3 + (2 Pi pi/(Sigma H1)) a^4."""
    p = params
    sh = p.sigma * p.perim_Pn
    return -2 * p.psi * p.lambda_Pn / sh + a ** 3 + 2 * p.pressure * math.pi / sh * a ** 4


def _quartic_prime(params, a):
    p = params
    sh = p.sigma * p.perim_Pn
    return 3 * a ** 2 + 8 * p.pressure * math.pi / sh * a ** 3


def root_bracket(params):
    """Interval ``(lo, hi)`` with quartic(lo) < 0 < quartic(hi) for Pi >= 0.

    With ``q2 = 2 Psi lambda / (Sigma H1)`` and ``c = 2 Pi pi / (Sigma H1)``,
    at ``lo = min(q2^(1/3), (q2/c)^(1/4)) / 2`` both ``a^3`` and ``c a^4``
    are below ``q2 / 8``.
    """
    p = params
    sh = p.sigma * p.perim_Pn
    q2 = 2 * p.psi * p.lambda_Pn / sh
    c = 2 * p.pressure * math.pi / sh
    lo = q2 ** (1.0 / 3.0)
    if c > 0:
        lo = min(lo, (q2 / c) ** 0.25)
    return (0.5 * lo, 2 * q2 ** (1.0 / 3.0) + 1)


def equilibrium_scale(params, tol=1e-14, max_iter=200):
    """Positive root of the quartic by Newton's method safeguarded by bisection."""
    lo, hi = root_bracket(params)
    flo, fhi = quartic(params, lo), quartic(params, hi)
    if params.pressure < 0:
        # the quartic may have no positive root or two; search a wider range
        hi2 = hi
        while fhi < 0 and hi2 < 1e6 * hi:
            hi2 *= 2
            fhi = quartic(params, hi2)
        hi = hi2
    if not (flo < 0 < fhi):
        raise NoEquilibrium("no sign change of the equilibrium quartic in the bracket")
    a = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = quartic(params, a)
        if f == 0:
            return a
        if f < 0:
            lo = a
        else:
            hi = a
        d = _quartic_prime(params, a)
        step = a - f / d if d > 0 else 0.5 * (lo + hi)
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if abs(step - a) <= tol * max(1.0, abs(a)):
            return step
        a = step
    raise NoEquilibrium("Newton iteration did not converge")


def equilibrium_bisection(params, tol=1e-15, max_iter=400):
    """Reference root by plain bisection on the bracket."""
    lo, hi = root_bracket(params)
    if not quartic(params, lo) < 0 < quartic(params, hi):
        raise NoEquilibrium("no sign change in the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if quartic(params, mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def closed_form_zero_pressure(params):
    """(2 Psi lambda / (Sigma H1))^(1/3), the root when Pi = 0."""
    p = params
    return (2 * p.psi * p.lambda_Pn / (p.sigma * p.perim_Pn)) ** (1.0 / 3.0)
