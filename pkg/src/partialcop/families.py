"""Copula families: bivariate building blocks and trivariate models.

Every family exposes the cdf on closed [0, 1] arguments, the density and the
h-functions (conditional cdfs) on the open interior, and h-function inverses.
Densities and h-functions are hand-derived per family; finite differences are
used only as test oracles.  All evaluations broadcast over numpy arrays, and
family parameters may themselves be arrays (used by the conditional-family
machinery, where the parameter varies with the conditioning value).

Conventions
-----------
``h1(v, u)``   P(V <= v | U = u), the partial derivative of C in u.
``h2(u, v)``   P(U <= u | V = v), the partial derivative of C in v.
``h1_inv``/``h2_inv`` invert those maps in their first argument.

Trivariate families condition on the *second* coordinate: ``h_1g2(u1, u2)``
is P(U1 <= u1 | U2 = u2) and ``h_3g2`` the analogue for the third coordinate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import (
    DensityUnavailable,
    EvaluationAtBoundary,
    ParameterOutOfRange,
    RootNotBracketed,
    UnsupportedFamily,
)
from .quadrature import QuadratureRule, gauss_rule


class Family(str, enum.Enum):
    """Tagged copula family identifiers."""

    FGM3 = "fgm3"
    FRANK3 = "frank3"
    GAUSS3 = "gauss3"
    CLAYTON3 = "clayton3"
    POLYCE = "polyce"
    AMH2 = "amh2"
    FGM2 = "fgm2"
    FRANK2 = "frank2"
    CLAYTON2 = "clayton2"
    GAUSS2 = "gauss2"
    PRODUCT2 = "product2"
    COMONOTONE2 = "comonotone2"


TRIVARIATE_FAMILIES = frozenset(
    {Family.FGM3, Family.FRANK3, Family.GAUSS3, Family.CLAYTON3, Family.POLYCE}
)

_PARAM_COUNTS = {
    Family.FGM3: 1,
    Family.FRANK3: 1,
    Family.GAUSS3: 3,
    Family.CLAYTON3: 1,
    Family.POLYCE: 0,
    Family.AMH2: 1,
    Family.FGM2: 1,
    Family.FRANK2: 1,
    Family.CLAYTON2: 1,
    Family.GAUSS2: 1,
    Family.PRODUCT2: 0,
    Family.COMONOTONE2: 0,
}


@dataclass(frozen=True)
class FamilySpec:
    """A family tag plus its parameter vector."""

    family: Family
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))


def validate(spec: FamilySpec) -> FamilySpec:
    """Check the family-specific parameter constraints.

    Returns the spec unchanged when valid, else raises
    :class:`ParameterOutOfRange` naming the violated constraint.
    """
    spec = spec if isinstance(spec, FamilySpec) else FamilySpec(*spec)
    fam, p = spec.family, spec.params
    expected = _PARAM_COUNTS[fam]
    if len(p) != expected:
        raise ParameterOutOfRange(
            f"{fam.value}: expected {expected} parameter(s), got {len(p)}"
        )
    if fam in (Family.FGM3, Family.FGM2):
        if not abs(p[0]) <= 1.0:
            raise ParameterOutOfRange(f"{fam.value}: requires |theta| <= 1, got {p[0]}")
    elif fam in (Family.FRANK3, Family.FRANK2):
        if not p[0] > 0.0:
            raise ParameterOutOfRange(f"{fam.value}: requires theta > 0, got {p[0]}")
    elif fam in (Family.CLAYTON3, Family.CLAYTON2):
        if not p[0] > 0.0:
            raise ParameterOutOfRange(f"{fam.value}: requires theta > 0, got {p[0]}")
    elif fam is Family.AMH2:
        if not 0.0 <= p[0] < 1.0:
            raise ParameterOutOfRange(f"{fam.value}: requires gamma in [0, 1), got {p[0]}")
    elif fam is Family.GAUSS2:
        if not abs(p[0]) < 1.0:
            raise ParameterOutOfRange(f"{fam.value}: requires |rho| < 1, got {p[0]}")
    elif fam is Family.GAUSS3:
        r12, r13, r23 = p
        corr = np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])
        try:
            np.linalg.cholesky(corr)
        except np.linalg.LinAlgError:
            raise ParameterOutOfRange(
                "gauss3: correlations must form a positive-definite matrix"
            ) from None
    return spec


# ---------------------------------------------------------------------------
# shared numerics
# ---------------------------------------------------------------------------

def _unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("arguments must lie in [0, 1]")
    return x


def _interior(x, what="argument"):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise EvaluationAtBoundary(f"{what} must lie strictly inside (0, 1)")
    return x


def _bisect_inverse(f, p, iters=80):
    """Invert a monotone map [0,1] -> [0,1] by vectorized bisection.

    80 halvings bracket the root to ~1e-24, well below the 1e-10 contract.
    """
    p = np.asarray(p, dtype=float)
    lo = np.zeros(np.broadcast(p, np.zeros(())).shape, dtype=float)
    hi = np.ones_like(lo)
    plo = np.zeros_like(lo)
    phi = np.ones_like(lo)
    if np.any(p < plo) or np.any(p > phi):
        raise RootNotBracketed("target probability outside [0, 1]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(f(mid), dtype=float)
        take = fm < p
        lo = np.where(take, mid, lo)
        hi = np.where(take, hi, mid)
    return 0.5 * (lo + hi)


def _stable_quadratic_fgm(p, a):
    """Root in [0,1] of ``a v^2 - (1+a) v + p = 0`` (FGM-type h inversion).

    The conjugate form ``2p / (1 + a + sqrt((1+a)^2 - 4ap))`` is exact at
    a = 0 and avoids cancellation for all |a| <= 1.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    disc = np.sqrt(np.maximum((1.0 + a) ** 2 - 4.0 * a * p, 0.0))
    return 2.0 * p / (1.0 + a + disc)


# ---------------------------------------------------------------------------
# bivariate copulas
# ---------------------------------------------------------------------------

class BivariateCopula:
    """Interface shared by all bivariate copulas and evaluable handles."""

    spec: FamilySpec | None = None

    def cdf(self, u, v):
        raise NotImplementedError

    def pdf(self, u, v):
        raise NotImplementedError

    def h1(self, v, u):
        """P(V <= v | U = u)."""
        raise NotImplementedError

    def h2(self, u, v):
        """P(U <= u | V = v)."""
        raise NotImplementedError

    def h1_inv(self, p, u):
        u = np.asarray(u, dtype=float)
        return _bisect_inverse(lambda v: self.h1(v, u), p)

    def h2_inv(self, p, v):
        v = np.asarray(v, dtype=float)
        return _bisect_inverse(lambda u: self.h2(u, v), p)


class ProductCopula(BivariateCopula):
    """Independence copula C(u, v) = u v."""

    def __init__(self):
        self.spec = FamilySpec(Family.PRODUCT2)

    def cdf(self, u, v):
        return _unit(u) * _unit(v)

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        return np.ones(np.broadcast(u, v).shape)

    def h1(self, v, u):
        _interior(u, "conditioning value")
        return _unit(v) * np.ones_like(np.asarray(u, dtype=float))

    def h2(self, u, v):
        _interior(v, "conditioning value")
        return _unit(u) * np.ones_like(np.asarray(v, dtype=float))

    def h1_inv(self, p, u):
        return np.asarray(p, dtype=float) * np.ones_like(np.asarray(u, dtype=float))

    def h2_inv(self, p, v):
        return np.asarray(p, dtype=float) * np.ones_like(np.asarray(v, dtype=float))


class ComonotoneCopula(BivariateCopula):
    """Upper Frechet bound M(u, v) = min(u, v); has no density."""

    def __init__(self):
        self.spec = FamilySpec(Family.COMONOTONE2)

    def cdf(self, u, v):
        return np.minimum(_unit(u), _unit(v))

    def pdf(self, u, v):
        raise DensityUnavailable("the comonotone copula has no Lebesgue density")

    def h1(self, v, u):
        _interior(u, "conditioning value")
        return (np.asarray(v, dtype=float) >= np.asarray(u, dtype=float)).astype(float)

    def h2(self, u, v):
        _interior(v, "conditioning value")
        return (np.asarray(u, dtype=float) >= np.asarray(v, dtype=float)).astype(float)

    def h1_inv(self, p, u):
        # generalized inverse of the step conditional cdf: V = u almost surely
        return np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(p))[0].copy()

    def h2_inv(self, p, v):
        return np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(p))[0].copy()


class FgmCopula(BivariateCopula):
    """Farlie-Gumbel-Morgenstern copula, |theta| <= 1."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)
        if np.any(np.abs(self.theta) > 1.0):
            raise ParameterOutOfRange(f"fgm2: requires |theta| <= 1, got {theta}")
        if self.theta.ndim == 0:
            self.spec = FamilySpec(Family.FGM2, (float(self.theta),))

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        return u * v * (1.0 + self.theta * (1.0 - u) * (1.0 - v))

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        return 1.0 + self.theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        return v + self.theta * v * (1.0 - v) * (1.0 - 2.0 * u)

    def h2(self, u, v):
        v = _interior(v, "conditioning value")
        u = _unit(u)
        return u + self.theta * u * (1.0 - u) * (1.0 - 2.0 * v)

    def h1_inv(self, p, u):
        u = _interior(u, "conditioning value")
        return _stable_quadratic_fgm(p, self.theta * (1.0 - 2.0 * u))

    def h2_inv(self, p, v):
        v = _interior(v, "conditioning value")
        return _stable_quadratic_fgm(p, self.theta * (1.0 - 2.0 * v))


class FrankCopula(BivariateCopula):
    """Bivariate Frank copula with theta > 0.

    All expressions are written with expm1/log1p so that the exponential
    terms keep full precision for small theta and arguments near 0 or 1.
    """

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)
        if np.any(self.theta <= 0.0):
            raise ParameterOutOfRange(f"frank2: requires theta > 0, got {theta}")
        if self.theta.ndim == 0:
            self.spec = FamilySpec(Family.FRANK2, (float(self.theta),))

    def _em(self, x):
        # 1 - exp(-theta * x)
        return -np.expm1(-self.theta * x)

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        a = self._em(1.0)
        return -np.log1p(-self._em(u) * self._em(v) / a) / self.theta

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        a = self._em(1.0)
        d = a - self._em(u) * self._em(v)
        return self.theta * a * np.exp(-self.theta * (u + v)) / (d * d)

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        a = self._em(1.0)
        return np.exp(-self.theta * u) * self._em(v) / (a - self._em(u) * self._em(v))

    def h2(self, u, v):
        return self.h1(u, v)

    def h1_inv(self, p, u):
        u = _interior(u, "conditioning value")
        p = np.asarray(p, dtype=float)
        xu = np.exp(-self.theta * u)
        alpha = np.exp(-self.theta)
        num = xu + p * (alpha - xu)
        den = xu + p * (1.0 - xu)
        return -np.log(num / den) / self.theta

    def h2_inv(self, p, v):
        return self.h1_inv(p, v)


class AmhCopula(BivariateCopula):
    """Ali-Mikhail-Haq copula with gamma in [0, 1).

    Arises as the conditional copula of the trivariate Frank model.
    """

    def __init__(self, gamma):
        self.gamma = np.asarray(gamma, dtype=float)
        if np.any(self.gamma < 0.0) or np.any(self.gamma >= 1.0):
            raise ParameterOutOfRange(f"amh2: requires gamma in [0, 1), got {gamma}")
        if self.gamma.ndim == 0:
            self.spec = FamilySpec(Family.AMH2, (float(self.gamma),))

    def _den(self, u, v):
        return 1.0 - self.gamma * (1.0 - u) * (1.0 - v)

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        return u * v / self._den(u, v)

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        d = self._den(u, v)
        return (1.0 - self.gamma + 2.0 * self.gamma * u * v / d) / (d * d)

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        d = self._den(u, v)
        return v * (1.0 - self.gamma * (1.0 - v)) / (d * d)

    def h2(self, u, v):
        return self.h1(u, v)

    def h1_inv(self, p, u):
        u = _interior(u, "conditioning value")
        p = np.asarray(p, dtype=float)
        g = self.gamma
        s = 1.0 - g * (1.0 - u)
        r = g * (1.0 - u)
        # p (s + r v)^2 = v (1 - g) + g v^2, a quadratic in v
        qa = p * r * r - g
        qb = 2.0 * p * s * r - (1.0 - g)
        qc = p * s * s
        disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = (-qb - disc) / (2.0 * qa)
            r2 = (-qb + disc) / (2.0 * qa)
            linear = -qc / qb
        near_linear = np.abs(qa) < 1e-13
        in_range = (r1 >= 0.0) & (r1 <= 1.0)
        root = np.where(in_range, r1, r2)
        return np.clip(np.where(near_linear, linear, root), 0.0, 1.0)

    def h2_inv(self, p, v):
        return self.h1_inv(p, v)


class ClaytonCopula(BivariateCopula):
    """Bivariate Clayton copula with theta > 0; lower tail dependent."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)
        if np.any(self.theta <= 0.0):
            raise ParameterOutOfRange(f"clayton2: requires theta > 0, got {theta}")
        if self.theta.ndim == 0:
            self.spec = FamilySpec(Family.CLAYTON2, (float(self.theta),))

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        th = self.theta
        with np.errstate(divide="ignore", over="ignore"):
            s = u ** -th + v ** -th - 1.0
            out = s ** (-1.0 / th)
        return np.where((u <= 0.0) | (v <= 0.0), 0.0, out)

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        th = self.theta
        s = u ** -th + v ** -th - 1.0
        return (1.0 + th) * (u * v) ** (-th - 1.0) * s ** (-1.0 / th - 2.0)

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        th = self.theta
        with np.errstate(divide="ignore", over="ignore"):
            s = u ** -th + v ** -th - 1.0
            out = u ** (-th - 1.0) * s ** (-1.0 / th - 1.0)
        return np.where(v <= 0.0, 0.0, out)

    def h2(self, u, v):
        return self.h1(u, v)

    def h1_inv(self, p, u):
        u = _interior(u, "conditioning value")
        p = np.asarray(p, dtype=float)
        th = self.theta
        return ((p ** (-th / (1.0 + th)) - 1.0) * u ** -th + 1.0) ** (-1.0 / th)

    def h2_inv(self, p, v):
        return self.h1_inv(p, v)


def _bvn_cdf(h, k, rho, order=64):
    """Bivariate standard normal cdf by the tetrachoric integral.

    Phi2(h, k, rho) = Phi(h) Phi(k) + (1/2pi) int_0^rho exp(...) dr with a
    smooth integrand, so a fixed Gauss rule reaches near machine precision.
    Deterministic, unlike library quasi-Monte-Carlo routines.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    rho = np.asarray(rho, dtype=float)
    base = ndtr(h) * ndtr(k)
    if np.all(rho == 0.0):
        return np.broadcast_to(base, np.broadcast(h, k, rho).shape).copy()
    rule = gauss_rule(order)
    r = rho[..., None] * rule.nodes
    w = rho[..., None] * rule.weights
    hh = h[..., None]
    kk = k[..., None]
    one_m_r2 = 1.0 - r * r
    with np.errstate(invalid="ignore"):
        f = np.exp(-(hh * hh - 2.0 * r * hh * kk + kk * kk) / (2.0 * one_m_r2))
    f /= np.sqrt(one_m_r2)
    # the correction term vanishes when either argument is infinite
    f = np.where(np.isfinite(hh) & np.isfinite(kk), f, 0.0)
    return base + np.sum(w * f, axis=-1) / (2.0 * np.pi)


class GaussianCopula(BivariateCopula):
    """Bivariate Gaussian copula with |rho| < 1."""

    def __init__(self, rho):
        self.rho = np.asarray(rho, dtype=float)
        if np.any(np.abs(self.rho) >= 1.0):
            raise ParameterOutOfRange(f"gauss2: requires |rho| < 1, got {rho}")
        if self.rho.ndim == 0:
            self.spec = FamilySpec(Family.GAUSS2, (float(self.rho),))

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            x, y = ndtri(u), ndtri(v)
            out = _bvn_cdf(x, y, self.rho)
        out = np.where((u <= 0.0) | (v <= 0.0), 0.0, out)
        out = np.where(u >= 1.0, v, out)
        out = np.where(v >= 1.0, np.where(u >= 1.0, 1.0, u), out)
        return out

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        x, y = ndtri(u), ndtri(v)
        r = self.rho
        q = 1.0 - r * r
        expo = -(r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * q)
        return np.exp(expo) / np.sqrt(q)

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        with np.errstate(divide="ignore"):
            x, y = ndtri(u), ndtri(v)
        return ndtr((y - self.rho * x) / np.sqrt(1.0 - self.rho ** 2))

    def h2(self, u, v):
        return self.h1(u, v)

    def h1_inv(self, p, u):
        u = _interior(u, "conditioning value")
        p = np.asarray(p, dtype=float)
        x = ndtri(u)
        return ndtr(self.rho * x + np.sqrt(1.0 - self.rho ** 2) * ndtri(p))

    def h2_inv(self, p, v):
        return self.h1_inv(p, v)


class PolyPerturbationCopula(BivariateCopula):
    """Polynomial perturbation of independence with kernel uv(1-u)(1-v)(1+uv).

    ``C(u, v) = uv + t * uv(1-u)(1-v)(1+uv)`` for t in [0, 1].  The slices of
    the POLYCE conditional family are exactly this copula with t = z, and the
    matching partial copula is the slice at t = 1/2.
    """

    def __init__(self, t):
        self.t = np.asarray(t, dtype=float)
        if np.any(self.t < 0.0) or np.any(self.t > 1.0):
            raise ParameterOutOfRange(f"poly perturbation: requires t in [0, 1], got {t}")

    @staticmethod
    def _kernel(u, v):
        return u * v * (1.0 - u) * (1.0 - v) * (1.0 + u * v)

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        return u * v + self.t * self._kernel(u, v)

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        mixed = (1.0 - 2.0 * u) * (1.0 - 2.0 * v) + u * v * (2.0 - 3.0 * u) * (2.0 - 3.0 * v)
        return 1.0 + self.t * mixed

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        dk_du = v * (1.0 - v) * ((1.0 - 2.0 * u) * (1.0 + u * v) + u * (1.0 - u) * v)
        return v + self.t * dk_du

    def h2(self, u, v):
        return self.h1(u, v)


# ---------------------------------------------------------------------------
# trivariate copulas
# ---------------------------------------------------------------------------

class TrivariateCopula:
    """Interface of the trivariate models; conditioning is on coordinate 2."""

    spec: FamilySpec

    def cdf3(self, u1, u2, u3):
        raise NotImplementedError

    def pdf3(self, u1, u2, u3):
        raise NotImplementedError

    def h_1g2(self, u1, u2):
        """P(U1 <= u1 | U2 = u2)."""
        raise NotImplementedError

    def h_3g2(self, u3, u2):
        """P(U3 <= u3 | U2 = u2)."""
        raise NotImplementedError

    def hinv_1g2(self, p, u2):
        u2 = np.asarray(u2, dtype=float)
        return _bisect_inverse(lambda u: self.h_1g2(u, u2), p)

    def hinv_3g2(self, p, u2):
        u2 = np.asarray(u2, dtype=float)
        return _bisect_inverse(lambda u: self.h_3g2(u, u2), p)


class FgmTrivariate(TrivariateCopula):
    """Exchangeable trivariate FGM model; all bivariate margins are product."""

    def __init__(self, theta):
        self.spec = validate(FamilySpec(Family.FGM3, (theta,)))
        self.theta = float(theta)

    def cdf3(self, u1, u2, u3):
        u1, u2, u3 = _unit(u1), _unit(u2), _unit(u3)
        prod = u1 * u2 * u3
        return prod + self.theta * prod * (1.0 - u1) * (1.0 - u2) * (1.0 - u3)

    def pdf3(self, u1, u2, u3):
        u1, u2, u3 = _interior(u1), _interior(u2), _interior(u3)
        return 1.0 + self.theta * (1.0 - 2.0 * u1) * (1.0 - 2.0 * u2) * (1.0 - 2.0 * u3)

    def h_1g2(self, u1, u2):
        _interior(u2, "conditioning value")
        return _unit(u1) * np.ones_like(np.asarray(u2, dtype=float))

    h_3g2 = h_1g2

    def hinv_1g2(self, p, u2):
        _interior(u2, "conditioning value")
        return np.asarray(p, dtype=float) * np.ones_like(np.asarray(u2, dtype=float))

    hinv_3g2 = hinv_1g2


class FrankTrivariate(TrivariateCopula):
    """Exchangeable trivariate Frank model with theta > 0."""

    def __init__(self, theta):
        self.spec = validate(FamilySpec(Family.FRANK3, (theta,)))
        self.theta = float(theta)
        self._pair = FrankCopula(theta)

    def _em(self, x):
        return -np.expm1(-self.theta * x)

    def cdf3(self, u1, u2, u3):
        u1, u2, u3 = _unit(u1), _unit(u2), _unit(u3)
        a = self._em(1.0)
        prod = self._em(u1) * self._em(u2) * self._em(u3)
        return -np.log1p(-prod / (a * a)) / self.theta

    def pdf3(self, u1, u2, u3):
        u1, u2, u3 = _interior(u1), _interior(u2), _interior(u3)
        th = self.theta
        a = self._em(1.0)
        a2 = a * a
        prod = self._em(u1) * self._em(u2) * self._em(u3)
        t = 1.0 - prod / a2
        x = np.exp(-th * (u1 + u2 + u3))
        return th * th * x * (1.0 + prod / a2) / (a2 * t ** 3)

    def h_1g2(self, u1, u2):
        return self._pair.h1(u1, u2)

    def h_3g2(self, u3, u2):
        return self._pair.h1(u3, u2)

    def hinv_1g2(self, p, u2):
        return self._pair.h1_inv(p, u2)

    def hinv_3g2(self, p, u2):
        return self._pair.h1_inv(p, u2)


class ClaytonTrivariate(TrivariateCopula):
    """Exchangeable trivariate Clayton model with theta > 0."""

    def __init__(self, theta):
        self.spec = validate(FamilySpec(Family.CLAYTON3, (theta,)))
        self.theta = float(theta)
        self._pair = ClaytonCopula(theta)

    def cdf3(self, u1, u2, u3):
        u1, u2, u3 = _unit(u1), _unit(u2), _unit(u3)
        th = self.theta
        with np.errstate(divide="ignore", over="ignore"):
            s = u1 ** -th + u2 ** -th + u3 ** -th - 2.0
            out = s ** (-1.0 / th)
        return np.where((u1 <= 0.0) | (u2 <= 0.0) | (u3 <= 0.0), 0.0, out)

    def pdf3(self, u1, u2, u3):
        u1, u2, u3 = _interior(u1), _interior(u2), _interior(u3)
        th = self.theta
        s = u1 ** -th + u2 ** -th + u3 ** -th - 2.0
        return (
            (1.0 + th)
            * (1.0 + 2.0 * th)
            * (u1 * u2 * u3) ** (-th - 1.0)
            * s ** (-1.0 / th - 3.0)
        )

    def h_1g2(self, u1, u2):
        return self._pair.h1(u1, u2)

    def h_3g2(self, u3, u2):
        return self._pair.h1(u3, u2)

    def hinv_1g2(self, p, u2):
        return self._pair.h1_inv(p, u2)

    def hinv_3g2(self, p, u2):
        return self._pair.h1_inv(p, u2)


class GaussianTrivariate(TrivariateCopula):
    """Trivariate Gaussian copula from three pairwise correlations."""

    def __init__(self, r12, r13, r23):
        self.spec = validate(FamilySpec(Family.GAUSS3, (r12, r13, r23)))
        self.r12, self.r13, self.r23 = float(r12), float(r13), float(r23)
        self.corr = np.array(
            [[1.0, self.r12, self.r13], [self.r12, 1.0, self.r23], [self.r13, self.r23, 1.0]]
        )
        self._prec = np.linalg.inv(self.corr)
        self._logdet = float(np.linalg.slogdet(self.corr)[1])

    @property
    def conditional_rho(self):
        """Partial correlation of coordinates (1, 3) given coordinate 2."""
        return (self.r13 - self.r12 * self.r23) / np.sqrt(
            (1.0 - self.r12 ** 2) * (1.0 - self.r23 ** 2)
        )

    def cdf3(self, u1, u2, u3, order=64):
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        u3 = np.asarray(u3, dtype=float)
        _unit(u1), _unit(u2), _unit(u3)
        shape = np.broadcast(u1, u2, u3).shape
        u1, u2, u3 = (np.broadcast_to(x, shape).ravel() for x in (u1, u2, u3))
        out = np.empty(u1.shape)
        rule = gauss_rule(order)
        s12 = np.sqrt(1.0 - self.r12 ** 2)
        s23 = np.sqrt(1.0 - self.r23 ** 2)
        rc = self.conditional_rho
        # integrate the conditional bivariate cdf over the second coordinate,
        # on the normal-score scale where the integrand is analytic
        cut = 8.5
        inv_sqrt_2pi = 1.0 / np.sqrt(2.0 * np.pi)
        for i in range(out.size):
            if u1[i] <= 0.0 or u2[i] <= 0.0 or u3[i] <= 0.0:
                out[i] = 0.0
                continue
            x1, x3 = ndtri(min(u1[i], 1.0)), ndtri(min(u3[i], 1.0))
            hi = cut if u2[i] >= 1.0 else min(ndtri(u2[i]), cut)
            t, w = rule.rescaled(-cut, hi)
            h = np.where(np.isposinf(x1), np.inf, (x1 - self.r12 * t) / s12)
            k = np.where(np.isposinf(x3), np.inf, (x3 - self.r23 * t) / s23)
            dens = inv_sqrt_2pi * np.exp(-0.5 * t * t)
            out[i] = float(np.sum(w * dens * _bvn_cdf(h, k, np.full_like(h, rc))))
        return out.reshape(shape) if shape else float(out[0])

    def pdf3(self, u1, u2, u3):
        u1, u2, u3 = _interior(u1), _interior(u2), _interior(u3)
        x = np.stack(np.broadcast_arrays(ndtri(u1), ndtri(u2), ndtri(u3)), axis=-1)
        q = np.einsum("...i,ij,...j->...", x, self._prec - np.eye(3), x)
        return np.exp(-0.5 * (q + self._logdet))

    def h_1g2(self, u1, u2):
        u2 = _interior(u2, "conditioning value")
        u1 = _unit(u1)
        with np.errstate(divide="ignore"):
            x1 = ndtri(u1)
        return ndtr((x1 - self.r12 * ndtri(u2)) / np.sqrt(1.0 - self.r12 ** 2))

    def h_3g2(self, u3, u2):
        u2 = _interior(u2, "conditioning value")
        u3 = _unit(u3)
        with np.errstate(divide="ignore"):
            x3 = ndtri(u3)
        return ndtr((x3 - self.r23 * ndtri(u2)) / np.sqrt(1.0 - self.r23 ** 2))

    def hinv_1g2(self, p, u2):
        u2 = _interior(u2, "conditioning value")
        return ndtr(self.r12 * ndtri(u2) + np.sqrt(1.0 - self.r12 ** 2) * ndtri(np.asarray(p, dtype=float)))

    def hinv_3g2(self, p, u2):
        u2 = _interior(u2, "conditioning value")
        return ndtr(self.r23 * ndtri(u2) + np.sqrt(1.0 - self.r23 ** 2) * ndtri(np.asarray(p, dtype=float)))


class PolyCETrivariate(TrivariateCopula):
    """Parameter-free trivariate model behind the Kendall counterexample.

    Coordinates 1 and 3 are each independent of coordinate 2, and their
    conditional copula given U2 = z is the polynomial perturbation copula
    with t = z.  Integrating that slice over the conditioning value gives
    the closed-form cdf below.
    """

    def __init__(self):
        self.spec = FamilySpec(Family.POLYCE)

    def cdf3(self, u1, u2, u3):
        u1, u2, u3 = _unit(u1), _unit(u2), _unit(u3)
        k = PolyPerturbationCopula._kernel(u1, u3)
        return u1 * u2 * u3 + 0.5 * u2 * u2 * k

    def pdf3(self, u1, u2, u3):
        u1, u2, u3 = _interior(u1), _interior(u2), _interior(u3)
        mixed = (1.0 - 2.0 * u1) * (1.0 - 2.0 * u3) + u1 * u3 * (2.0 - 3.0 * u1) * (2.0 - 3.0 * u3)
        return 1.0 + u2 * mixed

    def h_1g2(self, u1, u2):
        _interior(u2, "conditioning value")
        return _unit(u1) * np.ones_like(np.asarray(u2, dtype=float))

    h_3g2 = h_1g2

    def hinv_1g2(self, p, u2):
        _interior(u2, "conditioning value")
        return np.asarray(p, dtype=float) * np.ones_like(np.asarray(u2, dtype=float))

    hinv_3g2 = hinv_1g2


# ---------------------------------------------------------------------------
# factories and functional wrappers
# ---------------------------------------------------------------------------

_BIVARIATE_BUILDERS = {
    Family.AMH2: lambda p: AmhCopula(p[0]),
    Family.FGM2: lambda p: FgmCopula(p[0]),
    Family.FRANK2: lambda p: FrankCopula(p[0]),
    Family.CLAYTON2: lambda p: ClaytonCopula(p[0]),
    Family.GAUSS2: lambda p: GaussianCopula(p[0]),
    Family.PRODUCT2: lambda p: ProductCopula(),
    Family.COMONOTONE2: lambda p: ComonotoneCopula(),
}

_TRIVARIATE_BUILDERS = {
    Family.FGM3: lambda p: FgmTrivariate(p[0]),
    Family.FRANK3: lambda p: FrankTrivariate(p[0]),
    Family.CLAYTON3: lambda p: ClaytonTrivariate(p[0]),
    Family.GAUSS3: lambda p: GaussianTrivariate(*p),
    Family.POLYCE: lambda p: PolyCETrivariate(),
}


def make_copula(spec: FamilySpec):
    """Instantiate the copula object behind a validated spec."""
    spec = validate(spec)
    if spec.family in _TRIVARIATE_BUILDERS:
        return _TRIVARIATE_BUILDERS[spec.family](spec.params)
    return _BIVARIATE_BUILDERS[spec.family](spec.params)


def cdf3(cop: TrivariateCopula, u1, u2, u3):
    """Trivariate copula cdf."""
    return cop.cdf3(u1, u2, u3)


def pdf3(cop: TrivariateCopula, u1, u2, u3):
    """Trivariate copula density (open interior only)."""
    return cop.pdf3(u1, u2, u3)


def hfunc(cop: TrivariateCopula, which: str, u, given):
    """Conditional cdf of coordinate 1 or 3 given coordinate 2.

    ``which`` selects the coordinate: ``"1|2"`` or ``"3|2"``.
    """
    if which == "1|2":
        return cop.h_1g2(u, given)
    if which == "3|2":
        return cop.h_3g2(u, given)
    raise UnsupportedFamily(f"unknown h-function selector {which!r}")


def hfunc_inv(cop: TrivariateCopula, which: str, p, given):
    """Inverse of :func:`hfunc` in its first argument (root tol < 1e-10)."""
    if which == "1|2":
        return cop.hinv_1g2(p, given)
    if which == "3|2":
        return cop.hinv_3g2(p, given)
    raise UnsupportedFamily(f"unknown h-function selector {which!r}")


# ---------------------------------------------------------------------------
# Frank tau <-> theta
# ---------------------------------------------------------------------------

def debye1(x: float, order: int = 64) -> float:
    """First Debye function, D1(x) = (1/x) int_0^x t/(e^t - 1) dt."""
    rule = gauss_rule(order)
    y = x * rule.nodes
    f = np.where(np.abs(y) < 1e-8, 1.0 - y / 2.0, y / np.expm1(y))
    return float(np.sum(rule.weights * f))


def debye2(x: float, order: int = 64) -> float:
    """Second Debye function, D2(x) = (2/x^2) int_0^x t^2/(e^t - 1) dt."""
    rule = gauss_rule(order)
    y = x * rule.nodes
    f = np.where(np.abs(y) < 1e-8, y * (1.0 - y / 2.0), y * y / np.expm1(y))
    return float(2.0 / x * np.sum(rule.weights * f))


def frank_kendall_tau(theta: float) -> float:
    """Kendall's tau of the bivariate Frank copula, 1 - 4/theta (1 - D1)."""
    if theta <= 0.0:
        raise ParameterOutOfRange("frank tau requires theta > 0")
    return 1.0 - 4.0 / theta * (1.0 - debye1(theta))


def frank_spearman_rho(theta: float) -> float:
    """Spearman's rho of the bivariate Frank copula via Debye functions."""
    if theta <= 0.0:
        raise ParameterOutOfRange("frank rho requires theta > 0")
    return 1.0 - 12.0 / theta * (debye1(theta) - debye2(theta))


def frank_tau_to_theta(tau: float) -> float:
    """Invert Kendall's tau to the Frank dependence parameter.

    Bisection-type root solve of ``frank_kendall_tau`` to better than 1e-8
    in tau; valid for tau in (0, 1).
    """
    if not 0.0 < tau < 1.0:
        raise ParameterOutOfRange("tau must lie in (0, 1)")
    lo, hi = 1e-9, 1.0
    while frank_kendall_tau(hi) < tau:
        hi *= 2.0
        if hi > 1e6:
            raise RootNotBracketed("tau too close to 1")
    return float(brentq(lambda t: frank_kendall_tau(t) - tau, lo, hi, xtol=1e-13))
