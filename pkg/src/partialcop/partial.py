"""Conditional copulas, partial copulas, and approximation-optimality checks.

The conditional copula of a trivariate model maps the conditioning value z to
a bivariate copula on the scale of the conditional probability integral
transforms.  The partial copula is its average over the conditioning law
(uniform by default); it is available both as a quadrature average and, for
every in-scope family, in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import EvaluationAtBoundary, NonpositiveDensity, UnsupportedFamily
from .families import (
    AmhCopula,
    BivariateCopula,
    ClaytonCopula,
    Family,
    FamilySpec,
    FgmCopula,
    GaussianCopula,
    GaussianTrivariate,
    PolyPerturbationCopula,
    ProductCopula,
    TrivariateCopula,
    _bisect_inverse,
    _interior,
    _unit,
    make_copula,
    validate,
)
from .quadrature import QuadratureRule, gauss_rule

_DENSITY_FLOOR = 1e-300


class ConditionalFamily:
    """Map z -> bivariate copula of the CPIT pair given the conditioning value.

    ``at(z)`` accepts scalars or arrays; with an array the returned copula
    carries an array parameter and broadcasts against evaluation points,
    which is what the quadrature averages rely on.
    """

    def __init__(self, spec: FamilySpec, builder: Callable, constant_in_z: bool):
        self.spec = spec
        self._builder = builder
        self.constant_in_z = constant_in_z

    def at(self, z) -> BivariateCopula:
        return self._builder(np.asarray(z, dtype=float))

    def eval(self, u1, u2, z):
        """Conditional copula cdf C(u1, u2 | z)."""
        return self.at(z).cdf(u1, u2)

    def pdf(self, u1, u2, z):
        """Conditional copula density c(u1, u2 | z)."""
        return self.at(z).pdf(u1, u2)


def conditional_copula(source) -> ConditionalFamily:
    """Closed-form conditional family of a trivariate model.

    Accepts a :class:`FamilySpec` or an instantiated trivariate copula.
    The slice families are: FGM with parameter theta*(1-2z) for the FGM
    model, AMH with parameter 1-exp(-theta*z) for the Frank model, the
    polynomial perturbation copula with t = z for POLYCE, and constant
    Gaussian / Clayton slices for the two simplified models.
    """
    if isinstance(source, TrivariateCopula):
        spec = source.spec
        cop = source
    else:
        spec = validate(source)
        cop = make_copula(spec)
    fam = spec.family
    if fam is Family.FGM3:
        theta = spec.params[0]
        return ConditionalFamily(spec, lambda z: FgmCopula(theta * (1.0 - 2.0 * z)), False)
    if fam is Family.FRANK3:
        theta = spec.params[0]
        return ConditionalFamily(spec, lambda z: AmhCopula(-np.expm1(-theta * z)), False)
    if fam is Family.POLYCE:
        return ConditionalFamily(spec, lambda z: PolyPerturbationCopula(z), False)
    if fam is Family.CLAYTON3:
        theta = spec.params[0]
        cond = theta / (1.0 + theta)
        return ConditionalFamily(
            spec, lambda z: ClaytonCopula(cond * np.ones_like(np.asarray(z, dtype=float))), True
        )
    if fam is Family.GAUSS3:
        rho = GaussianTrivariate(*spec.params).conditional_rho
        return ConditionalFamily(
            spec, lambda z: GaussianCopula(rho * np.ones_like(np.asarray(z, dtype=float))), True
        )
    raise UnsupportedFamily(f"no conditional family for {fam.value}")


class _PartialFrankClosedForm(BivariateCopula):
    """Closed-form partial copula of the trivariate Frank model.

    With f = u + v - uv and m = e^theta - 1 the cdf is
    ``u v log1p(m f) / (theta f)``; the h-functions and the density are its
    hand-derived partials, expressed through phi(f) = log1p(m f)/f and its
    first two derivatives.
    """

    def __init__(self, theta: float):
        self.theta = float(theta)
        self._m = np.expm1(self.theta)

    def _phi(self, f):
        return np.log1p(self._m * f) / f

    def _phi1(self, f):
        m = self._m
        return m / ((1.0 + m * f) * f) - np.log1p(m * f) / (f * f)

    def _phi2(self, f):
        m = self._m
        mf = 1.0 + m * f
        return (
            -m * m / (mf * mf * f)
            - 2.0 * m / (mf * f * f)
            + 2.0 * np.log1p(m * f) / (f ** 3)
        )

    def cdf(self, u, v):
        u, v = _unit(u), _unit(v)
        f = u + v - u * v
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u * v * np.log1p(self._m * f) / (self.theta * f)
        return np.where(f <= 0.0, 0.0, val)

    def pdf(self, u, v):
        u, v = _interior(u), _interior(v)
        f = u + v - u * v
        return (
            self._phi(f)
            + (u + v - 3.0 * u * v) * self._phi1(f)
            + u * (1.0 - u) * v * (1.0 - v) * self._phi2(f)
        ) / self.theta

    def h1(self, v, u):
        u = _interior(u, "conditioning value")
        v = _unit(v)
        f = u + v - u * v
        return (v * self._phi(f) + u * v * (1.0 - v) * self._phi1(f)) / self.theta

    def h2(self, u, v):
        return self.h1(u, v)

    def h1_inv(self, p, u):
        u = np.asarray(u, dtype=float)
        return _bisect_inverse(lambda v: self.h1(v, u), p)

    h2_inv = h1_inv


class PartialCopula(BivariateCopula):
    """The expected conditional copula, as a full bivariate copula object.

    Modes
    -----
    ``"quadrature"``
        cdf/density/h-functions are weighted node sums of the conditional
        family; differentiating under the finite sum is exact, so no nested
        numerical differentiation occurs.
    ``"closed_form"``
        family-specific formulas (product for FGM, the logarithmic form for
        Frank, the t = 1/2 slice for POLYCE, and the constant conditional
        copula for the simplified Gaussian/Clayton models).
    """

    def __init__(self, conditional: ConditionalFamily, mode: str = "closed_form",
                 rule: QuadratureRule | None = None, z_inverse_cdf=None):
        if mode not in ("closed_form", "quadrature"):
            raise ValueError(f"unknown partial-copula mode {mode!r}")
        self.conditional = conditional
        self.mode = mode
        self.rule = rule if rule is not None else gauss_rule()
        nodes = self.rule.nodes
        self._z_nodes = nodes if z_inverse_cdf is None else np.asarray(z_inverse_cdf(nodes), dtype=float)
        self._delegate = None
        if mode == "closed_form":
            if z_inverse_cdf is not None:
                raise UnsupportedFamily("closed forms assume a uniform conditioning law")
            self._delegate = self._closed_form_delegate()

    def _closed_form_delegate(self) -> BivariateCopula:
        fam = self.conditional.spec.family
        if fam is Family.FGM3:
            return ProductCopula()
        if fam is Family.FRANK3:
            return _PartialFrankClosedForm(self.conditional.spec.params[0])
        if fam is Family.POLYCE:
            return PolyPerturbationCopula(0.5)
        if self.conditional.constant_in_z:
            return self.conditional.at(0.5)
        raise UnsupportedFamily(f"no closed-form partial copula for {fam.value}")

    def _znodes_col(self, shape):
        return self._z_nodes.reshape((self.rule.order,) + (1,) * len(shape))

    def _average(self, evaluate):
        """Weighted node sum of a per-slice evaluation."""
        w = self.rule.weights
        vals = evaluate(self._z_nodes)
        return np.tensordot(w, vals, axes=(0, 0))

    def cdf(self, u, v):
        if self._delegate is not None:
            return self._delegate.cdf(u, v)
        u, v = _unit(u), _unit(v)
        shape = np.broadcast(u, v).shape
        z = self._znodes_col(shape)
        slices = self.conditional.at(z)
        out = np.tensordot(self.rule.weights, slices.cdf(u, v), axes=(0, 0))
        return out if shape else float(out)

    def pdf(self, u, v):
        if self._delegate is not None:
            return self._delegate.pdf(u, v)
        u, v = _interior(u), _interior(v)
        shape = np.broadcast(u, v).shape
        z = self._znodes_col(shape)
        out = np.tensordot(self.rule.weights, self.conditional.at(z).pdf(u, v), axes=(0, 0))
        return out if shape else float(out)

    def h1(self, v, u):
        if self._delegate is not None:
            return self._delegate.h1(v, u)
        u = _interior(u, "conditioning value")
        v = _unit(v)
        shape = np.broadcast(u, v).shape
        z = self._znodes_col(shape)
        out = np.tensordot(self.rule.weights, self.conditional.at(z).h1(v, u), axes=(0, 0))
        return out if shape else float(out)

    def h2(self, u, v):
        if self._delegate is not None:
            return self._delegate.h2(u, v)
        return self.h1(u, v)   # all in-scope conditional slices are exchangeable

    def h1_inv(self, p, u):
        if self._delegate is not None:
            return self._delegate.h1_inv(p, u)
        return super().h1_inv(p, u)

    def h2_inv(self, p, v):
        if self._delegate is not None:
            return self._delegate.h2_inv(p, v)
        return super().h2_inv(p, v)


def partial_copula(source, mode: str = "closed_form",
                   rule: QuadratureRule | None = None) -> PartialCopula:
    """Build the partial copula of a trivariate family spec or copula."""
    return PartialCopula(conditional_copula(source), mode=mode, rule=rule)


def partial_cdf(pc: PartialCopula, u1, u2):
    """Pointwise partial-copula cdf."""
    return pc.cdf(u1, u2)


def partial_pdf(pc: PartialCopula, u1, u2):
    """Pointwise partial-copula density (open interior only)."""
    return pc.pdf(u1, u2)


# ---------------------------------------------------------------------------
# L2 projection
# ---------------------------------------------------------------------------

def l2_projection_bruteforce(cf: ConditionalFamily, u1, u2,
                             rule: QuadratureRule | None = None):
    """Pointwise L2-optimal approximation of the conditional copula.

    Computes E[C(u1, u2 | Z) | U1 = u1, U2 = u2] by quadrature: the
    conditional law of Z given the CPIT pair has density proportional to the
    conditional copula density, so the projection is the density-weighted
    node average of the conditional cdf.  On the boundary of the square the
    projection reduces to the copula boundary values by continuity.
    """
    rule = rule if rule is not None else gauss_rule()
    u1, u2 = _unit(u1), _unit(u2)
    shape = np.broadcast(u1, u2).shape
    boundary = (u1 <= 0.0) | (u1 >= 1.0) | (u2 <= 0.0) | (u2 >= 1.0)
    u1s = np.where(boundary, 0.5, u1)
    u2s = np.where(boundary, 0.5, u2)
    z = rule.nodes.reshape((rule.order,) + (1,) * len(shape))
    slices = cf.at(z)
    dens = slices.pdf(u1s, u2s)
    cdfs = slices.cdf(u1s, u2s)
    num = np.tensordot(rule.weights, cdfs * dens, axes=(0, 0))
    den = np.tensordot(rule.weights, dens, axes=(0, 0))
    edge = np.where((u1 <= 0.0) | (u2 <= 0.0), 0.0, np.where(u1 >= 1.0, u2, u1))
    out = np.where(boundary, edge, num / den)
    return out if shape else float(out)


def l2_projection_fgm(theta: float, u1, u2):
    """Closed-form L2 projection for the FGM model.

    ``u1 u2 (1 + theta^2 (1-u1)(1-2u1)(1-u2)(1-2u2) / 3)``; the factored
    bracket expands to the quartic polynomial form of the projection.
    """
    if abs(theta) > 1.0:
        raise UnsupportedFamily("fgm projection requires |theta| <= 1")
    u1, u2 = _unit(u1), _unit(u2)
    bracket = (1.0 - u1) * (1.0 - 2.0 * u1) * (1.0 - u2) * (1.0 - 2.0 * u2)
    return u1 * u2 * (1.0 + theta * theta * bracket / 3.0)


# ---------------------------------------------------------------------------
# KL divergence and associativity
# ---------------------------------------------------------------------------

def kl_divergence(cf: ConditionalFamily, candidate: BivariateCopula,
                  rule: QuadratureRule | None = None) -> float:
    """KL divergence of a candidate copula from the conditional copula.

    ``int_0^1 intint c(u1,u2|z) log(c(u1,u2|z)/candidate.pdf(u1,u2)) du dz``
    by tensor quadrature.  Nonnegative up to quadrature error; raises
    :class:`NonpositiveDensity` if the candidate underflows at a node
    instead of clamping silently.
    """
    rule = rule if rule is not None else gauss_rule()
    u, v = rule.grid2()
    w2 = rule.weight_matrix()
    cand = np.asarray(candidate.pdf(u, v), dtype=float)
    if np.any(cand < _DENSITY_FLOOR):
        raise NonpositiveDensity("candidate density underflows on the quadrature grid")
    log_cand = np.log(cand)
    total = 0.0
    for z, wz in zip(rule.nodes, rule.weights):
        c = np.asarray(cf.pdf(u, v, z), dtype=float)
        mask = c > 0.0
        term = np.zeros_like(c)
        term[mask] = c[mask] * (np.log(c[mask]) - log_cand[mask])
        total += wz * float(np.sum(w2 * term))
    return total


class AssociativityResult(NamedTuple):
    lhs: float
    rhs: float
    gap: float


def associativity_check(pc: BivariateCopula, a: float, b: float, c: float) -> AssociativityResult:
    """Compare C(C(a,b),c) with C(a,C(b,c)).

    A nonzero gap certifies that the copula is not associative, hence not
    Archimedean.
    """
    lhs = float(pc.cdf(pc.cdf(a, b), c))
    rhs = float(pc.cdf(a, pc.cdf(b, c)))
    return AssociativityResult(lhs, rhs, abs(lhs - rhs))
