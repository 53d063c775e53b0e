"""Numerical verification suite for every proposition-level claim in scope.

Each check reports the computed value, the reference it is held against, and
the tolerance; ``run_verification`` returns the full list so the CLI can
print one PASS/FAIL line per check and exit nonzero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .families import (
    AmhCopula,
    FamilySpec,
    Family,
    FgmCopula,
    ProductCopula,
    frank_tau_to_theta,
    make_copula,
)
from .fitting import joint_vs_stepwise_experiment
from .measures import (
    cond_corr_profile,
    expected_conditional_measure,
    kendall_tau,
    spearman_rho,
    tail_coefficient,
)
from .partial import (
    associativity_check,
    conditional_copula,
    kl_divergence,
    l2_projection_bruteforce,
    l2_projection_fgm,
    partial_copula,
)
from .quadrature import gauss_rule
from .sampling import conditional_independence_demo

KENDALL_EXPECTED_POLYCE = float(Fraction(377, 2700))
KENDALL_PARTIAL_POLYCE = float(Fraction(251, 1800))


@dataclass(frozen=True)
class CheckResult:
    """One verification line: value against reference at a tolerance."""

    name: str
    computed: float
    reference: float
    tolerance: float
    passed: bool
    comparison: str = "within"   # "within": |computed - reference| <= tol
                                 # "greater": computed > reference

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.comparison == "greater":
            return f"{self.name}: {self.computed:.7g} > {self.reference:g} {status}"
        return (f"{self.name}: {self.computed:.10g} vs {self.reference:.10g} "
                f"(tol {self.tolerance:g}) {status}")


def _within(name, computed, reference, tol):
    return CheckResult(name, float(computed), float(reference), tol,
                       abs(float(computed) - float(reference)) <= tol)


def _greater(name, computed, threshold):
    return CheckResult(name, float(computed), float(threshold), threshold,
                       float(computed) > threshold, comparison="greater")


def _grid(n=21, interior=False):
    g = np.linspace(0.0, 1.0, n)
    if interior:
        g = np.linspace(1.0 / (n + 1), n / (n + 1.0), n)
    return np.meshgrid(g, g, indexing="ij")


def check_partial_fgm_identity(order=64) -> list[CheckResult]:
    """Quadrature-averaged conditional FGM equals the product copula."""
    pc = partial_copula(FamilySpec(Family.FGM3, (1.0,)), mode="quadrature",
                        rule=gauss_rule(order))
    u, v = _grid(21)
    gap = float(np.max(np.abs(pc.cdf(u, v) - u * v)))
    return [_within("partial-FGM equals product copula (21x21 grid)", gap, 0.0, 1e-10)]


def check_partial_frank_closed_form(order=64) -> list[CheckResult]:
    """Closed-form partial Frank against the quadrature average, three thetas."""
    out = []
    u, v = _grid(21)
    for theta in (0.5, 2.0, 8.0):
        spec = FamilySpec(Family.FRANK3, (theta,))
        closed = partial_copula(spec, mode="closed_form")
        quad = partial_copula(spec, mode="quadrature", rule=gauss_rule(order))
        gap = float(np.max(np.abs(closed.cdf(u, v) - quad.cdf(u, v))))
        out.append(_within(f"partial-Frank closed form vs quadrature (theta={theta:g})",
                           gap, 0.0, 1e-8))
    return out


def check_kl_minimality(order=64) -> list[CheckResult]:
    """The partial copula KL-dominates a spread of alternative copulas."""
    rule = gauss_rule(order)
    spec = FamilySpec(Family.FRANK3, (2.0,))
    cf = conditional_copula(spec)
    pc = partial_copula(spec, mode="closed_form")
    kl_partial = kl_divergence(cf, pc, rule)
    alternatives = [("product", ProductCopula())]
    alternatives += [(f"fgm({t:g})", FgmCopula(t)) for t in
                     (-0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0)]
    alternatives += [(f"amh({g:g})", AmhCopula(g)) for g in (0.2, 0.4, 0.6, 0.8, 0.9)]
    worst = min(kl_divergence(cf, cop, rule) - kl_partial for _, cop in alternatives)
    return [
        _greater("KL(conditional Frank3(2) || partial) nonnegative + margin: "
                 f"min advantage over {len(alternatives)} alternatives", worst, 1e-4),
        _greater("KL(conditional Frank3(2) || partial) above Gibbs floor",
                 kl_partial, -1e-9),
    ]


def check_l2_projection(order=64) -> list[CheckResult]:
    """Closed-form L2 projection for FGM vs brute force, and its gap to the
    partial copula."""
    rule = gauss_rule(order)
    cf = conditional_copula(FamilySpec(Family.FGM3, (1.0,)))
    g = np.linspace(1.0 / 6.0, 5.0 / 6.0, 5)
    u, v = np.meshgrid(g, g, indexing="ij")
    brute = l2_projection_bruteforce(cf, u, v, rule)
    closed = l2_projection_fgm(1.0, u, v)
    gap = float(np.max(np.abs(brute - closed)))
    sep = float(np.max(np.abs(closed - u * v)))
    return [
        _within("L2 projection FGM(1): closed form vs brute force (25 points)",
                gap, 0.0, 1e-8),
        _greater("L2 projection FGM(1) differs from the partial copula", sep, 1e-4),
    ]


def check_associativity(order=64) -> list[CheckResult]:
    """Non-associativity witness for the partial Frank copula."""
    theta = frank_tau_to_theta(0.4)
    pc = partial_copula(FamilySpec(Family.FRANK3, (theta,)), mode="closed_form")
    res = associativity_check(pc, 0.25, 0.5, 0.5)
    fgm_pc = partial_copula(FamilySpec(Family.FGM3, (1.0,)), mode="closed_form")
    res_fgm = associativity_check(fgm_pc, 0.25, 0.5, 0.5)
    return [
        _greater("partial-Frank associativity gap at (0.25,0.5,0.5)", res.gap, 1e-6),
        _within("partial-FGM associativity gap at (0.25,0.5,0.5)", res_fgm.gap, 0.0, 1e-15),
    ]


def check_partial_correlation_pathology(seed=42) -> list[CheckResult]:
    """High partial correlation coexisting with conditional independence."""
    demo = conditional_independence_demo(sigma=0.01, n=100_000, seed=seed)
    return [
        _greater("partial correlation under conditional independence (sigma=0.01)",
                 demo.partial_corr, 0.95),
        CheckResult("CPIT empirical copula within independence band",
                    demo.sup_distance, demo.band, demo.band,
                    demo.sup_distance < demo.band, comparison="within"),
    ]


def check_conditional_correlation_profile() -> list[CheckResult]:
    """Range of the comonotone lognormal conditional-correlation profile."""
    at_one = float(cond_corr_profile(np.array([1.0]))[0])
    zs = np.linspace(1e-3, 10.0, 2001)
    vals = cond_corr_profile(zs)
    inside = float(np.max(np.maximum(vals - 1.0, -vals)))
    return [
        _within("conditional correlation profile at z=1", at_one, 1.0, 0.0),
        CheckResult("conditional correlation profile inside [0,1] on (0,10]",
                    inside, 0.0, 0.0, inside <= 0.0),
    ]


_PROP51_FAMILIES = (
    ("FGM3(1)", FamilySpec(Family.FGM3, (1.0,))),
    ("Frank3(2)", FamilySpec(Family.FRANK3, (2.0,))),
    ("PolyCE", FamilySpec(Family.POLYCE)),
)


def check_spearman_equality(order=64) -> list[CheckResult]:
    """Partial Spearman equals the expected conditional Spearman."""
    rule = gauss_rule(order)
    out = []
    for label, spec in _PROP51_FAMILIES:
        pc = partial_copula(spec, mode="closed_form")
        lhs = spearman_rho(pc, rule)
        rhs = expected_conditional_measure(conditional_copula(spec), "spearman", rule)
        out.append(_within(f"spearman partial vs expected-conditional {label}",
                           abs(lhs - rhs), 0.0, 1e-6))
    return out


def check_tail_equality(order=64) -> list[CheckResult]:
    """Partial tail coefficients equal the expected conditional ones."""
    rule = gauss_rule(order)
    out = []
    for label, spec in _PROP51_FAMILIES:
        pc = partial_copula(spec, mode="closed_form")
        worst = 0.0
        for measure, side in (("tail_lower", "lower"), ("tail_upper", "upper")):
            lhs = tail_coefficient(pc, side, method="extrapolate")
            rhs = expected_conditional_measure(conditional_copula(spec), measure, rule)
            worst = max(worst, abs(lhs - rhs))
        out.append(_within(f"tail partial vs expected-conditional {label}", worst, 0.0, 1e-3))
    return out


def check_kendall_counterexample(order=64) -> list[CheckResult]:
    """Expected conditional tau differs from partial tau for POLYCE."""
    rule = gauss_rule(order)
    spec = FamilySpec(Family.POLYCE)
    expected = expected_conditional_measure(conditional_copula(spec), "kendall", rule)
    partial = kendall_tau(partial_copula(spec, mode="closed_form"), rule)
    return [
        _within("kendall expected-conditional PolyCE", expected,
                KENDALL_EXPECTED_POLYCE, 1e-7),
        _within("kendall partial PolyCE", partial, KENDALL_PARTIAL_POLYCE, 1e-7),
        _greater("kendall gap |partial - expected| PolyCE",
                 abs(partial - expected), 1e-4),
    ]


def check_conditional_tau_curve(order=64) -> list[CheckResult]:
    """tau(z) of the POLYCE conditional copula matches its polynomial form."""
    rule = gauss_rule(order)
    cf = conditional_copula(FamilySpec(Family.POLYCE))
    worst = 0.0
    for z in (0.0, 0.25, 0.5, 0.75, 1.0):
        tau = kendall_tau(cf.at(z), rule)
        worst = max(worst, abs(tau - (z * z / 450.0 + 5.0 * z / 18.0)))
    return [_within("conditional tau curve PolyCE at z in {0,...,1}", worst, 0.0, 1e-7)]


_SIMPLIFIED = (
    ("Clayton3(2)", FamilySpec(Family.CLAYTON3, (2.0,))),
    ("Gauss3(0.5,0.4,0.6)", FamilySpec(Family.GAUSS3, (0.5, 0.4, 0.6))),
)


def check_simplified_identity(order=64) -> list[CheckResult]:
    """Partial equals conditional for the simplified families, at every z."""
    out = []
    u, v = _grid(21)
    for label, spec in _SIMPLIFIED:
        cf = conditional_copula(spec)
        pc = partial_copula(spec, mode="quadrature", rule=gauss_rule(order))
        worst = 0.0
        for z in np.linspace(0.05, 0.95, 7):
            worst = max(worst, float(np.max(np.abs(pc.cdf(u, v) - cf.at(z).cdf(u, v)))))
        out.append(_within(f"partial equals conditional {label} (z grid)", worst, 0.0, 1e-10))
    return out


def check_clayton_tail() -> list[CheckResult]:
    """Partial lower tail of the Clayton model matches the Clayton tail law.

    The conditional copula of the trivariate Clayton(theta) is Clayton with
    parameter theta/(1+theta), so the reference is 2^(-(1+theta)/theta).
    """
    theta = 2.0
    cond_theta = theta / (1.0 + theta)
    spec = FamilySpec(Family.CLAYTON3, (theta,))
    pc = partial_copula(spec, mode="closed_form")
    lower = tail_coefficient(pc, "lower", method="extrapolate")
    ref = 2.0 ** (-1.0 / cond_theta)
    cf = conditional_copula(spec)
    worst = max(abs(tail_coefficient(cf.at(z), "lower", method="extrapolate") - lower)
                for z in np.linspace(0.05, 0.95, 7))
    return [
        _within("Clayton3(2) partial lower tail vs 2^(-1/theta_cond)", lower, ref, 1e-3),
        _within("Clayton3(2) conditional lower tails equal partial's (z grid)",
                worst, 0.0, 1e-3),
    ]


def check_tail_free_families() -> list[CheckResult]:
    """Frank and FGM models carry no tail dependence, partially or conditionally."""
    out = []
    for label, spec in (("Frank3(2)", FamilySpec(Family.FRANK3, (2.0,))),
                        ("FGM3(1)", FamilySpec(Family.FGM3, (1.0,)))):
        pc = partial_copula(spec, mode="closed_form")
        cf = conditional_copula(spec)
        worst = 0.0
        for side in ("lower", "upper"):
            worst = max(worst, abs(tail_coefficient(pc, side, method="extrapolate")))
            for z in np.linspace(0.1, 0.9, 5):
                worst = max(worst, abs(tail_coefficient(cf.at(z), side, method="extrapolate")))
        out.append(_within(f"no tail dependence {label} (partial and slices)", worst, 0.0, 1e-3))
    return out


def run_verification(order: int = 64, seed: int = 42,
                     include_experiment: bool = False) -> list[CheckResult]:
    """Run the full check suite; the ML experiment is optional (slow)."""
    checks: list[CheckResult] = []
    checks += check_partial_fgm_identity(order)
    checks += check_partial_frank_closed_form(order)
    checks += check_kl_minimality(order)
    checks += check_l2_projection(order)
    checks += check_associativity(order)
    checks += check_partial_correlation_pathology(seed)
    checks += check_conditional_correlation_profile()
    checks += check_spearman_equality(order)
    checks += check_tail_equality(order)
    checks += check_kendall_counterexample(order)
    checks += check_conditional_tau_curve(order)
    checks += check_simplified_identity(order)
    checks += check_clayton_tail()
    checks += check_tail_free_families()
    if include_experiment:
        rep = joint_vs_stepwise_experiment("simplified", 20_000, 20, seed)
        checks.append(CheckResult(
            "joint vs stepwise: simplified scenario unflagged",
            float(len(rep.flagged)), 0.0, 0.0, not rep.flagged))
        rep = joint_vs_stepwise_experiment("nonsimplified", 20_000, 20, seed)
        margin_flagged = any(c in rep.flagged for c in ("theta1", "theta2"))
        checks.append(CheckResult(
            "joint vs stepwise: nonsimplified margin coordinate flagged",
            float(len(rep.flagged)), 1.0, 0.0, margin_flagged))
    return checks
