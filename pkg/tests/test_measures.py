import numpy as np
import pytest
from numpy.testing import assert_allclose

from partialcop import (
    DegenerateResiduals,
    DensityUnavailable,
    Family,
    FamilySpec,
    NonConvergent,
    SingularDesign,
    cond_corr_profile,
    conditional_copula,
    conditional_independence_demo,
    dependence_summary,
    expected_conditional_measure,
    frank_spearman_rho,
    kendall_tau,
    make_rng,
    partial_copula,
    partial_correlation,
    spearman_rho,
    tail_coefficient,
)
from partialcop.families import (
    ClaytonCopula,
    ComonotoneCopula,
    FgmCopula,
    GaussianCopula,
    ProductCopula,
)
from partialcop.measures import kendall_tau_hfunc_oracle


# ---------------------------------------------------------------------------
# Spearman and Kendall
# ---------------------------------------------------------------------------

def test_spearman_product_zero(rule64):
    assert spearman_rho(ProductCopula(), rule64) == pytest.approx(0.0, abs=1e-10)


def test_spearman_fgm_identity(rule64):
    # classical FGM identity rho = theta / 3
    assert spearman_rho(FgmCopula(0.9), rule64) == pytest.approx(0.3, abs=1e-8)
    assert spearman_rho(FgmCopula(-0.6), rule64) == pytest.approx(-0.2, abs=1e-8)


def test_spearman_comonotone(rule64):
    assert spearman_rho(ComonotoneCopula(), rule64) == pytest.approx(1.0, abs=1e-3)


def test_kendall_product_zero(rule64):
    assert kendall_tau(ProductCopula(), rule64) == pytest.approx(0.0, abs=1e-10)


def test_kendall_fgm_identity(rule64):
    # classical FGM identity tau = 2 theta / 9
    assert kendall_tau(FgmCopula(0.9), rule64) == pytest.approx(0.2, abs=1e-8)


def test_kendall_clayton_closed_form(rule64):
    # tau = theta / (theta + 2); corner singularity costs a few digits
    assert kendall_tau(ClaytonCopula(2.0), rule64) == pytest.approx(0.5, abs=1e-5)


def test_kendall_requires_density(rule64):
    with pytest.raises(DensityUnavailable):
        kendall_tau(ComonotoneCopula(), rule64)


def test_kendall_hfunc_oracle_agrees(rule64):
    for cop in (FgmCopula(0.7), GaussianCopula(0.4)):
        assert kendall_tau_hfunc_oracle(cop, rule64) == pytest.approx(
            kendall_tau(cop, rule64), abs=1e-6)


def test_polyce_conditional_tau_formula(rule64):
    cf = conditional_copula(FamilySpec(Family.POLYCE))
    for z in (0.0, 0.5, 1.0):
        expected = z * z / 450.0 + 5.0 * z / 18.0
        assert kendall_tau(cf.at(z), rule64) == pytest.approx(expected, abs=1e-8)


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

def test_tail_product_zero():
    for side in ("lower", "upper"):
        assert tail_coefficient(ProductCopula(), side, method="extrapolate") == pytest.approx(
            0.0, abs=1e-3)


def test_tail_clayton_lower():
    got = tail_coefficient(ClaytonCopula(2.0), "lower", method="extrapolate")
    assert got == pytest.approx(2.0 ** -0.5, abs=1e-3)
    # direct corner-ratio sanity check at a fixed small epsilon
    eps = 1e-6
    assert float(ClaytonCopula(2.0).cdf(eps, eps)) / eps == pytest.approx(2.0 ** -0.5, abs=1e-3)
    # closed-form override
    assert tail_coefficient(ClaytonCopula(2.0), "lower") == 2.0 ** -0.5
    assert tail_coefficient(ClaytonCopula(2.0), "upper") == 0.0


def test_tail_clayton_slow_corner_exponent():
    # theta = 2/3 has an eps^(2/3) correction; Aitken still lands inside 1e-3
    got = tail_coefficient(ClaytonCopula(2.0 / 3.0), "lower", method="extrapolate")
    assert got == pytest.approx(2.0 ** -1.5, abs=1e-3)


def test_tail_comonotone_one():
    for side in ("lower", "upper"):
        assert tail_coefficient(ComonotoneCopula(), side, method="extrapolate") == pytest.approx(
            1.0, abs=1e-12)


def test_tail_gaussian_zero():
    assert tail_coefficient(GaussianCopula(0.8), "lower") == 0.0
    assert tail_coefficient(GaussianCopula(0.4), "upper", method="extrapolate") == pytest.approx(
        0.0, abs=1e-3)
    # at strong correlation the corner exponent is tiny and the honest
    # outcome is a convergence failure, which the closed form overrides
    with pytest.raises(NonConvergent):
        tail_coefficient(GaussianCopula(0.8), "upper", method="extrapolate")


def test_tail_closed_form_unavailable():
    class Handle(ProductCopula):
        pass

    handle = Handle()
    handle.__class__ = type("Anon", (object,), {"cdf": lambda self, u, v: np.minimum(u, v)})
    with pytest.raises(DensityUnavailable):
        tail_coefficient(handle, "lower", method="closed_form")


def test_tail_nonconvergent():
    class Noisy:
        def cdf(self, u, v):
            u = np.asarray(u, dtype=float)
            return u * (0.5 + 0.4 * np.sin(np.log2(np.maximum(u, 1e-300)) * 2.3))

    with pytest.raises(NonConvergent):
        tail_coefficient(Noisy(), "lower", method="extrapolate")


# ---------------------------------------------------------------------------
# expected conditional measures
# ---------------------------------------------------------------------------

def test_expected_kendall_polyce(rule64):
    cf = conditional_copula(FamilySpec(Family.POLYCE))
    got = expected_conditional_measure(cf, "kendall", rule64)
    assert got == pytest.approx(377.0 / 2700.0, abs=1e-7)


def test_expected_spearman_fgm_zero(rule64):
    cf = conditional_copula(FamilySpec(Family.FGM3, (1.0,)))
    assert expected_conditional_measure(cf, "spearman", rule64) == pytest.approx(0.0, abs=1e-8)


def test_expected_spearman_equals_partial_for_frank(rule64):
    spec = FamilySpec(Family.FRANK3, (2.0,))
    lhs = spearman_rho(partial_copula(spec, mode="closed_form"), rule64)
    rhs = expected_conditional_measure(conditional_copula(spec), "spearman", rule64)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_partial_kendall_polyce(rule64):
    pc = partial_copula(FamilySpec(Family.POLYCE), mode="closed_form")
    assert kendall_tau(pc, rule64) == pytest.approx(251.0 / 1800.0, abs=1e-7)


def test_kendall_counterexample_gap(rule64):
    spec = FamilySpec(Family.POLYCE)
    partial = kendall_tau(partial_copula(spec, mode="closed_form"), rule64)
    expected = expected_conditional_measure(conditional_copula(spec), "kendall", rule64)
    assert abs(partial - expected) == pytest.approx(1.0 / 5400.0, abs=1e-7)


# ---------------------------------------------------------------------------
# dependence summary
# ---------------------------------------------------------------------------

def test_summary_product(rule64):
    s = dependence_summary(ProductCopula(), rule64)
    assert abs(s.spearman) < 1e-8 and abs(s.kendall) < 1e-8
    assert abs(s.tail_lower) < 1e-3 and abs(s.tail_upper) < 1e-3


def test_summary_comonotone(rule64):
    s = dependence_summary(ComonotoneCopula(), rule64)
    assert (s.spearman, s.kendall, s.tail_lower, s.tail_upper) == (1.0, 1.0, 1.0, 1.0)
    assert s.methods["kendall"] == "ClosedForm"


def test_summary_frank_quadrature_tags(rule64):
    from partialcop.families import FrankCopula
    s = dependence_summary(FrankCopula(4.0), rule64)
    assert s.methods["spearman"] == "Quadrature"
    assert s.spearman == pytest.approx(frank_spearman_rho(4.0), abs=1e-9)
    assert s.tail_lower == 0.0 and s.tail_upper == 0.0


# ---------------------------------------------------------------------------
# partial correlation
# ---------------------------------------------------------------------------

def test_partial_correlation_identical_series():
    rng = make_rng(1)
    y = rng.standard_normal(50)
    z = np.ones((50, 1))
    assert partial_correlation(y, y, z) == pytest.approx(1.0, abs=1e-12)


def test_partial_correlation_independent_null():
    rng = make_rng(2)
    n = 4000
    y1, y2 = rng.standard_normal(n), rng.standard_normal(n)
    rho = partial_correlation(y1, y2, np.ones((n, 1)))
    assert abs(rho) < 4.0 / np.sqrt(n)


def test_partial_correlation_quadratic_confounder():
    # Y_i = -1 + Z^2 + eps_i with Var[eps] = 0.1: population value 2 / 2.1
    rng = make_rng(3)
    n = 100_000
    z = rng.standard_normal(n)
    y1 = -1 + z ** 2 + np.sqrt(0.1) * rng.standard_normal(n)
    y2 = -1 + z ** 2 + np.sqrt(0.1) * rng.standard_normal(n)
    rho = partial_correlation(y1, y2, np.column_stack([np.ones(n), z]))
    assert rho == pytest.approx(2.0 / 2.1, abs=0.02)


def test_partial_correlation_affine_invariance():
    rng = make_rng(4)
    n = 500
    z = np.column_stack([np.ones(n), rng.standard_normal(n), rng.standard_normal(n)])
    y1 = z @ np.array([1.0, 2.0, -1.0]) + rng.standard_normal(n)
    y2 = z @ np.array([-0.5, 1.0, 0.5]) + rng.standard_normal(n)
    base = partial_correlation(y1, y2, z)
    A = np.array([[1.0, 0.3, -0.2], [0.0, 2.0, 0.7], [0.0, 0.0, -0.5]])
    assert partial_correlation(y1, y2, z @ A) == pytest.approx(base, abs=1e-10)


def test_partial_correlation_errors():
    n = 50
    rng = make_rng(5)
    z = rng.standard_normal(n)
    design = np.column_stack([np.ones(n), z, 2.0 * z])
    with pytest.raises(SingularDesign):
        partial_correlation(rng.standard_normal(n), rng.standard_normal(n), design)
    clean = np.column_stack([np.ones(n), z])
    with pytest.raises(DegenerateResiduals):
        partial_correlation(1.0 + 2.0 * z, rng.standard_normal(n), clean)


# ---------------------------------------------------------------------------
# conditional correlation profile
# ---------------------------------------------------------------------------

def test_profile_is_one_at_unit_exactly():
    assert float(cond_corr_profile(np.array([1.0]))[0]) == 1.0


def test_profile_range():
    z = np.linspace(1e-4, 10.0, 5001)
    vals = cond_corr_profile(z)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)


def test_profile_small_z_limit():
    # (e^z - 1)/sqrt((e-1)(e^{z^2}-1)) -> 1/sqrt(e-1) as z -> 0+
    assert float(cond_corr_profile(np.array([1e-8]))[0]) == pytest.approx(
        1.0 / np.sqrt(np.e - 1.0), rel=1e-6)


def test_profile_rejects_nonpositive():
    with pytest.raises(ValueError):
        cond_corr_profile(np.array([0.0]))


# ---------------------------------------------------------------------------
# pathology demonstration
# ---------------------------------------------------------------------------

def test_demo_partial_correlation_rises_while_cpits_stay_independent():
    rhos = []
    for sigma in (1.0, 0.1, 0.01):
        demo = conditional_independence_demo(sigma, n=20_000, seed=42)
        rhos.append(demo.partial_corr)
        assert demo.sup_distance < demo.band
        assert demo.partial_corr == pytest.approx(demo.population_corr, abs=0.03)
    assert rhos[0] < rhos[1] < rhos[2]
