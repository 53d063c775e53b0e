import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import ndtri
from scipy.stats import multivariate_normal

from partialcop import (
    EvaluationAtBoundary,
    Family,
    FamilySpec,
    ParameterOutOfRange,
    cdf3,
    frank_kendall_tau,
    frank_spearman_rho,
    frank_tau_to_theta,
    gauss_rule,
    hfunc,
    hfunc_inv,
    make_copula,
    pdf3,
    spearman_rho,
    validate,
)
from partialcop.families import FrankCopula, _bvn_cdf

from conftest import BIVARIATE_SPECS, TRIVARIATE_SPECS

# frozen regression constant, pinned by bisection on the Debye-form tau
FRANK_THETA_TAU_04 = 4.161064254922332


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("spec", [
    FamilySpec(Family.FGM3, (0.5,)),
    FamilySpec(Family.FGM3, (-1.0,)),
    FamilySpec(Family.FRANK3, (0.1,)),
    FamilySpec(Family.CLAYTON3, (2.0,)),
    FamilySpec(Family.GAUSS3, (0.5, 0.4, 0.6)),
    FamilySpec(Family.POLYCE),
    FamilySpec(Family.AMH2, (0.0,)),
    FamilySpec(Family.AMH2, (0.99,)),
])
def test_validate_accepts(spec):
    assert validate(spec) is spec


@pytest.mark.parametrize("spec", [
    FamilySpec(Family.FGM3, (1.5,)),
    FamilySpec(Family.FRANK3, (-1.0,)),
    FamilySpec(Family.FRANK3, (0.0,)),
    FamilySpec(Family.CLAYTON3, (0.0,)),
    FamilySpec(Family.AMH2, (1.0,)),
    FamilySpec(Family.AMH2, (-0.1,)),
    FamilySpec(Family.GAUSS2, (1.0,)),
    FamilySpec(Family.GAUSS3, (0.9, -0.9, 0.9)),   # not positive definite
    FamilySpec(Family.FGM3, ()),                    # wrong arity
    FamilySpec(Family.POLYCE, (0.3,)),
])
def test_validate_rejects(spec):
    with pytest.raises(ParameterOutOfRange):
        validate(spec)


# ---------------------------------------------------------------------------
# trivariate cdf basics
# ---------------------------------------------------------------------------

def test_fgm3_point_value():
    cop = make_copula(FamilySpec(Family.FGM3, (1.0,)))
    assert cdf3(cop, 0.5, 0.5, 0.5) == pytest.approx(0.140625, abs=1e-15)


@pytest.mark.parametrize("name", sorted(TRIVARIATE_SPECS))
def test_uniform_margins_and_groundedness(name):
    cop = make_copula(TRIVARIATE_SPECS[name])
    u = np.linspace(0.0, 1.0, 21)
    assert_allclose(cop.cdf3(u, np.ones_like(u), np.ones_like(u)), u, atol=5e-10)
    assert_allclose(cop.cdf3(np.ones_like(u), u, np.ones_like(u)), u, atol=5e-10)
    assert_allclose(cop.cdf3(np.ones_like(u), np.ones_like(u), u), u, atol=5e-10)
    assert_allclose(cop.cdf3(np.zeros_like(u), u, u), 0.0, atol=1e-15)
    assert_allclose(cop.cdf3(u, np.zeros_like(u), u), 0.0, atol=1e-15)


@pytest.mark.parametrize("name", ["fgm3", "frank3", "clayton3", "polyce"])
def test_trivariate_cdf_is_3_increasing(name):
    cop = make_copula(TRIVARIATE_SPECS[name])
    g = np.linspace(0.0, 1.0, 11)
    u1, u2, u3 = np.meshgrid(g, g, g, indexing="ij")
    c = cop.cdf3(u1, u2, u3)
    vol = (c[1:, 1:, 1:] - c[:-1, 1:, 1:] - c[1:, :-1, 1:] - c[1:, 1:, :-1]
           + c[:-1, :-1, 1:] + c[:-1, 1:, :-1] + c[1:, :-1, :-1] - c[:-1, :-1, :-1])
    assert vol.min() >= -1e-12


def test_gauss3_cdf_is_3_increasing_coarse():
    cop = make_copula(TRIVARIATE_SPECS["gauss3"])
    g = np.linspace(0.0, 1.0, 7)
    u1, u2, u3 = np.meshgrid(g, g, g, indexing="ij")
    c = cop.cdf3(u1, u2, u3)
    vol = (c[1:, 1:, 1:] - c[:-1, 1:, 1:] - c[1:, :-1, 1:] - c[1:, 1:, :-1]
           + c[:-1, :-1, 1:] + c[:-1, 1:, :-1] + c[1:, :-1, :-1] - c[:-1, :-1, :-1])
    assert vol.min() >= -1e-9


def test_fgm3_bivariate_margins_are_product():
    cop = make_copula(FamilySpec(Family.FGM3, (1.0,)))
    g = np.linspace(0.0, 1.0, 21)
    u, v = np.meshgrid(g, g, indexing="ij")
    assert_allclose(cop.cdf3(u, v, np.ones_like(u)), u * v, atol=1e-15)
    assert_allclose(cop.cdf3(u, np.ones_like(u), v), u * v, atol=1e-15)


def test_gauss3_cdf_against_scipy():
    r12, r13, r23 = 0.5, 0.4, 0.6
    cop = make_copula(FamilySpec(Family.GAUSS3, (r12, r13, r23)))
    mvn = multivariate_normal(mean=np.zeros(3), cov=cop.corr)
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.05, 0.95, size=(12, 3))
    for u1, u2, u3 in pts:
        ref = float(mvn.cdf(ndtri([u1, u2, u3])))
        assert cop.cdf3(u1, u2, u3) == pytest.approx(ref, abs=5e-5)


def test_bvn_cdf_against_scipy():
    rng = np.random.default_rng(3)
    for rho in (-0.8, -0.2, 0.0, 0.35, 0.9):
        mvn = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
        for _ in range(5):
            h, k = rng.normal(size=2) * 1.5
            assert float(_bvn_cdf(h, k, rho)) == pytest.approx(float(mvn.cdf([h, k])), abs=2e-7)


# ---------------------------------------------------------------------------
# densities against finite differences
# ---------------------------------------------------------------------------

def _fd_mixed3(f, u1, u2, u3, e=3e-4):
    s = 0.0
    for a in (-1, 1):
        for b in (-1, 1):
            for c in (-1, 1):
                s += a * b * c * f(u1 + a * e, u2 + b * e, u3 + c * e)
    return s / (8 * e ** 3)


@pytest.mark.parametrize("name", sorted(TRIVARIATE_SPECS))
def test_pdf3_matches_finite_difference(name):
    if name == "gauss3":
        pytest.skip("cdf3 is itself quadrature based; covered by the margin/pdf tests")
    cop = make_copula(TRIVARIATE_SPECS[name])
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.15, 0.85, size=(100, 3))
    for u1, u2, u3 in pts:
        fd = _fd_mixed3(lambda a, b, c: float(cop.cdf3(a, b, c)), u1, u2, u3)
        p = float(cop.pdf3(u1, u2, u3))
        assert abs(p - fd) <= 1e-5 * (1.0 + abs(p))


def test_gauss3_pdf_closed_form():
    cop = make_copula(TRIVARIATE_SPECS["gauss3"])
    mvn = multivariate_normal(mean=np.zeros(3), cov=cop.corr)
    rng = np.random.default_rng(5)
    for u1, u2, u3 in rng.uniform(0.1, 0.9, size=(20, 3)):
        x = ndtri([u1, u2, u3])
        ref = mvn.pdf(x) / np.prod(np.exp(-0.5 * x ** 2) / np.sqrt(2 * np.pi))
        assert float(cop.pdf3(u1, u2, u3)) == pytest.approx(float(ref), rel=1e-10)


def _fd_mixed2(f, u, v, e=1e-5):
    return (f(u + e, v + e) - f(u + e, v - e) - f(u - e, v + e) + f(u - e, v - e)) / (4 * e * e)


@pytest.mark.parametrize("name", sorted(BIVARIATE_SPECS))
def test_bivariate_pdf_matches_finite_difference(name):
    cop = make_copula(BIVARIATE_SPECS[name])
    rng = np.random.default_rng(13)
    for u, v in rng.uniform(0.1, 0.9, size=(100, 2)):
        fd = _fd_mixed2(lambda a, b: float(cop.cdf(a, b)), u, v)
        assert float(cop.pdf(u, v)) == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("name", sorted(BIVARIATE_SPECS))
def test_bivariate_pdf_normalizes(name, rule64):
    cop = make_copula(BIVARIATE_SPECS[name])
    total = rule64.integrate2(lambda u, v: cop.pdf(u, v))
    # clayton/gauss densities are unbounded at a corner; quadrature converges
    # only algebraically there
    tol = 1e-3 if name in ("clayton2", "gauss2") else 1e-6
    assert total == pytest.approx(1.0, abs=tol)


def test_fgm3_density_examples():
    flat = make_copula(FamilySpec(Family.FGM3, (0.0,)))
    assert float(flat.pdf3(0.3, 0.6, 0.9)) == 1.0
    cop = make_copula(FamilySpec(Family.FGM3, (1.0,)))
    assert float(cop.pdf3(0.5, 0.5, 0.5)) == 1.0


def test_frank3_pdf_normalizes(rule64):
    cop = make_copula(FamilySpec(Family.FRANK3, (2.0,)))
    n = rule64.nodes
    u1, u2, u3 = np.meshgrid(n, n, n, indexing="ij")
    w = rule64.weights
    total = float(np.einsum("i,j,k,ijk->", w, w, w, cop.pdf3(u1, u2, u3)))
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("name", sorted(TRIVARIATE_SPECS))
def test_pdf3_rejects_boundary(name):
    cop = make_copula(TRIVARIATE_SPECS[name])
    with pytest.raises(EvaluationAtBoundary):
        cop.pdf3(0.0, 0.5, 0.5)
    with pytest.raises(EvaluationAtBoundary):
        cop.pdf3(0.5, 1.0, 0.5)


# ---------------------------------------------------------------------------
# bivariate copula axioms
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(BIVARIATE_SPECS) + ["comonotone2"])
def test_bivariate_copula_axioms(name):
    spec = BIVARIATE_SPECS.get(name, FamilySpec(Family.COMONOTONE2))
    cop = make_copula(spec)
    g = np.linspace(0.0, 1.0, 21)
    u, v = np.meshgrid(g, g, indexing="ij")
    c = cop.cdf(u, v)
    assert_allclose(c[:, -1], g, atol=1e-12)
    assert_allclose(c[-1, :], g, atol=1e-12)
    assert_allclose(c[:, 0], 0.0, atol=1e-15)
    assert_allclose(c[0, :], 0.0, atol=1e-15)
    inc = c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1]
    assert inc.min() >= -1e-12
    # Frechet bounds
    assert np.all(c <= np.minimum(u, v) + 1e-12)
    assert np.all(c >= np.maximum(u + v - 1.0, 0.0) - 1e-12)


@pytest.mark.parametrize("name", sorted(BIVARIATE_SPECS))
def test_h_functions_match_finite_differences(name):
    cop = make_copula(BIVARIATE_SPECS[name])
    rng = np.random.default_rng(17)
    e = 1e-6
    for u, v in rng.uniform(0.1, 0.9, size=(40, 2)):
        fd1 = (float(cop.cdf(u + e, v)) - float(cop.cdf(u - e, v))) / (2 * e)
        fd2 = (float(cop.cdf(u, v + e)) - float(cop.cdf(u, v - e))) / (2 * e)
        assert float(cop.h1(v, u)) == pytest.approx(fd1, abs=1e-6)
        assert float(cop.h2(u, v)) == pytest.approx(fd2, abs=1e-6)


@pytest.mark.parametrize("name", sorted(BIVARIATE_SPECS))
def test_h_function_range_and_monotonicity(name):
    cop = make_copula(BIVARIATE_SPECS[name])
    v = np.linspace(0.0, 1.0, 41)
    for u in (0.2, 0.5, 0.8):
        h = np.asarray(cop.h1(v, u))
        assert h[0] == pytest.approx(0.0, abs=1e-12)
        assert h[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(h) >= -1e-12)


# ---------------------------------------------------------------------------
# h-functions of the trivariate models
# ---------------------------------------------------------------------------

def test_product_margin_hfunc_is_identity():
    for name in ("fgm3", "polyce"):
        cop = make_copula(TRIVARIATE_SPECS[name])
        u = np.linspace(0.0, 1.0, 11)
        assert_allclose(hfunc(cop, "1|2", u, 0.37), u, atol=1e-15)
        assert_allclose(hfunc_inv(cop, "1|2", u[1:-1], 0.37), u[1:-1], atol=1e-15)


@pytest.mark.parametrize("name", sorted(TRIVARIATE_SPECS))
def test_hfunc_endpoints_and_fd(name):
    cop = make_copula(TRIVARIATE_SPECS[name])
    for given in (0.3, 0.7):
        assert float(hfunc(cop, "1|2", 0.0, given)) == pytest.approx(0.0, abs=1e-12)
        assert float(hfunc(cop, "1|2", 1.0, given)) == pytest.approx(1.0, abs=1e-12)
    if name == "gauss3":
        return   # cdf3 quadrature-based; h-function is checked via round trips
    # h(1|2) equals the z-derivative of the (1,2) margin cdf
    e = 1e-6
    for u, given in [(0.3, 0.7), (0.6, 0.25), (0.85, 0.5)]:
        fd = (float(cop.cdf3(u, given + e, 1.0)) - float(cop.cdf3(u, given - e, 1.0))) / (2 * e)
        assert float(hfunc(cop, "1|2", u, given)) == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("name", sorted(TRIVARIATE_SPECS))
def test_hfunc_inverse_round_trip(name):
    cop = make_copula(TRIVARIATE_SPECS[name])
    u = np.linspace(0.1, 0.9, 9)
    for given in (0.2, 0.5, 0.8):
        for which in ("1|2", "3|2"):
            p = hfunc(cop, which, u, given)
            back = hfunc_inv(cop, which, p, given)
            assert_allclose(back, u, atol=1e-9)


def test_hfunc_rejects_boundary_conditioning():
    cop = make_copula(TRIVARIATE_SPECS["frank3"])
    with pytest.raises(EvaluationAtBoundary):
        hfunc(cop, "1|2", 0.5, 0.0)
    with pytest.raises(EvaluationAtBoundary):
        hfunc(cop, "3|2", 0.5, 1.0)


def test_frank_hinv_monotone_in_p():
    cop = make_copula(FamilySpec(Family.FRANK3, (4.0,)))
    p = np.linspace(0.01, 0.99, 50)
    for given in (0.25, 0.5, 0.9):
        v = np.asarray(hfunc_inv(cop, "1|2", p, given))
        assert np.all(np.diff(v) > 0)


# ---------------------------------------------------------------------------
# Frank tau <-> theta
# ---------------------------------------------------------------------------

def test_frank_tau_to_theta_frozen_value():
    assert frank_tau_to_theta(0.4) == pytest.approx(FRANK_THETA_TAU_04, abs=1e-9)


def test_frank_tau_round_trip():
    assert frank_kendall_tau(frank_tau_to_theta(0.25)) == pytest.approx(0.25, abs=1e-8)


def test_frank_tau_independence_limit():
    assert frank_tau_to_theta(1e-3) < 0.01


def test_frank_spearman_matches_quadrature(rule64):
    theta = 4.0
    assert frank_spearman_rho(theta) == pytest.approx(
        spearman_rho(FrankCopula(theta), rule64), abs=1e-10)


def test_frank_kendall_oracle_against_direct_integral(rule64):
    from partialcop import kendall_tau
    theta = 2.5
    assert frank_kendall_tau(theta) == pytest.approx(
        kendall_tau(FrankCopula(theta), rule64), abs=1e-10)
