import numpy as np
import pytest

from partialcop import Family, FamilySpec, gauss_rule


@pytest.fixture(scope="session")
def rule64():
    return gauss_rule(64)


@pytest.fixture(scope="session")
def interior_grid():
    g = np.linspace(0.05, 0.95, 19)
    return np.meshgrid(g, g, indexing="ij")


TRIVARIATE_SPECS = {
    "fgm3": FamilySpec(Family.FGM3, (1.0,)),
    "frank3": FamilySpec(Family.FRANK3, (2.0,)),
    "clayton3": FamilySpec(Family.CLAYTON3, (2.0,)),
    "gauss3": FamilySpec(Family.GAUSS3, (0.5, 0.4, 0.6)),
    "polyce": FamilySpec(Family.POLYCE),
}

BIVARIATE_SPECS = {
    "fgm2": FamilySpec(Family.FGM2, (0.7,)),
    "frank2": FamilySpec(Family.FRANK2, (3.0,)),
    "amh2": FamilySpec(Family.AMH2, (0.6,)),
    "clayton2": FamilySpec(Family.CLAYTON2, (1.5,)),
    "gauss2": FamilySpec(Family.GAUSS2, (0.55,)),
    "product2": FamilySpec(Family.PRODUCT2),
}
