import os
import sys
from types import SimpleNamespace

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models import ConeField, Point, fourier_family  # noqa: E402
from utils import catalog, horseshoe, pesin  # noqa: E402
from utils.branches import build_branch_set, delta_modulus, seed_points  # noqa: E402

FIXTURE_BUDGETS = {"branch_candidates": 16, "n_min": 1, "m_max": 8, "repair_iterations": 2}
CAT_BUDGETS = {"branch_candidates": 6000, "n_min": 1, "m_max": 22, "repair_iterations": 2}
CAT_RHO, CAT_S = 0.1, 4
CAT_LANDING = {"horizon": 20, "chi": 0.5, "ell0": 10.0}


@pytest.fixture(scope="session")
def family():
    return fourier_family(1)


@pytest.fixture(scope="session")
def fixture_system():
    return catalog.affine_fixture(9)


@pytest.fixture(scope="session")
def fixture_rect(fixture_system):
    return catalog.fixture_rectangle(fixture_system)


@pytest.fixture(scope="session")
def fixture_cones(fixture_rect):
    return ConeField(fixture_rect, 0.3)


@pytest.fixture(scope="session")
def fixture_reference(fixture_system, family):
    return catalog.fixture_reference(fixture_system, family)


@pytest.fixture(scope="session")
def fixture_branches(fixture_system, fixture_rect, fixture_cones, family, fixture_reference):
    return build_branch_set(fixture_system, fixture_rect, fixture_cones, family, fixture_reference,
                            0.1, 4, 2, FIXTURE_BUDGETS, catalog.fixture_seeds(fixture_system))


@pytest.fixture(scope="session")
def fixture_horseshoe(fixture_system, fixture_rect, fixture_branches):
    return horseshoe.build(fixture_system, fixture_branches, fixture_rect)


@pytest.fixture(scope="session")
def cat_system():
    return catalog.cat_map()


@pytest.fixture(scope="session")
def cat_setup(cat_system):
    """Two-branch cat-map horseshoe at rho = 0.1, s = 4 around the fixed point."""
    family = fourier_family(1)
    reference = catalog.lebesgue_reference(family)
    rho, s = CAT_RHO, CAT_S
    cert = pesin.pesin_certificate(cat_system, Point((0.0, 0.0)), 20, 0.5)
    rect = pesin.build_rectangle(cert, 1.0, cat_system.space, delta_modulus(family, rho, s) / 2.2)
    cones = ConeField(rect, 0.3)
    seeds = seed_points(cat_system, rect, np.random.default_rng(7), CAT_BUDGETS["branch_candidates"],
                        CAT_BUDGETS["m_max"])
    branches = build_branch_set(cat_system, rect, cones, family, reference, rho, s, 2, CAT_BUDGETS, seeds,
                                landing=CAT_LANDING)
    hs = horseshoe.build(cat_system, branches, rect)
    return SimpleNamespace(system=cat_system, family=family, reference=reference, rho=rho, s=s,
                           rect=rect, cones=cones, branches=branches, horseshoe=hs)
