"""Session-scoped fixtures shared by module tests and the acceptance suite.

Everything expensive (shooting, interaction scans, the landscape, the
descent run) is computed once per session and reused.
"""

import pytest

from zeromass.fields import kernel_overlap_scan
from zeromass.limit_problem import ground_state
from zeromass.nonlinearity import builtin_model
from zeromass.potential import model_potential
from zeromass.projection import projection_landscape, two_bump_projection_scan
from zeromass.search import (SearchOpts, grid_field_from_profile,
                             minimize_on_manifold)
from zeromass.two_bump import antipodal_config, interaction_suite

R_SCAN = (8.0, 16.0, 32.0, 64.0)


@pytest.fixture(scope="session")
def nl():
    return builtin_model("rational_asymlinear")


@pytest.fixture(scope="session")
def pot():
    return model_potential(3.0, 1.0, N=3)


@pytest.fixture(scope="session")
def gs(nl):
    return ground_state(nl)


@pytest.fixture(scope="session")
def interaction(gs, nl):
    cfgs = [antipodal_config(R, 0.5) for R in R_SCAN]
    return interaction_suite(gs.profile, nl, cfgs)


@pytest.fixture(scope="session")
def s_scan(gs, pot, nl):
    return two_bump_projection_scan(gs.profile, pot, nl, R_SCAN, lam=0.5)


@pytest.fixture(scope="session")
def landscape(gs, pot, nl):
    return projection_landscape(gs.profile, pot, nl, R=R_SCAN[-1])


@pytest.fixture(scope="session")
def kernel_scans():
    y0 = (1.0, 0.0, 0.0)
    y = (-1.0, 0.0, 0.0)
    return {
        (4.0, 2.0): kernel_overlap_scan(4.0, 2.0, y0, y, R_SCAN),
        (2.0, 2.0): kernel_overlap_scan(2.0, 2.0, y0, y, R_SCAN),
    }


@pytest.fixture(scope="session")
def descent_run(gs, pot, nl):
    """The canonical two-bump descent: symmetric pair at separation 4."""
    u0 = grid_field_from_profile(gs.profile, nl, (-2.0, 2.0), (1.0, 1.0),
                                 refine_z=(-1.0, 1.0))
    opts = SearchOpts(max_iter=4000, symmetrize=True)
    return minimize_on_manifold(u0, pot, nl, opts)
