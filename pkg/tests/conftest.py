import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import pythagorean_triples  # noqa: E402

from trochoswarm.design import EPITROCHOID, HYPOTROCHOID, DesignSpec, design_eigenstructure, make_design  # noqa: E402
from trochoswarm.errors import DegenerateBeta, EmptyRegion, SingularBetaD  # noqa: E402
from trochoswarm.region import feasible_region  # noqa: E402

BASE = dict(k=2, triple=(5, 12, 13), d0_min=1.5, d0_max=15.0, d_CR=15.0, d_CT=0.5)
EXPERIMENT = dict(k=2, d0_min=0.01, d0_max=1.8, d_CR=4.0, d_CT=0.5)


@pytest.fixture(scope="session")
def base_spec():
    return DesignSpec(**BASE)


@pytest.fixture(scope="session")
def base_eig(base_spec):
    return design_eigenstructure(base_spec)


@pytest.fixture(scope="session")
def base_region(base_spec, base_eig):
    return feasible_region(base_spec, base_eig)


@pytest.fixture(scope="session")
def circle_design(base_spec):
    return make_design(base_spec, 2500, 0)


@pytest.fixture(scope="session")
def troch_design(base_spec):
    return make_design(base_spec, 2000, 1200)


@pytest.fixture(scope="session")
def inject_design(base_spec):
    return make_design(base_spec, 2400, 1525)


@pytest.fixture(scope="session")
def exp_troch():
    spec = DesignSpec(triple=(7, 24, 25), **EXPERIMENT)
    return make_design(spec, 1000, 1250)


def _point_in_polygon(rng, vertices):
    """Uniform point in a convex polygon via area-weighted fan triangles."""
    v0 = vertices[0]
    tris = [(v0, vertices[i], vertices[i + 1]) for i in range(1, len(vertices) - 1)]
    areas = np.array([abs((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]) for a, b, c in tris])
    a, b, c = tris[rng.choice(len(tris), p=areas / areas.sum())]
    u, v = rng.random(2)
    if u + v > 1:
        u, v = 1 - u, 1 - v
    return a + u * (b - a) + v * (c - a)


def random_feasible_designs(n, seed, types=(EPITROCHOID, HYPOTROCHOID), k_range=(2, 8), interior=0.0):
    """Draw designs whose (R_c, d_c) lies inside the base feasible region.

    ``interior`` rejects points closer than that to the polygon boundary
    (in R_c, d_c units relative to the box diagonal).
    """
    rng = np.random.default_rng(seed)
    triples = pythagorean_triples()
    out = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        assert attempts < 50 * n, "could not find enough feasible designs"
        s1, s2, s3 = triples[rng.integers(len(triples))]
        if rng.random() < 0.5:
            s1, s2 = s2, s1
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        kind = types[rng.integers(len(types))]
        try:
            spec = DesignSpec(k=k, triple=(s1, s2, s3), trochoid_type=kind, d0_min=1.5, d0_max=15.0, d_CR=15.0, d_CT=0.5)
            eig = design_eigenstructure(spec)
            region = feasible_region(spec, eig)
        except (DegenerateBeta, SingularBetaD, EmptyRegion):
            continue
        areas = np.array([p.area for p in region.polygons])
        poly = region.polygons[rng.choice(len(areas), p=areas / areas.sum())]
        R, d = _point_in_polygon(rng, poly.vertices)
        diag = float(np.hypot(*region.box))
        if interior and region.boundary_distance(R, d) < interior * diag:
            continue
        out.append(make_design(spec, float(R), float(d), eig))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
