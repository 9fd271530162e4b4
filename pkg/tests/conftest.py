import math

import pytest

from peglearn.sim import ContactParams, PegHoleGeometry, Stiffness


@pytest.fixture
def geom():
    return PegHoleGeometry(
        hole_width=23.04e-3,
        peg_width=23.0e-3,
        hole_depth=36.0e-3,
        fillet_radius=0.5e-3,
        peg_length=50.0e-3,
    )


@pytest.fixture
def contact():
    return ContactParams()


@pytest.fixture
def frictionless():
    return ContactParams(mu=0.0)


@pytest.fixture
def soft_spring():
    return Stiffness(4000.0, 4000.0, 200.0)


DEG = math.pi / 180.0
