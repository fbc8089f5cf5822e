import numpy as np
import pytest

from separatrix import models
from separatrix.detection import detect_points
from separatrix.integration import IntegratorConfig


@pytest.fixture(scope="session")
def icfg():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def hilker():
    system = models.preset_system("hilker-ref")
    return system, models.stable_attractors(system)


@pytest.fixture(scope="session")
def comp2():
    system = models.preset_system("competition-2eq")
    return system, models.stable_attractors(system)


@pytest.fixture(scope="session")
def comp3():
    system = models.preset_system("competition-3eq")
    return system, models.stable_attractors(system)


# Detection is the expensive stage; run each reference setup once.

@pytest.fixture(scope="session")
def hilker_points(hilker, icfg):
    system, att = hilker
    return detect_points(system, att, n=20, cfg=icfg)


@pytest.fixture(scope="session")
def comp2_points(comp2, icfg):
    system, att = comp2
    return detect_points(system, att, n=10, cfg=icfg)


@pytest.fixture(scope="session")
def comp3_points(comp3, icfg):
    system, att = comp3
    return detect_points(system, att, n=7, cfg=icfg, split_target="E3")
