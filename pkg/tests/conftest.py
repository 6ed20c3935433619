import math

import numpy as np
import pytest

from discfrag import (
    AffineRates,
    CoefficientFamily,
    Generator,
    SineModulation,
    becker_doring_family,
    certify_kappa,
    construct_weight,
    power_law_family,
    power_weight,
)

T_FLEET = 5.0
GRID = np.linspace(0.0, T_FLEET, 11)


def closed_form_family(horizon=math.inf):
    """N=2 example: a = (0, 1), b(1, 2) = 2; u2 = e^{-t}, u1 = 2(1 - e^{-t})."""
    rates = AffineRates(c=Generator("const", 0.0), d=Generator("const", 1.0),
                        phi=SineModulation(1.0, 0.0, 0.0))
    return power_law_family(0.0, rates, horizon)


def affine_rates(c=Generator("linear", 1.0), d=Generator("const", 0.0),
                 phi=SineModulation(2.0, 1.0, 1.0), monomer_inert=True):
    return AffineRates(c, d, phi, monomer_inert)


def fleet():
    """Built-in families used across the suite, keyed by name."""
    return {
        "closed_form": closed_form_family(T_FLEET),
        "power_law_nu0": power_law_family(0.0, affine_rates(), T_FLEET),
        "power_law_nu1": power_law_family(1.0, affine_rates(), T_FLEET),
        "power_law_num1": power_law_family(
            -1.0, affine_rates(c=Generator("const", 1.0)), T_FLEET),
        "becker_doring": becker_doring_family(
            affine_rates(c=Generator("linear", 0.5), d=Generator("const", 1.0),
                         phi=SineModulation(1.5, 0.5, 2.0)), T_FLEET),
        "lossy": power_law_family(
            0.0, affine_rates(c=Generator("const", 0.5), d=Generator("const", 1.0),
                              monomer_inert=False), T_FLEET),
    }


CONSERVING = ["closed_form", "power_law_nu0", "power_law_nu1", "power_law_num1", "becker_doring"]


def fleet_weight(name, family, N):
    """Certified weight on N + 1 indices for a fleet member."""
    if name in ("power_law_nu0", "lossy"):
        return certify_kappa(power_weight(8, N + 1), family, N + 1, GRID)
    return construct_weight(family, 0.5, N + 1, GRID)


@pytest.fixture(params=sorted(fleet()))
def member(request):
    return request.param, fleet()[request.param]


def custom_family(a, b, horizon=math.inf):
    return CoefficientFamily(a=a, b=b, horizon=horizon)


def binary_only():
    """b(1, 2) = 2 and nothing else; a_n = n - 1."""
    return custom_family(lambda n, t: n - 1.0, lambda n, j, t: 2.0 if (n, j) == (1, 2) else 0.0)
