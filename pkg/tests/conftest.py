import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from elastobeam import ConstantField, ExpressionField, IsotropicMedium

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def constant_medium():
    """cP = 2, cS = 1, with nonzero third-order moduli."""
    return IsotropicMedium(
        lam=ConstantField(2.0),
        mu=ConstantField(1.0),
        rho=ConstantField(1.0),
        modA=ConstantField(0.3),
        modB=ConstantField(0.2),
        modC=ConstantField(0.1),
    )


@pytest.fixture
def varying_medium():
    """Smooth analytic medium, admissible on any ball of radius a few units."""
    return IsotropicMedium(
        lam=ExpressionField("0.5 + 0.3*cos(x2)"),
        mu=ExpressionField("0.8 + 0.3*sin(x1)"),
        rho=ExpressionField("1.0 + 0.25*sin(x3)"),
        modA=ExpressionField("0.3 + 0.1*x1"),
        modB=ExpressionField("0.2 - 0.05*x2"),
        modC=ConstantField(0.1),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
