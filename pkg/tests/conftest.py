import pytest

from kiro_leno.operator_learning.config import reset_config
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionSpec, Domain
from kiro_leno.operator_learning.pde_lab.catalog import builtin_problem
from kiro_leno.operator_learning.spectral_basis.basis import build_basis


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from the local environment and a fresh settings singleton."""
    monkeypatch.setenv("LENO_ENVIRONMENT", "local")
    for name in ("LENO_THREADS", "LENO_OUT_DIR", "LENO_LOG_LEVEL", "LENO_LOG_JSON"):
        monkeypatch.delenv(name, raising=False)
    reset_config()
    yield
    reset_config()


@pytest.fixture
def interval() -> Domain:
    return Domain.interval(0.0, 1.0, 33)


@pytest.fixture
def dirichlet_basis(interval):
    return build_basis(interval, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant(1.0), 8)


@pytest.fixture
def heat_problem():
    """Pure diffusion on a coarse interval; one solver substep per record."""
    return builtin_problem("heat", {"resolution": 17, "modes": 4, "hidden": [8], "samples": 3, "eval_horizon": 3})


@pytest.fixture
def kpp_problem():
    return builtin_problem(
        "kpp", {"resolution": 33, "modes": 8, "hidden": [16], "samples": 4, "epochs": 5, "eval_horizon": 4}
    )


@pytest.fixture
def small_net() -> CoeffNet:
    return CoeffNet.init([6, 12, 6], seed=3)
