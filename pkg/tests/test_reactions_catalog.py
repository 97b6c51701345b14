import numpy as np
import pytest

from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionKind, DomainKind
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.pde_lab.catalog import CATALOG, builtin_problem
from kiro_leno.operator_learning.pde_lab.reactions import REACTIONS, evaluate_reaction, get_reaction


def test_kpp_reaction():
    u = np.linspace(-1, 2, 7)
    (out,) = get_reaction("kpp").fn([u], {}, None)
    np.testing.assert_allclose(out, u * (1 - u))


def test_gray_scott_reaction():
    A, S = np.array([0.5]), np.array([0.2])
    dA, dS = get_reaction("gray-scott").fn([A, S], {"rho": 0.04, "mu": 0.065}, None)
    assert dA[0] == pytest.approx(0.2 * 0.25 - 0.105 * 0.5)
    assert dS[0] == pytest.approx(-0.2 * 0.25 + 0.04 * 0.8)


def test_allen_cahn_sign():
    u = np.array([0.5])
    (out,) = get_reaction("allen-cahn").fn([u], {"sign": -1.0}, None)
    assert out[0] == pytest.approx(-(0.125 - 0.5))


def test_schrodinger_needs_a_potential():
    with pytest.raises(ValidationError, match="potential"):
        get_reaction("schrodinger").fn([np.ones(3)], {"alpha": 1.0, "lambda_eig": 1.0}, None)


def test_unknown_reaction():
    with pytest.raises(ValidationError, match="unknown reaction"):
        get_reaction("brusselator")
    assert {"zero", "linear", "kpp", "allen-cahn", "gray-scott", "schrodinger"} <= set(REACTIONS)


def test_evaluate_reaction_checks_variable_axis():
    problem = builtin_problem("gray-scott", {"resolution": 16})
    fields = np.ones((3, 2, 16))
    out = evaluate_reaction(problem, fields)
    assert out.shape == fields.shape
    with pytest.raises(ValidationError, match="expects 2 variables"):
        evaluate_reaction(problem, np.ones((3, 1, 16)))


def test_kpp_defaults():
    problem = builtin_problem("kpp")
    assert problem.domain.shape == (1024,)
    assert problem.bc.kind == BCKind.HOMOGENEOUS_DIRICHLET
    assert problem.defaults.record_dt == 0.01
    assert problem.defaults.train_horizon == 10
    assert problem.defaults.eval_horizon == 30
    assert problem.defaults.modes == 64


def test_overrides_and_aliases():
    problem = builtin_problem("kpp", {"resolution": 65, "dt": 0.002, "P": 12, "hidden": [32]})
    assert problem.domain.shape == (65,)
    assert problem.defaults.record_dt == 0.002
    assert problem.defaults.modes == 12
    assert problem.defaults.hidden == [32]


def test_allen_cahn_diffusion_is_epsilon_squared():
    problem = builtin_problem("allen-cahn")
    assert problem.diffusion[0].value == pytest.approx(0.01)
    assert problem.domain.bounds == ((0.0, 2 * np.pi),)
    assert builtin_problem("allen-cahn", {"epsilon": 0.2}).diffusion[0].value == pytest.approx(0.04)


def test_gray_scott_variants():
    one = builtin_problem("gray-scott")
    assert one.variables == 2
    assert [d.value for d in one.diffusion] == [2.5e-4, 5.0e-4]
    two = builtin_problem("gray-scott", {"dim": 2, "resolution": 32})
    assert two.domain.kind == DomainKind.RECTANGLE
    assert two.domain.shape == (32, 32)
    with pytest.raises(ValidationError, match="no 2D variant"):
        builtin_problem("kpp", {"dim": 2})


def test_anisotropic_and_variable_diffusion():
    aniso = builtin_problem("kpp-anisotropic", {"resolution": 16})
    assert aniso.diffusion[0].kind == DiffusionKind.SPD_MATRIX_FIELD
    assert aniso.diffusion[0].separable_factors(2) == (1.0, 0.001)
    variable = builtin_problem("kpp-variable", {"resolution": 33})
    coeff = variable.diffusion[0].scalar_on(variable.domain)
    assert coeff[0] == pytest.approx(3.0)
    assert coeff[-1] == pytest.approx(1.0)


def test_inhomogeneous_boundary_data():
    problem = builtin_problem("kpp-inhomogeneous", {"resolution": 17})
    assert problem.bc.has_data
    assert np.all(problem.bc.g == 1.0)


def test_schrodinger_samples_its_potential():
    problem = builtin_problem("schrodinger", {"resolution": 16})
    assert problem.potential.shape == (16, 16)
    assert problem.domain.bounds == ((-8.0, 8.0), (-8.0, 8.0))


def test_disease_lives_on_a_masked_grid():
    problem = builtin_problem("disease")
    assert problem.domain.kind == DomainKind.MASKED_GRID
    assert problem.bc.kind == BCKind.NEUMANN
    assert 0 < problem.domain.mask.sum() < 40 * 40


def test_bad_names_and_keys():
    with pytest.raises(ValidationError, match="unknown problem"):
        builtin_problem("navier-stokes")
    with pytest.raises(ValidationError, match="unknown override"):
        builtin_problem("kpp", {"viscosity": 1.0})


def test_reaction_swap_takes_its_parameters():
    problem = builtin_problem("heat", {"reaction": "linear", "rate": -2.0})
    assert problem.reaction == "linear"
    assert problem.params == {"rate": -2.0}
    with pytest.raises(ValidationError, match="missing parameters"):
        builtin_problem("heat", {"reaction": "linear"})


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_catalog_entry_builds(name):
    overrides = {"resolution": 16} if name != "disease" else {}
    problem = builtin_problem(name, overrides)
    assert problem.variables == get_reaction(problem.reaction).variables
