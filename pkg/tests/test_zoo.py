import numpy as np
import pytest

from dpsolve import backward_induction, solve, validate, zoo
from dpsolve.structure import run_class_checks
from dpsolve.zoo import UnknownModelError


def test_available_and_describe():
    names = zoo.available()
    assert "machine_replacement" in names and "inventory" in names
    text = zoo.describe("inventory")
    assert "monotone" in text and "capacity" in text


def test_unknown_name_lists_options():
    with pytest.raises(UnknownModelError, match="machine_replacement"):
        zoo.build("warehouse")


def test_unknown_parameter_rejected():
    with pytest.raises(ValueError, match="valid:"):
        zoo.build("machine_replacement", {"n_machines": 3})


@pytest.mark.parametrize(
    "name,params",
    [
        ("machine_replacement", {"beta": 1.2}),
        ("machine_replacement", {"n_states": 1}),
        ("inventory", {"capacity": -4.0}),
        ("consumption_savings", {"utility": "cubic"}),
        ("consumption_savings", {"consumption_max": 5.0}),
        ("queueing", {"arrival_prob": 1.5}),
    ],
)
def test_out_of_range_parameters_rejected(name, params):
    with pytest.raises(ValueError):
        zoo.build(name, params)


def test_every_model_validates_at_defaults():
    for name in zoo.available():
        named = zoo.build(name)
        model = named.finite(30, 30) if named.is_continuous else named.model
        assert validate(model) == [], name


def test_builders_are_deterministic():
    for name in zoo.available():
        a = zoo.build(name).finite(20, 20)
        b = zoo.build(name).finite(20, 20)
        assert np.array_equal(a.reward, b.reward, equal_nan=True)
        assert np.array_equal(a.transition, b.transition)


def test_non_counterexample_models_pass_their_claimed_suite():
    for name in zoo.available():
        named = zoo.build(name)
        if named.is_counterexample or not named.is_continuous:
            continue
        grid = named.grid(50, 50)
        reports = run_class_checks(grid, trials=25, seed=0)
        assert all(r.passed for r in reports), (name, [(r.name, r.note) for r in reports])


def test_counterexamples_are_flagged_by_their_claimed_suite():
    for name in zoo.available():
        named = zoo.build(name)
        if not named.is_counterexample:
            continue
        reports = run_class_checks(named.grid(), trials=25, seed=0)
        assert any(not r.passed for r in reports), name


def test_finite_models_solve_sensibly():
    machine = zoo.build("machine_replacement").model
    res = solve(machine, tol=1e-10)
    # threshold structure: keep while fresh, replace once worn
    assert np.all(np.diff(res.policy) >= 0)
    assert res.policy[0] == 0 and res.policy[-1] == 1
    queue = zoo.build("queueing").model
    resq = solve(queue, tol=1e-8)
    # longer queues are costlier
    assert np.all(np.diff(resq.values) < 0)


def test_machine_replacement_golden_values_regenerate_bit_identically():
    named = zoo.build("machine_replacement")
    assert named.reference_values is not None
    provenance = named.reference_provenance
    assert provenance["method"] == "backward_induction"
    regenerated = backward_induction(named.model, provenance["horizon"])
    for state, value in named.reference_values:
        assert regenerated[state] == value  # exact float equality


def test_reference_values_not_attached_off_defaults():
    named = zoo.build("machine_replacement", {"beta": 0.8})
    assert named.reference_values is None


def test_grid_overrides_and_finite_accessor():
    named = zoo.build("inventory")
    grid = named.grid(25, 25)
    assert grid.mdp.n_states == 25 and grid.mdp.n_actions == 25
    finite = zoo.build("machine_replacement")
    with pytest.raises(ValueError, match="already finite"):
        finite.grid()
    assert finite.finite() is finite.model
