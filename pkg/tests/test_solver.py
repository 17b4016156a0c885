import math

import numpy as np
import pytest

from flexplan.lp import Constraint, LinearProgram, NameMap, Variable
from flexplan.solver import (
    INFEASIBLE,
    MissingValueError,
    Solution,
    SolverOptions,
    dual_objective,
    solve,
    verify_solution,
)

from helpers import TINY, elec, model, plant, solved, storage, tiny_model, val
from oracles import TinySystem


def one_var_lp():
    names = NameMap()
    names.add_variable(("x",))
    return LinearProgram([Variable("x[]", cost=1.0)], [Constraint("c[]", ((0, 1.0),), ">=", 3.0, "c")], names)


def test_min_x_above_three():
    sol = solve(one_var_lp())
    assert sol.optimal
    assert sol.values["x[]"] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(3.0)


def test_two_hour_fixture_objective():
    lp, sol = solved(model(2, [elec([3.0, 5.0])], [plant(inv=7.0, var=0.01)]))
    assert sol.objective == pytest.approx(35.08, abs=1e-9)
    assert sol.breakdown["fixed"] == pytest.approx(35.0)
    assert sol.breakdown["variable"] == pytest.approx(0.08)


def test_infeasible_fixture():
    m = model(2, [elec([3.0, 5.0])], [plant(capacity_bounds={"r": (0.0, 1.0)})])
    lp, sol = solved(m)
    assert sol.status == INFEASIBLE
    assert not sol.optimal


def test_verifier_accepts_optimum_and_flags_perturbation():
    lp, sol = solved(model(2, [elec([3.0, 5.0])], [plant(inv=7.0, var=0.01)]))
    report = verify_solution(lp, sol)
    assert report.passed
    assert report.objective_gap < 1e-9
    bumped = Solution(sol.status, sol.objective, dict(sol.values))
    bumped.values["G[plant,r,0]"] += 1.0
    bad = verify_solution(lp, bumped)
    assert not bad.passed
    assert bad.worst["energy_balance"] == "bal[electricity,r,0]"
    assert bad.max_violation["energy_balance"] == pytest.approx(1.0 / 3.0)


def test_verifier_needs_every_value():
    lp, sol = solved(model(2, [elec([3.0, 5.0])], [plant()]))
    values = dict(sol.values)
    values.pop("K[plant,r]")
    with pytest.raises(MissingValueError):
        verify_solution(lp, Solution(sol.status, sol.objective, values))


def test_verifier_relative_scale():
    lp = one_var_lp()
    # a shortfall of 2e-6 on rhs 3 is within 1e-6 relative
    ok = verify_solution(lp, Solution("optimal", 3.0 - 2e-6, {"x[]": 3.0 - 2e-6}))
    assert ok.passed
    assert not verify_solution(lp, Solution("optimal", 2.9, {"x[]": 2.9})).passed


def test_pinned_grid_point_matches_oracle_dispatch():
    """Fix capacities at a grid point and compare against the independent dispatch LP."""
    system = TinySystem(**TINY)
    lp, free = solved(tiny_model())
    point = tuple(math.ceil(val(free, k, n, "r") * 10) / 10 for k, n in
                  (("K", "solar"), ("K", "gas"), ("Kst", "battery")))
    lp_pin, pinned = solved(tiny_model(point))
    assert pinned.optimal
    assert verify_solution(lp_pin, pinned).passed
    oracle = system.fixed_cost(*point) + system.dispatch([point])[0]
    assert pinned.objective == pytest.approx(oracle, rel=1e-7)
    assert pinned.objective >= free.objective - 1e-9
    assert pinned.objective <= free.objective * 1.01


def test_strong_duality_spot_check():
    lp, sol = solved(tiny_model())
    assert dual_objective(lp, sol) == pytest.approx(sol.objective, rel=1e-7)


def test_strong_duality_with_storage_and_limits():
    st = storage(power_investment=0.1, energy_investment=0.05, charge_efficiency=0.9, self_discharge=0.99,
                 energy_to_power=(1.0, 6.0), power_bounds={"r": (0.0, 2.0)})
    pv = plant("pv", inv=0.5, alpha={"r": [0.0, 0.5, 1.0, 0.5]}, capacity_bounds={"r": (0.0, 8.0)})
    gas = plant("gas", inv=0.3, var=0.2)
    lp, sol = solved(model(4, [elec([2.0, 3.0, 2.0, 4.0])], [pv, gas], [st]))
    assert dual_objective(lp, sol) == pytest.approx(sol.objective, rel=1e-7)


def test_duals_can_be_disabled():
    m = model(2, [elec([3.0, 5.0])], [plant()])
    from flexplan.builder import build_lp

    lp = build_lp(m)
    sol = solve(lp, SolverOptions(duals=False))
    assert sol.duals is None
    with pytest.raises(ValueError):
        dual_objective(lp, sol)


def test_options_from_settings_ignore_unknown_keys():
    opts = SolverOptions.from_settings({"time_limit": 5, "colour": "blue"})
    assert opts.time_limit == 5
    assert np.isinf(SolverOptions.from_settings(None).time_limit)


def test_demand_without_supply_is_infeasible():
    lp, sol = solved(model(2, [elec([3.0, 5.0])]))
    assert sol.status == INFEASIBLE
