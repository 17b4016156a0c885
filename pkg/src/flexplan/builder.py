"""Translate an :class:`EnergyModel` into a :class:`LinearProgram`.

All operational variables are hourly. Carriers with a coarser resolution sum
the hourly terms of each block in their energy balance, which is what gives
heat and transport their shifting flexibility.
"""

from __future__ import annotations

import math

import numpy as np

from . import flex
from .lp import EQ, LE, LinearProgram, NameMap, Variable, VariableRegistry, make_row
from .model import (
    DispatchMode,
    EnergyModel,
    ModelError,
    annuitize,
    has_errors,
    validate_model,
)


def declare_variables(model: EnergyModel) -> VariableRegistry:
    """Declare every variable, sorted by entity id, then region, then hour."""
    T = model.horizon
    v = VariableRegistry()
    for tech in model.sorted_technologies():
        for r in model.tech_regions(tech):
            lo, hi = tech.bounds(r)
            pre = tech.preexisting.get(r, 0.0)
            v.add(("K", tech.id, r), max(0.0, lo - pre), hi - pre)
            for t in range(T):
                v.add(("G", tech.id, r, t))
            if tech.inputs:
                for t in range(T):
                    v.add(("U", tech.id, r, t))
            if tech.embedded_storage is not None:
                flex.declare_embedded_storage(tech, r, T, v)
    for st in model.sorted_storages():
        for r in model.tech_regions(st):
            lo, hi = st.bounds(r)
            pre_p, _ = st.preexisting_in(r)
            v.add(("Kst", st.id, r), max(0.0, lo - pre_p), hi - pre_p)
            v.add(("Klvl", st.id, r))
            for kind in ("Sin", "Sout", "Slvl"):
                for t in range(T):
                    v.add((kind, st.id, r, t))
            if r in st.inflow:
                for t in range(T):
                    v.add(("Spill", st.id, r, t))
    for k in model.sorted_corridors():
        for n, (cap, _) in enumerate(k.segments):
            v.add(("X", k.id, n), 0.0, cap)
        for t in range(T):
            v.add(("Efwd", k.id, t))
        for t in range(T):
            v.add(("Ebwd", k.id, t))
    for o in model.sorted_imports():
        for t in range(T):
            v.add(("I", o.carrier, o.region, t))
    return v


def build_objective(model: EnergyModel, variables: VariableRegistry) -> tuple:
    """Return ``(costs, classes, constant)``.

    ``costs`` maps variable index to its objective coefficient, ``classes``
    maps it to "fixed", "variable" or "import". ``constant`` is the fixed
    operating cost of preexisting capacity, which does not move the optimum.
    """
    rate = model.interest_rate
    costs, classes = {}, {}
    constant = 0.0

    def put(key, value, cls):
        j = variables[key]
        costs[j] = value
        classes[j] = cls

    T = model.horizon
    for tech in model.sorted_technologies():
        fixed = annuitize(tech.investment_cost, tech.lifetime, rate) + tech.fixed_om
        es = tech.embedded_storage
        for r in model.tech_regions(tech):
            put(("K", tech.id, r), fixed, "fixed")
            if model.charge_preexisting_om:
                constant += tech.fixed_om * tech.preexisting.get(r, 0.0)
            for t in range(T):
                put(("G", tech.id, r, t), tech.variable_cost, "variable")
            if es is not None:
                put(("KESst", tech.id, r), annuitize(es.power_cost, es.lifetime, rate), "fixed")
                put(("KESlvl", tech.id, r), annuitize(es.energy_cost, es.lifetime, rate), "fixed")
    for st in model.sorted_storages():
        power = annuitize(st.power_investment, st.lifetime, rate) + st.power_om
        energy = annuitize(st.energy_investment, st.lifetime, rate) + st.energy_om
        for r in model.tech_regions(st):
            put(("Kst", st.id, r), power, "fixed")
            put(("Klvl", st.id, r), energy, "fixed")
            if model.charge_preexisting_om:
                pre_p, pre_e = st.preexisting_in(r)
                constant += st.power_om * pre_p + st.energy_om * pre_e
    for k in model.sorted_corridors():
        for n, (_, unit_cost) in enumerate(k.segments):
            put(("X", k.id, n), annuitize(unit_cost, k.lifetime, rate) + k.fixed_om, "fixed")
        if model.charge_preexisting_om:
            constant += k.fixed_om * k.preexisting_capacity
    for o in model.sorted_imports():
        for t in range(T):
            put(("I", o.carrier, o.region, t), o.price, "import")
    return costs, classes, constant


def _cap_row(tech, r, t, alpha, variables, family="capacity_generation"):
    """Capacity cap, on the input side for input-based capacity."""
    pre = tech.preexisting.get(r, 0.0)
    kj = variables[("K", tech.id, r)]
    if tech.basis == "input":
        flow = variables[("U", tech.id, r, t)]
    else:
        flow = variables[("G", tech.id, r, t)]
    return make_row(("cap", tech.id, r, t), {flow: 1.0, kj: -alpha}, LE, alpha * pre, family)


def build_capacity_constraints(model: EnergyModel, variables: VariableRegistry) -> list:
    """Generation, storage, exchange and availability caps."""
    T = model.horizon
    rows = []
    carriers = model.carrier_map
    for tech in model.sorted_technologies():
        for r in model.tech_regions(tech):
            if tech.availability_profile is not None:
                # the connection profile replaces the plain capacity factor cap
                rows.extend(flex.build_bev_constraints(tech, r, variables, T))
                continue
            if tech.dispatch_mode == DispatchMode.MUST_RUN:
                (out,) = tech.outputs
                # hourly must-run output is pinned to the profile and needs no cap
                if carriers[out].resolution == 1 and tech.embedded_storage is None:
                    continue
            alpha = tech.capacity_factor_series(r, T)
            for t in range(T):
                rows.append(_cap_row(tech, r, t, alpha[t], variables))
    for st in model.sorted_storages():
        lo, hi = st.energy_to_power
        for r in model.tech_regions(st):
            pre_p, pre_e = st.preexisting_in(r)
            k_st = variables[("Kst", st.id, r)]
            k_lvl = variables[("Klvl", st.id, r)]
            for t in range(T):
                coefs = {
                    variables[("Sin", st.id, r, t)]: 1.0,
                    variables[("Sout", st.id, r, t)]: 1.0,
                    k_st: -1.0,
                }
                rows.append(make_row(("stcap", st.id, r, t), coefs, LE, pre_p, "capacity_storage_power"))
            for t in range(T):
                coefs = {variables[("Slvl", st.id, r, t)]: 1.0, k_lvl: -1.0}
                rows.append(make_row(("lvlcap", st.id, r, t), coefs, LE, pre_e, "capacity_storage_level"))
            if lo > 0:
                coefs = {k_st: lo, k_lvl: -1.0}
                rows.append(make_row(("e2pmin", st.id, r), coefs, LE, pre_e - lo * pre_p, "storage_linking"))
            if math.isfinite(hi):
                coefs = {k_lvl: 1.0, k_st: -hi}
                rows.append(make_row(("e2pmax", st.id, r), coefs, LE, hi * pre_p - pre_e, "storage_linking"))
    for k in model.sorted_corridors():
        segs = {variables[("X", k.id, n)]: -1.0 for n in range(len(k.segments))}
        for t in range(T):
            coefs = {variables[("Efwd", k.id, t)]: 1.0, variables[("Ebwd", k.id, t)]: 1.0, **segs}
            rows.append(make_row(("exc", k.id, t), coefs, LE, k.preexisting_capacity, "capacity_exchange"))
    for o in model.sorted_imports():
        if math.isfinite(o.limit):
            coefs = {variables[("I", o.carrier, o.region, t)]: 1.0 for t in range(T)}
            rows.append(make_row(("implim", o.carrier, o.region), coefs, LE, o.limit, "import_limit"))
    return rows


def _hourly_terms(model: EnergyModel, variables: VariableRegistry) -> dict:
    """Map (carrier, region) -> list of (key-maker, coefficient) over hours."""
    terms = {}

    def add(carrier, region, key, coef):
        terms.setdefault((carrier, region), []).append((key, coef))

    for tech in model.sorted_technologies():
        for r in model.tech_regions(tech):
            for c, share in tech.outputs.items():
                add(c, r, ("G", tech.id, r), share)
            for c, share in tech.inputs.items():
                add(c, r, ("U", tech.id, r), -share)
    for st in model.sorted_storages():
        for r in model.tech_regions(st):
            add(st.carrier, r, ("Sout", st.id, r), st.discharge_efficiency)
            add(st.carrier, r, ("Sin", st.id, r), -1.0)
    for k in model.sorted_corridors():
        eff = 1.0 - k.loss
        # losses are charged on the importing side
        add(k.carrier, k.from_region, ("Efwd", k.id), -1.0)
        add(k.carrier, k.from_region, ("Ebwd", k.id), eff)
        add(k.carrier, k.to_region, ("Efwd", k.id), eff)
        add(k.carrier, k.to_region, ("Ebwd", k.id), -1.0)
    for o in model.sorted_imports():
        add(o.carrier, o.region, ("I", o.carrier, o.region), 1.0)
    return terms


def build_energy_balances(model: EnergyModel, variables: VariableRegistry, hierarchy=None) -> list:
    """Supply equals demand per carrier, region and block of the carrier's resolution."""
    hierarchy = hierarchy or model.hierarchy()
    T = model.horizon
    terms = _hourly_terms(model, variables)
    rows = []
    for carrier in sorted(model.carriers, key=lambda c: c.id):
        for r in sorted(model.regions):
            if model.must_run_members(carrier.id, r):
                continue  # must-run groups balance themselves
            entries = terms.get((carrier.id, r), [])
            demand = carrier.demand_series(r, T)
            if not entries and not np.any(demand):
                continue
            for start, end in hierarchy.blocks(carrier.resolution):
                coefs = {}
                for t in range(start, end):
                    for key, a in entries:
                        j = variables[key + (t,)]
                        coefs[j] = coefs.get(j, 0.0) + a
                rhs = float(demand[start:end].sum())
                rows.append(make_row(("bal", carrier.id, r, start), coefs, EQ, rhs, "energy_balance"))
    return rows


def build_conversion_constraints(model: EnergyModel, variables: VariableRegistry) -> list:
    """``efficiency * U = G`` for every technology with inputs."""
    rows = []
    for tech in model.sorted_technologies():
        if not tech.inputs:
            continue
        for r in model.tech_regions(tech):
            for t in range(model.horizon):
                coefs = {
                    variables[("U", tech.id, r, t)]: tech.efficiency,
                    variables[("G", tech.id, r, t)]: -1.0,
                }
                rows.append(make_row(("conv", tech.id, r, t), coefs, EQ, 0.0, "conversion"))
    return rows


def build_storage_balances(model: EnergyModel, variables: VariableRegistry) -> list:
    """Level carried over cyclically: the first hour follows the last one."""
    T = model.horizon
    rows = []
    for st in model.sorted_storages():
        for r in model.tech_regions(st):
            inflow = np.asarray(st.inflow.get(r, np.zeros(T)), dtype=float)
            for t in range(T):
                lvl = variables[("Slvl", st.id, r, t)]
                prev = variables[("Slvl", st.id, r, (t - 1) % T)]
                coefs = {
                    variables[("Sin", st.id, r, t)]: st.charge_efficiency,
                    variables[("Sout", st.id, r, t)]: -1.0,
                }
                coefs[prev] = coefs.get(prev, 0.0) + st.self_discharge
                coefs[lvl] = coefs.get(lvl, 0.0) - 1.0
                if r in st.inflow:
                    coefs[variables[("Spill", st.id, r, t)]] = -1.0
                rows.append(make_row(("stbal", st.id, r, t), coefs, EQ, -inflow[t], "storage_balance"))
    return rows


def build_flex_constraints(model: EnergyModel, variables: VariableRegistry, hierarchy=None) -> list:
    hierarchy = hierarchy or model.hierarchy()
    rows = []
    for group in flex.must_run_groups(model):
        rows.extend(flex.build_mustrun_constraints(group, variables, hierarchy))
    for tech in model.sorted_technologies():
        if tech.embedded_storage is None:
            continue
        for r in model.tech_regions(tech):
            rows.extend(flex.build_embedded_storage(tech, r, variables, model.horizon))
    return rows


def build_lp(model: EnergyModel) -> LinearProgram:
    """Assemble the full linear program for ``model``."""
    if model.horizon <= 0:
        raise ModelError("empty horizon")
    diagnostics = validate_model(model)
    if has_errors(diagnostics):
        details = "; ".join(str(d) for d in diagnostics if d.severity == "error")
        raise ModelError(f"model has validation errors: {details}")
    hierarchy = model.hierarchy()
    variables = declare_variables(model)
    costs, classes, constant = build_objective(model, variables)

    rows = []
    rows += build_energy_balances(model, variables, hierarchy)
    rows += build_capacity_constraints(model, variables)
    rows += build_conversion_constraints(model, variables)
    rows += build_storage_balances(model, variables)
    rows += build_flex_constraints(model, variables, hierarchy)

    names: NameMap = variables.names
    var_list = []
    for j in range(len(variables)):
        key = names.var_key(j)
        var_list.append(
            Variable(
                names.var_name(*key),
                variables.lower[j],
                variables.upper[j],
                float(costs.get(j, 0.0)),
                classes.get(j, ""),
            )
        )
    constraints = []
    for key, row in rows:
        names.add_constraint(key)
        constraints.append(row)
    return LinearProgram(var_list, constraints, names, constant, diagnostics)
