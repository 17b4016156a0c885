"""Demand-side flexibility formulations.

Must-run groups tie local heating technologies to the demand profile they
serve, embedded storage lets a must-run technology decouple its electricity
draw from that profile, and BEV charging is capped hourly by the share of
vehicles connected to the grid while the daily transport balance forces the
charged energy to match driving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import EQ, LE, VariableRegistry, make_row
from .model import DispatchMode, EnergyModel, ModelError, Technology, TimeHierarchy


@dataclass(frozen=True)
class MustRunGroup:
    carrier: str
    region: str
    members: tuple
    peak: float
    demand: tuple
    resolution: int = 1

    def __post_init__(self):
        if self.peak <= 0:
            raise ModelError(f"must-run group {self.carrier}@{self.region} has zero peak demand")
        for t in self.members:
            if t.dispatch_mode != DispatchMode.MUST_RUN or self.carrier not in t.outputs:
                raise ModelError(f"{t.id} is not a must-run producer of {self.carrier}")


def must_run_groups(model: EnergyModel) -> list:
    """One group per (carrier, region) served by must-run technologies."""
    groups = []
    for carrier in sorted(model.carriers, key=lambda c: c.id):
        for region in sorted(model.regions):
            members = model.must_run_members(carrier.id, region)
            if not members:
                continue
            demand = carrier.demand_series(region, model.horizon)
            groups.append(
                MustRunGroup(
                    carrier.id,
                    region,
                    tuple(members),
                    float(demand.max()),
                    tuple(demand.tolist()),
                    carrier.resolution,
                )
            )
    return groups


def declare_embedded_storage(tech: Technology, region: str, horizon: int, variables: VariableRegistry):
    variables.add(("KESst", tech.id, region))
    variables.add(("KESlvl", tech.id, region))
    for t in range(horizon):
        variables.add(("ESin", tech.id, region, t))
    for t in range(horizon):
        variables.add(("ESout", tech.id, region, t))
    for t in range(horizon):
        variables.add(("ESlvl", tech.id, region, t))


def net_output_terms(tech: Technology, region: str, t: int, variables: VariableRegistry) -> dict:
    """Heat leaving the system boundary of ``tech`` in hour ``t``."""
    terms = {variables[("G", tech.id, region, t)]: 1.0}
    if tech.embedded_storage is not None:
        es = tech.embedded_storage
        terms[variables[("ESout", tech.id, region, t)]] = es.discharge_efficiency
        terms[variables[("ESin", tech.id, region, t)]] = -1.0
    return terms


def build_mustrun_constraints(group: MustRunGroup, variables: VariableRegistry, hierarchy: TimeHierarchy) -> list:
    """Joint capacity sized to peak demand plus proportional operation.

    Operation is fixed per block of the carrier's resolution; for hourly
    carriers this is exact proportionality to the demand profile in every
    hour.
    """
    rows = []
    p = group.peak
    coefs = {}
    rhs = p
    for tech in group.members:
        k = tech.output_per_capacity
        coefs[variables[("K", tech.id, group.region)]] = k
        rhs -= k * tech.preexisting.get(group.region, 0.0)
    rows.append(make_row(("mrcap", group.carrier, group.region), coefs, EQ, rhs, "mustrun_capacity"))

    demand = np.asarray(group.demand, dtype=float)
    for tech in group.members:
        k = tech.output_per_capacity
        pre = tech.preexisting.get(group.region, 0.0)
        for start, end in hierarchy.blocks(group.resolution):
            share = demand[start:end].sum() / p
            coefs = {}
            for t in range(start, end):
                for j, a in net_output_terms(tech, group.region, t, variables).items():
                    coefs[j] = coefs.get(j, 0.0) + a
            kj = variables[("K", tech.id, group.region)]
            coefs[kj] = coefs.get(kj, 0.0) - share * k
            rows.append(
                make_row(("mrop", tech.id, group.region, start), coefs, EQ, share * k * pre, "mustrun_operation")
            )
    return rows


def build_embedded_storage(tech: Technology, region: str, variables: VariableRegistry, horizon: int) -> list:
    """Storage rows for heat storage embedded in a must-run technology.

    The variables must already be declared with :func:`declare_embedded_storage`;
    the coupling to the must-run output happens in
    :func:`build_mustrun_constraints` through :func:`net_output_terms`.
    """
    es = tech.embedded_storage
    if es is None:
        raise ModelError(f"{tech.id} has no embedded storage")
    if tech.dispatch_mode != DispatchMode.MUST_RUN:
        raise ModelError(f"embedded storage on merit-order technology {tech.id}")
    rows = []
    i, r = tech.id, region
    k_st = variables[("KESst", i, r)]
    k_lvl = variables[("KESlvl", i, r)]
    rows.append(make_row(("esdur", i, r), {k_lvl: 1.0, k_st: -es.max_duration}, LE, 0.0, "embedded_storage"))
    for t in range(horizon):
        s_in = variables[("ESin", i, r, t)]
        s_out = variables[("ESout", i, r, t)]
        lvl = variables[("ESlvl", i, r, t)]
        prev = variables[("ESlvl", i, r, (t - 1) % horizon)]
        rows.append(make_row(("escap", i, r, t), {s_in: 1.0, s_out: 1.0, k_st: -1.0}, LE, 0.0, "embedded_storage"))
        rows.append(make_row(("eslvl", i, r, t), {lvl: 1.0, k_lvl: -1.0}, LE, 0.0, "embedded_storage"))
        # charging draws on the technology's own production
        rows.append(
            make_row(("eschg", i, r, t), {s_in: 1.0, variables[("G", i, r, t)]: -1.0}, LE, 0.0, "embedded_storage")
        )
        coefs = {s_in: es.charge_efficiency, s_out: -1.0}
        coefs[prev] = coefs.get(prev, 0.0) + es.self_discharge
        coefs[lvl] = coefs.get(lvl, 0.0) - 1.0
        rows.append(make_row(("esbal", i, r, t), coefs, EQ, 0.0, "embedded_storage_balance"))
    return rows


def build_bev_constraints(tech: Technology, region: str, variables: VariableRegistry, horizon: int) -> list:
    """Hourly grid-connection cap on charging: ``U_t <= a_t * K``.

    The daily match between charged energy and driving consumption is the
    transport carrier's daily energy balance; no discharge variable exists,
    so electricity never flows back to the grid.
    """
    if tech.availability_profile is None:
        raise ModelError(f"{tech.id} has no availability profile")
    avail = np.asarray(tech.availability_profile, dtype=float)
    k_in = tech.input_per_capacity
    pre = tech.preexisting.get(region, 0.0)
    kj = variables[("K", tech.id, region)]
    rows = []
    for t in range(horizon):
        coefs = {variables[("U", tech.id, region, t)]: 1.0, kj: -avail[t] * k_in}
        rows.append(
            make_row(("avail", tech.id, region, t), coefs, LE, avail[t] * k_in * pre, "capacity_availability")
        )
    return rows
