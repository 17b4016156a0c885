"""Residual load curves, flexibility attribution and energy flow aggregates."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .lp import format_name
from .model import FLEX_CLASSES, DispatchMode, EnergyModel

CLASS_ALIASES = {
    "heat": "heat",
    "space/process heat": "heat",
    "space heat": "heat",
    "process heat": "heat",
    "district_heat": "district_heat",
    "district heat": "district_heat",
    "bev": "bev",
    "ptx": "ptx",
}
CLASS_LABELS = {"heat": "space/process heat", "district_heat": "district heat", "bev": "BEV", "ptx": "PtX"}
REFERENCE_ORDER = FLEX_CLASSES


def normalize_class(name: str) -> str:
    try:
        return CLASS_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown flexibility class {name!r}") from None


@dataclass(frozen=True)
class ResidualCurve:
    values: np.ndarray  # GW, sorted descending
    peak: float
    residual_demand: float  # GWh above zero
    excess_generation: float  # GWh below zero, reported positive
    hours_negative: int
    label: str = ""

    def metrics(self) -> dict:
        return {
            "label": self.label,
            "peak": self.peak,
            "residual_demand": self.residual_demand,
            "excess_generation": self.excess_generation,
            "hours_negative": self.hours_negative,
        }


def residual_curve(demand, fluctuating_gen, label: str = "") -> ResidualCurve:
    """Demand minus fluctuating generation, sorted in descending order."""
    demand = np.asarray(demand, dtype=float)
    gen = np.asarray(fluctuating_gen, dtype=float)
    if demand.shape != gen.shape or demand.ndim != 1:
        raise ValueError(f"series lengths differ: {demand.shape} vs {gen.shape}")
    if demand.size == 0:
        raise ValueError("residual curve needs at least one hour")
    values = np.sort(demand - gen)[::-1]
    return ResidualCurve(
        values=values,
        peak=float(values[0]),
        residual_demand=float(np.maximum(values, 0.0).sum()),
        excess_generation=float(np.maximum(-values, 0.0).sum()),
        hours_negative=int(np.count_nonzero(values < 0)),
        label=label,
    )


def _series(solution, key_prefix, horizon) -> np.ndarray:
    values = solution.values
    return np.array([values.get(format_name(key_prefix + (t,)), 0.0) for t in range(horizon)])


def _capacity(solution, tech, region) -> float:
    return solution.values.get(format_name(("K", tech.id, region)), 0.0) + tech.preexisting.get(region, 0.0)


def fluctuating_generation(model: EnergyModel, solution, region: str) -> np.ndarray:
    """Available (pre-curtailment) electricity from fluctuating technologies."""
    T, elec = model.horizon, model.electricity_carrier
    total = np.zeros(T)
    for tech in model.sorted_technologies():
        if not tech.fluctuating or elec not in tech.outputs or region not in model.tech_regions(tech):
            continue
        potential = tech.capacity_factor_series(region, T) * _capacity(solution, tech, region) * tech.output_per_capacity
        total = total + potential * tech.outputs[elec]
    return total


def _electric_consumers(model, region):
    elec = model.electricity_carrier
    return [t for t in model.sorted_technologies() if elec in t.inputs and region in model.tech_regions(t)]


def _must_run_profile(model, solution, tech, region) -> np.ndarray:
    """Hourly must-run output without any block shifting or storage."""
    (out,) = tech.outputs
    demand = model.carrier_map[out].demand_series(region, model.horizon)
    peak = demand.max()
    if peak <= 0:
        return np.zeros(model.horizon)
    return demand / peak * _capacity(solution, tech, region) * tech.output_per_capacity


def _carrier_profile(model, solution, carrier, region) -> np.ndarray:
    """Hourly demand profile of ``carrier`` as inflexible consumers would draw it."""
    T = model.horizon
    profile = model.carrier_map[carrier].demand_series(region, T).copy()
    for tech in model.sorted_technologies():
        if carrier not in tech.inputs or region not in model.tech_regions(tech):
            continue
        if tech.dispatch_mode == DispatchMode.MUST_RUN:
            use = _must_run_profile(model, solution, tech, region) / tech.efficiency
            profile = profile + use * tech.inputs[carrier]
    return profile


def _inflexible_use(model, solution, tech, region, actual) -> np.ndarray:
    """Counterfactual hourly electricity draw of one flexible technology."""
    T = model.horizon
    elec_share = tech.inputs[model.electricity_carrier]
    total = actual.sum()
    if tech.flex_class in ("heat", "district_heat"):
        if tech.dispatch_mode == DispatchMode.MUST_RUN:
            heat = _must_run_profile(model, solution, tech, region)
        else:
            out = max(tech.outputs, key=lambda c: tech.outputs[c])
            profile = _carrier_profile(model, solution, out, region)
            produced = _series(solution, ("G", tech.id, region), T).sum()
            weight = profile.sum()
            heat = produced * profile / weight if weight > 0 else np.full(T, produced / T)
        return heat / tech.efficiency * elec_share
    if tech.flex_class == "bev" and tech.availability_profile is not None:
        avail = np.asarray(tech.availability_profile, dtype=float)
        return total * avail / avail.sum() if avail.sum() > 0 else np.full(T, total / T)
    # power-to-x runs at constant load
    return np.full(T, total / T)


@dataclass
class DemandComponents:
    base: np.ndarray  # exogenous plus non-flexible consumption, GW
    actual: dict  # class -> hourly GW from the solution
    inflexible: dict  # class -> counterfactual hourly GW

    def total(self, replaced=()) -> np.ndarray:
        """Demand with ``replaced`` classes at their actual series.

        Summation always runs in the canonical class order so that the result
        does not depend on the order in which classes were replaced.
        """
        replaced = set(replaced)
        total = self.base.copy()
        for cls in FLEX_CLASSES:
            total = total + (self.actual[cls] if cls in replaced else self.inflexible[cls])
        return total


def demand_components(model: EnergyModel, solution, region: str) -> DemandComponents:
    T, elec = model.horizon, model.electricity_carrier
    carrier = model.carrier_map.get(elec)
    base = carrier.demand_series(region, T).copy() if carrier else np.zeros(T)
    actual = {cls: np.zeros(T) for cls in FLEX_CLASSES}
    inflexible = {cls: np.zeros(T) for cls in FLEX_CLASSES}
    for tech in _electric_consumers(model, region):
        use = _series(solution, ("U", tech.id, region), T) * tech.inputs[elec]
        if tech.flex_class in FLEX_CLASSES:
            actual[tech.flex_class] = actual[tech.flex_class] + use
            inflexible[tech.flex_class] = inflexible[tech.flex_class] + _inflexible_use(
                model, solution, tech, region, use
            )
        else:
            base = base + use
    return DemandComponents(base, actual, inflexible)


def actual_demand(model: EnergyModel, solution, region: str) -> np.ndarray:
    return demand_components(model, solution, region).total(FLEX_CLASSES)


def inflexible_demand(model: EnergyModel, solution) -> dict:
    """Counterfactual hourly electricity demand per region.

    Heating follows the hourly heat demand through each technology's
    efficiency, BEVs charge along their connection profile, power-to-x runs
    at constant load and every other demand is taken from the solution.
    """
    return {r: demand_components(model, solution, r).total(()) for r in sorted(model.regions)}


def attribute_flexibility(model: EnergyModel, solution, order=REFERENCE_ORDER, region: str = None) -> list:
    """Residual curves as flexible classes replace their inflexible demand one by one."""
    if region is None:
        if len(model.regions) != 1:
            raise ValueError("region is required for multi-region models")
        region = model.regions[0]
    order = [normalize_class(c) for c in order]
    if len(set(order)) != len(order):
        raise ValueError("flexibility classes repeat in the order")
    comps = demand_components(model, solution, region)
    gen = fluctuating_generation(model, solution, region)
    curves = [residual_curve(comps.total(()), gen, "inflexible")]
    for k in range(len(order)):
        label = "+" + CLASS_LABELS[order[k]]
        curves.append(residual_curve(comps.total(order[: k + 1]), gen, label))
    return curves


@dataclass
class SupplyDecomposition:
    hours: np.ndarray  # hour index, sorted by residual descending
    residual: np.ndarray
    net_imports: np.ndarray
    thermal: np.ndarray
    storage: np.ndarray
    curtailment: np.ndarray  # negative: curtailed fluctuating output

    def closure_error(self) -> float:
        total = self.net_imports + self.thermal + self.storage + self.curtailment
        return float(np.max(np.abs(total - self.residual), initial=0.0))

    def columns(self) -> dict:
        return {
            "hour": self.hours,
            "residual": self.residual,
            "net_imports": self.net_imports,
            "thermal": self.thermal,
            "storage": self.storage,
            "curtailment": self.curtailment,
        }


def net_position(model: EnergyModel, solution, region: str) -> np.ndarray:
    """Hourly electricity received from neighbours and external imports, net of exports."""
    T, elec = model.horizon, model.electricity_carrier
    net = np.zeros(T)
    for k in model.sorted_corridors():
        if k.carrier != elec:
            continue
        fwd = _series(solution, ("Efwd", k.id), T)
        bwd = _series(solution, ("Ebwd", k.id), T)
        eff = 1.0 - k.loss
        if k.to_region == region:
            net = net + eff * fwd - bwd
        elif k.from_region == region:
            net = net + eff * bwd - fwd
    for o in model.sorted_imports():
        if o.carrier == elec and o.region == region:
            net = net + _series(solution, ("I", o.carrier, o.region), T)
    return net


def supply_decomposition(model: EnergyModel, solution, region: str) -> SupplyDecomposition:
    """How imports, thermal plants, storage and curtailment meet the residual load."""
    T, elec = model.horizon, model.electricity_carrier
    if model.carrier_map[elec].resolution != 1:
        raise ValueError("supply decomposition needs an hourly electricity carrier")
    thermal = np.zeros(T)
    curtailed = np.zeros(T)
    for tech in model.sorted_technologies():
        if elec not in tech.outputs or region not in model.tech_regions(tech):
            continue
        gen = _series(solution, ("G", tech.id, region), T) * tech.outputs[elec]
        if tech.fluctuating:
            potential = (
                tech.capacity_factor_series(region, T)
                * _capacity(solution, tech, region)
                * tech.output_per_capacity
                * tech.outputs[elec]
            )
            curtailed = curtailed + (potential - gen)
        else:
            thermal = thermal + gen
    storage = np.zeros(T)
    for st in model.sorted_storages():
        if st.carrier != elec or region not in model.tech_regions(st):
            continue
        storage = storage + st.discharge_efficiency * _series(solution, ("Sout", st.id, region), T)
        storage = storage - _series(solution, ("Sin", st.id, region), T)
    residual = actual_demand(model, solution, region) - fluctuating_generation(model, solution, region)
    order = np.argsort(-residual, kind="stable")
    imports = net_position(model, solution, region)
    return SupplyDecomposition(
        hours=order,
        residual=residual[order],
        net_imports=imports[order],
        thermal=thermal[order],
        storage=storage[order],
        curtailment=-curtailed[order],
    )


def trade_summary(model: EnergyModel, solution, region: str) -> dict:
    """Hourly net-position sums next to gross annual trade, which differ by design."""
    T, elec = model.horizon, model.electricity_carrier
    net = net_position(model, solution, region)
    gross_in = gross_out = 0.0
    for k in model.sorted_corridors():
        if k.carrier != elec:
            continue
        fwd = _series(solution, ("Efwd", k.id), T).sum()
        bwd = _series(solution, ("Ebwd", k.id), T).sum()
        eff = 1.0 - k.loss
        if k.to_region == region:
            gross_in += eff * fwd
            gross_out += bwd
        elif k.from_region == region:
            gross_in += eff * bwd
            gross_out += fwd
    return {
        "net_import_hours_sum": float(np.maximum(net, 0.0).sum()),
        "net_export_hours_sum": float(np.maximum(-net, 0.0).sum()),
        "gross_imports": float(gross_in),
        "gross_exports": float(gross_out),
    }


@dataclass
class FlowAggregate:
    edges: dict = field(default_factory=dict)  # (source, target) -> annual GWh
    exchanges: list = field(default_factory=list)

    def add(self, source, target, quantity):
        self.edges[(source, target)] = self.edges.get((source, target), 0.0) + float(quantity)

    def inflow(self, node) -> float:
        return sum(q for (s, t), q in self.edges.items() if t == node)

    def outflow(self, node) -> float:
        return sum(q for (s, t), q in self.edges.items() if s == node)

    def ratio(self, node) -> float:
        return self.outflow(node) / self.inflow(node)

    def rows(self) -> list:
        return [(s, t, q) for (s, t), q in sorted(self.edges.items())]


def aggregate_flows(model: EnergyModel, solution) -> FlowAggregate:
    """Annual energy flows between carriers and aggregated technology nodes."""
    T = model.horizon
    flows = FlowAggregate()
    for tech in model.sorted_technologies():
        node = tech.node
        for r in model.tech_regions(tech):
            gen = _series(solution, ("G", tech.id, r), T).sum()
            stored = 0.0
            if tech.embedded_storage is not None:
                charged = _series(solution, ("ESin", tech.id, r), T).sum()
                released = _series(solution, ("ESout", tech.id, r), T).sum()
                stored = charged
                (out,) = tech.outputs
                flows.add(node, f"{node}:storage", charged)
                flows.add(f"{node}:storage", out, tech.embedded_storage.discharge_efficiency * released)
            for c, share in tech.inputs.items():
                flows.add(c, node, share * _series(solution, ("U", tech.id, r), T).sum())
            for c, share in tech.outputs.items():
                flows.add(node, c, share * (gen - stored))
    for st in model.sorted_storages():
        for r in model.tech_regions(st):
            flows.add(st.carrier, st.node, _series(solution, ("Sin", st.id, r), T).sum())
            flows.add(st.node, st.carrier, st.discharge_efficiency * _series(solution, ("Sout", st.id, r), T).sum())
    for k in model.sorted_corridors():
        fwd = _series(solution, ("Efwd", k.id), T).sum()
        bwd = _series(solution, ("Ebwd", k.id), T).sum()
        flows.exchanges.append({
            "corridor": k.id,
            "carrier": k.carrier,
            "from": k.from_region,
            "to": k.to_region,
            "forward": float(fwd),
            "backward": float(bwd),
            "net": float(fwd - bwd),
            "losses": float(k.loss * (fwd + bwd)),
        })
    for o in model.sorted_imports():
        flows.add(f"import:{o.carrier}", o.carrier, _series(solution, ("I", o.carrier, o.region), T).sum())
    return flows


# --- emitters ---------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_curves(path, curves) -> None:
    """Sorted residual series, one column per attribution step."""
    header = ["rank"] + [c.label for c in curves]
    n = len(curves[0].values)
    _write_rows(path, header, ([str(i)] + [_fmt(c.values[i]) for c in curves] for i in range(n)))


def write_decomposition(path, decomposition: SupplyDecomposition) -> None:
    cols = decomposition.columns()
    names = list(cols)
    n = len(decomposition.hours)
    _write_rows(path, names, ([_fmt(cols[k][i]) for k in names] for i in range(n)))


def write_flows(path, flows: FlowAggregate) -> None:
    _write_rows(path, ["source", "target", "quantity"], ([s, t, _fmt(q)] for s, t, q in flows.rows()))


def write_exchanges(path, flows: FlowAggregate) -> None:
    keys = ["corridor", "carrier", "from", "to", "forward", "backward", "net", "losses"]
    _write_rows(path, keys, ([e[k] if isinstance(e[k], str) else _fmt(e[k]) for k in keys] for e in flows.exchanges))


def write_metrics(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
