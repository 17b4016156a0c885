"""Domain model for multi-carrier capacity expansion.

Units are fixed across the package: power in GW, energy in GWh, costs in
Mil. EUR. Specific energy prices arrive in EUR/MWh and are converted by the
scenario loader (1 EUR/MWh = 0.001 Mil. EUR/GWh).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

Series = tuple  # tuple[float, ...], one value per hour

RESERVED_CHARS = set(",[]|:;")
FLEX_CLASSES = ("heat", "district_heat", "bev", "ptx")


class BalanceKind(str, Enum):
    NETWORK = "equality-network"
    INDUCED = "induced-demand"


class DispatchMode(str, Enum):
    MERIT_ORDER = "merit-order"
    MUST_RUN = "must-run"


class ModelError(ValueError):
    """Raised when a model cannot be turned into a linear program."""


@dataclass(frozen=True)
class Carrier:
    id: str
    resolution: int = 1
    balance_kind: BalanceKind = BalanceKind.NETWORK
    # region -> hourly demand (GW or service units per hour)
    demand: Mapping[str, Series] = field(default_factory=dict)

    def demand_series(self, region: str, horizon: int) -> np.ndarray:
        values = self.demand.get(region)
        if values is None:
            return np.zeros(horizon)
        return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class EmbeddedStorageSpec:
    energy_cost: float  # investment, Mil. EUR/GWh
    power_cost: float  # investment, Mil. EUR/GW
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    self_discharge: float = 1.0  # share of the level retained per hour
    max_duration: float = 24.0
    lifetime: float = 20.0


@dataclass(frozen=True)
class Technology:
    """A conversion or generation technology.

    ``capacity_basis`` says whether the capacity variable is measured on the
    input side (conversion plants, chargers) or on the output side (pure
    sources). When left empty it is derived from whether the technology has
    inputs.
    """

    id: str
    outputs: Mapping[str, float]
    inputs: Mapping[str, float] = field(default_factory=dict)
    efficiency: float = 1.0
    dispatch_mode: DispatchMode = DispatchMode.MERIT_ORDER
    capacity_basis: Optional[str] = None
    investment_cost: float = 0.0
    fixed_om: float = 0.0
    variable_cost: float = 0.0  # Mil. EUR/GWh of output
    lifetime: float = 20.0
    availability: float = 1.0  # scalar capacity factor
    capacity_factor: Mapping[str, Series] = field(default_factory=dict)
    capacity_bounds: Mapping[str, tuple] = field(default_factory=dict)
    preexisting: Mapping[str, float] = field(default_factory=dict)
    embedded_storage: Optional[EmbeddedStorageSpec] = None
    availability_profile: Optional[Series] = None
    regions: Optional[tuple] = None
    fluctuating: bool = False
    flex_class: Optional[str] = None
    group: Optional[str] = None

    @property
    def basis(self) -> str:
        if self.capacity_basis:
            return self.capacity_basis
        return "input" if self.inputs else "output"

    @property
    def output_per_capacity(self) -> float:
        """Output (GW) delivered per unit of capacity at full load."""
        return self.efficiency if self.basis == "input" else 1.0

    @property
    def input_per_capacity(self) -> float:
        return 1.0 if self.basis == "input" else 1.0 / self.efficiency

    @property
    def node(self) -> str:
        return self.group or self.id

    def capacity_factor_series(self, region: str, horizon: int) -> np.ndarray:
        values = self.capacity_factor.get(region)
        if values is None:
            return np.full(horizon, float(self.availability))
        return np.asarray(values, dtype=float)

    def bounds(self, region: str) -> tuple:
        lo, hi = self.capacity_bounds.get(region, (0.0, math.inf))
        return float(lo), float(hi)


@dataclass(frozen=True)
class StorageTechnology:
    id: str
    carrier: str
    power_investment: float = 0.0
    energy_investment: float = 0.0
    power_om: float = 0.0
    energy_om: float = 0.0
    lifetime: float = 20.0
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    self_discharge: float = 1.0  # share of the level retained per hour
    energy_to_power: tuple = (0.0, math.inf)
    power_bounds: Mapping[str, tuple] = field(default_factory=dict)
    # region -> (power GW, energy GWh)
    preexisting: Mapping[str, tuple] = field(default_factory=dict)
    inflow: Mapping[str, Series] = field(default_factory=dict)
    regions: Optional[tuple] = None
    group: Optional[str] = None

    @property
    def node(self) -> str:
        return self.group or self.id

    def preexisting_in(self, region: str) -> tuple:
        p, e = self.preexisting.get(region, (0.0, 0.0))
        return float(p), float(e)

    def bounds(self, region: str) -> tuple:
        lo, hi = self.power_bounds.get(region, (0.0, math.inf))
        return float(lo), float(hi)


@dataclass(frozen=True)
class ExchangeCorridor:
    id: str
    from_region: str
    to_region: str
    carrier: str
    distance_km: float = 0.0
    loss_per_1000km: float = 0.0
    preexisting_capacity: float = 0.0
    # (segment capacity GW, investment Mil. EUR/GW), cheapest first
    segments: tuple = ()
    expansion_limit: Optional[float] = None
    lifetime: float = 40.0
    fixed_om: float = 0.0

    @property
    def loss(self) -> float:
        return self.loss_per_1000km * self.distance_km / 1000.0

    @property
    def limit(self) -> float:
        if self.expansion_limit is None:
            return float(sum(cap for cap, _ in self.segments))
        return float(self.expansion_limit)


@dataclass(frozen=True)
class ImportOption:
    carrier: str
    region: str
    price: float  # Mil. EUR/GWh
    limit: float = math.inf  # GWh over the horizon

    @property
    def id(self) -> str:
        return f"{self.carrier}@{self.region}"


@dataclass(frozen=True)
class TimeHierarchy:
    horizon_hours: int
    groupings: Mapping[int, tuple]

    def blocks(self, size: int) -> tuple:
        return self.groupings[size]


@dataclass(frozen=True)
class EnergyModel:
    horizon: int
    regions: tuple
    carriers: tuple = ()
    technologies: tuple = ()
    storages: tuple = ()
    corridors: tuple = ()
    imports: tuple = ()
    interest_rate: float = 0.05
    charge_preexisting_om: bool = True
    electricity_carrier: str = "electricity"
    name: str = "scenario"
    solver_options: Mapping[str, float] = field(default_factory=dict)

    @cached_property
    def carrier_map(self) -> dict:
        return {c.id: c for c in self.carriers}

    @cached_property
    def technology_map(self) -> dict:
        return {t.id: t for t in self.technologies}

    @cached_property
    def storage_map(self) -> dict:
        return {s.id: s for s in self.storages}

    def tech_regions(self, tech) -> tuple:
        regions = self.regions if tech.regions is None else tech.regions
        return tuple(sorted(regions))

    def sorted_technologies(self) -> list:
        return sorted(self.technologies, key=lambda t: t.id)

    def sorted_storages(self) -> list:
        return sorted(self.storages, key=lambda s: s.id)

    def sorted_corridors(self) -> list:
        return sorted(self.corridors, key=lambda c: c.id)

    def sorted_imports(self) -> list:
        return sorted(self.imports, key=lambda o: (o.carrier, o.region))

    def must_run_members(self, carrier: str, region: str) -> list:
        return [
            t
            for t in self.sorted_technologies()
            if t.dispatch_mode == DispatchMode.MUST_RUN
            and carrier in t.outputs
            and region in self.tech_regions(t)
        ]

    def hierarchy(self) -> TimeHierarchy:
        sizes = {1} | {c.resolution for c in self.carriers}
        return build_time_hierarchy(self.horizon, sizes)


def annuitize(investment: float, lifetime: float, interest: float) -> float:
    """Annual payment recovering ``investment`` over ``lifetime`` years."""
    if lifetime < 1:
        raise ValueError(f"lifetime must be at least one year, got {lifetime}")
    if investment < 0 or interest < 0:
        raise ValueError("investment and interest must be non-negative")
    if interest == 0:
        return investment / lifetime
    # expm1/log1p keep the factor accurate for rates close to zero
    return investment * interest / -math.expm1(-lifetime * math.log1p(interest))


def build_time_hierarchy(horizon: int, sizes) -> TimeHierarchy:
    """Partition ``[0, horizon)`` into aligned blocks for every size."""
    if horizon <= 0:
        raise ModelError("empty horizon")
    sizes = sorted(set(int(s) for s in sizes))
    for s in sizes:
        if s <= 0 or horizon % s:
            raise ModelError(f"resolution {s} does not divide horizon {horizon}")
    for small, large in zip(sizes, sizes[1:]):
        if large % small:
            raise ModelError(f"resolutions {small} and {large} are not nested")
    groupings = {
        s: tuple((start, start + s) for start in range(0, horizon, s)) for s in sizes
    }
    return TimeHierarchy(horizon, groupings)


@dataclass(frozen=True)
class Diagnostic:
    entity: str
    severity: str  # "error" or "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.entity}: {self.message}"

    def to_dict(self) -> dict:
        return {"entity": self.entity, "severity": self.severity, "message": self.message}


def has_errors(diagnostics) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def _in_unit_interval(values) -> bool:
    arr = np.asarray(values, dtype=float)
    return bool(np.all((arr >= 0.0) & (arr <= 1.0)))


def validate_model(model: EnergyModel) -> list:
    """Check every structural invariant and return diagnostics."""
    diags = []

    def error(entity, message):
        diags.append(Diagnostic(entity, "error", message))

    def warning(entity, message):
        diags.append(Diagnostic(entity, "warning", message))

    T = model.horizon
    if T <= 0:
        error("model", "empty horizon")
        return diags

    ids = [("region", r) for r in model.regions]
    ids += [("carrier", c.id) for c in model.carriers]
    ids += [("technology", t.id) for t in model.technologies]
    ids += [("storage", s.id) for s in model.storages]
    ids += [("corridor", c.id) for c in model.corridors]
    seen = set()
    for kind, ident in ids:
        if not ident or RESERVED_CHARS & set(str(ident)):
            error(ident, f"{kind} id contains reserved characters or is empty")
        if (kind, ident) in seen:
            error(ident, f"duplicate {kind} id")
        seen.add((kind, ident))

    regions = set(model.regions)
    carriers = model.carrier_map

    if not model.technologies:
        warning("model", "no technologies defined")

    resolutions = sorted({c.resolution for c in model.carriers} | {1})
    for c in model.carriers:
        if c.resolution <= 0 or T % c.resolution:
            error(c.id, f"resolution {c.resolution} does not divide horizon {T}")
        for region, series in c.demand.items():
            if region not in regions:
                error(c.id, f"demand for unknown region {region!r}")
            if len(series) != T:
                error(c.id, f"demand series for {region} has length {len(series)}, expected {T}")
    for small, large in zip(resolutions, resolutions[1:]):
        if large % small:
            error("model", f"resolutions {small} and {large} are not nested")

    consumed = {}
    for t in model.technologies:
        for c in t.inputs:
            consumed.setdefault(c, []).append(t.id)

    for t in model.technologies:
        if t.efficiency <= 0:
            error(t.id, "efficiency must be positive")
        if not t.outputs:
            error(t.id, "technology has no outputs")
        for side, shares in (("input", t.inputs), ("output", t.outputs)):
            for c, share in shares.items():
                if c not in carriers:
                    error(t.id, f"unknown {side} carrier {c!r}")
                if share <= 0:
                    error(t.id, f"{side} share for {c} must be positive")
            if shares and abs(sum(shares.values()) - 1.0) > 1e-9:
                error(t.id, f"{side} shares sum to {sum(shares.values())}, expected 1")
        if t.basis not in ("input", "output"):
            error(t.id, f"unknown capacity basis {t.basis!r}")
        if t.basis == "input" and not t.inputs:
            error(t.id, "input capacity basis requires inputs")
        if t.lifetime < 1:
            error(t.id, "lifetime must be at least one year")
        if min(t.investment_cost, t.fixed_om, t.variable_cost) < 0:
            error(t.id, "costs must be non-negative")
        if not 0.0 <= t.availability <= 1.0:
            error(t.id, "availability outside [0, 1]")
        if t.regions is not None:
            for r in t.regions:
                if r not in regions:
                    error(t.id, f"unknown region {r!r}")
        for r, series in t.capacity_factor.items():
            if r not in regions:
                error(t.id, f"capacity factor for unknown region {r!r}")
            if len(series) != T:
                error(t.id, f"capacity factor series for {r} has length {len(series)}, expected {T}")
            if not _in_unit_interval(series):
                error(t.id, f"capacity factor for {r} outside [0, 1]")
        if t.availability_profile is not None:
            if len(t.availability_profile) != T:
                error(t.id, f"availability profile has length {len(t.availability_profile)}, expected {T}")
            if not _in_unit_interval(t.availability_profile):
                error(t.id, "availability profile outside [0, 1]")
            if not t.inputs:
                error(t.id, "availability profile requires an input carrier")
        for r in set(t.capacity_bounds) | set(t.preexisting):
            lo, hi = t.bounds(r)
            pre = t.preexisting.get(r, 0.0)
            if lo > hi:
                error(t.id, f"capacity bounds in {r} have min > max")
            if pre < 0:
                error(t.id, f"negative preexisting capacity in {r}")
            if pre > hi:
                error(t.id, f"preexisting capacity in {r} exceeds the upper bound")
        if t.flex_class is not None and t.flex_class not in FLEX_CLASSES:
            error(t.id, f"unknown flexibility class {t.flex_class!r}")

        if t.dispatch_mode == DispatchMode.MUST_RUN:
            if len(t.outputs) != 1:
                error(t.id, "must-run technologies output exactly one carrier")
            else:
                (out,) = t.outputs
                carrier = carriers.get(out)
                if carrier is not None and not carrier.demand:
                    error(t.id, f"must-run output {out!r} carries no demand")
        if t.embedded_storage is not None:
            es = t.embedded_storage
            if t.dispatch_mode != DispatchMode.MUST_RUN:
                error(t.id, "embedded storage requires the must-run dispatch mode")
            if t.flex_class == "district_heat":
                error(t.id, "district heat substations cannot embed storage")
            for name in ("charge_efficiency", "discharge_efficiency", "self_discharge"):
                value = getattr(es, name)
                if not 0.0 < value <= 1.0:
                    error(t.id, f"embedded storage {name} outside (0, 1]")
            if es.max_duration <= 0:
                error(t.id, "embedded storage max_duration must be positive")
            if es.lifetime < 1:
                error(t.id, "embedded storage lifetime must be at least one year")

    for s in model.storages:
        if s.carrier not in carriers:
            error(s.id, f"unknown carrier {s.carrier!r}")
        for name in ("charge_efficiency", "discharge_efficiency", "self_discharge"):
            value = getattr(s, name)
            if not 0.0 < value <= 1.0:
                error(s.id, f"{name} outside (0, 1]")
        lo, hi = s.energy_to_power
        if lo > hi or lo < 0:
            error(s.id, "energy-to-power bounds must satisfy 0 <= min <= max")
        if s.lifetime < 1:
            error(s.id, "lifetime must be at least one year")
        if s.regions is not None:
            for r in s.regions:
                if r not in regions:
                    error(s.id, f"unknown region {r!r}")
        for r, series in s.inflow.items():
            if r not in regions:
                error(s.id, f"inflow for unknown region {r!r}")
            if len(series) != T:
                error(s.id, f"inflow series for {r} has length {len(series)}, expected {T}")
            if min(series, default=0.0) < 0:
                error(s.id, f"negative inflow in {r}")
        for r in set(s.power_bounds) | set(s.preexisting):
            lo_p, hi_p = s.bounds(r)
            pre_p, pre_e = s.preexisting_in(r)
            if lo_p > hi_p:
                error(s.id, f"power bounds in {r} have min > max")
            if pre_p > hi_p:
                error(s.id, f"preexisting power in {r} exceeds the upper bound")
            if pre_p < 0 or pre_e < 0:
                error(s.id, f"negative preexisting capacity in {r}")

    pairs = set()
    for k in model.corridors:
        if k.from_region not in regions or k.to_region not in regions:
            error(k.id, "corridor references an unknown region")
        if k.from_region == k.to_region:
            error(k.id, "corridor connects a region to itself")
        pair = (frozenset((k.from_region, k.to_region)), k.carrier)
        if pair in pairs:
            error(k.id, "duplicate corridor for region pair and carrier")
        pairs.add(pair)
        carrier = carriers.get(k.carrier)
        if carrier is None:
            error(k.id, f"unknown carrier {k.carrier!r}")
        elif carrier.balance_kind != BalanceKind.NETWORK:
            error(k.id, "corridors require an equality-network carrier")
        if not 0.0 <= k.loss_per_1000km < 1.0:
            error(k.id, "loss per 1000 km outside [0, 1)")
        if k.distance_km < 0:
            error(k.id, "negative distance")
        if k.loss >= 1.0:
            error(k.id, "corridor loses all energy over its length")
        if k.preexisting_capacity < 0:
            error(k.id, "negative preexisting capacity")
        costs = [cost for _, cost in k.segments]
        if any(b < a for a, b in zip(costs, costs[1:])):
            error(k.id, "non-monotone expansion cost")
        if any(cap < 0 or cost < 0 for cap, cost in k.segments):
            error(k.id, "negative segment capacity or cost")
        total = sum(cap for cap, _ in k.segments)
        if k.expansion_limit is not None and abs(total - k.expansion_limit) > 1e-9:
            error(k.id, f"segment capacities sum to {total}, expansion limit is {k.expansion_limit}")
        if k.lifetime < 1:
            error(k.id, "lifetime must be at least one year")

    for o in model.imports:
        if o.carrier not in carriers:
            error(o.id, f"unknown carrier {o.carrier!r}")
        if o.region not in regions:
            error(o.id, f"unknown region {o.region!r}")
        if o.price < 0 or o.limit < 0:
            error(o.id, "import price and limit must be non-negative")

    _check_must_run(model, error, warning)
    _check_induced_cycles(model, error)
    _check_supply(model, consumed, warning)
    _check_bev_days(model, warning)
    return diags


def _check_must_run(model, error, warning):
    carriers = model.carrier_map
    stored = {s.carrier for s in model.storages}
    exchanged = {k.carrier for k in model.corridors}
    imported = {o.carrier for o in model.imports}
    for c in model.carriers:
        for r in model.regions:
            members = model.must_run_members(c.id, r)
            if not members:
                continue
            entity = f"{c.id}@{r}"
            others = [
                t.id
                for t in model.technologies
                if c.id in t.outputs
                and t.dispatch_mode == DispatchMode.MERIT_ORDER
                and r in model.tech_regions(t)
            ]
            if others:
                error(entity, f"must-run carrier also served by merit-order technologies {others}")
            if np.max(c.demand_series(r, model.horizon), initial=0.0) <= 0:
                error(entity, "must-run group has zero peak demand")
    for t in model.technologies:
        if t.dispatch_mode != DispatchMode.MUST_RUN or len(t.outputs) != 1:
            continue
        (out,) = t.outputs
        if out not in carriers:
            continue
        if any(out in u.inputs for u in model.technologies):
            error(t.id, f"must-run output {out!r} is consumed by other technologies")
        if out in stored or out in exchanged or out in imported:
            error(t.id, f"must-run output {out!r} is stored, exchanged or imported")


def _check_induced_cycles(model, error):
    graph = {}
    for t in model.technologies:
        for cin in t.inputs:
            graph.setdefault(cin, set()).update(t.outputs)
    induced = {c.id for c in model.carriers if c.balance_kind == BalanceKind.INDUCED}
    state = {}

    def visit(node, stack):
        state[node] = 1
        stack.append(node)
        for nxt in sorted(graph.get(node, ())):
            if state.get(nxt) == 1:
                cycle = stack[stack.index(nxt):]
                if induced & set(cycle):
                    error(nxt, "induced-demand carrier depends on itself: " + " -> ".join(cycle + [nxt]))
            elif state.get(nxt) is None:
                visit(nxt, stack)
        stack.pop()
        state[node] = 2

    for node in sorted(graph):
        if state.get(node) is None:
            visit(node, [])


def _check_supply(model, consumed, warning):
    producers = set()
    for t in model.technologies:
        producers.update(t.outputs)
    producers.update(s.carrier for s in model.storages if s.inflow)
    producers.update(o.carrier for o in model.imports)
    producers.update(k.carrier for k in model.corridors)
    for c in model.carriers:
        has_demand = any(np.any(np.asarray(v) != 0) for v in c.demand.values())
        if (has_demand or c.id in consumed) and c.id not in producers:
            warning(c.id, "carrier has demand but no producer; the model is infeasible")


def _check_bev_days(model, warning):
    T = model.horizon
    for t in model.technologies:
        if t.availability_profile is None or t.flex_class != "bev":
            continue
        out = next(iter(t.outputs))
        carrier = model.carrier_map.get(out)
        if carrier is None or carrier.resolution != 24 or T % 24:
            warning(t.id, "BEV charging expects a daily-resolution transport carrier")
            continue
        avail = np.asarray(t.availability_profile, dtype=float)
        for r in model.tech_regions(t):
            _, hi = t.bounds(r)
            if not math.isfinite(hi):
                continue
            members = [
                u for u in model.technologies
                if out in u.outputs and r in model.tech_regions(u)
            ]
            if len(members) != 1:
                continue
            demand = carrier.demand_series(r, T)
            k_in = hi * t.input_per_capacity
            for day in range(T // 24):
                sl = slice(24 * day, 24 * day + 24)
                deliverable = avail[sl].sum() * k_in * t.efficiency * t.outputs[out]
                if demand[sl].sum() > deliverable + 1e-9:
                    warning(
                        f"{t.id}@{r}",
                        f"day {day}: driving consumption exceeds chargeable energy at maximum capacity",
                    )
