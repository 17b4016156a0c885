"""Small model builders shared by the test modules."""

import functools
from pathlib import Path

from flexplan.builder import build_lp
from flexplan.model import (
    BalanceKind,
    Carrier,
    DispatchMode,
    EmbeddedStorageSpec,
    EnergyModel,
    ExchangeCorridor,
    StorageTechnology,
    Technology,
)
from flexplan.solver import solve

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
ELEC = "electricity"


def elec(demand, regions=("r",), resolution=1):
    if not isinstance(demand, dict):
        demand = {r: tuple(demand) for r in regions}
    return Carrier(ELEC, resolution, BalanceKind.NETWORK, demand)


def plant(tech_id="plant", inv=7.0, var=0.0, alpha=None, **kw):
    """Pure electricity source; ``inv`` is the capacity coefficient at i=0, L=1."""
    if alpha is not None:
        kw["capacity_factor"] = {r: tuple(a) for r, a in alpha.items()}
    return Technology(tech_id, {ELEC: 1.0}, investment_cost=inv, variable_cost=var, lifetime=1, **kw)


def model(horizon, carriers, technologies=(), storages=(), corridors=(), imports=(), regions=("r",), **kw):
    kw.setdefault("interest_rate", 0.0)
    return EnergyModel(horizon, tuple(regions), tuple(carriers), tuple(technologies), tuple(storages),
                       tuple(corridors), tuple(imports), **kw)


def solved(m):
    lp = build_lp(m)
    return lp, solve(lp)


@functools.lru_cache(maxsize=None)
def solved_fixture(name):
    """Load, build and solve a shipped scenario once per test session."""
    from flexplan.scenario import load_scenario

    m = load_scenario(SCENARIOS / name)
    lp, sol = solved(m)
    return m, lp, sol


def val(solution, *key):
    from flexplan.lp import format_name

    return solution.values[format_name(key)]


def mustrun_pair(demand, costs=(2.0, 3.0), resolution=1, embedded=None):
    """Electricity plus a heat carrier served by two must-run heaters."""
    T = len(demand)
    heat = Carrier("heat", resolution, BalanceKind.INDUCED, {"r": tuple(demand)})
    techs = [plant("grid_supply", inv=1.0, var=0.05)]
    for n, cost in enumerate(costs):
        techs.append(Technology(
            f"heater{n}", {"heat": 1.0}, {ELEC: 1.0}, 1.0, DispatchMode.MUST_RUN,
            investment_cost=cost, lifetime=1, embedded_storage=embedded if n == 0 else None,
        ))
    return model(T, [elec([0.0] * T), heat], techs)


# single-region instance shared by the brute-force oracle and the LP side
TINY = dict(
    demand=[2, 2, 2, 2.5, 3, 3, 3, 3, 2.5, 2, 2, 2],
    solar_cf=[0, 0, 0.1, 0.4, 0.7, 0.9, 0.9, 0.7, 0.4, 0.1, 0, 0],
    solar_fixed=0.8, gas_fixed=0.2, gas_var=0.25,
    storage_power_fixed=0.05, storage_energy_fixed=0.03, ratio=4.0,
    charge_eff=0.9, discharge_eff=0.95, retention=0.98,
)


def tiny_model(caps=None):
    """LP-side twin of ``oracles.TinySystem(**TINY)``; ``caps`` pins (solar, gas, storage power)."""
    p = TINY
    pin = (lambda k: {"r": (caps[k], caps[k])}) if caps else (lambda k: {})
    techs = [
        plant("solar", inv=p["solar_fixed"], alpha={"r": p["solar_cf"]}, capacity_bounds=pin(0)),
        plant("gas", inv=p["gas_fixed"], var=p["gas_var"], capacity_bounds=pin(1)),
    ]
    st = storage(
        "battery", power_investment=p["storage_power_fixed"], energy_investment=p["storage_energy_fixed"],
        charge_efficiency=p["charge_eff"], discharge_efficiency=p["discharge_eff"],
        self_discharge=p["retention"], energy_to_power=(p["ratio"], p["ratio"]), power_bounds=pin(2),
    )
    return model(len(p["demand"]), [elec(p["demand"])], techs, [st])


def storage(sid="st", **kw):
    kw.setdefault("lifetime", 1)
    return StorageTechnology(sid, ELEC, **kw)


def corridor(cid="k", a="a", b="b", **kw):
    return ExchangeCorridor(cid, a, b, ELEC, **kw)


__all__ = [
    "BalanceKind", "Carrier", "DispatchMode", "EmbeddedStorageSpec", "EnergyModel", "ExchangeCorridor",
    "StorageTechnology", "Technology", "ELEC", "ROOT", "SCENARIOS", "corridor", "elec", "model",
    "mustrun_pair", "plant", "solved", "storage", "val", "TINY", "tiny_model", "solved_fixture",
]


# filled by the acceptance suite, printed by conftest at the end of the session
CRITERION_LINES = []
