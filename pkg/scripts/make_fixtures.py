"""Regenerate the shipped scenario fixtures under ``scenarios/``.

Profiles are synthetic and seeded, so rerunning produces identical files.
Fixed costs of week-long fixtures are scaled by horizon/8760 so that one
week of operation faces one week's share of the annual capital cost.
"""

import csv
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from flexplan.model import (  # noqa: E402
    BalanceKind,
    Carrier,
    DispatchMode,
    EmbeddedStorageSpec,
    EnergyModel,
    ExchangeCorridor,
    ImportOption,
    StorageTechnology,
    Technology,
)
from flexplan.scenario import eur_per_mwh_to_model, write_scenario  # noqa: E402

CATALOG = ROOT / "scenarios" / "catalog"
NTC_SEGMENTS = ((2.0, 200.0), (2.0, 900.0), (3.5, 3700.0))
HVAC_LOSS = 0.05
BEV_PROFILE_SCALE = 0.25


def _catalog(name, key):
    with open(CATALOG / name, encoding="utf-8") as fh:
        return {row[key]: row for row in csv.DictReader(fh)}


def _tuple(arr):
    return tuple(float(round(x, 6)) for x in arr)


def solar_profile(hours, rng, peak=0.8):
    h = np.arange(hours) % 24
    days = hours // 24
    cloud = np.repeat(0.5 + 0.5 * rng.random(days), 24)
    return np.clip(np.sin(np.pi * (h - 6) / 12), 0, None) * peak * cloud


def wind_profile(hours, rng, mean=0.45):
    x = np.empty(hours)
    level = mean
    for t in range(hours):
        level = 0.9 * level + 0.1 * mean + 0.12 * rng.standard_normal()
        x[t] = level
    return np.clip(x, 0.02, 0.95)


def load_shape(hours, amplitude=0.2, phase=18):
    h = np.arange(hours) % 24
    return 1.0 + amplitude * np.cos(2 * np.pi * (h - phase) / 24)


def heat_shape(hours, rng):
    h = np.arange(hours) % 24
    morning = np.exp(-0.5 * ((h - 7) / 2.0) ** 2)
    evening = np.exp(-0.5 * ((h - 19) / 2.5) ** 2)
    days = np.repeat(0.8 + 0.4 * rng.random(hours // 24), 24)
    return (0.6 + morning + 0.8 * evening) * days


def connection_profile(hours):
    """Share of vehicles plugged in: high overnight, low during the day."""
    h = np.arange(hours) % 24
    return np.where((h >= 8) & (h < 17), 0.35, 1.0)


def de_nl_minimal() -> EnergyModel:
    """Two market zones joined by a segmented NTC, built from catalog data."""
    T = 48
    rng = np.random.default_rng(2021)
    gen = _catalog("generation.csv", "technology")
    stor = _catalog("storage.csv", "technology")
    energy = _catalog("final_demand_energy.csv", "country")
    transport = _catalog("final_demand_transport.csv", "country")
    zones = {"DE": "Germany", "NL": "Netherlands"}
    scale = T / 8760

    def fixed(row):
        return float(row["investment_cost"]) * scale, float(row["fixed_om"]) * scale

    elec = {z: _tuple(float(energy[c]["electricity_twh"]) * 1000 / 8760 * load_shape(T)) for z, c in zones.items()}
    # private road passenger transport, with a fifth served by BEVs (Gpkm per hour)
    pkm = {z: _tuple(np.full(T, float(transport[c]["passenger_road_private_gpkm"]) * 0.2 / 8760)) for z, c in zones.items()}
    carriers = (
        Carrier("electricity", 1, BalanceKind.NETWORK, elec),
        Carrier("gas", 1, BalanceKind.NETWORK),
        Carrier("transport_private", 24, BalanceKind.INDUCED, pkm),
    )
    ocgt = gen["OC gas turbine"]
    pv = gen["PV, openspace"]
    wind = gen["wind, onshore"]
    inv, om = fixed(ocgt)
    techs = [
        Technology(
            "ocgt", {"electricity": 1.0}, {"gas": 1.0}, float(ocgt["efficiency"]),
            investment_cost=inv, fixed_om=om, lifetime=float(ocgt["lifetime"]),
            availability=float(ocgt["availability"]), group="thermal",
        ),
    ]
    inv, om = fixed(pv)
    techs.append(Technology(
        "pv", {"electricity": 1.0}, investment_cost=inv, fixed_om=om, lifetime=float(pv["lifetime"]),
        capacity_factor={z: _tuple(solar_profile(T, rng)) for z in zones}, fluctuating=True, group="solar",
    ))
    inv, om = fixed(wind)
    techs.append(Technology(
        "wind", {"electricity": 1.0}, investment_cost=inv, fixed_om=om, lifetime=float(wind["lifetime"]),
        capacity_factor={z: _tuple(wind_profile(T, rng)) for z in zones}, fluctuating=True, group="wind",
    ))
    # 5 kW chargers, about 5 pkm per kWh
    techs.append(Technology(
        "BEV-private", {"transport_private": 1.0}, {"electricity": 1.0}, 0.005,
        investment_cost=20.0 * scale, lifetime=15.0,
        availability_profile=_tuple(connection_profile(T) * BEV_PROFILE_SCALE),
        flex_class="bev", group="BEV",
    ))
    li = stor["lithium battery"]
    cycle = float(li["cycle_efficiency"])
    battery = StorageTechnology(
        "lithium_battery", "electricity",
        power_investment=float(li["power_investment"]) * scale,
        energy_investment=float(li["energy_investment"]) * scale,
        power_om=float(li["power_om"]) * scale, energy_om=float(li["energy_om"]) * scale,
        lifetime=float(li["lifetime"]),
        charge_efficiency=math.sqrt(cycle), discharge_efficiency=math.sqrt(cycle),
        energy_to_power=(0.1, 10.0),
    )
    corridor = ExchangeCorridor(
        "DE-NL", "DE", "NL", "electricity", distance_km=420.0, loss_per_1000km=HVAC_LOSS,
        preexisting_capacity=5.0, segments=tuple((c, u * scale) for c, u in NTC_SEGMENTS), expansion_limit=7.5,
    )
    imports = tuple(ImportOption("gas", z, eur_per_mwh_to_model("30")) for z in zones)
    return EnergyModel(
        T, tuple(zones), carriers, tuple(techs), (battery,), (corridor,), imports,
        interest_rate=0.05, name="de-nl-minimal",
    )


def flex_week() -> EnergyModel:
    """Windy exporter and sunny importer with every flexibility class present."""
    T = 168
    rng = np.random.default_rng(42)
    scale = T / 8760
    regions = ("north", "south")
    elec = {"north": _tuple(6.0 * load_shape(T)), "south": _tuple(14.0 * load_shape(T))}
    heat = {"north": _tuple(2.0 * heat_shape(T, rng)), "south": _tuple(4.0 * heat_shape(T, rng))}
    dh = {"north": _tuple(1.5 * heat_shape(T, rng)), "south": _tuple(3.0 * heat_shape(T, rng))}
    h2 = {"north": _tuple(np.full(T, 6.0)), "south": _tuple(np.full(T, 12.0))}
    mobility = {"north": _tuple(np.full(T, 1.0)), "south": _tuple(np.full(T, 2.5))}
    carriers = (
        Carrier("electricity", 1, BalanceKind.NETWORK, elec),
        Carrier("gas", 1, BalanceKind.NETWORK),
        Carrier("heat", 4, BalanceKind.INDUCED, heat),
        Carrier("district_heat", 1, BalanceKind.INDUCED, dh),
        Carrier("hydrogen", 168, BalanceKind.INDUCED, h2),
        Carrier("transport", 24, BalanceKind.INDUCED, mobility),
    )
    wind_cf = {"north": _tuple(wind_profile(T, rng, 0.5)), "south": _tuple(wind_profile(T, rng, 0.25))}
    pv_cf = {"north": _tuple(solar_profile(T, rng, 0.5)), "south": _tuple(solar_profile(T, rng, 0.8))}
    techs = (
        Technology("wind", {"electricity": 1.0}, investment_cost=963.1 * scale, fixed_om=11.3 * scale,
                   lifetime=30.0, capacity_factor=wind_cf, fluctuating=True),
        Technology("pv", {"electricity": 1.0}, investment_cost=271.2 * scale, fixed_om=5.4 * scale,
                   lifetime=18.0, capacity_factor=pv_cf, fluctuating=True),
        Technology("ccgt", {"electricity": 1.0}, {"gas": 1.0}, 0.583, investment_cost=480.7 * scale,
                   fixed_om=15.9 * scale, lifetime=25.0, availability=0.93, group="thermal"),
        Technology("ocgt", {"electricity": 1.0}, {"gas": 1.0}, 0.415, investment_cost=177.8 * scale,
                   fixed_om=3.2 * scale, lifetime=25.0, availability=0.972, group="thermal"),
        Technology("heat_pump", {"heat": 1.0}, {"electricity": 1.0}, 3.0, DispatchMode.MUST_RUN,
                   investment_cost=600.0 * scale, lifetime=20.0, flex_class="heat",
                   embedded_storage=EmbeddedStorageSpec(energy_cost=20.0 * scale, power_cost=10.0 * scale,
                                                        charge_efficiency=0.95, discharge_efficiency=0.95,
                                                        self_discharge=0.99, max_duration=12.0)),
        Technology("dh_heat_pump", {"district_heat": 1.0}, {"electricity": 1.0}, 2.5,
                   investment_cost=500.0 * scale, lifetime=25.0, flex_class="district_heat"),
        Technology("dh_boiler", {"district_heat": 1.0}, {"gas": 1.0}, 0.9,
                   investment_cost=60.0 * scale, lifetime=25.0),
        Technology("electrolyzer", {"hydrogen": 1.0}, {"electricity": 1.0}, 0.7,
                   investment_cost=400.0 * scale, lifetime=20.0, flex_class="ptx"),
        Technology("bev", {"transport": 1.0}, {"electricity": 1.0}, 1.0, investment_cost=20.0 * scale,
                   lifetime=15.0, availability_profile=_tuple(connection_profile(T) * BEV_PROFILE_SCALE),
                   flex_class="bev", group="BEV"),
    )
    storages = (
        StorageTechnology("battery", "electricity", power_investment=80.9 * scale, energy_investment=199.6 * scale,
                          power_om=1.21 * scale, energy_om=2.99 * scale, lifetime=18.0,
                          charge_efficiency=math.sqrt(0.89), discharge_efficiency=math.sqrt(0.89),
                          energy_to_power=(0.1, 10.0)),
        StorageTechnology("dh_tank", "district_heat", power_investment=5.0 * scale, energy_investment=3.0 * scale,
                          lifetime=30.0, self_discharge=0.995),
    )
    corridor = ExchangeCorridor(
        "north-south", "north", "south", "electricity", distance_km=600.0, loss_per_1000km=HVAC_LOSS,
        preexisting_capacity=2.0, segments=((4.0, 200.0 * scale), (4.0, 900.0 * scale), (6.0, 3700.0 * scale)),
    )
    imports = tuple(ImportOption("gas", r, eur_per_mwh_to_model("35")) for r in regions)
    return EnergyModel(T, regions, carriers, techs, storages, (corridor,), imports, name="flex-week")


FIXTURES = {"de-nl-minimal": de_nl_minimal, "flex-week": flex_week}


def _store_raw_profile(path, tech_id, hours):
    """Keep the unscaled connection profile on disk with a 0.25 scale column."""
    series = path / "series" / f"availability_{tech_id}.csv"
    with open(series, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "value"])
        for t, a in enumerate(connection_profile(hours)):
            w.writerow([t, repr(float(a))])
    table = path / "technologies.csv"
    with open(table, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    col = rows[0].index("availability_scale")
    for row in rows[1:]:
        if row[0] == tech_id:
            row[col] = repr(BEV_PROFILE_SCALE)
    with open(table, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def main(argv=None):
    names = argv or sorted(FIXTURES)
    for name in names:
        model = FIXTURES[name]()
        path = write_scenario(model, ROOT / "scenarios" / name)
        for tech in model.technologies:
            if tech.availability_profile is not None:
                _store_raw_profile(path, tech.id, model.horizon)
        print(path)


if __name__ == "__main__":
    main(sys.argv[1:])
