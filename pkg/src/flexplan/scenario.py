"""Scenario directories and solution artifacts.

A scenario directory holds ``settings.yaml``, entity tables as CSV and wide
time-series CSVs under ``series/``. See ``docs/format.md`` for the schema.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
import yaml

from .lp import LinearProgram, format_name
from .model import (
    BalanceKind,
    Carrier,
    Diagnostic,
    DispatchMode,
    EmbeddedStorageSpec,
    EnergyModel,
    ExchangeCorridor,
    ImportOption,
    StorageTechnology,
    Technology,
)
from .solver import Solution

log = logging.getLogger(__name__)

SETTINGS_KEYS = {"name", "horizon", "interest_rate", "charge_preexisting_om", "electricity_carrier", "solver"}
SOLVER_KEYS = {"time_limit", "iteration_limit", "primal_tolerance", "dual_tolerance"}

TABLES = {
    "regions.csv": (["id"], []),
    "carriers.csv": (["id"], ["resolution", "balance_kind", "demand"]),
    "technologies.csv": (
        ["id", "outputs"],
        [
            "inputs", "efficiency", "dispatch_mode", "capacity_basis", "investment_cost", "fixed_om",
            "variable_cost", "lifetime", "availability", "capacity_factor", "availability_profile",
            "availability_scale", "regions", "fluctuating", "flex_class", "group",
        ],
    ),
    "technology_regions.csv": (["technology", "region"], ["min_capacity", "max_capacity", "preexisting"]),
    "embedded_storage.csv": (
        ["technology", "energy_cost", "power_cost"],
        ["charge_efficiency", "discharge_efficiency", "self_discharge", "max_duration", "lifetime"],
    ),
    "storages.csv": (
        ["id", "carrier"],
        [
            "power_investment", "energy_investment", "power_om", "energy_om", "lifetime",
            "charge_efficiency", "discharge_efficiency", "self_discharge", "min_energy_to_power",
            "max_energy_to_power", "regions", "group", "inflow",
        ],
    ),
    "storage_regions.csv": (
        ["storage", "region"],
        ["min_power", "max_power", "preexisting_power", "preexisting_energy"],
    ),
    "corridors.csv": (
        ["id", "from_region", "to_region", "carrier"],
        ["distance_km", "loss_per_1000km", "preexisting_capacity", "expansion_limit", "lifetime", "fixed_om"],
    ),
    "corridor_segments.csv": (["corridor", "capacity", "unit_cost"], []),
    "imports.csv": (["carrier", "region", "price"], ["limit"]),
}
REQUIRED_FILES = ("regions.csv", "carriers.csv", "technologies.csv")


class ScenarioError(ValueError):
    """Malformed scenario input, located by file, row and column."""

    def __init__(self, message, file=None, row=None, column=None):
        self.file, self.row, self.column = file, row, column
        where = ":".join(str(p) for p in (file, row, column) if p is not None)
        super().__init__(f"{where}: {message}" if where else message)

    def location(self) -> str:
        return ":".join(str(p) for p in (self.file, self.row, self.column) if p is not None) or "scenario"


def eur_per_mwh_to_model(text: str) -> float:
    """EUR/MWh -> Mil. EUR/GWh, exact for decimal inputs."""
    return float(Decimal(text).scaleb(-3))


def model_to_eur_per_mwh(value: float) -> str:
    return _decimal_text(Decimal(repr(float(value))).scaleb(3))


def _decimal_text(d: Decimal) -> str:
    text = format(d.normalize(), "f")
    return text if text not in ("-0",) else "0"


class _Table:
    def __init__(self, root: Path, name: str):
        self.name = name
        self.path = root / name
        required, optional = TABLES[name]
        with open(self.path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in header:
                if col not in required and col not in optional:
                    raise ScenarioError(f"unknown column {col!r}", name, 1, col)
            for col in required:
                if col not in header:
                    raise ScenarioError(f"missing required column {col!r}", name, 1, col)
            # row numbers are 1-based file lines, the header is line 1
            self.rows = [(n + 2, row) for n, row in enumerate(reader)]

    def text(self, row_no, row, col, default=""):
        value = row.get(col)
        if value is None or value.strip() == "":
            return default
        return value.strip()

    def number(self, row_no, row, col, default=None):
        value = self.text(row_no, row, col)
        if value == "":
            if default is None:
                raise ScenarioError("missing value", self.name, row_no, col)
            return float(default)
        try:
            return float(value)
        except ValueError:
            raise ScenarioError(f"non-numeric cell {value!r}", self.name, row_no, col) from None

    def price(self, row_no, row, col, default=None):
        value = self.text(row_no, row, col)
        if value == "":
            if default is None:
                raise ScenarioError("missing value", self.name, row_no, col)
            return float(default)
        try:
            return eur_per_mwh_to_model(value)
        except InvalidOperation:
            raise ScenarioError(f"non-numeric cell {value!r}", self.name, row_no, col) from None

    def boolean(self, row_no, row, col):
        value = self.text(row_no, row, col).lower()
        if value in ("", "0", "false", "no"):
            return False
        if value in ("1", "true", "yes"):
            return True
        raise ScenarioError(f"not a boolean: {value!r}", self.name, row_no, col)


class _SeriesStore:
    """Lazy reader for wide time-series files under ``series/``."""

    def __init__(self, root: Path, horizon: int):
        self.root = root / "series"
        self.horizon = horizon
        self.cache = {}

    def table(self, filename, origin):
        if filename not in self.cache:
            path = self.root / filename
            if not path.exists():
                raise ScenarioError(f"series file {filename!r} not found", *origin)
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if not header or header[0] != "hour":
                    raise ScenarioError("series files start with an 'hour' column", f"series/{filename}", 1, "hour")
                columns = {name: [] for name in header[1:]}
                for line_no, row in enumerate(reader, start=2):
                    if len(row) != len(header):
                        raise ScenarioError("wrong number of cells", f"series/{filename}", line_no)
                    for name, cell in zip(header[1:], row[1:]):
                        try:
                            columns[name].append(float(cell))
                        except ValueError:
                            raise ScenarioError(
                                f"non-numeric cell {cell!r}", f"series/{filename}", line_no, name
                            ) from None
            for name, values in columns.items():
                if len(values) != self.horizon:
                    raise ScenarioError(
                        f"series has {len(values)} hours, horizon is {self.horizon}",
                        f"series/{filename}", None, name,
                    )
            self.cache[filename] = columns
        return self.cache[filename]

    def per_region(self, ref, regions, origin):
        columns = self.table(ref, origin)
        out = {}
        for name, values in columns.items():
            if name not in regions:
                raise ScenarioError(f"column {name!r} is not a region", f"series/{ref}", 1, name)
            out[name] = tuple(values)
        return out

    def single(self, ref, origin):
        filename, _, column = ref.partition(":")
        columns = self.table(filename, origin)
        column = column or "value"
        if column not in columns:
            raise ScenarioError(f"series column {column!r} not found", f"series/{filename}", 1, column)
        return tuple(columns[column])


def _split_list(text):
    return tuple(part.strip() for part in text.split(";") if part.strip())


def _parse_shares(table, row_no, row, col):
    text = table.text(row_no, row, col)
    shares = {}
    for item in _split_list(text):
        carrier, _, share = item.partition(":")
        try:
            shares[carrier.strip()] = float(share) if share.strip() else 1.0
        except ValueError:
            raise ScenarioError(f"bad share {item!r}", table.name, row_no, col) from None
    return shares


def _clamp(series, entity, field, diagnostics):
    arr = np.asarray(series, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        message = f"{field} values outside [0, 1] clamped"
        log.warning("%s: %s", entity, message)
        diagnostics.append(Diagnostic(entity, "warning", message))
        arr = np.clip(arr, 0.0, 1.0)
    return tuple(float(v) for v in arr)


def load_settings(root: Path) -> dict:
    path = root / "settings.yaml"
    if not path.exists():
        raise ScenarioError("settings.yaml not found", "settings.yaml")
    with open(path, encoding="utf-8") as fh:
        settings = yaml.safe_load(fh) or {}
    if not isinstance(settings, dict):
        raise ScenarioError("settings must be a mapping", "settings.yaml")
    for key in settings:
        if key not in SETTINGS_KEYS:
            raise ScenarioError(f"unknown setting {key!r}", "settings.yaml", None, key)
    for key in settings.get("solver") or {}:
        if key not in SOLVER_KEYS:
            raise ScenarioError(f"unknown solver option {key!r}", "settings.yaml", None, f"solver.{key}")
    if "horizon" not in settings:
        raise ScenarioError("missing setting 'horizon'", "settings.yaml", None, "horizon")
    return settings


def load_scenario(path, diagnostics: list = None) -> EnergyModel:
    """Read a scenario directory into an :class:`EnergyModel`.

    Format problems raise :class:`ScenarioError`; content problems are left
    to :func:`flexplan.model.validate_model`. Load-time warnings (clamped
    capacity factors) are appended to ``diagnostics`` when given.
    """
    root = Path(path)
    if not root.is_dir():
        raise ScenarioError(f"scenario directory {root} not found")
    diagnostics = diagnostics if diagnostics is not None else []
    settings = load_settings(root)
    try:
        horizon = int(settings["horizon"])
    except (TypeError, ValueError):
        raise ScenarioError("horizon must be an integer", "settings.yaml", None, "horizon") from None
    for name in REQUIRED_FILES:
        if not (root / name).exists():
            raise ScenarioError(f"{name} not found", name)
    series = _SeriesStore(root, horizon)

    def table(name):
        return _Table(root, name) if (root / name).exists() else None

    regions_t = table("regions.csv")
    regions = tuple(regions_t.text(n, row, "id") for n, row in regions_t.rows)
    region_set = set(regions)

    carriers = []
    ct = table("carriers.csv")
    for n, row in ct.rows:
        kind = ct.text(n, row, "balance_kind", BalanceKind.NETWORK.value)
        try:
            kind = BalanceKind(kind)
        except ValueError:
            raise ScenarioError(f"unknown balance kind {kind!r}", ct.name, n, "balance_kind") from None
        ref = ct.text(n, row, "demand")
        demand = series.per_region(ref, region_set, (ct.name, n, "demand")) if ref else {}
        carriers.append(
            Carrier(ct.text(n, row, "id"), int(ct.number(n, row, "resolution", 1)), kind, demand)
        )

    bounds, preexisting = {}, {}
    tr = table("technology_regions.csv")
    if tr:
        for n, row in tr.rows:
            tech, region = tr.text(n, row, "technology"), tr.text(n, row, "region")
            bounds.setdefault(tech, {})[region] = (
                tr.number(n, row, "min_capacity", 0.0),
                tr.number(n, row, "max_capacity", math.inf),
            )
            preexisting.setdefault(tech, {})[region] = tr.number(n, row, "preexisting", 0.0)

    embedded = {}
    et = table("embedded_storage.csv")
    if et:
        for n, row in et.rows:
            embedded[et.text(n, row, "technology")] = EmbeddedStorageSpec(
                energy_cost=et.number(n, row, "energy_cost"),
                power_cost=et.number(n, row, "power_cost"),
                charge_efficiency=et.number(n, row, "charge_efficiency", 1.0),
                discharge_efficiency=et.number(n, row, "discharge_efficiency", 1.0),
                self_discharge=et.number(n, row, "self_discharge", 1.0),
                max_duration=et.number(n, row, "max_duration", 24.0),
                lifetime=et.number(n, row, "lifetime", 20.0),
            )

    technologies = []
    tt = table("technologies.csv")
    for n, row in tt.rows:
        tid = tt.text(n, row, "id")
        mode = tt.text(n, row, "dispatch_mode", DispatchMode.MERIT_ORDER.value)
        try:
            mode = DispatchMode(mode)
        except ValueError:
            raise ScenarioError(f"unknown dispatch mode {mode!r}", tt.name, n, "dispatch_mode") from None
        cf_ref = tt.text(n, row, "capacity_factor")
        cf = {}
        if cf_ref:
            raw = series.per_region(cf_ref, region_set, (tt.name, n, "capacity_factor"))
            cf = {r: _clamp(v, tid, "capacity factor", diagnostics) for r, v in raw.items()}
        profile = None
        profile_ref = tt.text(n, row, "availability_profile")
        if profile_ref:
            raw = series.single(profile_ref, (tt.name, n, "availability_profile"))
            scale = tt.number(n, row, "availability_scale", 1.0)
            profile = _clamp(tuple(v * scale for v in raw), tid, "availability profile", diagnostics)
        regions_text = tt.text(n, row, "regions")
        technologies.append(
            Technology(
                id=tid,
                outputs=_parse_shares(tt, n, row, "outputs"),
                inputs=_parse_shares(tt, n, row, "inputs"),
                efficiency=tt.number(n, row, "efficiency", 1.0),
                dispatch_mode=mode,
                capacity_basis=tt.text(n, row, "capacity_basis") or None,
                investment_cost=tt.number(n, row, "investment_cost", 0.0),
                fixed_om=tt.number(n, row, "fixed_om", 0.0),
                variable_cost=tt.price(n, row, "variable_cost", 0.0),
                lifetime=tt.number(n, row, "lifetime", 20.0),
                availability=tt.number(n, row, "availability", 1.0),
                capacity_factor=cf,
                capacity_bounds=bounds.get(tid, {}),
                preexisting=preexisting.get(tid, {}),
                embedded_storage=embedded.get(tid),
                availability_profile=profile,
                regions=_split_list(regions_text) if regions_text else None,
                fluctuating=tt.boolean(n, row, "fluctuating"),
                flex_class=tt.text(n, row, "flex_class") or None,
                group=tt.text(n, row, "group") or None,
            )
        )
    known_techs = {t.id for t in technologies}
    for tid in set(bounds) | set(embedded):
        if tid not in known_techs:
            raise ScenarioError(f"unknown technology {tid!r}", "technology_regions.csv or embedded_storage.csv")

    storage_bounds, storage_pre = {}, {}
    sr = table("storage_regions.csv")
    if sr:
        for n, row in sr.rows:
            sid, region = sr.text(n, row, "storage"), sr.text(n, row, "region")
            storage_bounds.setdefault(sid, {})[region] = (
                sr.number(n, row, "min_power", 0.0),
                sr.number(n, row, "max_power", math.inf),
            )
            storage_pre.setdefault(sid, {})[region] = (
                sr.number(n, row, "preexisting_power", 0.0),
                sr.number(n, row, "preexisting_energy", 0.0),
            )
    storages = []
    st = table("storages.csv")
    if st:
        for n, row in st.rows:
            sid = st.text(n, row, "id")
            inflow_ref = st.text(n, row, "inflow")
            regions_text = st.text(n, row, "regions")
            storages.append(
                StorageTechnology(
                    id=sid,
                    carrier=st.text(n, row, "carrier"),
                    power_investment=st.number(n, row, "power_investment", 0.0),
                    energy_investment=st.number(n, row, "energy_investment", 0.0),
                    power_om=st.number(n, row, "power_om", 0.0),
                    energy_om=st.number(n, row, "energy_om", 0.0),
                    lifetime=st.number(n, row, "lifetime", 20.0),
                    charge_efficiency=st.number(n, row, "charge_efficiency", 1.0),
                    discharge_efficiency=st.number(n, row, "discharge_efficiency", 1.0),
                    self_discharge=st.number(n, row, "self_discharge", 1.0),
                    energy_to_power=(
                        st.number(n, row, "min_energy_to_power", 0.0),
                        st.number(n, row, "max_energy_to_power", math.inf),
                    ),
                    power_bounds=storage_bounds.get(sid, {}),
                    preexisting=storage_pre.get(sid, {}),
                    inflow=series.per_region(inflow_ref, region_set, (st.name, n, "inflow")) if inflow_ref else {},
                    regions=_split_list(regions_text) if regions_text else None,
                    group=st.text(n, row, "group") or None,
                )
            )

    segments = {}
    sg = table("corridor_segments.csv")
    if sg:
        for n, row in sg.rows:
            segments.setdefault(sg.text(n, row, "corridor"), []).append(
                (sg.number(n, row, "capacity"), sg.number(n, row, "unit_cost"))
            )
    corridors = []
    kt = table("corridors.csv")
    if kt:
        for n, row in kt.rows:
            kid = kt.text(n, row, "id")
            segs = tuple(segments.get(kid, ()))
            limit = kt.text(n, row, "expansion_limit")
            corridors.append(
                ExchangeCorridor(
                    id=kid,
                    from_region=kt.text(n, row, "from_region"),
                    to_region=kt.text(n, row, "to_region"),
                    carrier=kt.text(n, row, "carrier"),
                    distance_km=kt.number(n, row, "distance_km", 0.0),
                    loss_per_1000km=kt.number(n, row, "loss_per_1000km", 0.0),
                    preexisting_capacity=kt.number(n, row, "preexisting_capacity", 0.0),
                    segments=segs,
                    expansion_limit=kt.number(n, row, "expansion_limit") if limit else float(sum(c for c, _ in segs)),
                    lifetime=kt.number(n, row, "lifetime", 40.0),
                    fixed_om=kt.number(n, row, "fixed_om", 0.0),
                )
            )
    for kid in segments:
        if kid not in {k.id for k in corridors}:
            raise ScenarioError(f"segments for unknown corridor {kid!r}", "corridor_segments.csv")

    imports = []
    it = table("imports.csv")
    if it:
        for n, row in it.rows:
            imports.append(
                ImportOption(
                    it.text(n, row, "carrier"),
                    it.text(n, row, "region"),
                    it.price(n, row, "price"),
                    it.number(n, row, "limit", math.inf),
                )
            )

    solver = {k: float(v) for k, v in (settings.get("solver") or {}).items()}
    if "iteration_limit" in solver:
        solver["iteration_limit"] = int(solver["iteration_limit"])
    return EnergyModel(
        horizon=horizon,
        regions=regions,
        carriers=tuple(carriers),
        technologies=tuple(technologies),
        storages=tuple(storages),
        corridors=tuple(corridors),
        imports=tuple(imports),
        interest_rate=float(settings.get("interest_rate", 0.05)),
        charge_preexisting_om=bool(settings.get("charge_preexisting_om", True)),
        electricity_carrier=str(settings.get("electricity_carrier", "electricity")),
        name=str(settings.get("name", root.name)),
        solver_options=solver,
    )


def _num(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_series(path: Path, columns: dict, horizon: int):
    names = list(columns)
    rows = [[t] + [_num(columns[n][t]) for n in names] for t in range(horizon)]
    _write_csv(path, ["hour"] + names, rows)


def _shares_text(shares) -> str:
    return ";".join(f"{c}:{_num(s)}" for c, s in shares.items())


def write_scenario(model: EnergyModel, path) -> Path:
    """Write ``model`` as a scenario directory readable by :func:`load_scenario`."""
    root = Path(path)
    (root / "series").mkdir(parents=True, exist_ok=True)
    T = model.horizon
    settings = {
        "name": model.name,
        "horizon": T,
        "interest_rate": model.interest_rate,
        "charge_preexisting_om": model.charge_preexisting_om,
        "electricity_carrier": model.electricity_carrier,
    }
    if model.solver_options:
        settings["solver"] = dict(model.solver_options)
    (root / "settings.yaml").write_text(yaml.safe_dump(settings, sort_keys=True), encoding="utf-8")
    _write_csv(root / "regions.csv", ["id"], [[r] for r in model.regions])

    rows = []
    for c in model.carriers:
        ref = ""
        if c.demand:
            ref = f"demand_{c.id}.csv"
            _write_series(root / "series" / ref, dict(c.demand), T)
        rows.append([c.id, c.resolution, c.balance_kind.value, ref])
    _write_csv(root / "carriers.csv", ["id", "resolution", "balance_kind", "demand"], rows)

    rows, region_rows, embedded_rows = [], [], []
    for t in model.technologies:
        cf_ref = profile_ref = ""
        if t.capacity_factor:
            cf_ref = f"cf_{t.id}.csv"
            _write_series(root / "series" / cf_ref, dict(t.capacity_factor), T)
        if t.availability_profile is not None:
            profile_ref = f"availability_{t.id}.csv"
            _write_series(root / "series" / profile_ref, {"value": t.availability_profile}, T)
        rows.append([
            t.id, _shares_text(t.outputs), _shares_text(t.inputs), _num(t.efficiency), t.dispatch_mode.value,
            t.capacity_basis or "", _num(t.investment_cost), _num(t.fixed_om),
            model_to_eur_per_mwh(t.variable_cost), _num(t.lifetime), _num(t.availability), cf_ref, profile_ref,
            "", ";".join(t.regions) if t.regions is not None else "", "true" if t.fluctuating else "false",
            t.flex_class or "", t.group or "",
        ])
        for r in sorted(set(t.capacity_bounds) | set(t.preexisting)):
            lo, hi = t.bounds(r)
            region_rows.append([t.id, r, _num(lo), _num(hi), _num(t.preexisting.get(r, 0.0))])
        if t.embedded_storage is not None:
            e = t.embedded_storage
            embedded_rows.append([
                t.id, _num(e.energy_cost), _num(e.power_cost), _num(e.charge_efficiency),
                _num(e.discharge_efficiency), _num(e.self_discharge), _num(e.max_duration), _num(e.lifetime),
            ])
    _write_csv(root / "technologies.csv", ["id", "outputs"] + TABLES["technologies.csv"][1], rows)
    _write_csv(root / "technology_regions.csv", ["technology", "region", "min_capacity", "max_capacity", "preexisting"], region_rows)
    _write_csv(root / "embedded_storage.csv", ["technology", "energy_cost", "power_cost"] + TABLES["embedded_storage.csv"][1], embedded_rows)

    rows, region_rows = [], []
    for s in model.storages:
        ref = ""
        if s.inflow:
            ref = f"inflow_{s.id}.csv"
            _write_series(root / "series" / ref, dict(s.inflow), T)
        lo, hi = s.energy_to_power
        rows.append([
            s.id, s.carrier, _num(s.power_investment), _num(s.energy_investment), _num(s.power_om),
            _num(s.energy_om), _num(s.lifetime), _num(s.charge_efficiency), _num(s.discharge_efficiency),
            _num(s.self_discharge), _num(lo), _num(hi), ";".join(s.regions) if s.regions is not None else "",
            s.group or "", ref,
        ])
        for r in sorted(set(s.power_bounds) | set(s.preexisting)):
            lo_p, hi_p = s.bounds(r)
            pre_p, pre_e = s.preexisting_in(r)
            region_rows.append([s.id, r, _num(lo_p), _num(hi_p), _num(pre_p), _num(pre_e)])
    _write_csv(root / "storages.csv", ["id", "carrier"] + TABLES["storages.csv"][1], rows)
    _write_csv(root / "storage_regions.csv", ["storage", "region"] + TABLES["storage_regions.csv"][1], region_rows)

    rows, seg_rows = [], []
    for k in model.corridors:
        rows.append([
            k.id, k.from_region, k.to_region, k.carrier, _num(k.distance_km), _num(k.loss_per_1000km),
            _num(k.preexisting_capacity), _num(k.limit), _num(k.lifetime), _num(k.fixed_om),
        ])
        seg_rows.extend([k.id, _num(cap), _num(cost)] for cap, cost in k.segments)
    _write_csv(root / "corridors.csv", ["id", "from_region", "to_region", "carrier"] + TABLES["corridors.csv"][1], rows)
    _write_csv(root / "corridor_segments.csv", ["corridor", "capacity", "unit_cost"], seg_rows)

    rows = [[o.carrier, o.region, model_to_eur_per_mwh(o.price), _num(o.limit)] for o in model.imports]
    _write_csv(root / "imports.csv", ["carrier", "region", "price", "limit"], rows)
    return root


# --- solution artifacts ----------------------------------------------------

def _value(solution, key):
    return solution.values.get(format_name(key), 0.0)


def write_solution(solution: Solution, path, model: EnergyModel, lp: LinearProgram) -> Path:
    """Write solution tables; ``read_solution`` restores the :class:`Solution`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    T = model.horizon
    meta = {
        "status": solution.status,
        "objective": solution.objective,
        "breakdown": solution.breakdown,
        "iterations": solution.iterations,
        "message": solution.message,
    }
    (root / "solution.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_csv(root / "variables.csv", ["name", "value"],
               [[v.name, _num(solution.values.get(v.name, math.nan))] for v in lp.variables])
    b = solution.breakdown
    terms = ["fixed", "variable", "import", "preexisting_fixed"]
    _write_csv(root / "objective.csv", terms + ["objective"],
               [[_num(b.get(t, 0.0)) for t in terms] + [_num(solution.objective)]])

    cap_rows = []
    for t in model.sorted_technologies():
        for r in model.tech_regions(t):
            new = _value(solution, ("K", t.id, r))
            pre = t.preexisting.get(r, 0.0)
            cap_rows.append(["technology", t.id, r, "", _num(new), _num(pre), _num(new + pre)])
            if t.embedded_storage is not None:
                for kind, label in (("KESst", "embedded_storage_power"), ("KESlvl", "embedded_storage_energy")):
                    new = _value(solution, (kind, t.id, r))
                    cap_rows.append([label, t.id, r, "", _num(new), _num(0.0), _num(new)])
    for s in model.sorted_storages():
        for r in model.tech_regions(s):
            pre_p, pre_e = s.preexisting_in(r)
            for kind, label, pre in (("Kst", "storage_power", pre_p), ("Klvl", "storage_energy", pre_e)):
                new = _value(solution, (kind, s.id, r))
                cap_rows.append([label, s.id, r, "", _num(new), _num(pre), _num(new + pre)])
    for k in model.sorted_corridors():
        pair = f"{k.from_region}-{k.to_region}"
        added = [_value(solution, ("X", k.id, n)) for n in range(len(k.segments))]
        total_new = sum(added)
        cap_rows.append(["corridor", k.id, pair, "", _num(total_new), _num(k.preexisting_capacity),
                         _num(total_new + k.preexisting_capacity)])
        for n, x in enumerate(added):
            cap_rows.append(["corridor_segment", k.id, pair, n, _num(x), _num(0.0), _num(x)])
    _write_csv(root / "capacities.csv", ["kind", "entity", "region", "segment", "new", "preexisting", "total"], cap_rows)

    columns = {}
    for t in model.sorted_technologies():
        for r in model.tech_regions(t):
            g = [_value(solution, ("G", t.id, r, h)) for h in range(T)]
            for c, share in t.outputs.items():
                columns[f"{t.id}:{r}:{c}:gen"] = [share * v for v in g]
            if t.inputs:
                u = [_value(solution, ("U", t.id, r, h)) for h in range(T)]
                for c, share in t.inputs.items():
                    columns[f"{t.id}:{r}:{c}:use"] = [share * v for v in u]
    _write_series(root / "dispatch.csv", columns, T)

    columns = {}
    for s in model.sorted_storages():
        for r in model.tech_regions(s):
            for kind, label in (("Sin", "charge"), ("Sout", "discharge"), ("Slvl", "level")):
                columns[f"{s.id}:{r}:{label}"] = [_value(solution, (kind, s.id, r, h)) for h in range(T)]
            if r in s.inflow:
                columns[f"{s.id}:{r}:spill"] = [_value(solution, ("Spill", s.id, r, h)) for h in range(T)]
    for t in model.sorted_technologies():
        if t.embedded_storage is None:
            continue
        for r in model.tech_regions(t):
            for kind, label in (("ESin", "embedded_charge"), ("ESout", "embedded_discharge"), ("ESlvl", "embedded_level")):
                columns[f"{t.id}:{r}:{label}"] = [_value(solution, (kind, t.id, r, h)) for h in range(T)]
    _write_series(root / "storage.csv", columns, T)

    columns = {}
    for k in model.sorted_corridors():
        columns[f"{k.id}:forward"] = [_value(solution, ("Efwd", k.id, h)) for h in range(T)]
        columns[f"{k.id}:backward"] = [_value(solution, ("Ebwd", k.id, h)) for h in range(T)]
    _write_series(root / "exchange.csv", columns, T)

    columns = {}
    for o in model.sorted_imports():
        columns[f"{o.carrier}:{o.region}"] = [_value(solution, ("I", o.carrier, o.region, h)) for h in range(T)]
    _write_series(root / "imports.csv", columns, T)
    return root


def read_solution(path) -> Solution:
    """Restore a :class:`Solution` written by :func:`write_solution` (without duals)."""
    root = Path(path)
    try:
        meta = json.loads((root / "solution.json").read_text(encoding="utf-8"))
        values = {}
        with open(root / "variables.csv", newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                values[row["name"]] = float(row["value"])
    except (OSError, KeyError, ValueError) as exc:
        raise ScenarioError(f"malformed solution directory: {exc}", str(root)) from None
    return Solution(
        status=meta["status"],
        objective=float(meta["objective"]),
        values=values,
        breakdown=meta.get("breakdown", {}),
        iterations=int(meta.get("iterations", 0)),
        message=meta.get("message", ""),
    )
