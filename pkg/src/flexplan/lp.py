"""Sparse linear program container and text serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    cost: float = 0.0
    # objective term this variable contributes to: fixed, variable or import
    cost_class: str = ""


@dataclass(frozen=True)
class Constraint:
    name: str
    coefs: tuple  # ((variable index, coefficient), ...)
    sense: str
    rhs: float
    family: str


def format_name(key: tuple) -> str:
    kind, *parts = key
    return f"{kind}[{','.join(str(p) for p in parts)}]"


class NameMap:
    """Bidirectional map between entity keys and variable/constraint names."""

    def __init__(self):
        self._var_index = {}
        self._var_keys = []
        self._var_names = {}
        self._con_index = {}
        self._con_keys = []

    def add_variable(self, key: tuple) -> int:
        if key in self._var_index:
            raise KeyError(f"variable {key} declared twice")
        self._var_index[key] = len(self._var_keys)
        self._var_names[format_name(key)] = key
        self._var_keys.append(key)
        return self._var_index[key]

    def add_constraint(self, key: tuple) -> int:
        if key in self._con_index:
            raise KeyError(f"constraint {key} declared twice")
        self._con_index[key] = len(self._con_keys)
        self._con_keys.append(key)
        return self._con_index[key]

    def var(self, *key) -> int:
        return self._var_index[key]

    def has_var(self, *key) -> bool:
        return key in self._var_index

    def var_key(self, index: int) -> tuple:
        return self._var_keys[index]

    def constraint(self, *key) -> int:
        return self._con_index[key]

    def constraint_key(self, index: int) -> tuple:
        return self._con_keys[index]

    def var_name(self, *key) -> str:
        return format_name(key)

    def key_of(self, name: str) -> tuple:
        return self._var_names[name]

    @property
    def n_variables(self) -> int:
        return len(self._var_keys)


@dataclass
class LinearProgram:
    variables: list
    constraints: list
    name_map: NameMap
    objective_constant: float = 0.0
    diagnostics: list = field(default_factory=list)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def variable(self, *key) -> Variable:
        return self.variables[self.name_map.var(*key)]

    def constraint(self, *key) -> Constraint:
        return self.constraints[self.name_map.constraint(*key)]

    def index(self, name: str) -> int:
        return self.name_map.var(*self.name_map.key_of(name))

    def to_text(self) -> str:
        """Readable, deterministic dump used for diffing and reproducibility checks."""
        lines = [f"constant {self.objective_constant!r}"]
        for v in self.variables:
            lines.append(f"var {v.name} [{v.lower!r}, {v.upper!r}] cost {v.cost!r} {v.cost_class}")
        for c in self.constraints:
            terms = " ".join(f"{a!r}*{self.variables[j].name}" for j, a in c.coefs)
            lines.append(f"con {c.name} {c.family}: {terms} {c.sense} {c.rhs!r}")
        return "\n".join(lines) + "\n"


def _mps_number(x: float) -> str:
    text = repr(float(x))
    if len(text) > 12:
        text = f"{x:.6e}" if abs(x) >= 1e-3 or x == 0 else f"{x:.5e}"
    return text


def to_mps(lp: LinearProgram, name: str = "FLEXPLAN") -> tuple:
    """Write ``lp`` as fixed-form MPS.

    Fixed-form fields are eight characters wide, so rows and columns are
    renamed ``R0000001``/``C0000001``. Returns ``(mps_text, names)`` where
    ``names`` maps the short codes back to the original names. Coefficients
    that need more than twelve characters are rounded to seven significant
    digits; use :meth:`LinearProgram.to_text` for an exact dump.
    """
    col_code = [f"C{j + 1:07d}" for j in range(lp.n_variables)]
    row_code = [f"R{i + 1:07d}" for i in range(lp.n_constraints)]
    names = {code: v.name for code, v in zip(col_code, lp.variables)}
    names.update({code: c.name for code, c in zip(row_code, lp.constraints)})
    sense_code = {LE: "L", EQ: "E", GE: "G"}

    out = [f"NAME          {name[:8]}", "ROWS", " N  COST"]
    for code, c in zip(row_code, lp.constraints):
        out.append(f" {sense_code[c.sense]}  {code}")
    columns = [[] for _ in range(lp.n_variables)]
    for i, c in enumerate(lp.constraints):
        for j, a in c.coefs:
            columns[j].append((row_code[i], a))
    out.append("COLUMNS")
    for j, v in enumerate(lp.variables):
        entries = []
        if v.cost != 0:
            entries.append(("COST", v.cost))
        entries.extend(columns[j])
        if not entries:
            entries.append(("COST", 0.0))
        for row, a in entries:
            out.append(f"    {col_code[j]:<8}  {row:<8}  {_mps_number(a):>12}")
    out.append("RHS")
    for code, c in zip(row_code, lp.constraints):
        if c.rhs != 0:
            out.append(f"    {'RHS':<8}  {code:<8}  {_mps_number(c.rhs):>12}")
    if lp.objective_constant:
        # MPS stores the negated objective offset on the objective row
        out.append(f"    {'RHS':<8}  {'COST':<8}  {_mps_number(-lp.objective_constant):>12}")
    out.append("BOUNDS")
    for code, v in zip(col_code, lp.variables):
        lo, hi = v.lower, v.upper
        if lo == hi:
            out.append(f" FX {'BND':<8}  {code:<8}  {_mps_number(lo):>12}")
            continue
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" FR {'BND':<8}  {code:<8}")
            continue
        if math.isinf(lo):
            out.append(f" MI {'BND':<8}  {code:<8}")
        elif lo != 0:
            out.append(f" LO {'BND':<8}  {code:<8}  {_mps_number(lo):>12}")
        if not math.isinf(hi):
            out.append(f" UP {'BND':<8}  {code:<8}  {_mps_number(hi):>12}")
    out.append("ENDATA")
    return "\n".join(out) + "\n", names


class VariableRegistry:
    """Variables declared for one model, in declaration order."""

    def __init__(self):
        self.names = NameMap()
        self.lower = []
        self.upper = []

    def add(self, key: tuple, lower: float = 0.0, upper: float = math.inf) -> int:
        index = self.names.add_variable(key)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        return index

    def __getitem__(self, key: tuple) -> int:
        return self.names.var(*key)

    def __contains__(self, key: tuple) -> bool:
        return self.names.has_var(*key)

    def __len__(self) -> int:
        return self.names.n_variables


def make_row(key: tuple, coefs: dict, sense: str, rhs: float, family: str) -> tuple:
    """Return ``(key, Constraint)`` with zero coefficients dropped and terms sorted."""
    terms = tuple((j, float(a)) for j, a in sorted(coefs.items()) if a != 0)
    return key, Constraint(format_name(key), terms, sense, float(rhs), family)
