"""LP backends and an independent solution verifier."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .lp import EQ, GE, LE, LinearProgram

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


@dataclass(frozen=True)
class SolverOptions:
    time_limit: float = math.inf
    iteration_limit: int = 0  # 0 means no limit
    primal_tolerance: float = 1e-9
    dual_tolerance: float = 1e-9
    duals: bool = True

    @classmethod
    def from_settings(cls, settings) -> "SolverOptions":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in dict(settings or {}).items() if k in known})


@dataclass
class Solution:
    status: str
    objective: float = math.nan
    values: dict = field(default_factory=dict)
    duals: dict = None
    bound_duals: dict = None
    breakdown: dict = field(default_factory=dict)
    iterations: int = 0
    wall_time: float = 0.0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, name: str, default: float = 0.0) -> float:
        return self.values.get(name, default)


def objective_breakdown(lp: LinearProgram, values) -> dict:
    """Split the objective into fixed, variable, import and preexisting terms."""
    out = {"fixed": 0.0, "variable": 0.0, "import": 0.0}
    for v in lp.variables:
        if v.cost:
            out[v.cost_class or "fixed"] += v.cost * values[v.name]
    out["preexisting_fixed"] = lp.objective_constant
    return out


class Backend:
    """Backend contract: a synchronous, single-call LP solve."""

    name = "abstract"

    def solve(self, lp: LinearProgram, options: SolverOptions) -> Solution:
        raise NotImplementedError


def to_matrices(lp: LinearProgram) -> dict:
    """Split the LP into ``A_ub x <= b_ub`` and ``A_eq x = b_eq`` form."""
    n = lp.n_variables
    ub_rows, ub_cols, ub_vals, b_ub, ub_index = [], [], [], [], []
    eq_rows, eq_cols, eq_vals, b_eq, eq_index = [], [], [], [], []
    for i, c in enumerate(lp.constraints):
        if c.sense == EQ:
            row = len(b_eq)
            for j, a in c.coefs:
                eq_rows.append(row)
                eq_cols.append(j)
                eq_vals.append(a)
            b_eq.append(c.rhs)
            eq_index.append(i)
        else:
            sign = 1.0 if c.sense == LE else -1.0
            row = len(b_ub)
            for j, a in c.coefs:
                ub_rows.append(row)
                ub_cols.append(j)
                ub_vals.append(sign * a)
            b_ub.append(sign * c.rhs)
            ub_index.append((i, sign))
    a_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n)) if b_ub else None
    a_eq = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n)) if b_eq else None
    return {
        "c": np.array([v.cost for v in lp.variables], dtype=float),
        "A_ub": a_ub,
        "b_ub": np.array(b_ub) if b_ub else None,
        "A_eq": a_eq,
        "b_eq": np.array(b_eq) if b_eq else None,
        "bounds": np.array([[v.lower, v.upper] for v in lp.variables], dtype=float).reshape(n, 2),
        "ub_index": ub_index,
        "eq_index": eq_index,
    }


class HighsBackend(Backend):
    """Dual simplex from the HiGHS build bundled with SciPy."""

    name = "scipy-highs-ds"

    def solve(self, lp: LinearProgram, options: SolverOptions) -> Solution:
        start = time.perf_counter()
        if lp.n_variables == 0:
            infeasible = any(
                (c.sense == EQ and c.rhs != 0) or (c.sense == LE and c.rhs < 0) or (c.sense == GE and c.rhs > 0)
                for c in lp.constraints
            )
            if infeasible:
                return Solution(INFEASIBLE, message="constraint without variables cannot hold")
            return Solution(OPTIMAL, lp.objective_constant, {}, {}, {},
                            objective_breakdown(lp, {}), 0, time.perf_counter() - start)
        m = to_matrices(lp)
        highs_options = {
            "presolve": True,
            "primal_feasibility_tolerance": options.primal_tolerance,
            "dual_feasibility_tolerance": options.dual_tolerance,
        }
        if math.isfinite(options.time_limit):
            highs_options["time_limit"] = float(options.time_limit)
        if options.iteration_limit:
            highs_options["maxiter"] = int(options.iteration_limit)
        bounds = [(lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None) for lo, hi in m["bounds"]]
        try:
            res = linprog(
                m["c"], A_ub=m["A_ub"], b_ub=m["b_ub"], A_eq=m["A_eq"], b_eq=m["b_eq"],
                bounds=bounds, method="highs-ds", options=highs_options,
            )
        except Exception as exc:  # backend failure must not look like an answer
            return Solution(LIMIT, message=f"backend failure: {exc}", wall_time=time.perf_counter() - start)
        elapsed = time.perf_counter() - start
        iterations = int(getattr(res, "nit", 0) or 0)
        status = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, LIMIT)
        if status != OPTIMAL or res.x is None:
            return Solution(status, iterations=iterations, wall_time=elapsed, message=res.message)
        x = np.asarray(res.x, dtype=float)
        values = {v.name: float(x[j]) for j, v in enumerate(lp.variables)}
        duals, bound_duals = None, None
        if options.duals:
            duals = {}
            if m["eq_index"]:
                for i, y in zip(m["eq_index"], res.eqlin.marginals):
                    duals[lp.constraints[i].name] = float(y)
            if m["ub_index"]:
                for (i, sign), y in zip(m["ub_index"], res.ineqlin.marginals):
                    duals[lp.constraints[i].name] = float(sign * y)
            bound_duals = {
                v.name: (float(lo), float(hi))
                for v, lo, hi in zip(lp.variables, res.lower.marginals, res.upper.marginals)
            }
        breakdown = objective_breakdown(lp, values)
        objective = float(res.fun) + lp.objective_constant
        return Solution(status, objective, values, duals, bound_duals, breakdown, iterations, elapsed, res.message)


BACKENDS = {"highs": HighsBackend}


def solve(lp: LinearProgram, options: SolverOptions = None, backend: Backend = None) -> Solution:
    """Solve ``lp`` with ``backend`` (HiGHS dual simplex by default)."""
    return (backend or HighsBackend()).solve(lp, options or SolverOptions())


def dual_objective(lp: LinearProgram, solution: Solution) -> float:
    """Lagrangian dual value from row and bound multipliers."""
    if solution.duals is None or solution.bound_duals is None:
        raise ValueError("solution carries no dual values")
    total = lp.objective_constant
    for c in lp.constraints:
        total += solution.duals.get(c.name, 0.0) * c.rhs
    for v in lp.variables:
        lo_mult, hi_mult = solution.bound_duals[v.name]
        if lo_mult and math.isfinite(v.lower):
            total += lo_mult * v.lower
        if hi_mult and math.isfinite(v.upper):
            total += hi_mult * v.upper
    return total


class MissingValueError(KeyError):
    pass


@dataclass
class VerificationReport:
    passed: bool
    max_violation: dict  # family -> largest relative violation
    worst: dict  # family -> constraint or variable name
    objective: float
    recomputed_objective: float
    objective_gap: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_violation": self.max_violation,
            "worst": self.worst,
            "objective": self.objective,
            "recomputed_objective": self.recomputed_objective,
            "objective_gap": self.objective_gap,
            "tolerance": self.tolerance,
        }


def verify_solution(lp: LinearProgram, solution: Solution, tol: float = 1e-6) -> VerificationReport:
    """Re-evaluate every row and bound of ``lp`` at the solution point.

    Violations are measured relative to ``max(1, |rhs|)`` (or the bound).
    The check uses only the LP's own row lists, never the backend's
    matrices.
    """
    values = solution.values
    x = []
    for v in lp.variables:
        if v.name not in values:
            raise MissingValueError(f"no value for variable {v.name}")
        x.append(float(values[v.name]))

    worst_val, worst_name = {}, {}

    def record(family, amount, name):
        if amount > worst_val.get(family, -1.0):
            worst_val[family] = amount
            worst_name[family] = name

    for v, xv in zip(lp.variables, x):
        viol = 0.0
        if xv < v.lower:
            viol = (v.lower - xv) / max(1.0, abs(v.lower))
        elif xv > v.upper:
            viol = (xv - v.upper) / max(1.0, abs(v.upper))
        record("bounds", viol, v.name)

    for c in lp.constraints:
        lhs = 0.0
        for j, a in c.coefs:
            lhs += a * x[j]
        diff = lhs - c.rhs
        if c.sense == LE:
            viol = max(0.0, diff)
        elif c.sense == GE:
            viol = max(0.0, -diff)
        else:
            viol = abs(diff)
        record(c.family, viol / max(1.0, abs(c.rhs)), c.name)

    recomputed = lp.objective_constant
    for v, xv in zip(lp.variables, x):
        recomputed += v.cost * xv
    gap = abs(recomputed - solution.objective) / max(1.0, abs(recomputed))
    passed = all(val <= tol for val in worst_val.values()) and gap <= tol
    return VerificationReport(passed, worst_val, worst_name, solution.objective, recomputed, gap, tol)
