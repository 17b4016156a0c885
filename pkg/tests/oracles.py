"""Independent reference computations used by the tests.

Nothing here imports the LP builder: the brute-force capacity search writes
its own dispatch LPs from scratch and solves them with SciPy directly.
"""

import heapq

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


UNSERVED_PENALTY = 1e4


class TinySystem:
    """One region, solar + gas + one storage with a fixed energy/power ratio."""

    def __init__(self, demand, solar_cf, solar_fixed, gas_fixed, gas_var,
                 storage_power_fixed, storage_energy_fixed, ratio, charge_eff, discharge_eff, retention):
        self.d = np.asarray(demand, dtype=float)
        self.alpha = np.asarray(solar_cf, dtype=float)
        self.T = len(self.d)
        self.solar_fixed = solar_fixed
        self.gas_fixed = gas_fixed
        self.gas_var = gas_var
        self.storage_fixed = storage_power_fixed + ratio * storage_energy_fixed
        self.ratio = ratio
        self.rho, self.eta, self.delta = charge_eff, discharge_eff, retention
        self._template()

    def _template(self):
        # per hour: solar, gas, charge, discharge, level, unserved
        T = self.T
        n = 6 * T
        eq = sp.lil_matrix((2 * T, n))
        ub = sp.lil_matrix((T, n))
        for t in range(T):
            s, g, cin, cout, lvl, miss = (6 * t + k for k in range(6))
            prev = 6 * ((t - 1) % T) + 4
            eq[t, s] = 1.0
            eq[t, miss] = 1.0
            eq[t, g] = 1.0
            eq[t, cout] = self.eta
            eq[t, cin] = -1.0
            eq[T + t, prev] += self.delta
            eq[T + t, cin] = self.rho
            eq[T + t, cout] = -1.0
            eq[T + t, lvl] += -1.0
            ub[t, cin] = 1.0
            ub[t, cout] = 1.0
        self.n = n
        self.a_eq = eq.tocsr()
        self.a_ub = ub.tocsr()
        self.cost = np.zeros(n)
        self.cost[1::6] = self.gas_var
        self.penalty = np.zeros(n)
        self.penalty[5::6] = UNSERVED_PENALTY

    def fixed_cost(self, ks, kg, kst):
        return self.solar_fixed * ks + self.gas_fixed * kg + self.storage_fixed * kst

    def dispatch(self, points):
        """Minimal gas cost for each (solar, gas, storage) capacity point.

        ``gas`` may be ``inf``. Infeasible points come back as ``inf``. All
        points are solved as one block-diagonal LP, which is exact because
        the blocks share no variables. Unserved energy carries a penalty far
        above any marginal cost of a feasible dispatch, so a point is
        infeasible exactly when its optimum leaves demand unserved.
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        m = len(points)
        eye = sp.identity(m, format="csr")
        a_eq = sp.kron(eye, self.a_eq, format="csr")
        a_ub = sp.kron(eye, self.a_ub, format="csr")
        b_eq = np.tile(np.concatenate([self.d, np.zeros(self.T)]), m)
        b_ub = np.repeat(points[:, 2], self.T)
        upper = np.empty((m, self.T, 6))
        upper[:, :, 0] = points[:, 0:1] * self.alpha[None, :]
        upper[:, :, 1] = points[:, 1:2]
        upper[:, :, 2] = np.inf
        upper[:, :, 3] = np.inf
        upper[:, :, 4] = points[:, 2:3] * self.ratio
        upper[:, :, 5] = np.inf
        upper = upper.reshape(-1)
        bounds = np.column_stack([np.zeros_like(upper), np.where(np.isfinite(upper), upper, np.inf)])
        res = linprog(np.tile(self.cost + self.penalty, m), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"dispatch oracle failed: {res.message}")
        x = res.x.reshape(m, self.n)
        unserved = x[:, 5::6].sum(axis=1)
        return np.where(unserved > 1e-7, np.inf, x @ self.cost)


def brute_force_optimum(system: TinySystem, grid, batch=256):
    """Exhaustive search over ``grid`` for every capacity, with exact pruning.

    For each (solar, storage) pair the dispatch cost with unlimited gas is a
    lower bound for every gas capacity, so points are visited in order of
    ``fixed cost + that bound`` and the search stops once the next bound
    cannot beat the best point found. Points failing the necessary peak
    condition ``gas + storage >= max_t(d_t - alpha_t * solar)`` are skipped.
    Returns ``(cost, (solar, gas, storage), evaluated)``.
    """
    grid = np.asarray(grid, dtype=float)
    pairs = np.array([(s, st) for s in grid for st in grid])
    unlimited = np.concatenate([
        system.dispatch(np.column_stack([chunk[:, 0], np.full(len(chunk), np.inf), chunk[:, 1]]))
        for chunk in np.array_split(pairs, max(1, len(pairs) // batch))
    ])
    need = np.max(system.d[None, :] - pairs[:, 0:1] * system.alpha[None, :], axis=1)

    heap = []
    for idx, (s, st) in enumerate(pairs):
        if not np.isfinite(unlimited[idx]):
            continue
        kg_min = max(0.0, need[idx] - st)
        start = int(np.searchsorted(grid, kg_min - 1e-9))
        if start >= len(grid):
            continue
        bound = system.fixed_cost(s, grid[start], st) + unlimited[idx]
        heap.append((bound, idx, start))
    heapq.heapify(heap)

    best, best_point, evaluated = np.inf, None, 0
    while heap and heap[0][0] < best:
        chunk = []
        while heap and heap[0][0] < best and len(chunk) < batch:
            bound, idx, g = heapq.heappop(heap)
            chunk.append((idx, g))
            if g + 1 < len(grid):
                s, st = pairs[idx]
                heapq.heappush(heap, (system.fixed_cost(s, grid[g + 1], st) + unlimited[idx], idx, g + 1))
        pts = np.array([(pairs[i][0], grid[g], pairs[i][1]) for i, g in chunk])
        costs = system.dispatch(pts)
        evaluated += len(chunk)
        for (i, g), p, c in zip(chunk, pts, costs):
            total = system.fixed_cost(*p) + c
            if total < best:
                best, best_point = total, tuple(float(v) for v in p)
    return best, best_point, evaluated


def accumulated_self_discharge(level, retention):
    """Energy lost to self-discharge over a cyclic horizon: sum of (1-delta)*level[t-1]."""
    level = np.asarray(level, dtype=float)
    return float((1.0 - retention) * np.roll(level, 1).sum())
