"""Secrecy-EE power allocation over a fixed matching.

Outer loop: parametric (Dinkelbach-style) iteration on the EE level u,
maximizing R_sec(p) - u * (P_c + sum p) each round and updating u to the
achieved ratio. Inner solve: log-barrier interior method over the relay
power simplex (numerical gradients, diagonal-Newton steps with
backtracking, barrier parameter increased geometrically until the gap
proxy is small), followed by a barrier-free polish on the raw objective.

The rate formulas depend on relay power only through per-SC totals, so the
solver optimizes the per-SC total vector and attributes powers equally
within each SC; the grid oracle grids the per-(pair, SC) simplex literally
and is the independent check on solution quality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelState
from .config import SystemConfig
from .matching import Matching, sc_units, unit_rate_sum
from .rates import ChannelTables, unit_rates_for_config


class InfeasiblePowerError(RuntimeError):
    """Raised when the QoS floor cannot be met (no silent clamping)."""


@dataclass
class PowerAllocation:
    """Per-(pair, SC-unit) relay power map and its derived quantities."""

    p: dict[tuple[int, int], float]
    u_level: float = 0.0
    u_fracs: dict[int, float] = field(default_factory=dict)

    @property
    def transmit_power(self) -> float:
        return sum(self.p.values())

    def relay_totals(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for (_, u), w in self.p.items():
            totals[u] = totals.get(u, 0.0) + w
        return totals

    def validate(self, cfg: SystemConfig) -> "PowerAllocation":
        if any(w < 0.0 for w in self.p.values()):
            raise ValueError("negative power entry")
        total = self.transmit_power
        if cfg.per_sc_power_cap:
            cap = cfg.P_s / len(sc_units(cfg))
            for u, q in self.relay_totals().items():
                if q > cap + 1e-9:
                    raise ValueError(f"unit {u} exceeds the per-SC cap")
            if total > cfg.P_s * (1.0 + 1e-9):
                raise ValueError("budget exceeded")
        else:
            if abs(total - cfg.P_s) > 1e-9 * cfg.P_s:
                raise ValueError("budget equality violated")
        if self.u_fracs:
            if abs(sum(self.u_fracs.values()) - 1.0) > 1e-9:
                raise ValueError("per-SC budget fractions must sum to 1")
        return self


@dataclass
class SolveReport:
    """Outer-loop diagnostics for one power-allocation solve."""

    iterations: int
    converged: bool
    residual: float               # |R_sec - u * P_total| in bit/s
    ee_trajectory: list[float]
    fallback_used: bool = False


def numerical_gradient(f, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient with a relative step per coordinate."""
    x = np.asarray(x, dtype=float)
    scale = max(float(np.max(np.abs(x))), 1e-12)
    g = np.zeros_like(x)
    for k in range(x.size):
        h = rel_step * max(abs(x[k]), scale)
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def project_simplex(v: np.ndarray, total: float, floor: float = 0.0) -> np.ndarray:
    """Euclidean projection onto {q >= floor, sum q = total}."""
    d = v.size
    w = np.asarray(v, dtype=float) - floor
    budget = total - d * floor
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - budget
    ks = np.arange(1, d + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1]) + 1 if np.any(cond) else 1
    theta = css[rho - 1] / rho
    return np.maximum(w - theta, 0.0) + floor


class _SeparableObjective:
    """sum_k coord_value(k, q_k) + offset; lets the solver differentiate and
    line-search with per-coordinate evaluations."""

    def __init__(self, coord_fns, offset: float = 0.0):
        self.coord_fns = list(coord_fns)
        self.offset = offset

    def coord_value(self, k: int, qk: float) -> float:
        return self.coord_fns[k](qk)

    def value(self, q) -> float:
        return sum(fn(qk) for fn, qk in zip(self.coord_fns, q)) + self.offset


def simplex_barrier_maximize(objective, total: float, start: np.ndarray, *,
                             coord_ineq=(), t0: float = 1.0,
                             t_factor: float = 10.0, gap_tol: float = 1e-6,
                             max_stage_steps: int = 12,
                             polish_steps: int = 60,
                             rel_step: float = 1e-6,
                             skip_barrier: bool = False) -> np.ndarray:
    """Maximize `objective` over {q > 0, sum q = total} (plus optional
    per-coordinate constraints g(q_k) > 0) by a log-barrier interior method
    with a projected-gradient polish on the raw objective.

    `objective` is either a callable q -> float or a _SeparableObjective.
    `coord_ineq` is a list of (k, g) with g(q_k) required strictly positive.
    `skip_barrier` runs the polish only (used for warm restarts that are
    already near a maximizer).
    """
    d = int(np.size(start))
    floor = 1e-12 * total
    x = project_simplex(np.asarray(start, dtype=float), total, floor=floor)
    separable = hasattr(objective, "coord_value")
    f_value = objective.value if separable else objective

    def grad_obj(q: np.ndarray) -> np.ndarray:
        if not separable:
            return numerical_gradient(f_value, q, rel_step)
        scale = max(float(np.max(np.abs(q))), 1e-12)
        g = np.zeros(d)
        for k in range(d):
            h = rel_step * max(abs(q[k]), scale)
            g[k] = (objective.coord_value(k, q[k] + h)
                    - objective.coord_value(k, q[k] - h)) / (2.0 * h)
        return g

    def curv_obj(q: np.ndarray) -> np.ndarray:
        """Diagonal curvature estimate (wider stencil to survive round-off)."""
        scale = max(float(np.max(np.abs(q))), 1e-12)
        c = np.zeros(d)
        if separable:
            for k in range(d):
                hc = 1e-3 * max(abs(q[k]), scale)
                f0 = objective.coord_value(k, q[k])
                c[k] = (objective.coord_value(k, q[k] + hc) - 2.0 * f0
                        + objective.coord_value(k, q[k] - hc)) / (hc * hc)
        else:
            f0 = f_value(q)
            for k in range(d):
                hc = 1e-3 * max(abs(q[k]), scale)
                qp = q.copy()
                qm = q.copy()
                qp[k] += hc
                qm[k] -= hc
                c[k] = (f_value(qp) - 2.0 * f0 + f_value(qm)) / (hc * hc)
        return c

    def newton_direction(g: np.ndarray, c: np.ndarray,
                         f_scale: float) -> np.ndarray:
        """Diagonal-Newton ascent direction restricted to sum(delta) = 0,
        with non-concave coordinates clamped and a trust cap on the move
        (the secrecy objective has convex stretches with vertex optima)."""
        curv_floor = 1e-9 * max(1.0, f_scale) / (total * total) + 1e-300
        hneg = np.minimum(c, -curv_floor)
        inv = 1.0 / hneg
        lam = float(np.sum(g * inv) / np.sum(inv))
        delta = (lam - g) * inv
        if float(delta @ (g - g.mean())) <= 0.0:  # not an ascent direction
            delta = g - g.mean()
        dmax = float(np.max(np.abs(delta)))
        if dmax > 0.25 * total:
            delta *= 0.25 * total / dmax
        return delta

    ineq_by_coord: dict[int, list] = {}
    for k, g in coord_ineq:
        ineq_by_coord.setdefault(k, []).append(g)

    def strictly_feasible(q: np.ndarray) -> bool:
        if np.any(q <= 0.0):
            return False
        return all(g(q[k]) > 0.0 for k, gs in ineq_by_coord.items() for g in gs)

    def barrier_terms(q: np.ndarray) -> float:
        s = float(np.sum(np.log(q)))
        for k, gs in ineq_by_coord.items():
            for g in gs:
                s += math.log(g(q[k]))
        return s

    def barrier_grad_curv(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = 1.0 / q
        c = -1.0 / (q * q)
        for k, gs in ineq_by_coord.items():
            h = rel_step * max(abs(q[k]), 1e-12)
            for gf in gs:
                g[k] += (gf(q[k] + h) - gf(q[k] - h)) / (2.0 * h) / gf(q[k])
        return g, c

    if not strictly_feasible(x):
        return x  # caller handles fallback

    scale0 = max(1.0, abs(f_value(x)))
    n_ineq = d + len(list(coord_ineq))
    if not skip_barrier:
        t = t0
        while True:
            c_obj = None
            for step_idx in range(max_stage_steps):
                g_obj = grad_obj(x)
                if c_obj is None or step_idx % 2 == 0:  # refresh curvature
                    c_obj = curv_obj(x)
                g_bar, c_bar = barrier_grad_curv(x)
                grad = (t / scale0) * g_obj + g_bar
                curv = (t / scale0) * c_obj + c_bar
                direction = newton_direction(grad, curv, t + 1.0)
                slope = float(direction @ (grad - grad.mean()))
                if slope * total < 1e-12 * (1.0 + t):
                    break
                phi0 = (t / scale0) * f_value(x) + barrier_terms(x)
                alpha = 1.0
                improved = False
                for _ in range(20):
                    cand = x + alpha * direction
                    if strictly_feasible(cand):
                        phi = (t / scale0) * f_value(cand) + barrier_terms(cand)
                        if phi > phi0 + 0.1 * alpha * slope:
                            x = cand
                            improved = True
                            break
                    alpha *= 0.5
                if not improved:
                    break
            if n_ineq / t < gap_tol:
                break
            t *= t_factor

    # barrier-free polish: diagonal-Newton on the raw objective with
    # projection onto the simplex
    f0 = f_value(x)
    c_obj = None
    for step_idx in range(polish_steps):
        g_obj = grad_obj(x)
        if c_obj is None or step_idx % 2 == 0:
            c_obj = curv_obj(x)
        direction = newton_direction(g_obj, c_obj, abs(f0))
        alpha = 1.0
        improved = False
        for _ in range(20):
            cand = project_simplex(x + alpha * direction, total, floor=floor)
            if strictly_feasible(cand):
                f_new = f_value(cand)
                if f_new > f0 + 1e-12 * (1.0 + abs(f0)):
                    x, f0 = cand, f_new
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break

    return x * (total / float(np.sum(x)))


def _occupied_units(matching: Matching) -> list[int]:
    return [u for u, members in enumerate(matching.sc_to_pairs) if members]


def _assignment_rates(tb: ChannelTables, units, matching: Matching,
                      totals: dict[int, float], cfg: SystemConfig):
    """r_sec per (pair, unit) assignment under per-unit totals."""
    out: dict[tuple[int, int], float] = {}
    for u, members in enumerate(matching.sc_to_pairs):
        if not members:
            continue
        ms = sorted(members)
        i, j = units[u]
        rates = unit_rates_for_config(tb, i, j, ms, totals.get(u, 0.0), cfg)
        for m, r in zip(ms, rates):
            out[(m, u)] = r.r_sec
    return out


def _build_allocation(matching: Matching, q: dict[int, float],
                      u_level: float) -> PowerAllocation:
    p: dict[tuple[int, int], float] = {}
    for u, qu in q.items():
        members = sorted(matching.sc_to_pairs[u])
        for m in members:
            p[(m, u)] = qu / len(members)
    total = sum(q.values())
    fracs = {u: qu / total for u, qu in q.items()} if total > 0 else {}
    return PowerAllocation(p=p, u_level=u_level, u_fracs=fracs)


def _rate_objective(tb: ChannelTables, units, matching: Matching,
                    occ: list[int], u: float, cfg: SystemConfig) -> _SeparableObjective:
    def make(uu: int):
        members = sorted(matching.sc_to_pairs[uu])
        i, j = units[uu]

        def f(qk: float) -> float:
            rates = unit_rates_for_config(tb, i, j, members, max(qk, 0.0), cfg)
            return sum(r.r_sec for r in rates) - u * qk
        return f

    return _SeparableObjective([make(uu) for uu in occ], offset=-u * cfg.P_c)


def _qos_constraints(tb: ChannelTables, units, matching: Matching,
                     occ: list[int], cfg: SystemConfig):
    """Per-assignment r_sec - R_min > 0 constraints, per coordinate."""
    if cfg.R_min <= 0.0:
        return []
    cons = []
    for k, uu in enumerate(occ):
        members = sorted(matching.sc_to_pairs[uu])
        i, j = units[uu]
        for idx in range(len(members)):
            def g(qk: float, i=i, j=j, members=members, idx=idx) -> float:
                rates = unit_rates_for_config(tb, i, j, members,
                                              max(qk, 0.0), cfg)
                return rates[idx].r_sec - cfg.R_min
            cons.append((k, g))
    return cons


def _solve_q(tb: ChannelTables, units, matching: Matching, occ: list[int],
             u: float, cfg: SystemConfig, warm: np.ndarray | None,
             multi_start: bool) -> tuple[np.ndarray, bool]:
    """Inner maximization over per-unit totals; returns (q, fallback_used).

    The first outer iteration runs the full barrier method from several
    starts; warm restarts only polish (they sit near a maximizer already).
    """
    d = len(occ)
    if cfg.per_sc_power_cap:
        cap = cfg.P_s / len(units)
        return np.full(d, cap), False
    total = cfg.P_s
    equal = np.full(d, total / d)
    if d == 1:
        return equal, False

    objective = _rate_objective(tb, units, matching, occ, u, cfg)
    cons = _qos_constraints(tb, units, matching, occ, cfg)

    def feasible(q: np.ndarray) -> bool:
        return all(g(q[k]) > 0.0 for k, g in cons)

    if not multi_start and warm is not None:
        w = project_simplex(np.asarray(warm, dtype=float), total,
                            floor=1e-12 * total)
        if not cons or feasible(w):
            q = simplex_barrier_maximize(objective, total, w, coord_ineq=cons,
                                         skip_barrier=True)
            return q, False

    starts = [equal]
    if warm is not None and not np.allclose(warm, equal):
        starts.append(np.asarray(warm, dtype=float))
    if d <= 4:
        # coarse composition lattice: covers every basin on small instances
        levels = 5 if d == 2 else 4
        for comp in _compositions(levels, d):
            starts.append(np.array([c * total / levels for c in comp]))
    elif d <= 6:
        for k in range(d):
            conc = np.full(d, 0.1 * total / (d - 1))
            conc[k] = 0.9 * total
            starts.append(conc)

    best_q, best_val = None, -math.inf
    for s in starts:
        s = project_simplex(s, total, floor=1e-12 * total)
        if cons and not feasible(s):
            continue
        q = simplex_barrier_maximize(objective, total, s, coord_ineq=cons)
        val = objective.value(q)
        if val > best_val:
            best_val, best_q = val, q
    if best_q is None:  # no strictly feasible start among the candidates
        return equal, True
    return best_q, False


def dinkelbach_allocate(matching: Matching, ch: ChannelState,
                        cfg: SystemConfig) -> tuple[PowerAllocation, SolveReport]:
    """Parametric secrecy-EE maximization over relay powers (Algorithm-style
    outer loop with the interior-point inner solve).

    Raises InfeasiblePowerError when the QoS floor fails even at the
    equal-split allocation (phase-1 check)."""
    units = sc_units(cfg)
    matching.validate(cfg.H, cfg.V)
    occ = _occupied_units(matching)
    if not occ:
        raise InfeasiblePowerError("matching has no assignments to power")
    tb = ChannelTables(ch)
    d = len(occ)
    if cfg.per_sc_power_cap:
        q0 = np.full(d, cfg.P_s / len(units))
    else:
        q0 = np.full(d, cfg.P_s / d)

    def r_total(q: np.ndarray) -> float:
        return sum(unit_rate_sum(tb, units, uu, matching.sc_to_pairs[uu],
                                 float(qk), cfg) for uu, qk in zip(occ, q))

    if cfg.R_min > 0.0:
        rates0 = _assignment_rates(tb, units, matching,
                                   dict(zip(occ, q0)), cfg)
        if any(r < cfg.R_min for r in rates0.values()):
            raise InfeasiblePowerError(
                "QoS floor unattainable at the equal-split allocation")

    p_tot0 = cfg.P_c + float(np.sum(q0))
    u = r_total(q0) / p_tot0
    trajectory = [u]
    q = q0
    fallback = False
    converged = False
    residual = math.inf
    iterations = 0
    for it in range(1, cfg.L_m + 1):
        iterations = it
        q_new, fb = _solve_q(tb, units, matching, occ, u, cfg,
                             warm=q, multi_start=(it == 1))
        fallback = fallback or fb
        q = q_new
        r = r_total(q)
        p_tot = cfg.P_c + float(np.sum(q))
        residual = abs(r - u * p_tot)
        u_new = r / p_tot
        trajectory.append(u_new)
        u = u_new
        if residual <= cfg.epsilon * max(1.0, u * p_tot):
            converged = True
            break

    alloc = _build_allocation(matching, dict(zip(occ, (float(v) for v in q))), u)
    alloc.validate(cfg)
    report = SolveReport(iterations=iterations, converged=converged,
                         residual=residual, ee_trajectory=trajectory,
                         fallback_used=fallback)
    return alloc, report


def inner_solve(matching: Matching, ch: ChannelState, u: float,
                cfg: SystemConfig) -> PowerAllocation:
    """One inner maximization of R_sec(p) - u * (P_c + sum p) over the
    feasible set, returned as a full allocation."""
    if u < 0.0:
        raise ValueError("u must be >= 0")
    units = sc_units(cfg)
    occ = _occupied_units(matching)
    if not occ:
        raise InfeasiblePowerError("matching has no assignments to power")
    tb = ChannelTables(ch)
    q, _ = _solve_q(tb, units, matching, occ, u, cfg, warm=None,
                    multi_start=True)
    return _build_allocation(matching, dict(zip(occ, (float(v) for v in q))),
                             u).validate(cfg)


def per_sc_cap_mode(matching: Matching, ch: ChannelState,
                    cfg: SystemConfig) -> tuple[PowerAllocation, SolveReport]:
    """Same pipeline under the per-SC budget P_s/N instead of the global
    coupling constraint."""
    return dinkelbach_allocate(matching, ch, replace(cfg, per_sc_power_cap=True))


def _compositions(total_slots: int, dims: int):
    """All nonnegative integer vectors of length `dims` summing to
    `total_slots` (stars and bars)."""
    if dims == 1:
        yield (total_slots,)
        return
    for head in range(total_slots + 1):
        for rest in _compositions(total_slots - head, dims - 1):
            yield (head,) + rest


def grid_oracle(matching: Matching, ch: ChannelState, cfg: SystemConfig,
                grid_points: int = 50) -> tuple[PowerAllocation, float]:
    """Exhaustive grid over the per-(pair, SC) power simplex: the best
    feasible point and its EE. Refuses more than 4 decision dimensions."""
    units = sc_units(cfg)
    matching.validate(cfg.H, cfg.V)
    assignments = matching.assignments()
    dims = len(assignments)
    if dims == 0:
        raise InfeasiblePowerError("matching has no assignments to power")
    if dims > 4:
        raise InfeasiblePowerError(
            f"{dims} decision dimensions exceed the grid oracle guard (4)")
    tb = ChannelTables(ch)

    def evaluate(p_vec) -> float | None:
        totals: dict[int, float] = {}
        for (m, u), w in zip(assignments, p_vec):
            totals[u] = totals.get(u, 0.0) + w
        if cfg.R_min > 0.0:
            rates = _assignment_rates(tb, units, matching, totals, cfg)
            if any(r < cfg.R_min for r in rates.values()):
                return None
        r = sum(unit_rate_sum(tb, units, u, matching.sc_to_pairs[u], q, cfg)
                for u, q in totals.items())
        return r / (cfg.P_c + sum(p_vec))

    best_vec, best_ee = None, -1.0
    if cfg.per_sc_power_cap:
        per_unit: dict[int, list[int]] = {}
        for idx, (m, u) in enumerate(assignments):
            per_unit.setdefault(u, []).append(idx)
        cap = cfg.P_s / len(units)

        def rec(unit_ids, current):
            if not unit_ids:
                yield tuple(current)
                return
            u0, rest = unit_ids[0], unit_ids[1:]
            for comp in _compositions(grid_points, len(per_unit[u0])):
                nxt = list(current)
                for idx, kk in zip(per_unit[u0], comp):
                    nxt[idx] = kk * cap / grid_points
                yield from rec(rest, nxt)

        candidates = rec(sorted(per_unit), [0.0] * dims)
    else:
        candidates = ((tuple(k * cfg.P_s / grid_points for k in comp))
                      for comp in _compositions(grid_points, dims))

    for vec in candidates:
        ee = evaluate(vec)
        if ee is not None and ee > best_ee:
            best_ee, best_vec = ee, vec
    if best_vec is None:
        raise InfeasiblePowerError("no feasible grid point under the QoS floor")
    p = {a: w for a, w in zip(assignments, best_vec)}
    totals: dict[int, float] = {}
    for (m, u), w in p.items():
        totals[u] = totals.get(u, 0.0) + w
    total = sum(p.values())
    fracs = {u: q / total for u, q in totals.items()} if total > 0 else {}
    return PowerAllocation(p=p, u_level=best_ee, u_fracs=fracs), best_ee
