"""Many-to-many matching between user pairs and SC pairs.

Holds the matching data model, FTPA power attribution, the CRNN-greedy
scheme with a swap phase (SCAS-1), the swap search from an arbitrary
feasible start (SCAS-2), the random baseline, and an exhaustive enumeration
oracle for small instances.

A swap exchanges one SC pair between two user pairs; it is executed only if
the total secrecy energy efficiency strictly increases (SCAS-1 additionally
requires both swapped pairs to keep or improve their own utility).
Capacities are preserved by construction. During matching the relay budget
is split equally across SC pairs, so the EE denominator is the constant
P_c + P_s and swap acceptance reduces to comparing secrecy-rate sums.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState
from .config import SystemConfig
from .rates import ChannelTables, unit_rates_for_config

# instances with at most this many feasible matchings are sampled exactly
# uniformly by enumeration; larger ones fall back to random saturation
_UNIFORM_ENUM_LIMIT = 200_000


class MatchingError(ValueError):
    """Raised for infeasible or inconsistent matching input."""


class InstanceTooLargeError(RuntimeError):
    """Raised when an exhaustive oracle would exceed its enumeration guard."""


def sc_units(cfg: SystemConfig) -> list[tuple[int, int]]:
    """SC-pair units (MA SC, BC SC): diagonal (i, i) by default."""
    if cfg.sc_full_pairing:
        return [(i, j) for i in range(cfg.N) for j in range(cfg.N)]
    return [(i, i) for i in range(cfg.N)]


@dataclass
class MatchStats:
    """Instrumentation from a swap search."""

    accepted_swaps: int = 0
    sweeps: int = 0
    proposals_per_sweep: list[int] = field(default_factory=list)
    ee_trajectory: list[float] = field(default_factory=list)

    @property
    def proposals_evaluated(self) -> int:
        return sum(self.proposals_per_sweep)


class Matching:
    """Mutually consistent assignment between M user pairs and SC-pair units."""

    def __init__(self, n_pairs: int, n_units: int):
        self.n_pairs = n_pairs
        self.n_units = n_units
        self.pair_to_scs: list[set[int]] = [set() for _ in range(n_pairs)]
        self.sc_to_pairs: list[set[int]] = [set() for _ in range(n_units)]
        self.stats: MatchStats | None = None

    def add(self, m: int, u: int) -> None:
        self.pair_to_scs[m].add(u)
        self.sc_to_pairs[u].add(m)

    def remove(self, m: int, u: int) -> None:
        self.pair_to_scs[m].discard(u)
        self.sc_to_pairs[u].discard(m)

    def swap(self, m: int, u_m: int, n: int, u_n: int) -> None:
        """Exchange unit u_m of pair m with unit u_n of pair n."""
        assert u_m in self.pair_to_scs[m] and u_n in self.pair_to_scs[n]
        assert u_m not in self.pair_to_scs[n] and u_n not in self.pair_to_scs[m]
        self.remove(m, u_m)
        self.remove(n, u_n)
        self.add(m, u_n)
        self.add(n, u_m)
        assert m in self.sc_to_pairs[u_n] and n in self.sc_to_pairs[u_m]

    def copy(self) -> "Matching":
        out = Matching(self.n_pairs, self.n_units)
        for m, scs in enumerate(self.pair_to_scs):
            for u in scs:
                out.add(m, u)
        return out

    def validate(self, H: int, V: int) -> "Matching":
        for u, members in enumerate(self.sc_to_pairs):
            if len(members) > H:
                raise MatchingError(f"unit {u} exceeds H={H}")
            for m in members:
                if u not in self.pair_to_scs[m]:
                    raise MatchingError("mutual consistency violated")
        for m, scs in enumerate(self.pair_to_scs):
            if len(scs) > V:
                raise MatchingError(f"pair {m} exceeds V={V}")
            for u in scs:
                if m not in self.sc_to_pairs[u]:
                    raise MatchingError("mutual consistency violated")
        return self

    def assignments(self) -> list[tuple[int, int]]:
        """All (pair, unit) assignments, lexicographically sorted."""
        return sorted((m, u) for m, scs in enumerate(self.pair_to_scs) for u in scs)

    def total_assignments(self) -> int:
        return sum(len(s) for s in self.pair_to_scs)

    def encoding(self) -> tuple[tuple[int, ...], ...]:
        """Canonical encoding: per-unit sorted member tuples."""
        return tuple(tuple(sorted(members)) for members in self.sc_to_pairs)

    def c_tensor(self) -> np.ndarray:
        """Binary view c[m, u] of the assignment."""
        c = np.zeros((self.n_pairs, self.n_units), dtype=np.int8)
        for m, scs in enumerate(self.pair_to_scs):
            for u in scs:
                c[m, u] = 1
        return c

    def __eq__(self, other) -> bool:
        return (isinstance(other, Matching)
                and self.n_pairs == other.n_pairs
                and self.encoding() == other.encoding())

    def to_text(self) -> str:
        lines = [f"{u}: " + ",".join(str(m) for m in sorted(members))
                 for u, members in enumerate(self.sc_to_pairs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_pairs: int | None = None) -> "Matching":
        rows: list[list[int]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            u_str, _, members_str = line.partition(":")
            u = int(u_str)
            if u != len(rows):
                raise MatchingError("unit lines out of order")
            members = [int(tok) for tok in members_str.split(",") if tok.strip()]
            rows.append(members)
        if n_pairs is None:
            n_pairs = max((m for row in rows for m in row), default=-1) + 1
        out = cls(n_pairs, len(rows))
        for u, members in enumerate(rows):
            for m in members:
                out.add(m, u)
        return out


def ftpa_power(members, ch: ChannelState, sc: int, p_budget: float,
               lam: float) -> dict[int, float]:
    """Fractional transmit power attribution on one BC SC: share
    proportional to (pair CRNN)^(-lambda); shares sum to `p_budget`."""
    members = sorted(members)
    if not members:
        raise MatchingError("members must be nonempty")
    if p_budget < 0.0:
        raise MatchingError("p_budget must be >= 0")
    crnns = [ch.pair_crnn(m, sc) for m in members]
    if lam > 0.0 and any(g == 0.0 for g in crnns):
        raise MatchingError("zero CRNN makes the FTPA weight singular")
    weights = [g ** (-lam) if lam != 0.0 else 1.0 for g in crnns]
    total = sum(weights)
    return {m: p_budget * w / total for m, w in zip(members, weights)}


def ftpa_allocation(matching: Matching, ch: ChannelState,
                    cfg: SystemConfig) -> dict[tuple[int, int], float]:
    """Per-(pair, unit) power attribution with the equal per-unit budget."""
    units = sc_units(cfg)
    budget = cfg.P_s / len(units)
    p: dict[tuple[int, int], float] = {}
    for u, members in enumerate(matching.sc_to_pairs):
        if not members:
            continue
        shares = ftpa_power(members, ch, units[u][1], budget, cfg.lambda_ftpa)
        for m, w in shares.items():
            p[(m, u)] = w
    return p


def unit_rate_sum(tb: ChannelTables, units, u: int, members,
                  relay_power: float, cfg: SystemConfig) -> float:
    """Total secrecy rate of one unit for a given member set."""
    if not members:
        return 0.0
    i, j = units[u]
    rates = unit_rates_for_config(tb, i, j, sorted(members), relay_power, cfg)
    return sum(r.r_sec for r in rates)


def _unit_rate_map(tb: ChannelTables, units, u: int, members,
                   relay_power: float, cfg: SystemConfig) -> dict[int, float]:
    """Per-member secrecy rate of one unit for a given member set."""
    if not members:
        return {}
    ms = sorted(members)
    i, j = units[u]
    rates = unit_rates_for_config(tb, i, j, ms, relay_power, cfg)
    return {m: r.r_sec for m, r in zip(ms, rates)}


def matching_ee(matching: Matching, ch_or_tb, cfg: SystemConfig) -> tuple[float, float]:
    """(ee, r_total) of a matching under the equal per-unit relay split,
    with the full budget committed (denominator P_c + P_s)."""
    tb = ch_or_tb if isinstance(ch_or_tb, ChannelTables) else ChannelTables(ch_or_tb)
    units = sc_units(cfg)
    budget = cfg.P_s / len(units)
    r_total = sum(unit_rate_sum(tb, units, u, members, budget, cfg)
                  for u, members in enumerate(matching.sc_to_pairs) if members)
    return r_total / (cfg.P_c + cfg.P_s), r_total


def _swap_to_stability(matching: Matching, tb: ChannelTables,
                       cfg: SystemConfig, movers_must_gain: bool) -> MatchStats:
    """First-improvement swap search, lexicographic proposal order over
    (m, n, sc_i, sc_j), restarted after each accepted swap.

    A swap is executed iff the total secrecy EE strictly increases; with
    `movers_must_gain` (the SCAS-1 approval rule) both swapped pairs must
    additionally keep or improve their own assignment utility, at least one
    strictly. Terminates at a swap-stable matching, after L_m accepted
    swaps, or after L_m restart-free sweeps.
    """
    units = sc_units(cfg)
    budget = cfg.P_s / len(units)
    denom = cfg.P_c + cfg.P_s
    rate_maps = [_unit_rate_map(tb, units, u, members, budget, cfg)
                 for u, members in enumerate(matching.sc_to_pairs)]
    total = sum(sum(r.values()) for r in rate_maps)
    stats = MatchStats(ee_trajectory=[total / denom])

    while stats.accepted_swaps < cfg.L_m and stats.sweeps < cfg.L_m:
        evaluated = 0
        accepted = False
        for m in range(matching.n_pairs):
            scs_m = matching.pair_to_scs[m]
            if not scs_m:
                continue
            for n in range(m + 1, matching.n_pairs):
                scs_n = matching.pair_to_scs[n]
                if not scs_n:
                    continue
                for u_m in sorted(scs_m - scs_n):
                    for u_n in sorted(scs_n - scs_m):
                        evaluated += 1
                        new_map_m = _unit_rate_map(
                            tb, units, u_m,
                            (matching.sc_to_pairs[u_m] - {m}) | {n},
                            budget, cfg)
                        new_map_n = _unit_rate_map(
                            tb, units, u_n,
                            (matching.sc_to_pairs[u_n] - {n}) | {m},
                            budget, cfg)
                        delta = (sum(new_map_m.values()) + sum(new_map_n.values())
                                 - sum(rate_maps[u_m].values())
                                 - sum(rate_maps[u_n].values()))
                        if delta <= 0.0:
                            continue
                        if movers_must_gain:
                            m_old, m_new = rate_maps[u_m][m], new_map_n[m]
                            n_old, n_new = rate_maps[u_n][n], new_map_m[n]
                            if m_new < m_old or n_new < n_old:
                                continue
                            if not (m_new > m_old or n_new > n_old):
                                continue
                        matching.swap(m, u_m, n, u_n)
                        rate_maps[u_m] = new_map_m
                        rate_maps[u_n] = new_map_n
                        total += delta
                        stats.ee_trajectory.append(total / denom)
                        stats.accepted_swaps += 1
                        accepted = True
                        break
                    if accepted:
                        break
                if accepted:
                    break
            if accepted:
                break
        stats.sweeps += 1
        stats.proposals_per_sweep.append(evaluated)
        if not accepted:
            break
        if stats.accepted_swaps >= cfg.L_m:
            break
    return stats


def scas1(ch: ChannelState, cfg: SystemConfig) -> Matching:
    """CRNN-greedy assignment followed by the restricted swap phase.

    Phase 1: units in descending best-CRNN order admit their most-preferred
    (highest pair-CRNN) eligible pair, one per unit per round, until full.
    Phase 2: swap search where an executed swap must improve the total EE
    and leave neither swapped pair worse off.
    """
    units = sc_units(cfg)
    if cfg.M * min(cfg.V, len(units)) == 0:
        raise MatchingError("no feasible assignment capacity")
    tb = ChannelTables(ch)
    matching = Matching(cfg.M, len(units))

    def crnn(m: int, u: int) -> float:
        return ch.pair_crnn(m, units[u][1])

    unit_order = sorted(range(len(units)),
                        key=lambda u: (-max(crnn(m, u) for m in range(cfg.M)), u))
    prefs = {u: sorted(range(cfg.M), key=lambda m: (-crnn(m, u), m))
             for u in unit_order}
    admitted = True
    while admitted:
        admitted = False
        for u in unit_order:
            if len(matching.sc_to_pairs[u]) >= cfg.H:
                continue
            for m in prefs[u]:
                if (len(matching.pair_to_scs[m]) < cfg.V
                        and u not in matching.pair_to_scs[m]):
                    matching.add(m, u)
                    admitted = True
                    break

    matching.stats = _swap_to_stability(matching, tb, cfg, movers_must_gain=True)
    return matching.validate(cfg.H, cfg.V)


def _greedy_repack(matching: Matching, tb: ChannelTables,
                   cfg: SystemConfig) -> bool:
    """Single-assignment edits (add, drop, relocate, replace one member)
    applied best-gain-first while one strictly improves the total EE.
    Returns whether anything changed.

    Swaps preserve the assignment count and need a partner on the target
    SC, so without these edits an arbitrary init pins the search to its
    packing: capacity-saturated inits stay interference-packed and a pair
    at its V cap can never reach a better free SC."""
    units = sc_units(cfg)
    budget = cfg.P_s / len(units)
    unit_rsec = [unit_rate_sum(tb, units, u, members, budget, cfg)
                 for u, members in enumerate(matching.sc_to_pairs)]

    def rate(u: int, members) -> float:
        return unit_rate_sum(tb, units, u, members, budget, cfg)

    changed = False
    while True:
        # per-scan cache: EE delta of removing m from one of its units
        drop_delta = {}
        for m in range(matching.n_pairs):
            for u_from in matching.pair_to_scs[m]:
                drop_delta[(m, u_from)] = (
                    rate(u_from, matching.sc_to_pairs[u_from] - {m})
                    - unit_rsec[u_from])

        best_gain, best_edit = 0.0, None
        for m in range(matching.n_pairs):
            scs_m = matching.pair_to_scs[m]
            spare_v = len(scs_m) < cfg.V
            for u in range(matching.n_units):
                members = matching.sc_to_pairs[u]
                if u in scs_m:
                    gain = drop_delta[(m, u)]
                    if gain > best_gain:
                        best_gain, best_edit = gain, [("del", m, u)]
                    continue
                if len(members) < cfg.H:
                    with_m = rate(u, members | {m})
                    if spare_v:
                        gain = with_m - unit_rsec[u]
                        if gain > best_gain:
                            best_gain, best_edit = gain, [("ins", m, u)]
                    else:
                        # relocate: leave one of m's current units for u
                        for u_from in scs_m:
                            gain = (with_m - unit_rsec[u]
                                    + drop_delta[(m, u_from)])
                            if gain > best_gain:
                                best_gain = gain
                                best_edit = [("del", m, u_from), ("ins", m, u)]
                if spare_v:
                    # replace: evict one member in favor of m (works on full
                    # units too; the member count is unchanged)
                    for out in members:
                        gain = rate(u, (members - {out}) | {m}) - unit_rsec[u]
                        if gain > best_gain:
                            best_gain = gain
                            best_edit = [("del", out, u), ("ins", m, u)]
        if best_edit is None:
            return changed
        for kind, mm, uu in best_edit:
            if kind == "del":
                matching.remove(mm, uu)
            else:
                matching.add(mm, uu)
            unit_rsec[uu] = rate(uu, matching.sc_to_pairs[uu])
        changed = True


def scas2(ch: ChannelState, cfg: SystemConfig, init: Matching) -> Matching:
    """Swap search from an arbitrary feasible initial matching.

    Alternates a greedy repack of the init (single-assignment edits while
    they improve the total EE) with the swap phase, until neither finds an
    improvement; every executed step strictly increases the total secrecy
    EE, so the alternation terminates."""
    units = sc_units(cfg)
    if init.n_pairs != cfg.M or init.n_units != len(units):
        raise MatchingError("init has wrong dimensions")
    init.validate(cfg.H, cfg.V)
    tb = ChannelTables(ch)
    matching = init.copy()
    stats = MatchStats()
    for _ in range(cfg.L_m):
        repacked = _greedy_repack(matching, tb, cfg)
        round_stats = _swap_to_stability(matching, tb, cfg,
                                         movers_must_gain=False)
        stats.accepted_swaps += round_stats.accepted_swaps
        stats.sweeps += round_stats.sweeps
        stats.proposals_per_sweep.extend(round_stats.proposals_per_sweep)
        if stats.ee_trajectory:
            stats.ee_trajectory.extend(round_stats.ee_trajectory[1:])
        else:
            stats.ee_trajectory.extend(round_stats.ee_trajectory)
        if not repacked and round_stats.accepted_swaps == 0:
            break
    matching.stats = stats
    return matching.validate(cfg.H, cfg.V)


def _iter_feasible(n_pairs: int, n_units: int, H: int, V: int):
    """Yield every feasible matching encoding, DFS over (pair, unit) cells."""
    unit_load = [0] * n_units
    pair_load = [0] * n_pairs
    chosen: list[tuple[int, int]] = []
    cells = [(m, u) for m in range(n_pairs) for u in range(n_units)]

    def rec(idx: int):
        if idx == len(cells):
            members = [[] for _ in range(n_units)]
            for m, u in chosen:
                members[u].append(m)
            yield tuple(tuple(row) for row in members)
            return
        m, u = cells[idx]
        yield from rec(idx + 1)
        if unit_load[u] < H and pair_load[m] < V:
            unit_load[u] += 1
            pair_load[m] += 1
            chosen.append((m, u))
            yield from rec(idx + 1)
            chosen.pop()
            unit_load[u] -= 1
            pair_load[m] -= 1

    yield from rec(0)


def _partial_injection_count(n_pairs: int, n_units: int, limit: int) -> int:
    """Number of 1-regular matchings (each pair <= 1 unit, each unit <= 1
    pair): a cheap lower bound on the feasible count, capped at limit+1."""
    total = 0
    term = 1  # C(n_pairs, k) * C(n_units, k) * k! for k = 0
    for k in range(min(n_pairs, n_units) + 1):
        total += term
        if total > limit:
            return limit + 1
        term = term * (n_pairs - k) * (n_units - k) // (k + 1)
    return total


def count_feasible_matchings(n_pairs: int, n_units: int, H: int, V: int,
                             limit: int) -> int | None:
    """Number of feasible matchings, or None once `limit` is exceeded."""
    if _partial_injection_count(n_pairs, n_units, limit) > limit:
        return None
    count = 0
    for _ in _iter_feasible(n_pairs, n_units, H, V):
        count += 1
        if count > limit:
            return None
    return count


@functools.lru_cache(maxsize=16)
def _feasible_list(n_pairs: int, n_units: int, H: int, V: int,
                   limit: int) -> tuple | None:
    if count_feasible_matchings(n_pairs, n_units, H, V, limit) is None:
        return None
    return tuple(_iter_feasible(n_pairs, n_units, H, V))


def _matching_from_encoding(enc, n_pairs: int) -> Matching:
    out = Matching(n_pairs, len(enc))
    for u, members in enumerate(enc):
        for m in members:
            out.add(m, u)
    return out


def random_assignment(cfg: SystemConfig, rng: np.random.Generator) -> Matching:
    """Random feasible matching respecting the H and V caps.

    Exactly uniform over all feasible matchings when the instance is small
    enough to enumerate; otherwise a uniformly-shuffled greedy saturation
    (a maximal feasible matching)."""
    units = sc_units(cfg)
    if cfg.M * min(cfg.V, len(units)) == 0:
        raise MatchingError("no feasible assignment capacity")
    pool = _feasible_list(cfg.M, len(units), cfg.H, cfg.V, _UNIFORM_ENUM_LIMIT)
    if pool is not None:
        enc = pool[int(rng.integers(len(pool)))]
        return _matching_from_encoding(enc, cfg.M).validate(cfg.H, cfg.V)
    matching = Matching(cfg.M, len(units))
    cells = [(m, u) for m in range(cfg.M) for u in range(len(units))]
    for idx in rng.permutation(len(cells)):
        m, u = cells[idx]
        if (len(matching.pair_to_scs[m]) < cfg.V
                and len(matching.sc_to_pairs[u]) < cfg.H):
            matching.add(m, u)
    return matching.validate(cfg.H, cfg.V)


def exhaustive_best(ch: ChannelState, cfg: SystemConfig,
                    limit: int = 1_000_000) -> tuple[Matching, float]:
    """Enumerate every feasible matching and return the EE argmax
    (ties broken toward the lexicographically smallest encoding)."""
    units = sc_units(cfg)
    if count_feasible_matchings(cfg.M, len(units), cfg.H, cfg.V, limit) is None:
        raise InstanceTooLargeError(
            f"more than {limit} feasible matchings; refusing to enumerate")
    tb = ChannelTables(ch)
    budget = cfg.P_s / len(units)
    denom = cfg.P_c + cfg.P_s
    best_enc = None
    best_ee = -1.0
    for enc in _iter_feasible(cfg.M, len(units), cfg.H, cfg.V):
        r_total = sum(unit_rate_sum(tb, units, u, members, budget, cfg)
                      for u, members in enumerate(enc) if members)
        ee = r_total / denom
        if ee > best_ee or (ee == best_ee and (best_enc is None or enc < best_enc)):
            best_ee = ee
            best_enc = enc
    return _matching_from_encoding(best_enc, cfg.M), best_ee
