"""Monte Carlo experiment driver.

Builds sweep scenarios, runs the channel -> matching -> power -> rates
pipeline per (sweep value, trial, scheme), and aggregates rows into a
deterministic CSV. Every row records the seed that regenerates it in
isolation. Trials are independent work units; `NOMA_LAB_THREADS` caps the
process pool (0 = auto, 1 = serial), and aggregation is a deterministic
sort regardless of completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import generate_topology, sample_channels
from .config import SystemConfig, ConfigError, parse_config_lines, config_from_mapping, dbm_to_w
from .matching import Matching, matching_ee, random_assignment, scas1, scas2
from .power import InfeasiblePowerError, dinkelbach_allocate

SCHEMES = ("SSPA-1", "SSPA-2", "RA-NOMA")

CSV_HEADER = ("scenario,scheme,sweep_param,sweep_value,trial,seed,"
              "total_r_sec_bps,ee_bps_per_w,match_ops,solver_iters,converged")

SWEEPABLE = ("M", "N", "Pc_dB", "sigma2_dBm", "P_Am_over_sigma2_dB")


@dataclass(frozen=True)
class Scenario:
    name: str
    base: SystemConfig
    sweep_param: str
    sweep_values: tuple[float, ...]
    schemes: tuple[str, ...]
    trials: int = 200

    def validate(self) -> "Scenario":
        if not self.sweep_values:
            raise ConfigError("sweep values must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unrecognized scheme {s!r}")
        if self.sweep_param not in SWEEPABLE:
            raise ConfigError(f"unknown sweep parameter {self.sweep_param!r}; "
                              f"choose one of {', '.join(SWEEPABLE)}")
        return self


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    scheme: str
    sweep_param: str
    sweep_value: float
    trial: int
    seed: int
    total_r_sec_bps: float
    ee_bps_per_w: float
    match_ops: int
    solver_iters: int
    converged: bool


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def sort(self) -> "ResultTable":
        self.rows.sort(key=lambda r: (r.sweep_value, r.scheme, r.trial))
        return self

    def select(self, scheme: str | None = None,
               sweep_value: float | None = None) -> list[ResultRow]:
        return [r for r in self.rows
                if (scheme is None or r.scheme == scheme)
                and (sweep_value is None or r.sweep_value == sweep_value)]


def apply_sweep(cfg: SystemConfig, param: str, value: float) -> SystemConfig:
    """Config for one sweep point."""
    if param == "M":
        return replace(cfg, M=int(value)).validate()
    if param == "N":
        return replace(cfg, N=int(value)).validate()
    if param == "Pc_dB":
        return replace(cfg, P_c=10.0 ** (value / 10.0)).validate()
    if param == "sigma2_dBm":
        sigma2 = dbm_to_w(value)
        return replace(cfg, N0=sigma2 / cfg.sc_bandwidth).validate()
    if param == "P_Am_over_sigma2_dB":
        sigma2 = cfg.P_Am / (10.0 ** (value / 10.0))
        return replace(cfg, N0=sigma2 / cfg.sc_bandwidth).validate()
    raise ConfigError(f"unknown sweep parameter {param!r}")


def derive_trial_seed(base_seed: int, trial: int) -> int:
    """Stable per-trial seed from (base seed, trial index).

    The sweep index is deliberately left out: the same trial shares its
    channel realization across sweep values (common random numbers), which
    makes sweep comparisons paired rather than independent."""
    ss = np.random.SeedSequence([base_seed, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _trial_streams(seed: int):
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def run_trial(cfg: SystemConfig, scheme: str, seed: int) -> dict:
    """One (channel, scheme) pipeline; returns the row metrics.

    The topology/fading streams depend only on the seed, so all schemes of a
    trial see the same channels and any recorded row can be regenerated from
    (cfg, scheme, seed) alone."""
    rng_topo, rng_fade, rng_ra, rng_init = _trial_streams(seed)
    topo = generate_topology(cfg, rng_topo)
    ch = sample_channels(topo, cfg, rng_fade)

    if scheme == "RA-NOMA":
        mt = random_assignment(cfg, rng_ra)
        ee, r_total = matching_ee(mt, ch, cfg)
        feasible = True
        if cfg.R_min > 0.0:
            from .matching import sc_units, _unit_rate_map
            from .rates import ChannelTables
            tb = ChannelTables(ch)
            units = sc_units(cfg)
            budget = cfg.P_s / len(units)
            for u, members in enumerate(mt.sc_to_pairs):
                rates = _unit_rate_map(tb, units, u, members, budget, cfg)
                if any(r < cfg.R_min for r in rates.values()):
                    feasible = False
                    break
        return dict(total_r_sec=r_total, ee=ee, match_ops=0,
                    solver_iters=0, converged=feasible)

    if scheme == "SSPA-1":
        mt = scas1(ch, cfg)
    elif scheme == "SSPA-2":
        mt = scas2(ch, cfg, random_assignment(cfg, rng_init))
    else:
        raise ConfigError(f"unrecognized scheme {scheme!r}")
    match_ops = mt.stats.accepted_swaps if mt.stats else 0
    try:
        alloc, report = dinkelbach_allocate(mt, ch, cfg)
    except InfeasiblePowerError:
        ee, r_total = matching_ee(mt, ch, cfg)
        return dict(total_r_sec=r_total, ee=ee, match_ops=match_ops,
                    solver_iters=0, converged=False)
    ee = report.ee_trajectory[-1]
    r_total = ee * (cfg.P_c + alloc.transmit_power)
    return dict(total_r_sec=r_total, ee=ee, match_ops=match_ops,
                solver_iters=report.iterations, converged=report.converged)


def _run_point(args) -> list[ResultRow]:
    name, cfg, param, value, schemes, trial, seed = args
    rows = []
    for scheme in schemes:
        metrics = run_trial(cfg, scheme, seed)
        rows.append(ResultRow(
            scenario=name, scheme=scheme, sweep_param=param,
            sweep_value=float(value), trial=trial, seed=seed,
            total_r_sec_bps=metrics["total_r_sec"],
            ee_bps_per_w=metrics["ee"],
            match_ops=metrics["match_ops"],
            solver_iters=metrics["solver_iters"],
            converged=metrics["converged"]))
    return rows


def _thread_budget() -> int:
    raw = os.environ.get("NOMA_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"NOMA_LAB_THREADS must be an integer, got {raw!r}")
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def run_scenario(scenario: Scenario) -> ResultTable:
    """Run every (sweep value, trial, scheme) and aggregate deterministically."""
    scenario.validate()
    tasks = []
    for value in scenario.sweep_values:
        cfg = apply_sweep(scenario.base, scenario.sweep_param, value)
        for trial in range(scenario.trials):
            seed = derive_trial_seed(scenario.base.rng_seed, trial)
            tasks.append((scenario.name, cfg, scenario.sweep_param, value,
                          scenario.schemes, trial, seed))
    workers = _thread_budget()
    table = ResultTable()
    if workers <= 1 or len(tasks) < 2:
        for task in tasks:
            table.rows.extend(_run_point(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(_run_point, tasks, chunksize=4):
                table.rows.extend(rows)
    return table.sort()


def cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF points (value, cumulative fraction), ties merged."""
    values = list(values)
    if not values:
        raise ValueError("cdf of an empty sequence")
    values.sort()
    n = len(values)
    out: list[tuple[float, float]] = []
    for idx, v in enumerate(values, start=1):
        if idx < n and values[idx] == v:
            continue
        out.append((v, idx / n))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(table: ResultTable, path: str) -> None:
    """Write the result table as UTF-8 CSV, rows sorted by
    (sweep_value, scheme, trial)."""
    table.sort()
    lines = [CSV_HEADER]
    for r in table.rows:
        lines.append(",".join([
            r.scenario, r.scheme, r.sweep_param, _fmt(r.sweep_value),
            str(r.trial), str(r.seed), _fmt(r.total_r_sec_bps),
            _fmt(r.ee_bps_per_w), str(r.match_ops), str(r.solver_iters),
            "true" if r.converged else "false"]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> ResultTable:
    """Parse a CSV written by emit_csv back into a ResultTable."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: unexpected CSV header")
    table = ResultTable()
    for ln in lines[1:]:
        (scenario, scheme, param, value, trial, seed, r_sec, ee, ops,
         iters, converged) = ln.split(",")
        table.rows.append(ResultRow(
            scenario=scenario, scheme=scheme, sweep_param=param,
            sweep_value=float(value), trial=int(trial), seed=int(seed),
            total_r_sec_bps=float(r_sec), ee_bps_per_w=float(ee),
            match_ops=int(ops), solver_iters=int(iters),
            converged=converged == "true"))
    return table


def mean_ci95(values) -> tuple[float, float, float]:
    """(mean, lo, hi) of the normal-approximation 95% confidence interval."""
    values = np.asarray(list(values), dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean, mean
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, mean - half, mean + half


def builtin_scenarios(base: SystemConfig | None = None) -> dict[str, Scenario]:
    """Desk-scale sweeps mirroring the reference figure setups."""
    cfg = (base if base is not None else SystemConfig()).validate()
    cj = replace(cfg, cj_enabled=True)
    all3 = SCHEMES
    return {
        "fig2": Scenario("fig2", cfg, "M", (4.0, 8.0, 12.0), ("SSPA-1",)),
        "fig3": Scenario("fig3", cfg, "M", (4.0, 8.0, 12.0), ("SSPA-2",)),
        "fig4": Scenario("fig4", cfg, "M", (10.0,), all3),
        "fig5": Scenario("fig5", cfg, "P_Am_over_sigma2_dB",
                         (105.0, 115.0, 125.0, 135.0, 145.0, 155.0), all3),
        "fig6": Scenario("fig6", cfg, "Pc_dB", (0.1, 0.5, 1.0, 1.5), all3),
        "fig7": Scenario("fig7", cj, "sigma2_dBm",
                         (-100.0, -95.0, -90.0, -85.0, -80.0), all3),
        "fig8": Scenario("fig8", cj, "N", (6.0, 8.0, 10.0), ("SSPA-1",)),
        "fig9": Scenario("fig9", cj, "M", (4.0, 7.0, 10.0), ("SSPA-2",)),
    }


def parse_scenario_file(path: str, base: SystemConfig | None = None) -> Scenario:
    """Scenario file: config keys plus `sweep = param: v1,v2,...`,
    `schemes = ...`, and optional `trials = n` / `name = ...` lines."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = parse_config_lines(fh.read())
    name = raw.pop("name", os.path.splitext(os.path.basename(path))[0])
    sweep = raw.pop("sweep", None)
    schemes_raw = raw.pop("schemes", ",".join(SCHEMES))
    trials = int(raw.pop("trials", "200"))
    if sweep is None:
        raise ConfigError(f"{path}: missing 'sweep = param: v1,v2,...'")
    param, _, values_str = sweep.partition(":")
    values = tuple(float(tok) for tok in values_str.split(",") if tok.strip())
    schemes = tuple(tok.strip() for tok in schemes_raw.split(",") if tok.strip())
    cfg = config_from_mapping(raw, base=base)
    return Scenario(name=name, base=cfg, sweep_param=param.strip(),
                    sweep_values=values, schemes=schemes,
                    trials=trials).validate()
