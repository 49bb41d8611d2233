"""Command-line entry point.

    noma-lab run <scenario> [--out path] [--seed n] [--set k=v ...] [--trials n] [--no-plot]
    noma-lab validate <config>
    noma-lab oracle <config> [--seed n] [--set k=v ...]
    noma-lab list-scenarios

Exit status: 0 success, 1 validation failure, 2 infeasible scenario.
`run` writes the CSV (and a PNG alongside unless --no-plot) and prints one
summary line per scheme: `scheme mean_ee ci95_lo ci95_hi trials`.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import harness
from .channel import generate_topology, sample_channels
from .config import ConfigError, SystemConfig, apply_overrides, load_config
from .matching import exhaustive_best, random_assignment, scas2, sc_units
from .power import InfeasiblePowerError, dinkelbach_allocate, grid_oracle


@dataclass
class Command:
    verb: str
    target: str | None = None
    out: str | None = None
    seed: int | None = None
    sets: list[str] = field(default_factory=list)
    trials: int | None = None
    plot: bool = True
    verbose: bool = False


def parse_args(argv: list[str]) -> Command:
    parser = argparse.ArgumentParser(
        prog="noma-lab",
        description="Secrecy-EE resource allocation experiments for NOMA "
                    "two-way relay networks.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a built-in or file scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="CSV output path")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--set", dest="sets", action="append", default=[],
                       metavar="KEY=VALUE")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--no-plot", dest="plot", action="store_false")
    p_run.add_argument("-v", "--verbose", action="store_true")

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")

    p_or = sub.add_parser("oracle", help="run the exhaustive/grid oracles "
                                         "on a small instance")
    p_or.add_argument("config", nargs="?", default=None)
    p_or.add_argument("--seed", type=int, default=None)
    p_or.add_argument("--set", dest="sets", action="append", default=[],
                      metavar="KEY=VALUE")

    sub.add_parser("list-scenarios", help="list built-in scenario names")

    ns = parser.parse_args(argv)
    return Command(verb=ns.verb,
                   target=getattr(ns, "scenario", None) or getattr(ns, "config", None),
                   out=getattr(ns, "out", None),
                   seed=getattr(ns, "seed", None),
                   sets=list(getattr(ns, "sets", [])),
                   trials=getattr(ns, "trials", None),
                   plot=getattr(ns, "plot", True),
                   verbose=getattr(ns, "verbose", False))


def _resolve_scenario(cmd: Command) -> harness.Scenario:
    builtins = harness.builtin_scenarios()
    if cmd.target in builtins:
        scenario = builtins[cmd.target]
    elif cmd.target and os.path.exists(cmd.target):
        scenario = harness.parse_scenario_file(cmd.target)
    else:
        names = ", ".join(sorted(builtins))
        raise ConfigError(
            f"unknown scenario {cmd.target!r}; built-in scenarios: {names}")
    base = scenario.base
    if cmd.sets:
        base = apply_overrides(base, cmd.sets)
    if cmd.seed is not None:
        base = replace(base, rng_seed=cmd.seed)
    scenario = replace(scenario, base=base)
    if cmd.trials is not None:
        scenario = replace(scenario, trials=cmd.trials)
    return scenario.validate()


def _cmd_run(cmd: Command) -> int:
    scenario = _resolve_scenario(cmd)
    table = harness.run_scenario(scenario)
    out = cmd.out or f"{scenario.name}.csv"
    harness.emit_csv(table, out)
    if cmd.plot:
        from .plotting import render_scenario
        render_scenario(table, os.path.splitext(out)[0] + ".png")
    infeasible_schemes = []
    for scheme in scenario.schemes:
        rows = [r for r in table.rows if r.scheme == scheme]
        ee = [r.ee_bps_per_w for r in rows]
        mean, lo, hi = harness.mean_ci95(ee)
        print(f"{scheme} {mean!r} {lo!r} {hi!r} {len(ee)}")
        if rows and not any(r.converged for r in rows):
            infeasible_schemes.append(scheme)
    if cmd.verbose:
        print(f"# wrote {out} ({len(table.rows)} rows)", file=sys.stderr)
    if infeasible_schemes:
        print(f"infeasible: every trial failed for "
              f"{', '.join(infeasible_schemes)}", file=sys.stderr)
        return 2
    return 0


def _cmd_validate(cmd: Command) -> int:
    cfg = load_config(cmd.target)
    cfg.validate()
    print(f"ok: {cmd.target}")
    return 0


def _cmd_oracle(cmd: Command) -> int:
    if cmd.target is not None:
        cfg = load_config(cmd.target)
    else:
        cfg = SystemConfig(M=2, N=2, H=1, V=1)
    if cmd.sets:
        cfg = apply_overrides(cfg, cmd.sets)
    if cmd.seed is not None:
        cfg = replace(cfg, rng_seed=cmd.seed)
    cfg.validate()
    if cfg.M * cfg.N > 9 or cfg.H * len(sc_units(cfg)) > 9:
        raise ConfigError("oracle needs a small instance (M*N <= 9)")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    topo = generate_topology(cfg, rng)
    ch = sample_channels(topo, cfg, rng)

    best_matching, best_ee = exhaustive_best(ch, cfg)
    mt = scas2(ch, cfg, random_assignment(cfg, rng))
    from .matching import matching_ee
    scas_ee, _ = matching_ee(mt, ch, cfg)
    rel_match = abs(scas_ee - best_ee) / max(best_ee, 1e-300)
    print(f"scas2_ee {scas_ee!r}")
    print(f"exhaustive_ee {best_ee!r}")
    print(f"matching_rel_delta {rel_match!r}")

    try:
        alloc, report = dinkelbach_allocate(best_matching, ch, cfg)
        dink_ee = report.ee_trajectory[-1]
    except InfeasiblePowerError as exc:
        print(f"dinkelbach infeasible: {exc}", file=sys.stderr)
        return 2
    _, grid_ee = grid_oracle(best_matching, ch, cfg, grid_points=50)
    rel_power = (dink_ee - grid_ee) / max(grid_ee, 1e-300)
    print(f"dinkelbach_ee {dink_ee!r}")
    print(f"grid_ee {grid_ee!r}")
    print(f"power_rel_delta {rel_power!r}")
    return 0


def _cmd_list(_: Command) -> int:
    for name, sc in sorted(harness.builtin_scenarios().items()):
        values = ",".join(f"{v:g}" for v in sc.sweep_values)
        print(f"{name}: sweep {sc.sweep_param} in [{values}], "
              f"schemes {'/'.join(sc.schemes)}, trials {sc.trials}")
    return 0


def main(argv: list[str] | None = None) -> int:
    cmd = parse_args(sys.argv[1:] if argv is None else argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate,
                "oracle": _cmd_oracle, "list-scenarios": _cmd_list}
    try:
        return handlers[cmd.verb](cmd)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasiblePowerError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
