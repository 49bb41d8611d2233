"""Acceptance suite: one test per exit criterion, pass/fail line printed
for each (run with `pytest tests/test_acceptance.py -s` to see them live).

Heavy Monte Carlo fixtures are session-scoped and shared across criteria;
statistical claims use paired one-sided tests at 95% confidence (trials
share channel realizations across sweep values by construction).
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from noma_lab.channel import generate_topology, sample_channels
from noma_lab.config import SystemConfig
from noma_lab.harness import (Scenario, apply_sweep, emit_csv, read_csv,
                              run_scenario)
from noma_lab.matching import (Matching, exhaustive_best, matching_ee,
                               random_assignment, scas1, scas2)
from noma_lab.power import dinkelbach_allocate, grid_oracle
from noma_lab.rates import (eve_channel, secrecy_rate, sinr_pair_cj,
                            sinr_pair_nocj)

from conftest import make_channels
from test_rates import alloc_for

pytestmark = pytest.mark.acceptance

TRIALS = 200
Z_95 = 1.645  # one-sided


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _paired_not_less(a: list[float], b: list[float]) -> tuple[bool, str]:
    """One-sided test of mean(a - b) >= 0 at 95% confidence."""
    d = np.asarray(a) - np.asarray(b)
    mean = float(d.mean())
    se = float(d.std(ddof=1)) / math.sqrt(d.size) if d.size > 1 else 0.0
    ok = mean >= -Z_95 * se
    return ok, f"mean diff {mean:.4g} (se {se:.4g}, n={d.size})"


def _ee_by_trial(table, scheme, value) -> list[float]:
    rows = sorted(table.select(scheme, value), key=lambda r: r.trial)
    return [r.ee_bps_per_w for r in rows]


@pytest.fixture(scope="session", autouse=True)
def _threads():
    os.environ.setdefault("NOMA_LAB_THREADS", "0")
    yield


@pytest.fixture(scope="session")
def defaults_table():
    sc = Scenario("defaults", SystemConfig(rng_seed=424242), "M", (10.0,),
                  ("SSPA-1", "SSPA-2", "RA-NOMA"), trials=TRIALS)
    return run_scenario(sc)


@pytest.fixture(scope="session")
def sigma2_table():
    base = replace(SystemConfig(rng_seed=71), cj_enabled=True)
    sc = Scenario("sigma2", base, "sigma2_dBm", (-100.0, -90.0, -80.0),
                  ("SSPA-2",), trials=TRIALS)
    return run_scenario(sc)


@pytest.fixture(scope="session")
def n_sweep_table():
    base = replace(SystemConfig(rng_seed=72), cj_enabled=True)
    sc = Scenario("nsweep", base, "N", (6.0, 8.0, 10.0), ("SSPA-1",),
                  trials=TRIALS)
    return run_scenario(sc)


@pytest.fixture(scope="session")
def m_sweep_table():
    base = replace(SystemConfig(rng_seed=73), cj_enabled=True)
    sc = Scenario("msweep", base, "M", (4.0, 7.0, 10.0), ("SSPA-2",),
                  trials=TRIALS)
    return run_scenario(sc)


@pytest.fixture(scope="session")
def pc_sweep_table():
    sc = Scenario("pcsweep", SystemConfig(rng_seed=74), "Pc_dB", (0.1, 1.5),
                  ("SSPA-1",), trials=TRIALS)
    return run_scenario(sc)


# ----------------------------------------------------------------- criterion 1

def test_criterion_1_model_reduction_identity():
    """CJ pipeline at alpha1 = alpha2 = 0 matches the plain pipeline on
    every SINR, covariance entry, and secrecy rate to 1e-12 relative over
    1e3 random instances (leakage switch off: that term is CJ-only)."""
    rng = np.random.default_rng(1001)
    worst = 0.0
    for trial in range(1000):
        k = int(rng.integers(1, 4))
        ch = make_channels(k, 1, sigma2=float(rng.uniform(0.1, 2.0)),
                           seed=trial)
        alloc = alloc_for(ch, range(k),
                          relay_power=float(rng.uniform(0.1, 10.0)),
                          pa=float(rng.uniform(0.1, 2.0)),
                          pb=float(rng.uniform(0.1, 2.0)))
        for m in range(k):
            cj = sinr_pair_cj(alloc, ch, m, 0.0, 0.0)
            plain = sinr_pair_nocj(alloc, ch, m)
            for x, y in zip(cj, plain):
                worst = max(worst, abs(x - y) / max(abs(y), 1e-300))
            e_cj = eve_channel(alloc, ch, m, True, 0.0, 0.0,
                               strict_paper_cov=False)
            e_plain = eve_channel(alloc, ch, m, False)
            for x, y in zip(e_cj.q_diag, e_plain.q_diag):
                worst = max(worst, abs(x - y) / max(abs(y), 1e-300))
            r_cj = secrecy_rate(alloc, ch, m, True, 0.0, 0.0, 450e3,
                                strict_paper_cov=False)
            r_plain = secrecy_rate(alloc, ch, m, False, 0.0, 0.0, 450e3)
            if r_plain.r_sec > 0:
                worst = max(worst, abs(r_cj.r_sec - r_plain.r_sec) / r_plain.r_sec)
    _report("1 (model reduction)", worst <= 1e-12,
            f"worst relative deviation {worst:.3g} over 1000 instances")


# ----------------------------------------------------------------- criterion 2

def test_criterion_2_matching_oracle_equivalence():
    """SCAS-2 equals the enumeration optimum on M=2, N=2, H=1, V=1 across
    500 seeds, within 1e-9 relative, in under a minute."""
    cfg = SystemConfig(M=2, N=2, H=1, V=1)
    t0 = time.time()
    worst = 0.0
    for seed in range(500):
        ss = np.random.SeedSequence(seed)
        r1, r2, r3 = (np.random.default_rng(c) for c in ss.spawn(3))
        topo = generate_topology(cfg, r1)
        ch = sample_channels(topo, cfg, r2)
        mt = scas2(ch, cfg, random_assignment(cfg, r3))
        ee, _ = matching_ee(mt, ch, cfg)
        _, best = exhaustive_best(ch, cfg)
        if best > 0:
            worst = max(worst, (best - ee) / best)
    elapsed = time.time() - t0
    _report("2 (matching oracle)", worst <= 1e-9 and elapsed < 60.0,
            f"worst shortfall {worst:.3g}, {elapsed:.1f}s for 500 seeds")


# ----------------------------------------------------------------- criterion 3

def test_criterion_3_power_oracle_band():
    """Parametric solver reaches >= 99% of the 50-point grid oracle on 100
    random 2-pair instances, in under five minutes."""
    cfg = SystemConfig(M=2, N=2, H=2, V=2)
    t0 = time.time()
    worst_ratio = math.inf
    for seed in range(100):
        ss = np.random.SeedSequence(seed + 9000)
        r1, r2 = (np.random.default_rng(c) for c in ss.spawn(2))
        topo = generate_topology(cfg, r1)
        ch = sample_channels(topo, cfg, r2)
        mt = Matching(2, 2)
        for m in range(2):
            for u in range(2):
                mt.add(m, u)
        _, report = dinkelbach_allocate(mt, ch, cfg)
        _, ee_grid = grid_oracle(mt, ch, cfg, grid_points=50)
        if ee_grid > 0:
            worst_ratio = min(worst_ratio, report.ee_trajectory[-1] / ee_grid)
    elapsed = time.time() - t0
    _report("3 (power oracle band)",
            worst_ratio >= 0.99 and elapsed < 300.0,
            f"worst dinkelbach/grid ratio {worst_ratio:.5f}, "
            f"{elapsed:.0f}s for 100 instances")


# ----------------------------------------------------------------- criterion 4

def test_criterion_4_convergence_counts(defaults_table):
    """At reference defaults over 200 trials: (a) SCAS-1 accepted-swap count
    in [2, 10] for >= 80% of trials; (b) the power loop converges within 10
    outer iterations for >= 95% of solver runs."""
    ops = np.array([r.match_ops for r in defaults_table.select("SSPA-1")])
    frac_band = float(np.mean((ops >= 2) & (ops <= 10)))
    iters = np.array([r.solver_iters for r in defaults_table.rows
                      if r.scheme in ("SSPA-1", "SSPA-2")])
    frac_iters = float(np.mean(iters <= 10))
    ok = frac_band >= 0.80 and frac_iters >= 0.95
    _report("4 (convergence counts)", ok,
            f"swap count in [2,10] for {100 * frac_band:.0f}% of trials; "
            f"<=10 outer iterations for {100 * frac_iters:.0f}% of solves")


# ----------------------------------------------------------------- criterion 5

def test_criterion_5a_scheme_ordering(defaults_table):
    """mean EE(SSPA-2) >= mean EE(SSPA-1) >= mean EE(RA-NOMA), paired
    one-sided tests at 95% confidence, 200 trials."""
    ee2 = _ee_by_trial(defaults_table, "SSPA-2", 10.0)
    ee1 = _ee_by_trial(defaults_table, "SSPA-1", 10.0)
    eer = _ee_by_trial(defaults_table, "RA-NOMA", 10.0)
    ok21, d21 = _paired_not_less(ee2, ee1)
    ok1r, d1r = _paired_not_less(ee1, eer)
    _report("5a (scheme ordering)", ok21 and ok1r,
            f"SSPA-2 vs SSPA-1: {d21}; SSPA-1 vs RA-NOMA: {d1r}; "
            f"means {np.mean(ee2):.0f} / {np.mean(ee1):.0f} / {np.mean(eer):.0f}")


def test_criterion_5b_ee_decreasing_in_sigma2(sigma2_table):
    values = sorted({r.sweep_value for r in sigma2_table.rows})
    details = []
    ok_all = True
    for lo, hi in zip(values, values[1:]):
        ok, d = _paired_not_less(_ee_by_trial(sigma2_table, "SSPA-2", lo),
                                 _ee_by_trial(sigma2_table, "SSPA-2", hi))
        ok_all = ok_all and ok
        details.append(f"{lo:g}->{hi:g} dBm: {d}")
    _report("5b (EE decreasing in sigma^2)", ok_all, "; ".join(details))


def test_criterion_5c_ee_increasing_in_n(n_sweep_table):
    values = sorted({r.sweep_value for r in n_sweep_table.rows})
    details = []
    ok_all = True
    for lo, hi in zip(values, values[1:]):
        ok, d = _paired_not_less(_ee_by_trial(n_sweep_table, "SSPA-1", hi),
                                 _ee_by_trial(n_sweep_table, "SSPA-1", lo))
        ok_all = ok_all and ok
        details.append(f"N {lo:g}->{hi:g}: {d}")
    _report("5c (EE increasing in N)", ok_all, "; ".join(details))


def test_criterion_5d_ee_increasing_in_m(m_sweep_table):
    values = sorted({r.sweep_value for r in m_sweep_table.rows})
    details = []
    ok_all = True
    for lo, hi in zip(values, values[1:]):
        ok, d = _paired_not_less(_ee_by_trial(m_sweep_table, "SSPA-2", hi),
                                 _ee_by_trial(m_sweep_table, "SSPA-2", lo))
        ok_all = ok_all and ok
        details.append(f"M {lo:g}->{hi:g}: {d}")
    _report("5d (EE increasing in M)", ok_all, "; ".join(details))


def test_criterion_5e_ee_decreasing_in_pc(pc_sweep_table):
    lo, hi = sorted({r.sweep_value for r in pc_sweep_table.rows})
    ok, d = _paired_not_less(_ee_by_trial(pc_sweep_table, "SSPA-1", lo),
                             _ee_by_trial(pc_sweep_table, "SSPA-1", hi))
    _report("5e (EE decreasing in P_c)", ok, f"Pc {lo:g}->{hi:g} dB: {d}")


# ----------------------------------------------------------------- criterion 6

def test_criterion_6_invariant_suite(tmp_path):
    """Compact re-check of the named invariants: solver monotonicity and
    budget equality, matching consistency after swaps, secrecy hinge,
    amplifier normalization, Rayleigh mean power, CSV round-trip."""
    failures = []

    # solver: u trajectory monotone, budget equality to 1e-9
    cfg = SystemConfig(M=3, N=3, H=2, V=2)
    for seed in range(4):
        ss = np.random.SeedSequence(seed + 500)
        r1, r2, r3 = (np.random.default_rng(c) for c in ss.spawn(3))
        topo = generate_topology(cfg, r1)
        ch = sample_channels(topo, cfg, r2)
        mt = scas2(ch, cfg, random_assignment(cfg, r3))
        alloc, report = dinkelbach_allocate(mt, ch, cfg)
        traj = report.ee_trajectory
        if not all(b >= a - 1e-9 * max(1.0, a) for a, b in zip(traj, traj[1:])):
            failures.append("u trajectory not monotone")
        if abs(alloc.transmit_power - cfg.P_s) > 1e-9 * cfg.P_s:
            failures.append("budget equality violated")
        mt.validate(cfg.H, cfg.V)

    # matching: capacity + mutual consistency post-search at defaults
    big = SystemConfig()
    ss = np.random.SeedSequence(99)
    r1, r2 = (np.random.default_rng(c) for c in ss.spawn(2))
    topo = generate_topology(big, r1)
    chd = sample_channels(topo, big, r2)
    scas1(chd, big).validate(big.H, big.V)

    # rates: hinge and amplifier normalization on random instances
    from noma_lab.rates import alpha_normalizer
    for seed in range(20):
        ch = make_channels(2, 1, seed=seed)
        alloc = alloc_for(ch, [0, 1], relay_power=2.0)
        pr = secrecy_rate(alloc, ch, 0, False, 0.0, 0.0, 450e3)
        if pr.r_sec < 0:
            failures.append("hinge violated")
        alpha = alpha_normalizer(alloc, ch)
        beta2 = alloc.relay_power / alpha ** 2
        if abs(beta2 * alpha ** 2 - alloc.relay_power) > 1e-12 * alloc.relay_power:
            failures.append("amplifier normalization violated")

    # channel: Rayleigh mean power within 2% over 1e5 draws (50 SCs x 2000)
    cfg_ray = SystemConfig(M=1, N=50)
    topo = generate_topology(cfg_ray, np.random.default_rng(7))
    rng = np.random.default_rng(8)
    total = np.zeros((1, 50))
    for _ in range(2000):
        total += np.abs(sample_channels(topo, cfg_ray, rng).h_a_r) ** 2
    from noma_lab.channel import path_loss_linear
    d = float(np.linalg.norm(topo.user_positions[0, 0]))
    ratio = float(total.mean() / 2000) / path_loss_linear(d, cfg_ray)
    if abs(ratio - 1.0) > 0.02:
        failures.append(f"Rayleigh mean power off by {ratio - 1.0:.3f}")

    # harness: CSV round-trip
    sc = Scenario("rt", SystemConfig(M=2, N=2, H=1, V=1, rng_seed=4), "M",
                  (2.0,), ("RA-NOMA",), trials=3)
    table = run_scenario(sc)
    path = tmp_path / "roundtrip.csv"
    emit_csv(table, str(path))
    if read_csv(str(path)).rows != table.rows:
        failures.append("CSV round-trip mismatch")

    _report("6 (invariant suite)", not failures,
            "all invariants hold" if not failures else "; ".join(failures))


# ----------------------------------------------------------------- criterion 7

def test_criterion_7_cli_determinism(tmp_path):
    """`run fig7 --seed 42` twice produces byte-identical CSV."""
    from noma_lab.cli import main
    a = tmp_path / "fig7-a.csv"
    b = tmp_path / "fig7-b.csv"
    args = ["run", "fig7", "--seed", "42", "--trials", "2", "--no-plot"]
    code_a = main(args + ["--out", str(a)])
    code_b = main(args + ["--out", str(b)])
    same = a.read_bytes() == b.read_bytes()
    _report("7 (CLI determinism)", code_a == 0 and code_b == 0 and same,
            f"exit codes {code_a}/{code_b}, byte-identical: {same}")
