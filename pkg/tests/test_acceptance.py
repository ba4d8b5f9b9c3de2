"""End-to-end acceptance criteria; each test logs one PASS/FAIL line in the terminal summary."""

import time

import numpy as np
import pytest

from hybridnoma.cli import main
from hybridnoma.conic import ConeBlock, _soc_rows
from hybridnoma.grouping import group_users
from hybridnoma.oracle import GridSpec, grid_maxmin
from hybridnoma.ratemodel import check_feasibility, evaluate
from hybridnoma.scenario import SystemParams, make_scenario
from hybridnoma.solver import ScaConfig, solve_equal_time, solve_maxmin, sweep_pmax
from hybridnoma.subproblem import build_subproblem, initial_point

NUM_DEFAULT_RUNS = 50
SAMPLES = 10_000
CONE_TOL = 1e-9
# reference minimum throughput pairs (opportunistic, equal) over five channels
REFERENCE_TABLE = [(10.664, 9.423), (9.706, 8.765), (8.433, 7.211), (11.494, 9.667), (14.124, 12.540)]


def report(log, name, ok, detail):
    log.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def default_runs():
    out = []
    for seed in range(NUM_DEFAULT_RUNS):
        sc = make_scenario(seed=seed)
        cl = group_users(sc.channels)
        cfg = ScaConfig(seed=seed)
        out.append((sc, cl, solve_maxmin(sc, cl, cfg), solve_equal_time(sc, cl, cfg)))
    return out


@pytest.fixture(scope="module")
def oracle_runs():
    runs = []
    t0 = time.perf_counter()
    for K, seeds in ((2, range(20)), (4, range(10))):
        for seed in seeds:
            sc = make_scenario(SystemParams(num_users=K, num_clusters=K // 2), seed=seed)
            cl = group_users(sc.channels)
            rep = solve_maxmin(sc, cl, ScaConfig(seed=seed))
            orc = grid_maxmin(sc, cl, GridSpec(64, 64, 3))
            runs.append((sc, cl, rep, orc))
    return runs, time.perf_counter() - t0


def test_reference_gains_define_the_band():
    gains = [o / e - 1 for o, e in REFERENCE_TABLE]
    assert [round(100 * g, 1) for g in gains] == [13.2, 10.7, 16.9, 18.9, 12.6]
    assert all(0.05 <= g <= 0.25 for g in gains)


def test_criterion_1_oracle_equivalence(oracle_runs, acceptance_log):
    runs, elapsed = oracle_runs
    rel = [abs(rep.gamma - orc.min_rate) / orc.min_rate for _, _, rep, orc in runs]
    ok = max(rel) <= 0.02 and elapsed < 300
    report(acceptance_log, "1 oracle equivalence", ok,
           f"{len(runs)} instances, worst relative gap {max(rel):.2e} (<= 2e-2), {elapsed:.1f} s (< 300 s)")


def test_criterion_2_dominance(default_runs, acceptance_log):
    gains = np.array([opp.gamma / eq.gamma - 1 for _, _, opp, eq in default_runs])
    dominance = all(opp.gamma >= eq.gamma - 1e-6 for _, _, opp, eq in default_runs)
    mean = float(gains.mean())
    band = 0.05 <= mean <= 0.25
    report(acceptance_log, "2 dominance", dominance and band,
           f"dominance {'holds' if dominance else 'violated'} in all {len(gains)} runs; "
           f"mean relative improvement {100 * mean:.2f}% (required 5%..25%), "
           f"range {100 * gains.min():.2f}%..{100 * gains.max():.2f}%")


def test_criterion_3_convergence(default_runs, acceptance_log):
    worst_iters, worst_drop, unconverged = 0, 0.0, 0
    for _, _, opp, eq in default_runs:
        for rep in (opp, eq):
            unconverged += not rep.converged
            worst_iters = max(worst_iters, rep.iterations)
            d = np.diff(rep.trace)
            worst_drop = max(worst_drop, float(-d.min()) if d.size else 0.0)
            if rep.converged:
                assert abs(rep.trace[-1] - rep.trace[-2]) <= 1e-4
    ok = unconverged == 0 and worst_iters <= 20 and worst_drop <= 1e-6
    report(acceptance_log, "3 convergence", ok,
           f"{unconverged} unconverged, max {worst_iters} iterations (<= 20), "
           f"largest trace decrease {worst_drop:.1e} (<= 1e-6)")


def test_criterion_4_feasibility_and_tightness(default_runs, oracle_runs, acceptance_log):
    cases = [(sc, cl, r) for sc, cl, opp, eq in default_runs for r in (opp, eq)]
    cases += [(sc, cl, rep) for sc, cl, rep, _ in oracle_runs[0]]
    violations, worst = 0, np.inf
    for sc, cl, rep in cases:
        violations += len(check_feasibility(sc, rep.allocation))
        worst = min(worst, evaluate(sc, cl, rep.allocation).min_rate - rep.gamma)
    ok = violations == 0 and worst >= -1e-4
    report(acceptance_log, "4 feasibility and tightness", ok,
           f"{len(cases)} allocations, {violations} violations, "
           f"min (evaluated - reported) {worst:.2e} (>= -1e-4)")


def _rsoc_counterexamples(rng):
    sc = make_scenario(SystemParams(num_users=2, num_clusters=1), seed=0)
    cl = group_users(sc.channels)
    program, layout = build_subproblem(sc, cl, initial_point(sc, cl))
    block = next(b for b in program.blocks if b.label == "rate_time[0,0]")
    A, off = _soc_rows(block)
    bad = 0
    for _ in range(SAMPLES):
        t, theta = 10 ** rng.uniform(-3, 2, 2)
        g = np.sqrt(t * theta) * rng.uniform(0.0, 2.0)
        x = np.zeros(program.num_vars)
        x[layout.t[0]], x[layout.theta[0, 0]], x[layout.g] = t, theta, g
        truth = t * theta - g * g
        if abs(truth) <= CONE_TOL * max(1.0, t * theta):
            continue
        s = A @ x + off
        standard = s[0] - np.linalg.norm(s[1:]) >= 0
        bad += standard != (truth > 0) or (block.residual(x) >= 0) != (truth > 0)
    return bad


def _soc_counterexamples(rng):
    sc = make_scenario(SystemParams(num_users=2, num_clusters=1), seed=0)
    cl = group_users(sc.channels)
    pt = initial_point(sc, cl)
    program, layout = build_subproblem(sc, cl, pt)
    h = sc.gains[list(cl.clusters[0])]
    s2 = sc.noise_vars[list(cl.clusters[0])]
    bad = 0
    for _ in range(SAMPLES):
        m = int(rng.integers(0, 2))
        block = next(b for b in program.blocks if b.label == f"interference[0,{m},1]")
        ps = rng.uniform(0.0, np.sqrt(sc.params.max_power))
        need = h[m] * ps ** 2 + s2[m]
        eta = np.sqrt(need) * rng.uniform(0.5, 1.5)
        x = np.zeros(program.num_vars)
        x[layout.p[0, 0]] = ps
        x[layout.e[0, m, 1]] = eta / pt.eta[0, m, 1]
        truth = eta ** 2 - need
        if abs(truth) <= CONE_TOL * need:
            continue
        bad += (block.residual(x) >= 0) != (truth > 0)
    return bad


def test_criterion_5_cone_algebra(acceptance_log):
    rng = np.random.default_rng(2024)
    rsoc_bad = _rsoc_counterexamples(rng)
    soc_bad = _soc_counterexamples(rng)
    report(acceptance_log, "5 cone algebra", rsoc_bad == 0 and soc_bad == 0,
           f"{SAMPLES} samples each: rotated-cone counterexamples {rsoc_bad}, "
           f"interference-cone counterexamples {soc_bad}")


def test_criterion_6_monotone_sweep(acceptance_log):
    problems = []
    for seed in range(3):
        sc = make_scenario(seed=seed)
        pts = sweep_pmax(sc, group_users(sc.channels), ScaConfig(seed=seed), [1, 2, 5, 10, 20])
        opp = [p.gamma_opportunistic for p in pts]
        eq = [p.gamma_equal for p in pts]
        if any(b < a - 1e-6 for col in (opp, eq) for a, b in zip(col, col[1:])):
            problems.append(f"seed {seed}: column decreases")
        if any(o < e - 1e-6 for o, e in zip(opp, eq)):
            problems.append(f"seed {seed}: equal-time beats opportunistic")
    report(acceptance_log, "6 monotone sweep", not problems,
           "; ".join(problems) or "3 scenarios x {1,2,5,10,20} W: both columns nondecreasing, opportunistic >= equal")


def test_criterion_7_baseline_shape(default_runs, tmp_path, acceptance_log):
    all_two = all(eq.allocation.times == (2.0,) * 5 for _, _, _, eq in default_runs)
    main(["baseline", "--seed", "0", "--out", str(tmp_path)])
    header, row = (tmp_path / "baseline_summary.csv").read_text().splitlines()
    cells = dict(zip(header.split(","), row.split(",")))
    csv_two = all(cells[f"t_{i}"] == "2" for i in range(1, 6))
    report(acceptance_log, "7 baseline shape", all_two and csv_two,
           f"all {len(default_runs)} equal-time runs use 2.0 s slots: {all_two}; CSV slots exactly '2': {csv_two}")


def test_criterion_8_determinism(tmp_path, acceptance_log):
    commands = [
        ["generate", "--seed", "3"],
        ["solve", "--seed", "3"],
        ["baseline", "--seed", "3"],
        ["sweep", "--seed", "3", "--K", "4"],
        ["compare", "--num-channels", "3", "--K", "4"],
        ["oracle", "--K", "4", "--points", "16", "--rounds", "2"],
    ]
    for run in ("a", "b"):
        for cmd in commands:
            main(cmd + ["--out", str(tmp_path / run)])
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".csv", ".json")
                   and not p.name.startswith("manifest"))
    differ = [f for f in files if (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()]
    report(acceptance_log, "8 determinism", not differ and len(files) >= 10,
           f"{len(files)} artifacts compared, differing: {differ or 'none'}")
