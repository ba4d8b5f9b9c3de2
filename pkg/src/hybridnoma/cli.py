"""Command-line experiment harness.

Every subcommand writes CSV artifacts plus a ``manifest_<command>.json``
listing their SHA-256 checksums into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .grouping import ClusterAssignment, group_users
from .oracle import GridSpec, grid_maxmin
from .ratemodel import RateReport, evaluate
from .scenario import (
    ParameterError,
    Scenario,
    ScenarioFormatError,
    SystemParams,
    generate_scenario,
    load_config,
    load_scenario,
    params_to_dict,
    save_scenario,
)
from .solver import ScaConfig, SolveReport, solve_equal_time, solve_maxmin, sweep_pmax

log = logging.getLogger("hybridnoma")


def fmt(x: float) -> str:
    return f"{x:.6g}"


@dataclass
class RunManifest:
    subcommand: str
    scenario: str
    config: dict
    outputs: dict[str, str] = field(default_factory=dict)
    timestamp: str = ""


class Artifacts:
    def __init__(self, out: Path, manifest: RunManifest) -> None:
        self.out = out
        self.manifest = manifest
        out.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return self.write_text(name, buf.getvalue())

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text, encoding="utf-8")
        self.record(path)
        return path

    def record(self, path: Path) -> None:
        self.manifest.outputs[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def close(self) -> None:
        self.manifest.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        path = self.out / f"manifest_{self.manifest.subcommand}.json"
        path.write_text(json.dumps(asdict(self.manifest), indent=2) + "\n", encoding="utf-8")


def _params(args: argparse.Namespace) -> SystemParams:
    params = load_config(args.config) if args.config else SystemParams()
    overrides = {}
    if args.K is not None:
        if args.K % 2:
            raise ParameterError(f"K must be even (two users per cluster), got K={args.K}")
        overrides["num_users"] = args.K
        overrides["num_clusters"] = args.C if args.C is not None else args.K // 2
    elif args.C is not None:
        overrides["num_clusters"] = args.C
        overrides["num_users"] = 2 * args.C
    for flag, attr in (("T", "total_time"), ("pmax", "max_power"), ("radius", "cell_radius"),
                       ("noise_dbm", "noise_dbm"), ("beta_db", "beta_db"), ("kappa", "pathloss_exponent")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    return params.replace(**overrides) if overrides else params


def _scenario(args: argparse.Namespace) -> tuple[Scenario, str]:
    if getattr(args, "scenario", None):
        params, channels = load_scenario(args.scenario)
        return Scenario(params, channels), str(args.scenario)
    params = _params(args)
    return Scenario(params, generate_scenario(params, args.seed)), f"seed:{args.seed}"


def _config(args: argparse.Namespace, seed: int | None = None) -> ScaConfig:
    return ScaConfig(
        epsilon=args.epsilon,
        max_iterations=args.max_iters,
        seed=args.seed if seed is None else seed,
        backend=args.backend,
    )


def _manifest(args: argparse.Namespace, scenario_ref: str, params: SystemParams | None) -> RunManifest:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}
    if params is not None:
        cfg["params"] = params_to_dict(params)
    return RunManifest(args.command, scenario_ref, cfg)


def summary_header(C: int) -> list[str]:
    return (
        ["status", "iterations"]
        + [f"t_{i}" for i in range(1, C + 1)]
        + [f"p_{j}_{i}" for i in range(1, C + 1) for j in (1, 2)]
        + ["min_throughput_bits", "min_throughput_bits_per_s", "sum_throughput"]
    )


def summary_row(report: SolveReport, rates: RateReport | None, T: float, C: int) -> list[str]:
    if report.allocation is None or rates is None:
        return [report.status, str(report.iterations)] + ["nan"] * (3 * C + 3)
    alloc = report.allocation
    return (
        [report.status, str(report.iterations)]
        + [fmt(t) for t in alloc.times]
        + [fmt(p) for p in alloc.flat_amplitudes()]
        + [fmt(report.gamma), fmt(report.gamma / T), fmt(rates.sum_rate)]
    )


def rates_header(C: int) -> list[str]:
    return ["min_rate", "sum_rate"] + [f"r_{j}_{i}" for i in range(1, C + 1) for j in (1, 2)]


def rates_row(rates: RateReport) -> list[str]:
    return [fmt(rates.min_rate), fmt(rates.sum_rate)] + [fmt(r) for r in rates.flat_rates()]


def _print_assignment(scenario: Scenario, clusters: ClusterAssignment) -> None:
    for i, (s, w) in enumerate(clusters.clusters, start=1):
        print(f"cluster {i}: strong user {s} (gain {scenario.gains[s]:.4g}), "
              f"weak user {w} (gain {scenario.gains[w]:.4g})")


def cmd_generate(args: argparse.Namespace) -> int:
    params = _params(args)
    channels = generate_scenario(params, args.seed)
    art = Artifacts(args.out, _manifest(args, f"seed:{args.seed}", params))
    path = args.out / args.name
    save_scenario(path, params, channels)
    art.record(path)
    art.close()
    print(path)
    return 0


def _solve_cmd(args: argparse.Namespace, equal: bool) -> int:
    scenario, ref = _scenario(args)
    clusters = group_users(scenario.channels, args.grouping)
    config = _config(args)
    run = solve_equal_time if equal else solve_maxmin
    report = run(scenario, clusters, config, dump_path=args.dump_subproblem)
    C, T = clusters.num_clusters, scenario.params.total_time
    rates = evaluate(scenario, clusters, report.allocation) if report.allocation else None

    art = Artifacts(args.out, _manifest(args, ref, scenario.params))
    name = args.command
    art.write_csv(f"{name}_trace.csv", ["iter", "gamma"],
                  [[str(i), fmt(g)] for i, g in enumerate(report.trace, start=1)])
    art.write_csv(f"{name}_summary.csv", summary_header(C), [summary_row(report, rates, T, C)])
    if rates is not None:
        art.write_csv(f"{name}_rates.csv", rates_header(C), [rates_row(rates)])
    art.close()

    _print_assignment(scenario, clusters)
    print(f"status {report.status} after {report.iterations} iterations")
    if report.allocation is not None:
        print(f"slot times: {' '.join(fmt(t) for t in report.allocation.times)}")
        print(f"min throughput {fmt(report.gamma)} bits per frame ({fmt(report.gamma / T)} bit/s)")
    if report.message:
        print(report.message, file=sys.stderr)
    return 0 if report.converged else 1


def cmd_solve(args: argparse.Namespace) -> int:
    return _solve_cmd(args, equal=False)


def cmd_baseline(args: argparse.Namespace) -> int:
    return _solve_cmd(args, equal=True)


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario, ref = _scenario(args)
    clusters = group_users(scenario.channels, args.grouping)
    points = sweep_pmax(scenario, clusters, _config(args), sorted(args.pmax_list),
                        warm_start=not args.no_warm_start)
    rows, ok = [], True
    for pt in points:
        status = "ok" if pt.opportunistic.converged and pt.equal.converged else \
            f"{pt.opportunistic.status}/{pt.equal.status}"
        ok &= status == "ok"
        rows.append([fmt(pt.pmax), fmt(pt.gamma_opportunistic), fmt(pt.gamma_equal), status])
    art = Artifacts(args.out, _manifest(args, ref, scenario.params))
    art.write_csv("sweep.csv", ["pmax", "gamma_opportunistic", "gamma_equal", "status"], rows)
    art.close()
    for r in rows:
        print(",".join(r))
    return 0 if ok else 1


def _compare_one(job: tuple[SystemParams, int, ScaConfig, str]) -> tuple[int, SolveReport, SolveReport]:
    params, seed, config, grouping = job
    scenario = Scenario(params, generate_scenario(params, seed))
    clusters = group_users(scenario.channels, grouping)
    return seed, solve_maxmin(scenario, clusters, config), solve_equal_time(scenario, clusters, config)


def cmd_compare(args: argparse.Namespace) -> int:
    params = _params(args)
    seeds = [args.seed + k for k in range(args.num_channels)]
    jobs = [(params, s, _config(args, seed=s), args.grouping) for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_compare_one, jobs))
    else:
        results = [_compare_one(j) for j in jobs]

    C = params.num_clusters
    header = (["seed"] + [f"t_{i}" for i in range(1, C + 1)]
              + ["min_opportunistic", "min_equal", "relative_gain", "status"])
    rows, gains, ok = [], [], True
    for seed, opp, eq in results:
        status = "ok" if opp.converged and eq.converged else f"{opp.status}/{eq.status}"
        ok &= status == "ok"
        if opp.allocation is None or eq.allocation is None or eq.gamma <= 0:
            rows.append([str(seed)] + ["nan"] * (C + 3) + [status])
            continue
        gain = opp.gamma / eq.gamma - 1.0
        gains.append(gain)
        rows.append([str(seed)] + [fmt(t) for t in opp.allocation.times]
                    + [fmt(opp.gamma), fmt(eq.gamma), fmt(gain), status])
    mean = float(np.mean(gains)) if gains else float("nan")
    rows.append(["mean"] + [""] * (C + 2) + [fmt(mean), "ok" if ok else "failed"])
    art = Artifacts(args.out, _manifest(args, f"seeds:{seeds[0]}..{seeds[-1]}", params))
    art.write_csv("compare.csv", header, rows)
    art.close()
    for r in rows:
        print(",".join(r))
    return 0 if ok else 1


def cmd_oracle(args: argparse.Namespace) -> int:
    scenario, ref = _scenario(args)
    clusters = group_users(scenario.channels, args.grouping)
    spec = GridSpec(args.points, args.points, args.rounds)
    result = grid_maxmin(scenario, clusters, spec, kernel=args.kernel,
                         progress=lambda r, v: print(f"round {r}: incumbent {fmt(v)}"))
    art = Artifacts(args.out, _manifest(args, ref, scenario.params))
    art.write_csv("oracle.csv", ["round", "incumbent"],
                  [[str(r), fmt(v)] for r, v in enumerate(result.rounds)])
    C = clusters.num_clusters
    alloc = result.allocation
    art.write_csv("oracle_allocation.csv",
                  [f"t_{i}" for i in range(1, C + 1)] + [f"p_{j}_{i}" for i in range(1, C + 1) for j in (1, 2)]
                  + ["min_rate"],
                  [[fmt(t) for t in alloc.times] + [fmt(p) for p in alloc.flat_amplitudes()]
                   + [fmt(result.min_rate)]])
    art.close()
    print(f"best min rate {fmt(result.min_rate)}")
    return 0


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed for channel generation and SCA start")
    common.add_argument("--config", type=Path, help="parameter overrides (scenario file schema)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--epsilon", type=float, default=1e-4, help="SCA stopping threshold on |delta gamma|")
    common.add_argument("--max-iters", type=int, default=50)
    common.add_argument("--no-warm-start", action="store_true", help="cold-start every sweep point")
    common.add_argument("--dump-subproblem", type=Path, help="write the first convex subproblem as text")
    common.add_argument("--backend", choices=["clarabel", "cvxopt"], default="clarabel")
    common.add_argument("--grouping", choices=["paired", "adjacent"], default="paired")
    common.add_argument("-v", "--verbose", action="store_true")
    for flag in ("--K", "--C"):
        common.add_argument(flag, type=int)
    common.add_argument("--T", type=float, help="frame duration (s)")
    common.add_argument("--pmax", dest="pmax", type=float, help="power budget (W)")
    common.add_argument("--radius", type=float)
    common.add_argument("--noise-dbm", type=float)
    common.add_argument("--beta-db", type=float)
    common.add_argument("--kappa", type=float)

    parser = argparse.ArgumentParser(prog="hybridnoma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="draw a scenario and save it")
    p.add_argument("--name", default="scenario.json")
    p.set_defaults(func=cmd_generate)

    for name, func, text in (("solve", cmd_solve, "opportunistic time + power allocation"),
                             ("baseline", cmd_baseline, "equal-time baseline")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--scenario", type=Path, help="scenario file (default: generate from --seed)")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", parents=[common], help="min rate versus power budget")
    p.add_argument("--scenario", type=Path)
    p.add_argument("--pmax-list", dest="pmax_list", type=_float_list, default=[1.0, 2.0, 5.0, 10.0, 20.0])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="both schemes over several seeded channels")
    p.add_argument("--num-channels", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", parents=[common], help="brute-force grid search (K <= 4)")
    p.add_argument("--scenario", type=Path)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--kernel", choices=["cython", "numpy"])
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParameterError, ScenarioFormatError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
