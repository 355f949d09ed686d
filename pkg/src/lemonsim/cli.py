"""Command-line interface: runs, policy tables, sweeps, panel scoring.

Commands mirror the library surface: ``run`` replicates one scenario,
``compare-policies`` and ``sweep`` build the two comparison tables,
``metrics`` scores an external firm-period panel, and ``replicate-tables``
produces every table next to its frozen reference values plus a PASS/FAIL
report; its exit status doubles as the acceptance gate.

All files are written atomically (temp file, then rename), numeric CSV
fields use '.' decimals and at least six significant digits, and a rerun
with the same seed reproduces every output byte for byte.  LEMONSIM_THREADS
caps replication parallelism (0 means one worker per CPU).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from .config_io import load_config
from .harness import (ExperimentResult, build_pooled_panel, correlation_echo,
                      compare_policies, run_experiment, sensitivity_sweep,
                      settling_periods, summarize)
from .metrics import panel_peer_indices, read_panel_csv, write_panel_csv
from .params import SimParams, default_params
from .policy import SCENARIO_NAMES, make_scenario
from . import reference as ref

TRAJECTORY_COLUMNS = (
    "scenario", "rep", "period", "washer_share", "mean_green_intensity_all",
    "mean_green_intensity_honest", "mean_green_intensity_washer",
    "consumer_utility_index", "mean_washing_index",
    "mean_peer_washing_index", "detected_count")

SUMMARY_COLUMNS = ("scenario", "metric", "n", "mean", "sd", "cv",
                   "ci_lo", "ci_hi", "skewness", "kurtosis")

POLICY_COLUMNS = ("scenario", "washer_share_pct", "green_intensity_pct",
                  "utility_index", "implementation_cost",
                  "welfare_improvement_pct", "welfare_reference_pct")

SWEEP_COLUMNS = ("parameter", "baseline_value", "adjusted_value",
                 "washer_share_pct", "green_intensity_pct", "direction",
                 "coefficient")

ROBUSTNESS_COLUMNS = ("metric", "n", "mean", "sd", "cv_pct",
                      "ci_lo", "ci_hi", "skewness", "kurtosis")


@dataclass
class RunSpec:
    """Parsed invocation: which command, on what inputs, writing where."""

    command: str
    config: str | None = None
    scenario: str = "baseline"
    reps: int | None = None
    sweep_reps: int | None = None
    seed: int = ref.REFERENCE_SEED
    out_dir: str = "."
    panel_in: str | None = None
    panel_out: str | None = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.8g}"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as e:
        raise OSError(f"writing {path}: {e}") from e


def _write_csv(path: str, header: tuple[str, ...], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _load(spec: RunSpec) -> tuple[SimParams, dict[str, object]]:
    if spec.config is None:
        return default_params(), {}
    return load_config(spec.config)


def _checkpoints(n_periods: int) -> list[int]:
    return sorted({round(i * n_periods / 8) for i in range(9)})


def _check(n_reps: int) -> None:
    if n_reps is not None and n_reps < 2:
        raise ValueError(f"--reps must be >= 2, got {n_reps}")


# --- run ---------------------------------------------------------------------


def _trajectory_rows(result: ExperimentResult):
    n_periods = result.trajectories["washer_share"].shape[1]
    for k in range(result.n_reps):
        for t in range(n_periods):
            row = [result.scenario, k, t]
            for metric in TRAJECTORY_COLUMNS[3:]:
                v = result.trajectories[metric][k, t]
                row.append(int(v) if metric == "detected_count" else v)
            yield row


def _summary_rows(result: ExperimentResult):
    for metric, s in result.endpoint_summary.items():
        yield [result.scenario, metric, s.n, s.mean, s.sd, s.cv,
               s.ci_lo, s.ci_hi, s.skewness, s.kurtosis]


def _print_checkpoint_table(result: ExperimentResult) -> None:
    tr = result.mean_trajectory
    share = tr["washer_share"]
    g_all = tr["mean_green_intensity_all"]
    g_hon = tr["mean_green_intensity_honest"]
    g_wash = tr["mean_green_intensity_washer"]
    util = tr["consumer_utility_index"]
    print(f"scenario {result.scenario}: mean trajectory over "
          f"{result.n_reps} replications")
    print("period | washer share % | green all % | honest % | washer % "
          "| utility")
    for t in _checkpoints(len(share) - 1):
        print(f"{t:6d} | {100 * share[t]:14.1f} | {100 * g_all[t]:11.2f} "
              f"| {100 * g_hon[t]:8.2f} | {100 * g_wash[t]:8.2f} "
              f"| {util[t]:7.1f}")
    end = len(share) - 1
    print(f"change | {100 * (share[end] - share[0]):+13.1f}pp "
          f"| {100 * (g_all[end] / g_all[0] - 1):+10.1f}% "
          f"| {100 * (g_hon[end] / g_hon[0] - 1):+7.1f}% "
          f"| {100 * (g_wash[end] / g_wash[0] - 1):+7.1f}% "
          f"| {100 * (util[end] / util[0] - 1):+6.1f}%")


def cmd_run(spec: RunSpec) -> int:
    params, overrides = _load(spec)
    scenario = make_scenario(spec.scenario, **overrides)
    _check(spec.reps)
    reps = spec.reps if spec.reps is not None else params.n_reps
    result = run_experiment(params, scenario, reps, spec.seed)
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(os.path.join(spec.out_dir, "trajectory.csv"),
               TRAJECTORY_COLUMNS, _trajectory_rows(result))
    _write_csv(os.path.join(spec.out_dir, "summary.csv"),
               SUMMARY_COLUMNS, _summary_rows(result))
    _print_checkpoint_table(result)
    print(f"wrote trajectory.csv and summary.csv to {spec.out_dir}")
    return 0


# --- compare-policies ----------------------------------------------------------


def _policy_rows(comparison):
    for row in comparison.rows:
        yield [row.scenario, 100 * row.washer_share, 100 * row.green_intensity,
               row.utility_index, row.implementation_cost,
               row.welfare_improvement, row.welfare_reference]


def cmd_compare(spec: RunSpec) -> int:
    params, _ = _load(spec)
    _check(spec.reps)
    reps = spec.reps if spec.reps is not None else 100
    comparison = compare_policies(params, reps, spec.seed)
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(os.path.join(spec.out_dir, "policy.csv"),
               POLICY_COLUMNS, _policy_rows(comparison))
    print("scenario    | share % | green % | utility | welfare %")
    for row in comparison.rows:
        print(f"{row.scenario:11s} | {100 * row.washer_share:7.1f} "
              f"| {100 * row.green_intensity:7.2f} "
              f"| {row.utility_index:7.1f} | {row.welfare_improvement:8.1f}")
    print(f"wrote policy.csv to {spec.out_dir}")
    return 0


# --- sweep ---------------------------------------------------------------------


def _sweep_rows(results):
    for s in results:
        yield [s.parameter, s.baseline_value, s.adjusted_value,
               100 * s.washer_share, 100 * s.green_intensity, s.direction,
               s.coefficient]


def cmd_sweep(spec: RunSpec) -> int:
    params, _ = _load(spec)
    _check(spec.reps)
    reps = spec.reps if spec.reps is not None else 20
    results = sensitivity_sweep(params, reps, spec.seed)
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(os.path.join(spec.out_dir, "sweep.csv"),
               SWEEP_COLUMNS, _sweep_rows(results))
    for s in results:
        print(f"{s.parameter:24s} {s.baseline_value:g} -> {s.adjusted_value:g}"
              f" | share {100 * s.washer_share:5.1f}% | {s.direction}")
    print(f"wrote sweep.csv to {spec.out_dir}")
    return 0


# --- metrics -------------------------------------------------------------------


def cmd_metrics(spec: RunSpec) -> int:
    cells, _ = read_panel_csv(spec.panel_in)
    peers = panel_peer_indices(cells)
    tmp = spec.panel_out + ".tmp"
    write_panel_csv(tmp, cells, peers)
    os.replace(tmp, spec.panel_out)
    print(f"scored {len(cells)} firm-period rows -> {spec.panel_out}")
    return 0


# --- replicate-tables ------------------------------------------------------------


@dataclass
class GateCheck:
    name: str
    observed: str
    required: str
    ok: bool

    def line(self) -> str:
        mark = "PASS" if self.ok else "FAIL"
        return f"[{mark}] {self.name}: {self.observed} (required {self.required})"


def _md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |",
           "| " + " | ".join("---" for _ in header) + " |"]
    out.extend("| " + " | ".join(row) + " |" for row in rows)
    return out


def _baseline_gates(base: ExperimentResult) -> list[GateCheck]:
    share0 = base.trajectories["washer_share"][:, 0]
    share = float(base.endpoints["washer_share"].mean())
    g_all = float(base.endpoints["mean_green_intensity_all"].mean())
    g_wash = float(base.endpoints["mean_green_intensity_washer"].mean())
    util = float(base.endpoints["consumer_utility_index"].mean())
    hon = base.mean_trajectory["mean_green_intensity_honest"]
    drift = float(np.max(np.abs(hon / hon[0] - 1.0)))
    return [
        GateCheck("period-0 washer share", f"{100 * share0.max():.4f}%",
                  "exactly 10%", bool(np.all(share0 == ref.PERIOD0_SHARE))),
        GateCheck("endpoint washer share", f"{share:.4f}",
                  str(ref.ENDPOINT_SHARE_BAND),
                  ref.ENDPOINT_SHARE_BAND.contains(share)),
        GateCheck("endpoint green intensity", f"{g_all:.4f}",
                  str(ref.ENDPOINT_INTENSITY_BAND),
                  ref.ENDPOINT_INTENSITY_BAND.contains(g_all)),
        GateCheck("endpoint utility index", f"{util:.2f}",
                  str(ref.ENDPOINT_UTILITY_BAND),
                  ref.ENDPOINT_UTILITY_BAND.contains(util)),
        GateCheck("honest intensity drift", f"{100 * drift:.1f}%",
                  f"<= {100 * ref.HONEST_DRIFT_TOLERANCE:.0f}%",
                  drift <= ref.HONEST_DRIFT_TOLERANCE),
        GateCheck("endpoint washer intensity", f"{g_wash:.4f}",
                  f"< {ref.WASHER_INTENSITY_CEILING}",
                  g_wash < ref.WASHER_INTENSITY_CEILING),
    ]


def _policy_gates(comparison) -> list[GateCheck]:
    share = {r.scenario: r.washer_share for r in comparison.rows}
    green = {r.scenario: r.green_intensity for r in comparison.rows}
    util = {r.scenario: r.utility_index for r in comparison.rows}
    order = ref.POLICY_SHARE_ORDER
    gaps = [share[order[i + 1]] - share[order[i]] for i in range(len(order) - 1)]
    share_ok = all(g >= ref.ADJACENT_SHARE_SEPARATION for g in gaps)
    green_ok = all(green[order[i]] > green[order[i + 1]]
                   for i in range(len(order) - 1))
    opt_share = share["optimum"]
    opt_util_ok = all(util["optimum"] >= u for u in util.values())
    return [
        GateCheck("washer-share ordering",
                  " < ".join(f"{share[n]:.3f}" for n in order),
                  f"ascending, gaps >= {ref.ADJACENT_SHARE_SEPARATION}",
                  share_ok),
        GateCheck("green-intensity ordering",
                  " > ".join(f"{green[n]:.4f}" for n in order),
                  "strictly descending", green_ok),
        GateCheck("optimum washer share", f"{opt_share:.4f}",
                  f"< {ref.OPTIMUM_SHARE_CEILING}",
                  opt_share < ref.OPTIMUM_SHARE_CEILING),
        GateCheck("optimum utility maximal", f"{util['optimum']:.2f}",
                  "max across scenarios", opt_util_ok),
    ]


def _sweep_gates(results) -> list[GateCheck]:
    targets = {(t.parameter, t.adjusted_value): t for t in ref.SWEEP_TARGETS}
    checks = []
    for s in results:
        t = targets.get((s.parameter, s.adjusted_value))
        if t is None:
            continue
        checks.append(GateCheck(
            f"sweep {s.parameter} -> {s.adjusted_value:g}",
            s.direction, t.direction, s.direction == t.direction))
    return checks


def _robustness_gates(base: ExperimentResult) -> list[GateCheck]:
    checks = []
    for metric, label in (("washer_share", "washer share"),
                          ("mean_green_intensity_all", "green intensity"),
                          ("consumer_utility_index", "utility index")):
        cv = abs(base.endpoint_summary[metric].cv)
        checks.append(GateCheck(
            f"cv of endpoint {label}", f"{100 * cv:.1f}%",
            f"< {100 * ref.ROBUSTNESS_CV_CEILING:.0f}%",
            cv < ref.ROBUSTNESS_CV_CEILING))
    return checks


def _robustness_rows(base: ExperimentResult) -> list[list]:
    rows = []
    for metric, scale, label in (
            ("washer_share", 100.0, "ai_wash_proportion"),
            ("mean_green_intensity_all", 100.0, "green_innovation_intensity"),
            ("consumer_utility_index", 1.0, "consumer_utility")):
        s = summarize(scale * base.endpoints[metric])
        rows.append([label, s.n, s.mean, s.sd, 100 * abs(s.cv),
                     s.ci_lo, s.ci_hi, s.skewness, s.kurtosis])
    cycles = settling_periods(base.trajectories["washer_share"])
    try:
        s = summarize(cycles)
        rows.append(["market_equilibrium_cycle", s.n, s.mean, s.sd,
                     100 * abs(s.cv), s.ci_lo, s.ci_hi, s.skewness,
                     s.kurtosis])
    except ValueError:
        rows.append(["market_equilibrium_cycle", len(cycles),
                     float(np.mean(cycles)), 0.0, 0.0, float(np.mean(cycles)),
                     float(np.mean(cycles)), 0.0, 0.0])
    return rows


def _report_lines(base, comparison, sweep_results, robustness_rows, echo_r,
                  checks: list[GateCheck], reps: int, sweep_reps: int,
                  seed: int) -> list[str]:
    lines = ["# Replication report", "",
             f"Desk-scale batch: {reps} replications per scenario, "
             f"{sweep_reps} per sweep adjustment, base seed {seed}.",
             "Reference columns are the frozen published values this "
             "simulation is checked against.", ""]

    lines += ["## Baseline evolution", ""]
    tr = base.mean_trajectory
    rows = []
    for cp in ref.BASELINE_CHECKPOINTS:
        t = cp.period
        rows.append([str(t),
                     f"{100 * tr['washer_share'][t]:.1f}",
                     f"{cp.washer_share:.1f}",
                     f"{100 * tr['mean_green_intensity_all'][t]:.2f}",
                     f"{cp.intensity_all:.2f}",
                     f"{100 * tr['mean_green_intensity_honest'][t]:.2f}",
                     f"{cp.intensity_honest:.2f}",
                     f"{100 * tr['mean_green_intensity_washer'][t]:.2f}",
                     f"{cp.intensity_washer:.2f}",
                     f"{tr['consumer_utility_index'][t]:.1f}",
                     f"{cp.utility_index:.1f}"])
    lines += _md_table(
        ["period", "share %", "share % (ref)", "green %", "green % (ref)",
         "honest %", "honest % (ref)", "washer %", "washer % (ref)",
         "utility", "utility (ref)"], rows)

    lines += ["", "## Policy comparison (final period)", ""]
    rows = []
    for row in comparison.rows:
        t = ref.POLICY_TARGETS[row.scenario]
        rows.append([row.scenario,
                     f"{100 * row.washer_share:.1f}", f"{t.washer_share:.1f}",
                     f"{100 * row.green_intensity:.2f}",
                     f"{t.green_intensity:.2f}",
                     f"{row.utility_index:.1f}", f"{t.utility_index:.1f}",
                     _fmt(row.implementation_cost) or "-",
                     f"{row.welfare_improvement:.1f}",
                     "-" if t.welfare_improvement is None
                     else f"{t.welfare_improvement:.1f}"])
    lines += _md_table(
        ["scenario", "share %", "ref", "green %", "ref", "utility", "ref",
         "cost", "welfare %", "welfare % (ref)"], rows)
    lines += ["", "The welfare column is computed from simulated utility "
              "indices (baseline 0, perfect information 100); the reference "
              "welfare column is reproduced as printed, which does not "
              "follow from the printed utility indices under that formula.",
              ""]

    lines += ["## Sensitivity sweep", ""]
    targets = {(t.parameter, t.adjusted_value): t for t in ref.SWEEP_TARGETS}
    rows = []
    for s in sweep_results:
        t = targets.get((s.parameter, s.adjusted_value))
        rows.append([s.parameter, f"{s.baseline_value:g}",
                     f"{s.adjusted_value:g}",
                     f"{100 * s.washer_share:.1f}",
                     f"{t.washer_share:.1f}" if t else "-",
                     s.direction, t.direction if t else "-",
                     f"{s.coefficient:.2f}",
                     f"{t.coefficient:.2f}" if t else "-"])
    lines += _md_table(
        ["parameter", "base", "adjusted", "share %", "share % (ref)",
         "direction", "direction (ref)", "coeff", "coeff (ref)"], rows)
    lines += ["", "Directions are gated; coefficients are reported for "
              "comparison only.", ""]

    lines += ["## Robustness of endpoint metrics", ""]
    ref_by_label = {t.metric: t for t in ref.ROBUSTNESS_TARGETS}
    rows = []
    for row in robustness_rows:
        t = ref_by_label.get(row[0])
        rows.append([str(row[0]), f"{row[2]:.2f}",
                     f"{t.mean:.2f}" if t else "-",
                     f"{row[3]:.2f}", f"{t.sd:.2f}" if t else "-",
                     f"{row[4]:.1f}", f"{t.cv:.1f}" if t else "-",
                     f"{row[7]:.2f}", f"{t.skewness:.2f}" if t else "-",
                     f"{row[8]:.2f}", f"{t.kurtosis:.2f}" if t else "-"])
    lines += _md_table(
        ["metric", "mean", "ref", "sd", "ref", "cv %", "ref", "skew", "ref",
         "kurtosis", "ref"], rows)
    lines += ["", f"Pooled peer-index / green-output correlation: "
              f"r = {echo_r:.4f} (gate: r < {ref.ECHO_R_CEILING}).", ""]

    lines += ["## Acceptance gates", ""]
    lines += [f"- {c.line()}" for c in checks]
    n_fail = sum(not c.ok for c in checks)
    lines += ["", f"**{'ALL GATES PASS' if n_fail == 0 else f'{n_fail} GATE(S) FAIL'}**", ""]
    return lines


def cmd_replicate_tables(spec: RunSpec) -> int:
    params, _ = _load(spec)
    _check(spec.reps)
    reps = spec.reps if spec.reps is not None else 100
    sweep_reps = spec.sweep_reps if spec.sweep_reps is not None else 20
    comparison = compare_policies(params, reps, spec.seed)
    base = comparison.experiments["baseline"]
    sweep_results = sensitivity_sweep(params, sweep_reps, spec.seed)
    panel = build_pooled_panel(params, n_reps=10, base_seed=spec.seed)
    echo_r = correlation_echo(panel)

    checks = (_baseline_gates(base) + _policy_gates(comparison)
              + _sweep_gates(sweep_results) + _robustness_gates(base))
    checks.append(GateCheck("correlation echo", f"r = {echo_r:.4f}",
                            f"r < {ref.ECHO_R_CEILING}",
                            echo_r < ref.ECHO_R_CEILING))

    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(os.path.join(spec.out_dir, "policy.csv"),
               POLICY_COLUMNS, _policy_rows(comparison))
    _write_csv(os.path.join(spec.out_dir, "sweep.csv"),
               SWEEP_COLUMNS, _sweep_rows(sweep_results))
    robustness_rows = _robustness_rows(base)
    _write_csv(os.path.join(spec.out_dir, "robustness.csv"),
               ROBUSTNESS_COLUMNS, robustness_rows)
    report = _report_lines(base, comparison, sweep_results, robustness_rows,
                           echo_r, checks, reps, sweep_reps, spec.seed)
    _atomic_write(os.path.join(spec.out_dir, "report.md"),
                  "\n".join(report) + "\n")

    for c in checks:
        print(c.line())
    n_fail = sum(not c.ok for c in checks)
    print(f"wrote policy.csv, sweep.csv, robustness.csv, report.md "
          f"to {spec.out_dir}")
    if n_fail:
        print(f"{n_fail} acceptance gate(s) failed", file=sys.stderr)
        return 1
    return 0


# --- argument parsing -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lemonsim",
        description="Disclosure-washing market simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, reps_help):
        p.add_argument("--config", help="config file path")
        p.add_argument("--reps", type=int, help=reps_help)
        p.add_argument("--seed", type=int, default=ref.REFERENCE_SEED,
                       help="base seed (default %(default)s)")
        p.add_argument("--out", default=".", dest="out_dir",
                       help="output directory (default current)")

    p = sub.add_parser("run", help="replicate one scenario")
    p.add_argument("--scenario", default="baseline", choices=SCENARIO_NAMES)
    common(p, "replications (default: the configured n_reps)")

    common(sub.add_parser("compare-policies",
                          help="endpoint table over all six scenarios"),
           "replications per scenario (default 100)")
    common(sub.add_parser("sweep", help="single-parameter sensitivity sweep"),
           "replications per adjustment (default 20)")

    p = sub.add_parser("replicate-tables",
                       help="reference tables, gate report, acceptance exit "
                            "status")
    common(p, "replications per scenario (default 100)")
    p.add_argument("--sweep-reps", type=int,
                   help="replications per sweep adjustment (default 20)")

    p = sub.add_parser("metrics", help="score an external firm-period panel")
    p.add_argument("--in", dest="panel_in", required=True,
                   help="input panel CSV")
    p.add_argument("--out", dest="panel_out", required=True,
                   help="scored output CSV")
    return parser


_COMMANDS = {
    "run": cmd_run,
    "compare-policies": cmd_compare,
    "sweep": cmd_sweep,
    "replicate-tables": cmd_replicate_tables,
    "metrics": cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    spec = RunSpec(command=args.command,
                   config=getattr(args, "config", None),
                   scenario=getattr(args, "scenario", "baseline"),
                   reps=getattr(args, "reps", None),
                   sweep_reps=getattr(args, "sweep_reps", None),
                   seed=getattr(args, "seed", ref.REFERENCE_SEED),
                   out_dir=getattr(args, "out_dir", "."),
                   panel_in=getattr(args, "panel_in", None),
                   panel_out=getattr(args, "panel_out", None))
    try:
        return _COMMANDS[spec.command](spec)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
