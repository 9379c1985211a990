"""Command-line front end: run scenarios, list fixtures, batch directories.

Exit codes: 0 success (flagged misbehavior included), 1 usage or scenario
errors, 2 I/O errors. ETCSIM_OUT sets the default output directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import ConsensusReport, cluster_report, inter_event_stats
from .engine import AgentFlag, Scenario, Trace, simulate
from .fixtures import DESCRIPTIONS, list_fixtures, load_fixture
from .graph import components_after_removal, is_vertex_cut
from .scenario_io import ScenarioDocument, ScenarioError, parse_scenario_file
from .triggering import Mechanism

DEFAULT_OUT_ENV = "ETCSIM_OUT"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(1, f"{self.prog}: error: {message}")


class SystemExit_(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        self.message = message


def main(argv=None) -> int:
    parser = _Parser(prog="etcsim",
                     description="Event-triggered consensus simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario file or bundled fixture")
    run_p.add_argument("scenario", help="path to a scenario file, or a fixture name")
    run_p.add_argument("--out", help="output directory (default: $ETCSIM_OUT or ./out)")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--dt", type=float, help="override the integration step")
    run_p.add_argument("--horizon", type=float, help="override the horizon")
    run_p.add_argument("--plots", action="store_true", help="also write SVG plots")

    sub.add_parser("fixtures", help="list bundled fixtures")

    batch_p = sub.add_parser("batch", help="run every scenario file in a directory")
    batch_p.add_argument("directory")
    batch_p.add_argument("--out", help="output root (default: $ETCSIM_OUT or ./out)")
    batch_p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    try:
        args = parser.parse_args(argv)
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code

    try:
        if args.command == "fixtures":
            for name, description in list_fixtures():
                print(f"{name}: {description}")
            return 0
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_batch(args)
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except (ScenarioError, KeyError) as exc:
        print(f"etcsim: {_plain(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"etcsim: {exc}", file=sys.stderr)
        return 2


def _plain(exc) -> str:
    return exc.args[0] if exc.args else str(exc)


def _default_out() -> Path:
    return Path(os.environ.get(DEFAULT_OUT_ENV, "out"))


def _load(ref: str) -> ScenarioDocument:
    if ref in DESCRIPTIONS:
        return load_fixture(ref)
    return parse_scenario_file(ref)


def _cmd_run(args) -> int:
    doc = _load(args.scenario)
    scenario = doc.scenario
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if overrides:
        scenario = scenario.with_overrides(**overrides)
    out_dir = Path(args.out) if args.out else (
        Path(doc.output_dir) if doc.output_dir else _default_out()
    )
    plots = args.plots or doc.plots
    name = args.scenario if args.scenario in DESCRIPTIONS else Path(args.scenario).stem
    summary = run_scenario(scenario, out_dir, name=name, plots=plots)
    print(summary)
    return 0


def run_scenario(scenario: Scenario, out_dir: Path, name: str = "scenario",
                 plots: bool = False) -> str:
    """Simulate and emit states/events/controls CSVs plus a text summary."""
    trace = simulate(scenario)
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except (OSError, NotADirectoryError) as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    write_states_csv(out_dir / "states.csv", trace)
    write_events_csv(out_dir / "events.csv", trace)
    write_controls_csv(out_dir / "controls.csv", trace)
    report, cut = _cluster_view(scenario, trace)
    summary = format_summary(name, scenario, trace, report, cut)
    (out_dir / "summary.txt").write_text(summary)
    if plots:
        write_plots(out_dir, trace, scenario, name)
    return summary


def _cluster_view(scenario: Scenario, trace: Trace):
    """Cluster report keyed to the silenced agents when they form a vertex cut."""
    silenced = sorted(
        i for i, flags in trace.flags.items() if AgentFlag.NON_TRIGGERING in flags
    )
    n = scenario.graph.n_agents
    if silenced and len(silenced) < n and is_vertex_cut(scenario.graph, silenced):
        partition = [set(c) for c in components_after_removal(scenario.graph, silenced)]
        partition.append(set(silenced))
        return cluster_report(trace, partition), silenced
    return cluster_report(trace, [set(range(1, n + 1))]), []


def _fmt(value: float) -> str:
    # repr round-trips doubles exactly
    return repr(float(value))


def _component_headers(prefix: str, n: int, width: int) -> list:
    if width == 1:
        return [f"{prefix}{i}" for i in range(1, n + 1)]
    return [f"{prefix}{i}_{c}" for i in range(1, n + 1) for c in range(1, width + 1)]


def write_states_csv(path, trace: Trace) -> None:
    _, n, d = trace.states.shape
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time"] + _component_headers("x", n, d))
        for k, t in enumerate(trace.times):
            row = trace.states[k].reshape(-1)
            writer.writerow([_fmt(t)] + [_fmt(v) for v in row])


def write_controls_csv(path, trace: Trace) -> None:
    _, n, m = trace.controls.shape
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time"] + _component_headers("u", n, m))
        for k in range(trace.controls.shape[0]):
            row = trace.controls[k].reshape(-1)
            writer.writerow([_fmt(trace.times[k])] + [_fmt(v) for v in row])


def write_events_csv(path, trace: Trace) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["agent", "time"])
        for i in range(1, trace.n_agents + 1):
            for t in trace.events_for(i):
                writer.writerow([i, _fmt(t)])


def read_states_csv(path) -> np.ndarray:
    """Times and flattened states back from states.csv, bit-exact."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return np.asarray(rows)


def format_summary(name: str, scenario: Scenario, trace: Trace,
                   report: ConsensusReport, silenced) -> str:
    mech = scenario.trigger.mechanism.value
    lines = [
        f"scenario: {name} ({scenario.graph.n_agents} agents, {mech})",
        f"horizon: {scenario.horizon} s  dt: {scenario.dt} s  seed: {scenario.seed}",
    ]
    if trace.diverged_at is not None:
        lines.append(f"divergence: state magnitude limit hit, truncated at t={trace.diverged_at} s")
    else:
        lines.append("divergence: none")

    lines.append("agent flags:")
    for i in sorted(trace.flags):
        tags = ", ".join(sorted(f.value for f in trace.flags[i]))
        lines.append(f"  agent {i}: {tags}")

    lines.append("consensus:")
    lines.append(f"  final disagreement: {report.final_disagreement:.6g}")
    lines.append(f"  converged at {report.tolerance:g}: {'yes' if report.converged else 'no'}")
    settle = "none" if report.settle_time is None else f"{report.settle_time:.6g} s"
    lines.append(f"  settle time: {settle}")

    if silenced:
        lines.append(f"clusters (silenced vertex cut {{{', '.join(map(str, silenced))}}}):")
    else:
        lines.append("clusters:")
    for cluster in report.clusters:
        members = "{" + ",".join(map(str, cluster.members)) + "}"
        mean = np.array2string(cluster.mean, precision=6, separator=", ")
        tail = " (silenced)" if set(cluster.members) == set(silenced) else ""
        lines.append(
            f"  {members}{tail}: mean {mean}, intra {cluster.intra_disagreement:.3g}, "
            f"{'converged' if cluster.converged else 'not converged'}"
        )

    lines.append("events:")
    stats = inter_event_stats(trace)
    for i in sorted(stats.per_agent):
        s = stats.per_agent[i]
        if s.min_gap is None:
            lines.append(f"  agent {i}: {s.count} event(s), gaps undefined")
        else:
            lines.append(
                f"  agent {i}: {s.count} events, gaps min/mean/max "
                f"{s.min_gap:.4g}/{s.mean_gap:.4g}/{s.max_gap:.4g} s"
            )

    lines.append("attacks:")
    if not scenario.attacks:
        lines.append("  none")
    for spec in scenario.attacks:
        head = f"  agent {spec.agent} {spec.channel.value} onset {spec.onset} s"
        extras = []
        if spec.value is not None:
            extras.append(f"value {spec.value}")
        for record in trace.attack_log:
            if record.agent == spec.agent:
                if record.degenerate:
                    extras.append(record.note)
                else:
                    extras.append(
                        f"armed at {record.armed_at:.6g} s, theta {record.theta:.6g}, "
                        f"bounds ({record.bounds[0]:.6g}, {record.bounds[1]:.6g})"
                    )
                    if record.note:
                        extras.append(record.note)
        lines.append(head + (": " + "; ".join(extras) if extras else ""))
    return "\n".join(lines) + "\n"


def write_plots(out_dir, trace: Trace, scenario: Scenario, name: str) -> None:
    """State trajectories and squared trigger errors as standalone SVG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    n = trace.n_agents
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(n):
        ax.plot(trace.times, trace.states[:, i, 0], label=f"agent {i + 1}", lw=1.0)
    for spec in scenario.attacks:
        ax.axvline(spec.onset, color="k", ls="--", lw=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("state")
    ax.set_title(f"{name}: agent states")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(out_dir / "states.svg")
    plt.close(fig)

    squared = scenario.trigger.mechanism is Mechanism.S_ETM
    lhs = trace.trigger_lhs if squared else trace.trigger_lhs ** 2
    rhs = trace.trigger_rhs if squared else trace.trigger_rhs ** 2
    fig, ax = plt.subplots(figsize=(7, 4))
    t = trace.times[: lhs.shape[0]]
    for i in range(n):
        ax.plot(t, lhs[:, i], lw=0.8, label=f"error sq, agent {i + 1}")
        ax.plot(t, rhs[:, i], lw=0.6, ls=":")
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("squared trigger error (dotted: threshold)")
    ax.set_title(f"{name}: trigger monitors")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(out_dir / "errors.svg")
    plt.close(fig)


def _batch_worker(job):
    path, out_dir = job
    try:
        doc = parse_scenario_file(path)
        run_scenario(doc.scenario, Path(out_dir), name=Path(path).stem,
                     plots=doc.plots)
    except (ScenarioError, OSError) as exc:
        return Path(path).name, 1 if isinstance(exc, ScenarioError) else 2, str(exc)
    return Path(path).name, 0, "ok"


def _cmd_batch(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        raise OSError(f"not a directory: {root}")
    paths = sorted(root.glob("*.yaml"))
    if not paths:
        raise SystemExit_(1, f"etcsim: no scenario files (*.yaml) in {root}")
    out_root = Path(args.out) if args.out else _default_out()
    jobs = [(str(p), str(out_root / p.stem)) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(job) for job in jobs]
    worst = 0
    for name, code, message in results:
        status = "ok" if code == 0 else f"failed ({message})"
        print(f"{name}: {status}")
        worst = max(worst, code)
    return worst


def console_main() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
