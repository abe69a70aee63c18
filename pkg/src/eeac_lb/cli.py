"""Command-line scenario runner.

    eeac-lb run --config scenarios/degraded_two_path.yaml --seed 3 --out run.csv
    eeac-lb compare --a single.yaml --b two.yaml --seeds 0..9 --out cmp.csv
    eeac-lb paths --config scenarios/baseline_two_path.yaml

Exit codes: 0 ok, 1 configuration error, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import config as cfgio
from .config import ConfigError, ScenarioConfig
from .metrics import write_csv
from .network import Network, RunResult, simulate

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("eeac_lb")


def run_scenario(config: ScenarioConfig, out=None, seed: int | None = None) -> RunResult:
    """Simulate one scenario and optionally write its sample CSV to `out`."""
    result = simulate(config, seed)
    if out is not None:
        if hasattr(out, "write"):
            write_csv(result.samples, out)
        else:
            with open(out, "w", newline="") as fh:
                write_csv(result.samples, fh)
    return result


def csv_text(result: RunResult) -> str:
    buf = io.StringIO()
    write_csv(result.samples, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class SeedComparison:
    seed: int
    throughput_a: float
    throughput_b: float
    delay_a: float | None
    delay_b: float | None
    drops_a: int
    drops_b: int

    @property
    def d_throughput(self) -> float:
        return self.throughput_b - self.throughput_a

    @property
    def d_delay(self) -> float | None:
        if self.delay_a is None or self.delay_b is None:
            return None
        return self.delay_b - self.delay_a

    @property
    def b_wins_throughput(self) -> bool:
        return self.throughput_b > self.throughput_a

    @property
    def b_wins_delay(self) -> bool:
        d = self.d_delay
        return d is not None and d < 0


@dataclass(frozen=True)
class ComparisonReport:
    rows: list

    @property
    def b_throughput_win_fraction(self) -> float:
        return sum(r.b_wins_throughput for r in self.rows) / len(self.rows)

    @property
    def b_delay_win_fraction(self) -> float:
        return sum(r.b_wins_delay for r in self.rows) / len(self.rows)

    @property
    def b_both_win_fraction(self) -> float:
        return sum(r.b_wins_throughput and r.b_wins_delay for r in self.rows) / len(self.rows)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "throughput_a", "throughput_b", "d_throughput",
                    "delay_a", "delay_b", "d_delay", "drops_a", "drops_b",
                    "b_wins_throughput", "b_wins_delay"])

        def f(x, spec):
            return "" if x is None else format(x, spec)
        for r in self.rows:
            w.writerow([r.seed, f(r.throughput_a, ".6f"), f(r.throughput_b, ".6f"),
                        f(r.d_throughput, ".6f"), f(r.delay_a, ".9f"), f(r.delay_b, ".9f"),
                        f(r.d_delay, ".9f"), r.drops_a, r.drops_b,
                        int(r.b_wins_throughput), int(r.b_wins_delay)])
        w.writerow(["summary", "", "", "", "", "", "", "", "",
                    f(self.b_throughput_win_fraction, ".3f"),
                    f(self.b_delay_win_fraction, ".3f")])


def _pair(args):
    a, b, seed = args
    ra, rb = simulate(a, seed), simulate(b, seed)
    return SeedComparison(seed, ra.mean_throughput_pps, rb.mean_throughput_pps,
                          ra.mean_delay_s, rb.mean_delay_s, ra.dropped, rb.dropped)


def compare_scenarios(config_a: ScenarioConfig, config_b: ScenarioConfig, seeds,
                      jobs: int = 1) -> ComparisonReport:
    """Paired per-seed runs of two scenarios; B is the candidate, A the baseline."""
    if config_a.duration_s != config_b.duration_s:
        raise ConfigError(f"duration_s: {config_a.duration_s} != {config_b.duration_s}")
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("seeds: at least one seed required")
    work = [(config_a, config_b, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_pair, work))
    else:
        rows = [_pair(w) for w in work]
    return ComparisonReport(rows)


def parse_seeds(text: str) -> list:
    """``3`` -> [3]; ``0..9`` -> [0..9] inclusive; ``1,4,7`` -> [1, 4, 7]."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return seeds


def _summary(result: RunResult) -> str:
    delay = "n/a" if result.mean_delay_s is None else f"{result.mean_delay_s:.6f} s"
    return (f"mean throughput {result.mean_throughput_pps:.3f} pps, mean delay {delay}, "
            f"drops {result.dropped} (generated {result.generated}, "
            f"delivered {result.delivered})")


def _cmd_run(ns) -> int:
    cfg = cfgio.load(ns.config)
    result = run_scenario(cfg, ns.out, ns.seed)
    print(f"{cfg.name}: {_summary(result)}")
    return EXIT_OK


def _cmd_compare(ns) -> int:
    a, b = cfgio.load(ns.a), cfgio.load(ns.b)
    try:
        seeds = parse_seeds(ns.seeds)
    except ValueError as exc:
        raise ConfigError(f"--seeds: {exc}") from None
    report = compare_scenarios(a, b, seeds, ns.jobs)
    if ns.out:
        with open(ns.out, "w", newline="") as fh:
            report.write_csv(fh)
    else:
        report.write_csv(sys.stdout)
    print(f"{b.name} vs {a.name}: B higher throughput in "
          f"{report.b_throughput_win_fraction:.0%} of seeds, lower delay in "
          f"{report.b_delay_win_fraction:.0%}", file=sys.stderr)
    return EXIT_OK


def _cmd_paths(ns) -> int:
    cfg = cfgio.load(ns.config)
    net = Network(cfg)
    for pid, info in net.paths.items():
        print(f"{pid}: {' -> '.join(info.hops)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eeac-lb", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write its CSV")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    r.add_argument("--out", type=Path, default=None)
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("compare", help="paired seed sweep of two scenarios")
    c.add_argument("--a", required=True, type=Path)
    c.add_argument("--b", required=True, type=Path)
    c.add_argument("--seeds", default="0..9")
    c.add_argument("--out", type=Path, default=None)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=_cmd_compare)

    pa = sub.add_parser("paths", help="print the candidate paths")
    pa.add_argument("--config", required=True, type=Path)
    pa.set_defaults(func=_cmd_paths)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
