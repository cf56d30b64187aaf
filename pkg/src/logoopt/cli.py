"""Command-line front-end: ``bench``, ``plan`` and ``bound``.

Every subcommand writes a CSV trace (``--out``; ``-`` for stdout) with a
header row and floats printed with 17 significant digits, so a rerun of
the same configuration reproduces the file byte for byte apart from the
``wall_ms`` column.

Settings are resolved as flags > ``--config`` file > defaults.  The
config file is flat ``key = value`` text using the long flag names
(``nmax = 4000``, ``w-schedule = 3,4,5``); ``#`` starts a comment.

Exit codes: 0 success, 2 usage error, 3 budget exhausted before the
target error was met.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

from . import parallel, planner, theory
from .objectives import REGISTRY, ConfigurationError, error_metric, get_objective
from .optimizer import DEFAULT_SCHEDULE, HMAX_SCHEDULES, OptimizerConfig, Search, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3

BENCH_ALGOS = ("soo", "logo", "logo-adaptive")
PLAN_ALGOS = ("logo-op", "plogo-op")
LOG_LEVELS = {"off": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}

DEFAULTS: Dict[str, Dict[str, object]] = {
    "bench": {"algo": "logo-adaptive", "w": None, "w-schedule": None, "hmax": "wsqrt", "target": 1e-4, "nmax": 8000},
    "plan": {"algo": "logo-op", "mdp": "vent-world", "w": None, "w-schedule": None, "hmax": "wsqrt",
             "nmax": 1001, "L": None, "workers": None},
    "bound": {"b": 1.0, "alpha": 1.0, "p": 2.0, "D": 1, "C": None, "w": 1, "hmax": "sqrt", "d": 0.0,
              "nmax": 2000, "best-case": False},
}

# how each setting is parsed when it comes from the config file
CONVERTERS = {
    "w": int, "nmax": int, "workers": int, "D": int, "target": float, "L": float, "b": float,
    "alpha": float, "p": float, "C": float, "d": float,
    "best-case": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


class TraceWriter:
    """CSV sink for trace rows; ``None`` discards, ``-`` writes to stdout."""

    def __init__(self, path: Optional[str], header: Sequence[str]):
        self.path = path
        self.buffer = io.StringIO()
        self.writer = csv.writer(self.buffer, lineterminator="\n")
        self.writer.writerow(header)
        self.rows = 0

    def row(self, values) -> None:
        self.writer.writerow([fmt(v) for v in values])
        self.rows += 1

    def close(self) -> None:
        if self.path is None:
            return
        text = self.buffer.getvalue()
        if self.path == "-":
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def read_config(path: str) -> Dict[str, str]:
    settings = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        settings[key.lstrip("-").replace("_", "-")] = value
    return settings


def resolve(command: str, args: argparse.Namespace) -> Dict[str, object]:
    """Merge defaults, the config file and explicit flags, in that order."""
    settings = dict(DEFAULTS[command])
    if args.config:
        for key, raw in read_config(args.config).items():
            if key not in settings:
                raise UsageError(f"setting {key!r} does not apply to {command}")
            try:
                settings[key] = CONVERTERS.get(key, str)(raw)
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
    for key in settings:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None and value is not False:
            settings[key] = value
    return settings


def parse_schedule(text) -> tuple:
    try:
        schedule = tuple(int(w) for w in str(text).split(","))
    except ValueError:
        raise UsageError(f"bad width schedule {text!r}") from None
    return schedule


def optimizer_config(s: Dict[str, object], adaptive: bool, **budget) -> OptimizerConfig:
    try:
        if adaptive:
            schedule = parse_schedule(s["w-schedule"]) if s["w-schedule"] else DEFAULT_SCHEDULE
            return OptimizerConfig.adaptive_schedule(schedule, hmax=s["hmax"], **budget)
        return OptimizerConfig.fixed(int(s["w"]), hmax=s["hmax"], **budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_bench(s: Dict[str, object], out: Optional[str], name: str) -> int:
    if s["algo"] not in BENCH_ALGOS:
        raise UsageError(f"bench algorithm must be one of {', '.join(BENCH_ALGOS)}")
    if s["algo"] == "soo":
        if s["w"] not in (None, 1):
            raise UsageError("soo is LOGO with w = 1; do not pass --w")
        s["w"] = 1
    elif s["algo"] == "logo" and s["w"] is None:
        raise UsageError("logo needs a fixed width --w (or use logo-adaptive)")
    spec = get_objective(name)
    target = float(s["target"])
    if not target > 0 or int(s["nmax"]) < 1:
        raise UsageError("--target and --nmax must be positive")
    config = optimizer_config(
        s, s["algo"] == "logo-adaptive", max_evals=int(s["nmax"]), target_error=target, f_star=spec.f_star
    )
    trace = TraceWriter(out, ["n", "N", "best_value", "error", "wall_ms", "w"])
    start = time.monotonic()

    def on_division(search: Search):
        st = search.state
        wall = (time.monotonic() - start) * 1e3
        trace.row([st.n, st.evals, st.best_value, error_metric(spec.f_star, st.best_value), wall, search.w])

    result = run(spec.evaluator, spec.domain, config, on_division)
    wall_ms = (time.monotonic() - start) * 1e3
    trace.close()
    met = error_metric(spec.f_star, result.best_value) < target
    n_at_target = result.state.evals if met else "NA"
    print(f"{name},{s['algo']},{n_at_target},{wall_ms:.3f}")
    return EXIT_OK if met else EXIT_BUDGET


def cmd_plan(s: Dict[str, object], out: Optional[str]) -> int:
    if s["L"] is None:
        raise UsageError("plan needs --L (use inf to disable pruning)")
    L = float(s["L"])
    if not L >= 0:
        raise UsageError("--L must be non-negative")
    if s["algo"] not in PLAN_ALGOS:
        raise UsageError(f"plan algorithm must be one of {', '.join(PLAN_ALGOS)}")
    workers = s["workers"]
    if workers is not None and int(workers) < 1:
        raise UsageError("--workers must be at least 1")
    use_parallel = s["algo"] == "plogo-op" or workers is not None
    mdp, space = planner.get_mdp(str(s["mdp"]))
    if s["w"] is not None and s["w-schedule"] is not None:
        raise UsageError("give either --w or --w-schedule, not both")
    config = optimizer_config(s, s["w"] is None, max_evals=int(s["nmax"]))
    trace = TraceWriter(out, ["n", "m_steps", "best_value", "wall_ms"])
    start = time.monotonic()

    def row(n, steps, best):
        trace.row([n, steps, best, (time.monotonic() - start) * 1e3])

    if use_parallel:
        result = parallel.plogo_op_run(
            mdp, space, config, L, int(workers or 1),
            on_division=lambda m: row(m.search.state.n, m.steps, m.search.state.best_value),
        )
    else:
        result = planner.logo_op_run(
            mdp, space, config, L, on_division=lambda search, steps: row(search.state.n, steps, search.v_plus)
        )
    trace.close()
    point = ",".join(fmt(float(v)) for v in result.best_point)
    print(f"best_x={point} best_value={fmt(float(result.best_value))} n={result.n} m_steps={result.steps}")
    return EXIT_OK


def cmd_bound(s: Dict[str, object], out: Optional[str]) -> int:
    try:
        smooth = theory.SmoothnessParams(float(s["b"]), float(s["alpha"]), float(s["p"]), int(s["D"]))
        params = theory.BoundParams.for_hmax(
            smooth, int(s["w"]), str(s["hmax"]), C=None if s["C"] is None else float(s["C"]), d=float(s["d"])
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if int(s["nmax"]) < 1:
        raise UsageError("--nmax must be positive")
    trace = TraceWriter(out, ["n", "bound"])
    for n in range(1, int(s["nmax"]) + 1):
        trace.row([n, theory.worst_case_bound(n, params, best_case=bool(s["best-case"]))])
    trace.close()
    print(f"bound rows={trace.rows} gamma={fmt(smooth.gamma)} c={fmt(smooth.c)} C={fmt(float(params.C))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logoopt", description="LOGO global optimization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, algos):
        p.add_argument("--algo", choices=algos)
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--out", help="CSV output path ('-' for stdout)")
        p.add_argument("--nmax", type=int)

    def search_flags(p):
        p.add_argument("--w", type=int, help="fixed local-bias width")
        p.add_argument("--w-schedule", help="comma-separated widths for the adaptive schedule")
        p.add_argument("--hmax", choices=HMAX_SCHEDULES)

    bench = sub.add_parser("bench", help="run an optimizer on a benchmark objective")
    bench.add_argument("objective", help=f"one of: {', '.join(REGISTRY)}")
    bench.add_argument("algorithm", nargs="?", choices=BENCH_ALGOS)
    common(bench, BENCH_ALGOS)
    search_flags(bench)
    bench.add_argument("--target", type=float)

    plan = sub.add_parser("plan", help="policy search on a bundled MDP")
    plan.add_argument("mdp_name", nargs="?", metavar="mdp")
    common(plan, PLAN_ALGOS)
    search_flags(plan)
    plan.add_argument("--mdp", choices=sorted(planner.MDPS))
    plan.add_argument("--L", type=float, help="pruning margin; inf disables pruning")
    plan.add_argument("--workers", type=int)

    bound = sub.add_parser("bound", help="tabulate the worst-case loss bound")
    common(bound, None)
    bound.add_argument("--b", type=float)
    bound.add_argument("--alpha", type=float)
    bound.add_argument("--p", type=float)
    bound.add_argument("--D", type=int)
    bound.add_argument("--C", type=float)
    bound.add_argument("--d", type=float)
    bound.add_argument("--w", type=int)
    bound.add_argument("--hmax", choices=HMAX_SCHEDULES)
    bound.add_argument("--best-case", action="store_true")
    return parser


def setup_logging() -> None:
    level = os.environ.get("LOGOOPT_LOG", "off").strip().lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"LOGOOPT_LOG must be one of {', '.join(LOG_LEVELS)}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        setup_logging()
        if args.command == "bench":
            if args.algorithm and args.algo and args.algorithm != args.algo:
                raise UsageError("algorithm given twice with different values")
            args.algo = args.algo or args.algorithm
            return cmd_bench(resolve("bench", args), args.out, args.objective)
        if args.command == "plan":
            if args.mdp_name and args.mdp and args.mdp_name != args.mdp:
                raise UsageError("MDP given twice with different values")
            args.mdp = args.mdp or args.mdp_name
            return cmd_plan(resolve("plan", args), args.out)
        return cmd_bound(resolve("bound", args), args.out)
    except (UsageError, ConfigurationError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(f"logoopt {args.command}: error: {message}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
