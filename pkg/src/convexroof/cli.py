"""Command-line harness.

Subcommands:

* ``eof``         entanglement of a single state (JSON record on stdout)
* ``sweep``       time/temperature sweep over a model family (CSV + figure)
* ``sweep-k``     brute-force sweep over the decomposition size k
* ``bench-hyper`` final objective per (F, CR, iteration budget) on the
                  decohered Bell-like benchmark

Option precedence is CLI flag > config file (flat ``key = value`` lines,
``--config PATH``) > built-in default.  Sweep points get independent seeds
derived from (master seed, point index), so results do not depend on the
worker count and reruns are byte-identical.

Exit codes: 0 success, 2 input error, 3 optimizer failure, 4 partial sweep
failure (failed points are recorded as NaN rows).
"""

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import models, plotting
from .de import DEConfig, derive_seed, evolve, sweep_k
from .errors import ConvexRoofError
from .monotones import blockwise_gibbs_eof_oracle, pure_entanglement, wootters_eof
from .refine import RefineConfig, refine_unitary
from .roof import load_density_matrix_json

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OPTIMIZER = 3
EXIT_PARTIAL = 4

CSV_HEADER = ["param", "eof_de", "eof_refined", "oracle", "wall_ms", "seed", "generations"]

SWEEP_AXES = {"rho2": "t", "qubit-env": "t", "gibbs": "T"}

_BENCH_BUDGETS = [2**p for p in range(4, 14)]


def parse_fraction(text):
    """Float parser that also accepts 'a/b' fractions (e.g. --b 1/3)."""
    text = str(text).strip()
    if "/" in text:
        num, _, den = text.partition("/")
        return float(num) / float(den)
    return float(text)


def parse_complex(text):
    """Scalar parser for --x: fraction, float, or complex literal."""
    try:
        return complex(parse_fraction(text))
    except ValueError:
        return complex(str(text).strip().replace(" ", ""))


def parse_float_list(text):
    return [parse_fraction(part) for part in str(text).split(",") if part.strip()]


def parse_int_list(text):
    return [int(part) for part in str(text).split(",") if part.strip()]


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# converters + built-in defaults for every resolvable option; config-file keys
# use the long flag name without dashes
_OPTION_TYPES = {
    "model": (str, None),
    "input": (str, None),
    "b": (parse_fraction, 1.0 / 3.0),
    "x": (parse_complex, complex(1.0 / 3.0)),
    "c": (parse_fraction, 0.7),
    "omega": (parse_fraction, 1.0),
    "d": (parse_fraction, 1.0),
    "ne": (int, 2),
    "K": (parse_fraction, 1.0),
    "alpha": (parse_fraction, 1.0),
    "Omega": (parse_fraction, 5.0),
    "T": (parse_fraction, 1.0),
    "t": (parse_fraction, 0.0),
    "iters": (int, 1024),
    "npop": (int, 30),
    "F": (parse_fraction, 0.1),
    "CR": (parse_fraction, 0.9),
    "k": (int, None),
    "projection": (str, "qr"),
    "seed": (int, 0),
    "refine": (_parse_bool, True),
    "refine-iters": (int, 500),
    "log-base": (str, "e"),
    "from": (parse_fraction, None),
    "to": (parse_fraction, None),
    "points": (int, 96),
    "workers": (int, 1),
    "kmax": (int, None),
    "out": (str, None),
    "format": (str, "csv"),
    "plot": (_parse_bool, True),
    "budgets": (parse_int_list, _BENCH_BUDGETS),
}


def load_config_file(path):
    """Flat key = value option file; '#' starts a comment."""
    values = {}
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _OPTION_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
            values[key] = value.strip()
    return values


class Options:
    """CLI values merged over a config file and the built-in defaults."""

    def __init__(self, args, config_values):
        self._args = vars(args)
        self._config = config_values

    def get(self, name):
        conv, default = _OPTION_TYPES[name]
        cli = self._args.get(name.replace("-", "_"))
        if cli is not None:
            return conv(cli)
        if name in self._config:
            return conv(self._config[name])
        return default


@dataclass
class RunConfig:
    """Everything one command execution needs (also reused by the tests)."""

    model: str
    params: dict = field(default_factory=dict)
    input_path: str | None = None
    de: DEConfig = field(default_factory=DEConfig)
    refine: RefineConfig | None = field(default_factory=RefineConfig)
    log_base: float = math.e
    sweep_from: float | None = None
    sweep_to: float | None = None
    points: int = 96
    workers: int = 1
    k_max: int | None = None
    out: str | None = None
    fmt: str = "csv"
    plot: bool = True

    def validate(self):
        if self.points < 1:
            raise ValueError("need at least one sweep point")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if (
            self.sweep_from is not None
            and self.sweep_to is not None
            and self.sweep_from > self.sweep_to
        ):
            raise ValueError("sweep start exceeds sweep end")


def build_state(config, at=None):
    """Construct the model state and its oracle value, if one exists.

    ``at`` overrides the model's sweep-axis value (t or T).  Returns
    ``(state, oracle)`` with ``oracle = None`` when no closed form applies.
    """
    p = config.params
    base = config.log_base
    model = config.model
    if model == "rho1":
        state, _ = models.make_rho1(p["b"], p["x"], log_base=base)
        return state, wootters_eof(state.density_matrix(), log_base=base)
    if model == "rho2":
        t = p["t"] if at is None else at
        state = models.make_rho2(p["c"], p["omega"], t, log_base=base)
        return state, wootters_eof(state.density_matrix(), log_base=base)
    if model == "qubit-env":
        t = p["t"] if at is None else at
        state = models.make_qubit_env(p["d"], p["ne"], t, log_base=base)
        oracle = None
        if state.rank == 1:
            oracle = pure_entanglement(
                state.factors[:, 0], state.dim_a, state.dim_b, base
            )
        return state, oracle
    if model == "gibbs":
        temperature = p["T"] if at is None else at
        state, _ = models.make_gibbs(
            p["K"], p["alpha"], p["Omega"], temperature, log_base=base
        )
        oracle = blockwise_gibbs_eof_oracle(
            p["K"], p["alpha"], p["Omega"], temperature, base
        )
        return state, oracle
    if model == "sep1":
        state = models.make_sep1(log_base=base)
        return state, wootters_eof(state.density_matrix(), log_base=base)
    if model == "sep2":
        state = models.make_sep2(log_base=base)
        return state, wootters_eof(state.density_matrix(), log_base=base)
    if model == "file":
        if not config.input_path:
            raise ValueError("--model file needs --input PATH")
        state = load_density_matrix_json(config.input_path, log_base=base)
        oracle = None
        if state.dim_a == 2 and state.dim_b == 2:
            oracle = wootters_eof(state.density_matrix(), log_base=base)
        return state, oracle
    raise ValueError(f"unknown model {model!r}")


def run_point(config, at=None, seed=None):
    """One full optimize-and-refine evaluation; the unit of sweep work."""
    state, oracle = build_state(config, at=at)
    de_cfg = config.de if seed is None else replace(config.de, seed=seed)
    started = time.perf_counter()
    result = evolve(state, de_cfg)
    if config.refine is not None:
        _, refined = refine_unitary(state, result.best_u, config.refine)
    else:
        refined = result.best_j
    wall_ms = (time.perf_counter() - started) * 1e3
    return {
        "eof_de": result.best_j,
        "eof_refined": refined,
        "oracle": oracle,
        "wall_ms": wall_ms,
        "seed": de_cfg.seed,
        "generations": int(len(result.history) - 1),
        "evaluations": result.evaluations,
        "rank": state.rank,
        "k": result.best_u.shape[0],
    }


def _sweep_task(payload):
    config, value, seed = payload
    try:
        record = run_point(config, at=value, seed=seed)
    except Exception as exc:  # recorded as a NaN row, summarized by exit code
        return {
            "param": value,
            "eof_de": math.nan,
            "eof_refined": math.nan,
            "oracle": None,
            "wall_ms": math.nan,
            "seed": seed,
            "generations": 0,
            "failure": f"{type(exc).__name__}: {exc}",
        }
    record["param"] = value
    return record


def default_sweep_range(config):
    if config.model == "rho2":
        omega = config.params.get("omega", 1.0) or 1.0
        return 0.0, 2.0 * math.pi / abs(omega)
    if config.model == "qubit-env":
        return 0.0, 2.0 * models.qubit_env_revival_time(config.params["ne"])
    if config.model == "gibbs":
        return 5.0 / config.points, 5.0
    raise ValueError(f"model {config.model!r} is not sweepable")


def sweep_grid(config):
    if config.model not in SWEEP_AXES:
        raise ValueError(f"model {config.model!r} is not sweepable")
    lo, hi = config.sweep_from, config.sweep_to
    if lo is None or hi is None:
        d_lo, d_hi = default_sweep_range(config)
        lo = d_lo if lo is None else lo
        hi = d_hi if hi is None else hi
    if config.points == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, config.points)]


def run_sweep(config):
    """Evaluate every grid point (optionally on a process pool).

    Returns ``(rows, n_failed)`` with rows in grid order regardless of
    completion order.
    """
    config.validate()
    grid = sweep_grid(config)
    tasks = [
        (config, value, derive_seed(config.de.seed, index))
        for index, value in enumerate(grid)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(task) for task in tasks]
    n_failed = sum(1 for row in rows if "failure" in row)
    return rows, n_failed


def run_k_sweep(config):
    config.validate()
    state, oracle = build_state(config)
    if config.k_max is None:
        raise ValueError("sweep-k needs --kmax")
    started = time.perf_counter()
    results, best_k = sweep_k(state, config.de, config.k_max)
    rows = []
    for k, result in results:
        refined = None
        if config.refine is not None:
            _, refined = refine_unitary(state, result.best_u, config.refine)
        rows.append(
            {
                "k": k,
                "eof_de": result.best_j,
                "eof_refined": refined if refined is not None else result.best_j,
                "oracle": oracle,
                "wall_ms": (time.perf_counter() - started) * 1e3,
                "seed": result.seed,
                "generations": int(len(result.history) - 1),
            }
        )
        started = time.perf_counter()
    return rows, best_k


def _bench_task(payload):
    config, f_weight, crossover, budget, seed = payload
    state, target = build_state(config)
    de_cfg = replace(
        config.de, f_weight=f_weight, crossover=crossover, n_max=budget, seed=seed
    )
    started = time.perf_counter()
    result = evolve(state, de_cfg)
    return {
        "F": f_weight,
        "CR": crossover,
        "iters": budget,
        "eof_de": result.best_j,
        "error": abs(result.best_j - target) if target is not None else math.nan,
        "wall_ms": (time.perf_counter() - started) * 1e3,
        "seed": seed,
    }


def run_bench(config, f_values, cr_values, budgets):
    """Independent DE runs per (F, CR, budget) cell with derived seeds."""
    config.validate()
    tasks = []
    for fi, f_weight in enumerate(f_values):
        for ci, crossover in enumerate(cr_values):
            for bi, budget in enumerate(budgets):
                seed = derive_seed(config.de.seed, fi, ci, bi)
                tasks.append((config, f_weight, crossover, budget, seed))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_bench_task, tasks))
    return [_bench_task(task) for task in tasks]


def _fmt_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def rows_to_csv(rows, header):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(row.get(column)) for column in header])
    return buffer.getvalue()


def _emit(text_or_rows, header, config):
    if config.fmt == "json":
        payload = json.dumps(text_or_rows, indent=2, default=_json_default)
        body = payload + "\n"
    else:
        body = rows_to_csv(text_or_rows, header)
    if config.out:
        with open(config.out, "w") as handle:
            handle.write(body)
    else:
        sys.stdout.write(body)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _figure_path(out_path):
    root, _, _ = str(out_path).rpartition(".")
    return (root or str(out_path)) + ".png"


def _axis_label(model):
    return {"rho2": "time", "qubit-env": "time", "gibbs": "temperature"}[model]


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_options(parser):
    parser.add_argument(
        "--model",
        choices=["rho1", "rho2", "qubit-env", "gibbs", "sep1", "sep2", "file"],
        help="state family (default: file when --input is given)",
    )
    parser.add_argument("--input", help="density-matrix JSON file for --model file")
    for flag in ("b", "x", "c", "omega", "d", "K", "alpha", "Omega", "T", "t"):
        parser.add_argument(f"--{flag}", help=f"model parameter {flag}")
    parser.add_argument("--ne", help="number of environment qubits")


def _add_optimizer_options(parser):
    parser.add_argument("--iters", help="DE generation budget (default 1024)")
    parser.add_argument("--npop", help="DE population size (default 30)")
    parser.add_argument("--F", help="DE weight (default 0.1)")
    parser.add_argument("--CR", help="DE crossover ratio (default 0.9)")
    parser.add_argument("--k", help="decomposition size (default: state rank)")
    parser.add_argument("--projection", choices=["qr", "polar"], help="constraint projection")
    parser.add_argument("--seed", help="master seed (default 0)")
    parser.add_argument(
        "--refine",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="quasi-Newton refinement of the DE output (default on)",
    )
    parser.add_argument("--refine-iters", help="refinement iteration cap (default 500)")
    parser.add_argument("--log-base", choices=["e", "2"], help="entropy log base (default e)")
    parser.add_argument("--config", help="flat key = value option file")


def _add_sweep_options(parser):
    parser.add_argument("--from", dest="sweep_from", metavar="START", help="sweep start")
    parser.add_argument("--to", dest="sweep_to", metavar="END", help="sweep end")
    parser.add_argument("--points", help="number of grid points (default 96)")
    parser.add_argument("--workers", help="process count for sweep points (default 1)")


def _add_output_options(parser):
    parser.add_argument("--out", help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    parser.add_argument(
        "--plot",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="render a PNG figure next to --out (default on)",
    )


def make_parser():
    parser = argparse.ArgumentParser(
        prog="convexroof",
        description="Convex-roof entanglement of mixed states by differential "
        "evolution over semi-unitary matrices with quasi-Newton refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    eof = sub.add_parser("eof", help="entanglement of a single state")
    for add in (_add_model_options, _add_optimizer_options, _add_output_options):
        add(eof)

    sweep = sub.add_parser("sweep", help="time/temperature sweep over a model family")
    for add in (
        _add_model_options,
        _add_optimizer_options,
        _add_sweep_options,
        _add_output_options,
    ):
        add(sweep)

    sweepk = sub.add_parser("sweep-k", help="brute-force sweep over the decomposition size")
    for add in (_add_model_options, _add_optimizer_options, _add_output_options):
        add(sweepk)
    sweepk.add_argument("--kmax", help="largest decomposition size to try")
    sweepk.add_argument("--workers", help="(accepted for symmetry; runs serially)")

    bench = sub.add_parser(
        "bench-hyper", help="final objective per (F, CR, iteration budget)"
    )
    for add in (_add_model_options, _add_optimizer_options, _add_output_options):
        add(bench)
    bench.add_argument("--budgets", help="comma-separated iteration budgets")
    bench.add_argument("--workers", help="process count for bench cells (default 1)")
    return parser


def _options(args):
    config_values = {}
    if getattr(args, "config", None):
        config_values = load_config_file(args.config)
    return Options(args, config_values)


def build_run_config(args, with_sweep=False):
    opt = _options(args)
    model = opt.get("model")
    input_path = opt.get("input")
    if model is None:
        model = "file" if input_path else "rho1"
    params = {
        "b": opt.get("b"),
        "x": opt.get("x"),
        "c": opt.get("c"),
        "omega": opt.get("omega"),
        "d": opt.get("d"),
        "ne": opt.get("ne"),
        "K": opt.get("K"),
        "alpha": opt.get("alpha"),
        "Omega": opt.get("Omega"),
        "T": opt.get("T"),
        "t": opt.get("t"),
    }
    log_base = math.e if opt.get("log-base") == "e" else 2.0
    # bench-hyper passes comma lists for F/CR and overrides them per cell
    try:
        f_weight = opt.get("F")
    except ValueError:
        f_weight = _OPTION_TYPES["F"][1]
    try:
        crossover = opt.get("CR")
    except ValueError:
        crossover = _OPTION_TYPES["CR"][1]
    de_cfg = DEConfig(
        f_weight=f_weight,
        crossover=crossover,
        n_pop=opt.get("npop"),
        n_max=opt.get("iters"),
        k=opt.get("k"),
        projection=opt.get("projection"),
        seed=opt.get("seed"),
    )
    refine_cfg = RefineConfig(max_iter=opt.get("refine-iters")) if opt.get("refine") else None
    config = RunConfig(
        model=model,
        params=params,
        input_path=input_path,
        de=de_cfg,
        refine=refine_cfg,
        log_base=log_base,
        points=opt.get("points") if with_sweep else 1,
        workers=opt.get("workers") if hasattr(args, "workers") else 1,
        k_max=opt.get("kmax") if hasattr(args, "kmax") else None,
        out=opt.get("out"),
        fmt=opt.get("format"),
        plot=opt.get("plot"),
    )
    if with_sweep:
        config.sweep_from = opt.get("from") if args.sweep_from is None else parse_fraction(args.sweep_from)
        config.sweep_to = opt.get("to") if args.sweep_to is None else parse_fraction(args.sweep_to)
    return config, opt


def cmd_eof(args):
    config, _ = build_run_config(args)
    record = run_point(config)
    record = {
        "eof": record["eof_refined"],
        "eof_de": record["eof_de"],
        "k": record["k"],
        "rank": record["rank"],
        "seed": record["seed"],
        "generations": record["generations"],
        "wall_ms": record["wall_ms"],
        "evaluations": record["evaluations"],
        "oracle": record["oracle"],
    }
    text = json.dumps(record, indent=2, default=_json_default) + "\n"
    sys.stdout.write(text)
    if config.out:
        with open(config.out, "w") as handle:
            handle.write(text)
    return EXIT_OK


def cmd_sweep(args):
    config, _ = build_run_config(args, with_sweep=True)
    rows, n_failed = run_sweep(config)
    _emit(rows, CSV_HEADER, config)
    if config.out and config.plot:
        plotting.render_sweep(
            rows,
            _figure_path(config.out),
            xlabel=_axis_label(config.model),
            title=f"{config.model} sweep",
        )
    if n_failed:
        print(f"{n_failed} of {len(rows)} points failed (NaN rows)", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_sweep_k(args):
    config, _ = build_run_config(args)
    if config.k_max is None:
        raise ValueError("sweep-k needs --kmax")
    rows, best_k = run_k_sweep(config)
    header = ["k", "eof_de", "eof_refined", "oracle", "wall_ms", "seed", "generations"]
    _emit(rows, header, config)
    if config.out and config.plot:
        plotting.render_k_sweep(rows, _figure_path(config.out), title=f"{config.model} k sweep")
    print(f"best k = {best_k}", file=sys.stderr)
    return EXIT_OK


def cmd_bench_hyper(args):
    config, opt = build_run_config(args)
    f_values = parse_float_list(args.F) if args.F is not None else [_OPTION_TYPES["F"][1]]
    cr_values = parse_float_list(args.CR) if args.CR is not None else [_OPTION_TYPES["CR"][1]]
    budgets = opt.get("budgets")
    rows = run_bench(config, f_values, cr_values, budgets)
    header = ["F", "CR", "iters", "eof_de", "error", "wall_ms", "seed"]
    _emit(rows, header, config)
    if config.out and config.plot:
        plotting.render_bench(rows, _figure_path(config.out))
    return EXIT_OK


_COMMANDS = {
    "eof": cmd_eof,
    "sweep": cmd_sweep,
    "sweep-k": cmd_sweep_k,
    "bench-hyper": cmd_bench_hyper,
}


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConvexRoofError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # optimizer-side failure
        print(f"optimizer failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER


if __name__ == "__main__":
    sys.exit(main())
