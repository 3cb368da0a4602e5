"""Batch command-line front end (``rmtq``).

Every command turns its flags into an :class:`ExperimentConfig`, runs it and
emits a :class:`ResultRecord` as CSV or JSON lines.  All randomness comes from
``--seed``: trial ``t`` draws from ``RandomStream(seed, t)``, so output is the
same for any ``--threads``.  Wall time goes to stderr (``--timing``) and never
into the emitted bytes.

Exit codes: 0 success, 1 guard or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import __version__
from .channels import (
    TNormQuery,
    bell_output_limit,
    conjugate_pair_bell_output,
    hayden_winter_bound,
    moe_estimate,
    tnorm_estimate,
    write_channel,
)
from .criteria import (
    CURVE_COLUMNS,
    ThresholdConfig,
    evaluate_criterion,
    in_gurvits_ball,
    rescaled_pt_spectrum,
    threshold_experiment,
)
from .ensembles import (
    GraphStateSpec,
    MpsSpec,
    RandomStream,
    adapted_example_spec,
    boundary_volume,
    sample_bures,
    sample_ginibre,
    sample_graph_state_marginal,
    sample_haar_unitary,
    sample_induced,
    sample_mps_bulk_marginal,
    sample_product_projection_sum,
    sample_pure_uniform,
    sample_random_isometry_channel,
    sample_wishart,
)
from .freeprob import EmpiricalSpectrum, MarchenkoPastur, Semicircle, free_difference, ks_distance, law_moments
from .tensorlin import entropy
from .permcore import IntegerPartition, Permutation
from .weingarten import CovarianceForm, wg_asymptotic, wg_exact, wick_moment

__all__ = ["ExperimentConfig", "ResultRecord", "emit", "parse_jsonl", "run", "run_config", "replay", "list_experiments", "main"]

FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully materialized parameters of one command invocation."""

    command: str
    params: dict
    seed: int | None = None
    trials: int = 1
    output: str | None = None
    format: str = "csv"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": dict(sorted(self.params.items())),
            "seed": self.seed,
            "trials": self.trials,
            "output": self.output,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(d["command"], dict(d["params"]), d["seed"], d["trials"], d["output"], d["format"])


@dataclass(frozen=True)
class ResultRecord:
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    version: str = __version__
    wall_time: float | None = field(default=None, compare=False)

    @property
    def seed(self) -> int | None:
        return self.config.seed


def _cell(v) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


def _csv_text(v) -> str:
    v = _cell(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def emit(record: ResultRecord, fmt: str = "csv") -> bytes:
    """Serialize a record.  CSV always has a header; JSON lines hold one row
    per line with the config echo, version and seed, keys in fixed order."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(record.columns)
        for row in record.rows:
            writer.writerow([_csv_text(v) for v in row])
        return buf.getvalue().encode()
    if fmt == "jsonl":
        lines = []
        for row in record.rows:
            obj = {
                "command": record.config.command,
                "version": record.version,
                "seed": record.config.seed,
                "config": record.config.to_dict(),
                "result": {c: _cell(v) for c, v in zip(record.columns, row)},
            }
            lines.append(json.dumps(obj, allow_nan=True))
        return "".join(line + "\n" for line in lines).encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_jsonl(data: bytes) -> ResultRecord:
    """Inverse of ``emit(record, "jsonl")`` for non-empty records."""
    objs = [json.loads(line) for line in data.decode().splitlines() if line.strip()]
    if not objs:
        raise ValueError("no records to parse")
    config = ExperimentConfig.from_dict(objs[0]["config"])
    columns = tuple(objs[0]["result"].keys())
    rows = tuple(tuple(o["result"][c] for c in columns) for o in objs)
    return ResultRecord(config, columns, rows, objs[0]["version"])


# -- command handlers ---------------------------------------------------------
# A handler maps (params, seed, trials, threads) to (columns, rows).


def _per_trial(seed: int, trials: int, threads: int, fn: Callable[[int, RandomStream], list[tuple]]) -> list[tuple]:
    def task(t):
        return fn(t, RandomStream(seed, t))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(task, range(trials)))
    else:
        chunks = [task(t) for t in range(trials)]
    return [row for chunk in chunks for row in chunk]


def _cmd_wg(p, seed, trials, threads):
    ct = IntegerPartition.from_parts(p["cycle_type"])
    value = wg_exact(p["n"], ct)
    asym = wg_asymptotic(p["n"], Permutation.from_cycle_type(ct))
    return ("n", "cycle_type", "value", "float_value", "leading_order"), [
        (p["n"], str(ct), value, float(value), asym)
    ]


def _cmd_wick(p, seed, trials, threads):
    form = CovarianceForm(np.array(p["cov"], dtype=float))
    return ("indices", "value"), [(" ".join(map(str, p["indices"])), wick_moment(form, p["indices"]))]


def _cmd_sample(p, seed, trials, threads):
    ens, d, s = p["ensemble"], p["d"], p["s"]

    def one(t, rs):
        if ens == "ginibre":
            vals = np.linalg.eigvals(sample_ginibre(d, d, rs))
        elif ens == "wishart":
            vals = np.linalg.eigvalsh(sample_wishart(d, s, rs))
        elif ens == "haar":
            vals = np.linalg.eigvals(sample_haar_unitary(d, rs))
        elif ens == "pure":
            vals = sample_pure_uniform(d, rs).amplitudes
        elif ens == "induced":
            vals = sample_induced(d, s, rs).eigenvalues()
        elif ens == "bures":
            vals = sample_bures(d, rs).eigenvalues()
        else:
            raise ValueError(f"unknown ensemble {ens!r}")
        vals = np.asarray(vals, dtype=complex)
        if ens in ("ginibre", "haar"):
            vals = vals[np.lexsort((vals.imag, vals.real))]
        return [(t, i, float(v.real), float(v.imag)) for i, v in enumerate(vals)]

    return ("trial", "index", "re", "im"), _per_trial(seed, trials, threads, one)


def _cmd_spectrum(p, seed, trials, threads):
    kind = p["kind"]
    cols = ("trial", "ks", "lambda_min", "lambda_max", "m1", "m2", "m3", "m4")

    def one(t, rs):
        if kind == "wishart":
            d, s = p["d"], p["s"]
            emp_vals = np.linalg.eigvalsh(sample_wishart(d, s, rs)) / d
            emp = EmpiricalSpectrum(emp_vals)
            ks = ks_distance(emp, MarchenkoPastur(s / d))
        elif kind in ("pt-balanced", "pt-unbalanced"):
            n = p["n"]
            k = n if kind == "pt-balanced" else p["k"]
            s = max(1, round(p["c"] * n * k))
            rho = sample_induced(n * k, s, rs, split=(n, k))
            if kind == "pt-balanced":
                emp = rescaled_pt_spectrum(rho, "balanced")
                ks = ks_distance(emp, Semicircle(1.0, 1.0 / p["c"]))
            else:
                emp = rescaled_pt_spectrum(rho, "unbalanced", s=s)
                ks = math.nan
        else:
            raise ValueError(f"unknown spectrum kind {kind!r}")
        m = emp.moments(4)
        return [(t, ks, emp.values[0], emp.values[-1], *m)]

    rows = _per_trial(seed, trials, threads, one)
    if kind == "pt-unbalanced":
        c, k = p["c"], p["k"]
        law = free_difference(MarchenkoPastur(c * k * (k + 1) / 2), MarchenkoPastur(c * k * (k - 1) / 2), M=4)
        rows.append(("limit", math.nan, math.nan, math.nan, *[float(x) for x in law_moments(law, 4)]))
    return cols, rows


def _cmd_criteria(p, seed, trials, threads):
    n, k, s = p["n"], p["k"], p["s"]

    def one(t, rs):
        rho = sample_induced(n * k, s, rs, split=(n, k))
        margins = [evaluate_criterion(rho, c).margin for c in ("PPT", "RED", "RLN")]
        return [(t, *margins, in_gurvits_ball(rho))]

    return ("trial", "ppt_margin", "red_margin", "rln_margin", "in_gurvits_ball"), _per_trial(seed, trials, threads, one)


def _cmd_threshold(p, seed, trials, threads):
    k = p["k"] if p["k"] is not None else p["n"]
    cfg = ThresholdConfig(p["criterion"], p["regime"], p["n"], k, tuple(p["c"]), trials, seed)
    curve = threshold_experiment(cfg, threads=threads)
    return CURVE_COLUMNS, [tuple(r[c] for c in CURVE_COLUMNS) for r in curve.rows()]


def _cmd_channel(p, seed, trials, threads):
    n, k = p["n"], p["k"]
    d = p["d"] if p["d"] is not None else max(1, round(p["t"] * n * k))
    t_eff = d / (n * k)
    limit = bell_output_limit(k, t_eff)

    def one(t, rs):
        ch = sample_random_isometry_channel(n, k, d, rs)
        if p["export"] and t == 0:
            write_channel(p["export"], ch)
        Z = conjugate_pair_bell_output(ch)
        ev = Z.eigenvalues()[::-1]
        hw = hayden_winter_bound(ch)
        moe = math.nan
        if p["moe_restarts"] > 0:
            moe = moe_estimate(ch, p=p["p"], restarts=p["moe_restarts"], rs=rs.substream(1)).value
        return [(t, d, ev[0], ev[1:].min(), ev[1:].max(), limit[0], limit[1], hw, bool(ev[0] >= hw - 1e-12),
                 entropy(ev), moe)]

    cols = ("trial", "d", "lambda_max", "rest_min", "rest_max", "limit_max", "limit_rest", "hw_bound", "hw_holds",
            "bell_entropy", "moe_upper_bound")
    return cols, _per_trial(seed, trials, threads, one)


def _cmd_tnorm(p, seed, trials, threads):
    q = TNormQuery(tuple(p["a"]), p["t"], p["n"], trials)
    est = tnorm_estimate(q, RandomStream(seed, 0))
    return ("a", "t", "n", "trials", "estimate"), [(" ".join(map(repr, q.a)), q.t, q.n, q.trials, est)]


def _graph_spec(p) -> GraphStateSpec:
    if p["example"] == "adapted":
        return adapted_example_spec(p["N"])
    if p["vertices"] is None or p["edges"] is None or p["assign"] is None:
        raise ValueError("--vertices, --edges and --assign are required without --example")
    return GraphStateSpec(p["vertices"], tuple(tuple(e) for e in p["edges"]), p["N"], tuple(p["assign"]))


def _cmd_graph_state(p, seed, trials, threads):
    spec = _graph_spec(p)
    bv = boundary_volume(spec)

    def one(t, rs):
        rho = sample_graph_state_marginal(spec, rs)
        return [(t, rho.dim, entropy(rho), bv, bv * math.log(spec.N))]

    return ("trial", "dim", "entropy", "boundary_volume", "boundary_log_N"), _per_trial(seed, trials, threads, one)


def _cmd_mps(p, seed, trials, threads):
    spec = MpsSpec(p["d"], p["D"], p["l"], p["N"])
    flat = np.eye(spec.d**spec.l) / spec.d**spec.l

    def one(t, rs):
        rho = sample_mps_bulk_marginal(spec, rs)
        dist = float(np.abs(np.linalg.eigvalsh(rho.data - flat)).max())
        return [(t, dist, entropy(rho))]

    return ("trial", "distance_to_flat", "entropy"), _per_trial(seed, trials, threads, one)


def _cmd_projsum(p, seed, trials, threads):
    d, k, count = p["d"], p["k"], p["p"]
    edge = (1 + math.sqrt(count / d**k)) ** 2

    def one(t, rs):
        m = sample_product_projection_sum(d, k, count, rs)
        return [(t, float(np.linalg.eigvalsh(m)[-1]), edge)]

    return ("trial", "top_eigenvalue", "mp_edge"), _per_trial(seed, trials, threads, one)


# -- argument grammar ---------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _matrix(text: str) -> list[list[float]]:
    """Rows separated by ';', entries by ','."""
    try:
        return [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a matrix like '1,0.5;0.5,1', got {text!r}")


def _edges(text: str) -> list[list[int]]:
    try:
        return [[int(v) for v in e.split("-")] for e in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected edges like '0-1,1-2', got {text!r}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _entropy_order(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"entropy order must be positive, got {text}")
    return v


@dataclass(frozen=True)
class Command:
    help: str
    handler: Callable
    add_args: Callable[[argparse.ArgumentParser], None]
    random: bool = True
    uses_trials: bool = True


def _args_wg(ap):
    ap.add_argument("--n", type=_positive_int, required=True, help="matrix dimension")
    ap.add_argument("--cycle-type", type=_int_list, required=True, help="cycle type, e.g. 2 or 2,1,1")


def _args_wick(ap):
    ap.add_argument("--cov", type=_matrix, required=True, help="covariance matrix, rows separated by ';'")
    ap.add_argument("--indices", type=_int_list, required=True, help="0-based variable labels, e.g. 0,0,1,1")


def _args_sample(ap):
    ap.add_argument("--ensemble", choices=("ginibre", "wishart", "haar", "pure", "induced", "bures"), required=True)
    ap.add_argument("--d", type=_positive_int, required=True, help="dimension")
    ap.add_argument("--s", type=_positive_int, default=1, help="second Ginibre dimension (wishart, induced)")


def _args_spectrum(ap):
    ap.add_argument("--kind", choices=("wishart", "pt-balanced", "pt-unbalanced"), required=True)
    ap.add_argument("--d", type=_positive_int, default=100)
    ap.add_argument("--s", type=_positive_int, default=100)
    ap.add_argument("--n", type=_positive_int, default=16)
    ap.add_argument("--k", type=_positive_int, default=2)
    ap.add_argument("--c", type=float, default=5.0)


def _args_criteria(ap):
    ap.add_argument("--n", type=_positive_int, required=True)
    ap.add_argument("--k", type=_positive_int, required=True)
    ap.add_argument("--s", type=_positive_int, required=True, help="induced-measure parameter")


def _args_threshold(ap):
    ap.add_argument("--criterion", choices=("ppt", "red", "rln", "PPT", "RED", "RLN"), required=True)
    ap.add_argument("--regime", choices=("balanced", "unbalanced", "unbalanced-n"), required=True)
    ap.add_argument("--n", type=_positive_int, required=True)
    ap.add_argument("--k", type=_positive_int, default=None, help="defaults to n")
    ap.add_argument("--c", type=_float_list, required=True, help="comma-separated grid of c values")


def _args_channel(ap):
    ap.add_argument("--n", type=_positive_int, required=True, help="ancilla dimension")
    ap.add_argument("--k", type=_positive_int, required=True, help="output dimension")
    ap.add_argument("--d", type=_positive_int, default=None, help="input dimension (default round(t n k))")
    ap.add_argument("--t", type=float, default=0.5)
    ap.add_argument("--p", type=_entropy_order, default=1.0, help="Renyi order for --moe-restarts")
    ap.add_argument("--moe-restarts", type=int, default=0)
    ap.add_argument("--export", default=None, help="write the first sampled channel to this binary file")


def _args_tnorm(ap):
    ap.add_argument("--a", type=_float_list, required=True, help="direction, e.g. 1,0")
    ap.add_argument("--t", type=float, required=True)
    ap.add_argument("--n", type=_positive_int, required=True)


def _args_graph_state(ap):
    ap.add_argument("--N", type=_positive_int, required=True, help="local dimension")
    ap.add_argument("--example", choices=("adapted",), default=None)
    ap.add_argument("--vertices", type=_positive_int, default=None)
    ap.add_argument("--edges", type=_edges, default=None, help="e.g. 0-1,1-2")
    ap.add_argument("--assign", default=None, help="one S/T letter per edge endpoint, e.g. SSTT")


def _args_mps(ap):
    ap.add_argument("--d", type=_positive_int, required=True)
    ap.add_argument("--D", type=_positive_int, required=True)
    ap.add_argument("--l", type=_positive_int, required=True)
    ap.add_argument("--N", type=_positive_int, required=True)


def _args_projsum(ap):
    ap.add_argument("--d", type=_positive_int, required=True)
    ap.add_argument("--k", type=_positive_int, required=True)
    ap.add_argument("--p", type=_positive_int, required=True)


COMMANDS: dict[str, Command] = {
    "wg": Command("exact Weingarten value Wg(n, cycle type)", _cmd_wg, _args_wg, random=False, uses_trials=False),
    "wick": Command("Gaussian moment by the Wick pairing sum", _cmd_wick, _args_wick, random=False, uses_trials=False),
    "sample": Command("draw random matrices or states and list their spectra", _cmd_sample, _args_sample),
    "spectrum": Command("compare empirical spectra with their limiting laws", _cmd_spectrum, _args_spectrum),
    "criteria": Command("PPT, RED and RLN margins of induced random states", _cmd_criteria, _args_criteria),
    "threshold": Command("Monte Carlo pass fractions across a c grid", _cmd_threshold, _args_threshold),
    "channel": Command("conjugate-pair Bell outputs of random isometry channels", _cmd_channel, _args_channel),
    "tnorm": Command("(t)-norm estimate of a direction", _cmd_tnorm, _args_tnorm),
    "graph-state": Command("entropy of random graph-state marginals", _cmd_graph_state, _args_graph_state),
    "mps": Command("bulk marginals of random matrix product states", _cmd_mps, _args_mps),
    "projsum": Command("top eigenvalue of sums of random product projections", _cmd_projsum, _args_projsum),
}


def list_experiments() -> str:
    width = max(map(len, COMMANDS))
    return "".join(f"{name.ljust(width)}  {cmd.help}\n" for name, cmd in COMMANDS.items())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rmtq", description="Random matrix experiments for quantum information.")
    ap.add_argument("--version", action="version", version=f"rmtq {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.add_parser("list", help="list available experiments")
    for name, cmd in COMMANDS.items():
        sp = sub.add_parser(name, help=cmd.help, description=cmd.help)
        cmd.add_args(sp)
        if cmd.random:
            sp.add_argument("--seed", type=int, required=True, help="random seed (required)")
        if cmd.uses_trials:
            sp.add_argument("--trials", type=_positive_int, default=1)
        sp.add_argument("--format", choices=FORMATS, default="csv")
        sp.add_argument("--output", default=None, help="output file (default stdout)")
        sp.add_argument("--threads", type=_positive_int, default=1, help="worker threads; results do not depend on it")
        sp.add_argument("--timing", action="store_true", help="report wall time on stderr")
    return ap


_COMMON = {"command", "seed", "trials", "format", "output", "threads", "timing"}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    return ExperimentConfig(ns.command, params, getattr(ns, "seed", None), getattr(ns, "trials", 1), ns.output, ns.format)


def run_config(cfg: ExperimentConfig, threads: int = 1) -> ResultRecord:
    cmd = COMMANDS[cfg.command]
    start = time.perf_counter()
    columns, rows = cmd.handler(cfg.params, cfg.seed, cfg.trials, threads)
    return ResultRecord(cfg, tuple(columns), tuple(tuple(r) for r in rows), __version__, time.perf_counter() - start)


def replay(record: ResultRecord, threads: int = 1) -> ResultRecord:
    """Re-run the echoed config of a record."""
    return run_config(record.config, threads)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        print("rmtq: error: a command is required (see 'rmtq list')", file=sys.stderr)
        return 2
    if ns.command == "list":
        sys.stdout.write(list_experiments())
        return 0
    cfg = config_from_args(ns)
    try:
        record = run_config(cfg, ns.threads)
        payload = emit(record, cfg.format)
        if cfg.output:
            with open(cfg.output, "wb") as fh:
                fh.write(payload)
        else:
            sys.stdout.buffer.write(payload)
            sys.stdout.flush()
    except (ValueError, TypeError, OSError, ZeroDivisionError) as exc:
        print(f"rmtq {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    if ns.timing:
        print(f"wall_time={record.wall_time:.3f}s", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())
