"""``coverspectra`` command line: spectrum, simulate, converge and cantor."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .cantor import (build_constructor, check_table, default_gamma, grow_generations,
                     martingale_stats)
from .config import RunConfig, load_config
from .cover import HorizonRule, threshold_experiment
from .errors import (CoverSpectraError, InputError, NumericalError, TableTooSmall,
                     TruncatedOrbit)
from .ifs import TargetSchedule, sample_orbit
from .pressure import critical_alphas, spectrum_point, spectrum_s
from .probpressure import convergence_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
TABLE_CAP = 4096

SPECTRUM_HEADER = ["alpha", "s_alpha", "t_alpha", "regime", "alpha0", "alpha1", "alpha2", "s0"]
SIMULATE_HEADER = ["alpha", "replica", "seed", "horizon", "tail_start", "depth",
                   "covered_count", "total", "coverage_fraction", "measure_p", "measure_q0",
                   "complement_exponent", "full_cover"]
CONVERGE_HEADER = ["alpha", "n", "log_m", "s_n", "s_alpha", "gap", "s_n_exp"]


def fmt(x) -> str:
    """CSV cell: 17 significant digits for reals, empty for absent values."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return format(x, ".17g")
    return str(x)


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# -- commands --------------------------------------------------------------------

def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_spectrum(config: RunConfig, threads: int = 1):
    spec = config.spec
    ca = critical_alphas(spec)
    points = _map(lambda a: spectrum_point(spec, a), config.alpha_grid, threads)
    rows = [[p.alpha, p.s_alpha, p.t_alpha, p.regime.value, ca.alpha0, ca.alpha1, ca.alpha2,
             spec.s0] for p in points]
    return SPECTRUM_HEADER, rows


def _horizon_rule(config: RunConfig) -> HorizonRule:
    sim = config.simulate
    if sim.horizon is not None or sim.horizon_rule == "fixed":
        if sim.horizon is None:
            raise InputError("horizon_rule 'fixed' needs a horizon")
        return HorizonRule("fixed", horizon=sim.horizon, tail_start=sim.tail_start)
    return HorizonRule(sim.horizon_rule, extra_levels=sim.extra_levels)


def cmd_simulate(config: RunConfig, threads: int = 1):
    sim = config.simulate
    grid = sorted(config.alpha_grid)
    table = threshold_experiment(config.spec, grid, sim.replicas, _horizon_rule(config),
                                 sim.depth, sim.seed0, threads)
    rows = []
    for row in table:
        for r, rep in enumerate(row.reports):
            rows.append([row.alpha, r, rep.seed, rep.horizon, rep.tail_start, rep.depth,
                         rep.covered_count, rep.total, rep.coverage_fraction,
                         rep.covered_measure["P_p"], rep.covered_measure["Q0"],
                         rep.complement_exponent, rep.full_cover])
    return SIMULATE_HEADER, rows


def cmd_converge(config: RunConfig, threads: int = 1):
    spec = config.spec
    reports = _map(lambda a: (a, convergence_report(spec, a, config.converge.n_list)),
                   config.alpha_grid, threads)
    rows = []
    for a, report in reports:
        for r in report:
            rows.append([a, r.n, r.log_m, r.s_n, r.s_alpha, r.gap, r.s_n_exp])
    return CONVERGE_HEADER, rows


def _cantor_one(config: RunConfig, alpha: float) -> dict:
    spec = config.spec
    c = config.cantor
    gamma = c.gamma if c.gamma is not None else default_gamma(spec, alpha)
    n0 = build_constructor(spec, gamma, alpha, c.n_min, 1).n0
    # generation k + 1 needs entries for the words of length n(()) .. k n(())
    words = sum(spec.n_maps ** k for k in range(n0 + 1)) if c.levels >= 2 else 1
    table = build_constructor(spec, gamma, alpha, c.n_min, min(words, TABLE_CAP))
    checks = check_table(table)
    sched = TargetSchedule(alpha)
    stats = martingale_stats(spec, table, sched, c.seeds, c.seed0)

    # realise as many generations as the orbit budget allows
    need = min(max(e.positions.last + e.n for e in table), c.max_orbit)
    orbit = sample_orbit(spec, need, c.seed0)
    gens = None
    for levels in range(c.levels, 0, -1):
        try:
            gens = grow_generations(orbit, table, sched, levels)
            break
        except (TruncatedOrbit, TableTooSmall):
            continue
    return {
        "alpha": alpha,
        "gamma": gamma,
        "n0": n0,
        "s_gamma": spectrum_s(spec, gamma),
        "table": [{"word": str(e.word), "n": e.n, "m": e.m, "s": e.s,
                   "start": e.positions.start} for e in table],
        "checks": [{"word": str(k.word), "c4": k.c4, "c5": k.c5, "m_bounds": k.m_bounds,
                    "spectral_gap": k.spectral_gap, "sum": k.sum_value,
                    "sum_lower": k.sum_lower, "sum_upper": k.sum_upper} for k in checks],
        "generations": ([[str(w) for w in level] for level in gens.levels[1:]]
                        if gens is not None else []),
        "levels_realised": len(gens) if gens is not None else 0,
        "martingale": {"mean_X1": stats.mean_X1, "var_X1": stats.var_X1,
                       "stderr": stats.stderr, "seeds": stats.seeds},
    }


def cmd_cantor(config: RunConfig, threads: int = 1):
    return _map(lambda a: _cantor_one(config, a), config.alpha_grid, threads)


COMMANDS = {"spectrum": cmd_spectrum, "simulate": cmd_simulate,
            "converge": cmd_converge, "cantor": cmd_cantor}


# -- output --------------------------------------------------------------------

def _meta(command: str, config: RunConfig) -> dict:
    seed = config.cantor.seed0 if command == "cantor" else config.simulate.seed0
    return {"tool": "coverspectra", "version": __version__, "command": command,
            "config_sha256": config.digest(), "seed": seed}


def render_csv(command, config, header, rows) -> str:
    buf = io.StringIO()
    meta = _meta(command, config)
    buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\r\n")
    buf.write("# config: " + config.canonical_json() + "\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def render_json(command, config, payload) -> str:
    doc = {"meta": _meta(command, config), "config": config.to_dict(), "results": payload}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_num) + "\n"


def _tabular_json(header, rows):
    return [{h: _json_num(v) for h, v in zip(header, row)} for row in rows]


def read_config_echo(text: str) -> dict:
    """The config block embedded in a CSV or JSON output."""
    if text.lstrip().startswith("{"):
        return json.loads(text)["config"]
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise ValueError("no config echo found")


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory; nothing is
    left behind on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".coverspectra-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coverspectra",
        description="Dimension spectra, phase transitions and covering simulations "
                    "for dynamical covering sets on self-similar sets.",
        epilog="The cantor command reads orbits whose length grows like e^(alpha n); "
               "keep n(()) small (n_min <= 8 or so) at desk scale.")
    p.add_argument("--version", action="version", version=f"coverspectra {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration (schema 1)")
    p.add_argument("--out", help="output path; overrides output.path; stdout if neither")
    p.add_argument("--seed", type=int, help="overrides simulate.seed0 and cantor.seed0")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    return p


def _fail(exc: BaseException, code: int) -> int:
    if isinstance(exc, CoverSpectraError):
        payload = exc.to_dict()
    else:
        payload = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        return _fail(ValueError("seed must be an unsigned 64-bit integer"), EXIT_CONFIG)
    if args.threads < 1:
        return _fail(ValueError("threads must be positive"), EXIT_CONFIG)
    try:
        config = load_config(args.config).with_seed(args.seed)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except (InputError, ValueError) as exc:
        return _fail(exc, EXIT_CONFIG)

    try:
        result = COMMANDS[args.command](config, args.threads)
    except (InputError, ValueError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except (NumericalError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERIC)

    fmt_name = "json" if args.command == "cantor" else config.output.format
    if args.command == "cantor":
        text = render_json(args.command, config, result)
    elif fmt_name == "json":
        text = render_json(args.command, config, _tabular_json(*result))
    else:
        text = render_csv(args.command, config, *result)

    path = args.out or config.output.path
    try:
        if path:
            write_atomic(path, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
