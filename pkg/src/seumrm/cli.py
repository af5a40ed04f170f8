"""Command-line front end.

Exit status: 0 on success, 2 when a property bound (or a reproduction
verdict) fails, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import csl
from .cdfg import lower_bound, list_schedule, load_cdfg, normalized_throughput
from .charlib import load_library
from .explicit import write_explicit
from .model import build_model, load_configuration
from .reproduce import TARGETS, VERDICT_HEADER, CaseStudy, data_path, fmt_cell, reproduce, verdict_rows
from .sim import ClassTime, Invariance, ReachTime, SimConfig, TransientIndicator, simulate_measures

EXIT_OK, EXIT_ERROR, EXIT_BOUND = 0, 1, 2

SWEEP_PARAMS = ("scrub_interval_days", "coverage", "mission_days")


class CliError(Exception):
    pass


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"file not found: {what} {path}")
    return p


def _builtin(name: str, kind: str) -> Path | None:
    # C1..C4 and fir16/fig1 name the shipped fixtures
    stem = name.lower()
    candidates = {"config": f"{stem}.json", "cdfg": f"{stem}.cdfg.json"}
    res = data_path(candidates[kind])
    return Path(str(res)) if not Path(name).exists() and res.is_file() else None


def _load_inputs(args, need_config: bool = True):
    lib = load_library(_existing(args.library, "library") if args.library else data_path("virtex5_heo.json"))
    if args.cdfg:
        cdfg = load_cdfg(_builtin(args.cdfg, "cdfg") or _existing(args.cdfg, "CDFG"))
    else:
        cdfg = load_cdfg(data_path("fir16.cdfg.json"))
    config = None
    if need_config:
        if not args.config:
            raise CliError("--config is required")
        config = load_configuration(_builtin(args.config, "config") or _existing(args.config, "configuration"))
    return lib, cdfg, config


def _apply_overrides(config, args):
    changes = {}
    if getattr(args, "scrub_interval", None) is not None:
        changes["scrub_interval_days"] = args.scrub_interval
    if getattr(args, "coverage", None) is not None:
        changes["coverage"] = args.coverage
    return config.replace(**changes) if changes else config


def _properties(args) -> list[str]:
    props = list(args.property or [])
    if args.property_file:
        props += csl.read_properties(_existing(args.property_file, "property file").read_text(encoding="utf-8"))
    if not props:
        raise CliError("no property given (use --property or --property-file)")
    return props


def _constants(args) -> dict[str, float]:
    out = {}
    for item in args.const or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise CliError(f"bad --const {item!r}, expected NAME=VALUE")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise CliError(f"bad --const {item!r}: {value!r} is not a number") from None
    return out


def _write_csv(header, rows, out: str | None, stream) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_cell(x) for x in row])
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        stream.write(buf.getvalue())


def _bound_failed(result: csl.QueryResult) -> bool:
    return result.kind == "boolean" and not result.payload


# -- subcommands ------------------------------------------------------------------

def cmd_check(args, out) -> int:
    lib, cdfg, config = _load_inputs(args)
    mrm = build_model(_apply_overrides(config, args), lib, cdfg)
    consts = _constants(args)
    rows, status = [], EXIT_OK
    for text in _properties(args):
        ast = csl.parse_for_model(text, mrm)
        res = csl.evaluate(ast, mrm, constants=consts)
        if _bound_failed(res):
            status = EXIT_BOUND
        rows.append([text, str(res), res.unit])
        if not args.out:
            out.write(f"{res}\n" if args.quiet else f"{text}\n  {res}\n")
    if args.out:
        _write_csv(["property", "result", "unit"], rows, args.out, out)
    return status


def _parse_values(param: str, spec: str) -> list[float]:
    values = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            values += [float(v) for v in range(int(lo), int(hi) + 1)]
        else:
            values.append(float(part))
    if not values:
        raise CliError("sweep needs a non-empty list of values")
    for v in values:
        if param == "coverage" and not 0 <= v <= 1:
            raise CliError(f"coverage value {v} outside [0, 1]")
        if param == "scrub_interval_days" and not v > 0:
            raise CliError(f"scrub interval {v} must be positive")
        if param == "mission_days" and v < 0:
            raise CliError(f"mission time {v} must be >= 0")
    return values


def cmd_sweep(args, out) -> int:
    lib, cdfg, config = _load_inputs(args)
    config = _apply_overrides(config, args)
    values = _parse_values(args.param, args.values)
    props = _properties(args)
    consts = _constants(args)

    def point(v):
        cfg, c = config, dict(consts)
        if args.param == "mission_days":
            c[args.time_constant] = v
        else:
            cfg = config.replace(**{args.param: v})
        mrm = build_model(cfg, lib, cdfg)
        return [csl.evaluate(csl.parse_for_model(p, mrm), mrm, constants=c) for p in props]

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(point, values))
    rows, status = [], EXIT_OK
    for v, res in zip(values, results):
        for text, r in zip(props, res):
            if _bound_failed(r):
                status = EXIT_BOUND
            rows.append([v, text, str(r), r.unit])
    _write_csv([args.param, "property", "result", "unit"], rows, args.out, out)
    return status


_MEASURES = {"class-time": ClassTime, "invariance": Invariance, "transient": TransientIndicator, "reach-time": ReachTime}
_MEASURE_UNITS = {"class-time": "days", "invariance": "probability", "transient": "probability", "reach-time": "days"}


def _parse_measure(spec: str, mrm):
    kind, sep, rest = spec.partition(":")
    if kind not in _MEASURES or not sep:
        raise CliError(f"bad measure {spec!r}; use class-time:T:FORMULA, invariance:T:FORMULA, "
                       f"transient:t:FORMULA or reach-time:FORMULA")
    if kind == "reach-time":
        t, formula = None, rest
    else:
        t_text, sep, formula = rest.partition(":")
        if not sep:
            raise CliError(f"measure {spec!r} needs a time")
        try:
            t = float(t_text)
        except ValueError:
            raise CliError(f"measure {spec!r}: bad time {t_text!r}") from None
    ast = csl.parse_for_model(formula, mrm)
    mask = csl.satisfying(ast, mrm)
    return _MEASURES[kind](mask) if t is None else _MEASURES[kind](mask, t)


def cmd_simulate(args, out) -> int:
    lib, cdfg, config = _load_inputs(args)
    mrm = build_model(_apply_overrides(config, args), lib, cdfg)
    if not args.measure:
        raise CliError("no measure given (use --measure)")
    measures = [_parse_measure(m, mrm) for m in args.measure]
    horizon = max([0.0] + [getattr(m, "T", getattr(m, "t", 0.0)) for m in measures])
    sim = SimConfig(horizon, args.trajectories, args.seed, args.confidence)
    est = simulate_measures(mrm, sim, measures)
    rows = []
    for spec, m in zip(args.measure, measures):
        e = est[m]
        rows.append([spec, e.mean, _MEASURE_UNITS[spec.split(":", 1)[0]], e.half_width, e.low, e.high, e.n])
    _write_csv(["measure", "result", "unit", "half_width", "ci_low", "ci_high", "n"], rows, args.out, out)
    return EXIT_OK


def cmd_reproduce(args, out) -> int:
    targets = list(TARGETS) if "all" in args.targets else args.targets
    for t in targets:
        if t not in TARGETS:
            raise CliError(f"unknown target {t!r}; choose from all, {', '.join(TARGETS)}")
    lib = load_library(_existing(args.library, "library")) if args.library else None
    cdfg = load_cdfg(_builtin(args.cdfg, "cdfg") or _existing(args.cdfg, "CDFG")) if args.cdfg else None
    cs = CaseStudy(lib, cdfg)
    outdir = Path(args.out) if args.out else None
    status = EXIT_OK
    for t in targets:
        art = reproduce(t, cs)
        verdicts = verdict_rows(art)
        if outdir:
            _write_csv(art.header, art.rows, str(outdir / f"{t}.csv"), out)
            _write_csv(VERDICT_HEADER, verdicts, str(outdir / f"{t}.verdict.csv"), out)
        n_acc = sum(v.kind == "acceptance" for v in art.verdicts)
        n_ok = sum(v.kind == "acceptance" and v.passed for v in art.verdicts)
        out.write(f"{t}: {'PASS' if art.ok else 'FAIL'} ({n_ok}/{n_acc} checks)\n")
        for v in art.verdicts:
            if v.kind != "acceptance" or not v.passed:
                out.write(f"  [{v.kind} {v.status}] {v.check}: expected {fmt_cell(v.expected)}, got {fmt_cell(v.actual)}\n")
        if not art.ok:
            status = EXIT_BOUND
    return status


def cmd_export(args, out) -> int:
    lib, cdfg, config = _load_inputs(args)
    mrm = build_model(_apply_overrides(config, args), lib, cdfg)
    if not args.out:
        raise CliError("--out STEM is required for export")
    paths = write_explicit(mrm, args.out)
    out.write(f"{mrm.n_states} states, {mrm.n_transitions} transitions\n")
    for p in paths:
        out.write(f"{p}\n")
    return EXIT_OK


def _parse_alloc(spec: str) -> dict[str, int]:
    alloc = {}
    for part in spec.split(","):
        op, sep, n = part.partition("=")
        if not sep:
            raise CliError(f"bad allocation {spec!r}, expected e.g. add=2,mul=2")
        try:
            alloc[op.strip()] = int(n)
        except ValueError:
            raise CliError(f"bad allocation {spec!r}: {n!r} is not an integer") from None
    return alloc


def cmd_schedule(args, out) -> int:
    lib, cdfg, config = _load_inputs(args, need_config=False)
    if args.alloc:
        alloc = _parse_alloc(args.alloc)
    elif args.config:
        alloc = dict(load_configuration(_builtin(args.config, "config") or _existing(args.config, "configuration")).base_alloc)
    else:
        raise CliError("give --alloc or --config")
    sched = list_schedule(cdfg, alloc, exact=not args.heuristic)
    best = list_schedule(cdfg, {op: max(alloc.get(op, 0), n) for op, n in cdfg.op_counts().items()}).c_steps
    out.write(f"c_steps {sched.c_steps} (lower bound {lower_bound(cdfg, alloc)}, "
              f"throughput {1 / sched.c_steps:.4g}, normalized {normalized_throughput(sched.c_steps, best):.4g})\n")
    for step in range(1, sched.c_steps + 1):
        ops = [n.id for n in cdfg.nodes if sched.assignment[n.id] == step]
        out.write(f"  {step}: {' '.join(ops)}\n")
    return EXIT_OK


# -- wiring -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    p.add_argument("--library", help="characterization library JSON (default: shipped Virtex-5 HEO library)")
    p.add_argument("--cdfg", help="CDFG JSON or a shipped name (fir16, fig1); default fir16")
    if config:
        p.add_argument("--config", help="configuration JSON or a shipped name (C1..C4)")
        p.add_argument("--scrub-interval", type=float, help="override scrub_interval_days")
        p.add_argument("--coverage", type=float, help="override coverage")


def _props(p: argparse.ArgumentParser) -> None:
    p.add_argument("--property", action="append", help="property text; repeatable")
    p.add_argument("--property-file", help="file with one property per line, '#' comments")
    p.add_argument("--const", action="append", metavar="NAME=VALUE", help="constant used in time bounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seumrm", description="Dependability and performability analysis of "
                                     "scrubbed, rescheduled FPGA datapaths.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate properties on one configuration")
    _common(p)
    _props(p)
    p.add_argument("--out", help="write results as CSV")
    p.add_argument("--quiet", action="store_true", help="print results only")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="evaluate properties over a parameter grid")
    _common(p)
    _props(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma list and/or integer ranges a..b")
    p.add_argument("--time-constant", default="T", help="constant set by a mission_days sweep (default T)")
    p.add_argument("--jobs", type=int, default=1, help="grid points evaluated concurrently")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo estimates with confidence intervals")
    _common(p)
    p.add_argument("--measure", action="append",
                   help="class-time:T:FORMULA | invariance:T:FORMULA | transient:t:FORMULA | reach-time:FORMULA")
    p.add_argument("--trajectories", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="regenerate case-study tables and figure data with verdicts")
    _common(p, config=False)
    p.add_argument("targets", nargs="+", help=f"all or any of {', '.join(TARGETS)}")
    p.add_argument("--out", help="directory for <target>.csv and <target>.verdict.csv")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("export", help="write explicit-state .tra/.lab/.rew files")
    _common(p)
    p.add_argument("--out", help="output stem, e.g. out/c1")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("schedule", help="schedule a CDFG under an allocation")
    _common(p, config=False)
    p.add_argument("--config", help="take the allocation from a configuration's base_alloc")
    p.add_argument("--alloc", help="allocation such as add=2,mul=1")
    p.add_argument("--heuristic", action="store_true", help="list schedule only, no exact search")
    p.set_defaults(func=cmd_schedule)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except FileNotFoundError as exc:
        err.write(f"error: file not found: {exc.filename or exc}\n")
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        err.write(f"error: {msg}\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
