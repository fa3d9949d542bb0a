"""Command line entry point: ``solve``, ``sweep`` and ``compare``.

Configs are TOML files holding flat ``key = value`` pairs that map onto
:class:`varpro_pde.runner.RunConfig` fields, plus ``M`` as a shorthand for
the last hidden width. In a sweep config exactly one key (other than
``seed``) may hold a list; ``seed`` may hold a list as well.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .runner import (
    KEY_FIELDS,
    ConfigError,
    RunConfig,
    SolverFailure,
    format_rows,
    parse_rows,
    run,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_config(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise UsageError(f"{nested[0]}: tables are not allowed, use flat keys")
    return data


def _config(data: dict) -> RunConfig:
    try:
        return RunConfig.from_dict(data)
    except ConfigError as exc:
        raise UsageError(f"invalid config field {exc}") from None


def expand_sweep(data: dict, seed_override: int | None = None) -> list[RunConfig]:
    """Cartesian product of the one list axis with the seed list, in
    file order (axis outer, seeds inner)."""
    data = dict(data)
    seeds = data.pop("seed", 1)
    if seed_override is not None:
        seeds = seed_override
    seeds = seeds if isinstance(seeds, list) else [seeds]
    axes = [k for k, v in data.items() if isinstance(v, list) and k != "layers"]
    if "layers" in data and data["layers"] and isinstance(data["layers"][0], list):
        axes.append("layers")
    if len(axes) > 1:
        raise UsageError(f"at most one list-valued axis per sweep, got {', '.join(axes)}")
    if not seeds:
        raise UsageError("seed: empty list")
    if axes:
        name = axes[0]
        values = data.pop(name)
        if not values:
            raise UsageError(f"{name}: empty list")
    else:
        name, values = None, [None]
    configs = []
    for value, seed in itertools.product(values, seeds):
        entry = dict(data, seed=seed)
        if name is not None:
            entry[name] = value
        configs.append(_config(entry))
    return configs


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _summary(report) -> str:
    c = report.config
    status = "converged" if report.converged else "NOT converged"
    return (f"{c.problem} {c.method} M={c.M} Q1={c.Q1} {c.activation} seed={c.seed}: "
            f"rms={report.errors.rms_error:.3e} max={report.errors.max_error:.3e} "
            f"gn={report.gn_iterations} newton={report.newton_iterations} "
            f"sub={report.subiterations} {status} ({report.wall_s:.1f}s)")


def _run_all(configs, args) -> int:
    rows, sidecar, status = [], [], EXIT_OK
    for cfg in configs:
        try:
            rep = run(cfg)
        except SolverFailure as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            rep, status = exc.report, EXIT_FAILURE
        if rep is None:
            continue
        if not args.quiet:
            print(_summary(rep), file=sys.stderr)
        rows.append(rep.csv_row())
        sidecar.append(rep.to_json())
    _emit(format_rows(rows), args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(sidecar if len(sidecar) != 1 else sidecar[0], indent=2))
    return status


def cmd_solve(args) -> int:
    data = load_config(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    lists = [k for k, v in data.items() if isinstance(v, list) and k != "layers"]
    if lists:
        raise UsageError(f"{lists[0]}: list values need the sweep command")
    return _run_all([_config(data)], args)


def cmd_sweep(args) -> int:
    return _run_all(expand_sweep(load_config(args.config), args.seed), args)


def compare_tables(rows_a: list[dict], rows_b: list[dict]) -> list[dict]:
    """Join two tables on the key columns; ratio is ``rms_a / rms_b``."""
    def keyed(rows, label):
        out = {}
        for r in rows:
            k = tuple(r[f] for f in KEY_FIELDS)
            if k in out:
                raise UsageError(f"duplicate key {dict(zip(KEY_FIELDS, k))} in {label} table")
            out[k] = r
        return out

    a, b = keyed(rows_a, "first"), keyed(rows_b, "second")
    for k in list(a) + list(b):
        if k not in a or k not in b:
            raise UsageError(f"unmatched key {dict(zip(KEY_FIELDS, k))}")
    joined = []
    for k, ra in a.items():
        rb = b[k]
        ratio = ra["rms_err"] / rb["rms_err"] if rb["rms_err"] != 0 else float("inf")
        joined.append({**dict(zip(KEY_FIELDS, k)), "rms_a": ra["rms_err"], "rms_b": rb["rms_err"],
                       "ratio": ratio, "flag": ra["rms_err"] >= rb["rms_err"]})
    return joined


def format_comparison(joined: list[dict], label_a: str, label_b: str) -> str:
    head = list(KEY_FIELDS) + [f"rms {label_a}", f"rms {label_b}", "ratio", "not better"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for j in joined:
        cells = [str(j[k]) for k in KEY_FIELDS]
        cells += [f"{j['rms_a']:.3e}", f"{j['rms_b']:.3e}", f"{j['ratio']:.3e}", "yes" if j["flag"] else ""]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    tables = []
    for path in (args.first, args.second):
        try:
            tables.append(parse_rows(Path(path).read_text()))
        except FileNotFoundError:
            raise UsageError(f"CSV file not found: {path}") from None
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{path}: {exc}") from None
    joined = compare_tables(*tables)
    labels = [rows[0]["method"] if rows else name for rows, name in zip(tables, "AB")]
    _emit(format_comparison(joined, *labels), args.out)
    if not args.quiet:
        n_flag = sum(j["flag"] for j in joined)
        print(f"{len(joined)} rows joined, {n_flag} flagged", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varpro-pde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write CSV/summary here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no progress messages")
    common.add_argument("-v", "--verbose", action="count", default=0)

    for name, fn, helptext in (("solve", cmd_solve, "run one config"),
                               ("sweep", cmd_sweep, "run a config with one list-valued axis")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--report", help="full-precision JSON sidecar")
        p.set_defaults(func=fn)

    p = sub.add_parser("compare", parents=[common], help="join two CSV tables (VarPro first, ELM second)")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
