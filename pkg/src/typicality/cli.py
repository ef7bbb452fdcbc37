"""Command line scenario runner.

    typicality list
    typicality describe thm-2.4
    typicality run z3-exact-palm path/to/config.json --out reports --seed 7
    typicality run nearest-point-negative --score

Exit codes of ``run``: 0 all verdicts pass, 2 some fail, 3 some
inconclusive (and none fail), 1 malformed config or unknown name.  With
``--score`` scenarios declaring ``"expect": "fail"`` count as passing when
their failure is detected.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .scenarios import ConfigError, exit_code, load_claims, load_config, run_scenario, shipped_configs

ECDF_POINTS = 101
HIST_BINS = 20


def list_scenarios() -> list[dict]:
    """One row per shipped scenario."""
    return [{"name": name, "claim": cfg["claim"], "suite": cfg["suite"], "mode": cfg["mode"],
             "expect": cfg.get("expect", "pass")} for name, cfg in shipped_configs().items()]


def describe(claim_id: str) -> str:
    claims = load_claims()
    if claim_id not in claims:
        raise KeyError(f"unknown claim id {claim_id!r}")
    c = claims[claim_id]
    lines = [f"{claim_id}: {c['title']}", "", c["statement"], "", "Scenarios:"]
    names = [r["name"] for r in list_scenarios() if r["claim"] == claim_id]
    if names:
        lines.extend(f"  {n}" for n in names)
    else:
        lines.append("  (none shipped)")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# output files


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: list, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _ecdf_rows(label, a, b):
    pooled = np.concatenate([a, b])
    grid = np.unique(np.quantile(pooled, np.linspace(0, 1, ECDF_POINTS)))
    fa = np.searchsorted(np.sort(a), grid, side="right") / len(a)
    fb = np.searchsorted(np.sort(b), grid, side="right") / len(b)
    return [[label, _fmt(x), _fmt(p), _fmt(q)] for x, p, q in zip(grid, fa, fb)]


def _hist_rows(label, a, b):
    lo, hi = float(min(a.min(), b.min())), float(max(a.max(), b.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    ca, _ = np.histogram(a, edges)
    cb, _ = np.histogram(b, edges)
    return [[label, _fmt(edges[i]), _fmt(edges[i + 1]), int(ca[i]), int(cb[i])] for i in range(HIST_BINS)]


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    else:
        out.append([prefix, json.dumps(obj, sort_keys=True)])


def write_outputs(report, out: Path) -> list[Path]:
    """Report record plus plot-ready tables, all deterministic."""
    out.mkdir(parents=True, exist_ok=True)
    name = report.scenario.get("name", report.claim)
    rec = report.to_dict()
    paths = [out / f"{name}.report.json", out / f"{name}.cells.csv", out / f"{name}.telemetry.csv"]
    _write_json(paths[0], rec)

    cell_rows = []

    def walk(r, path):
        for c in r.cells:
            cell_rows.append([path, c.label, _fmt(c.statistic), "" if c.pvalue is None else _fmt(c.pvalue)])
        for i, ch in enumerate(r.children):
            walk(ch, f"{path}/{i}:{ch.claim}")

    walk(report, report.claim)
    _write_rows(paths[1], ["report", "cell", "statistic", "pvalue"], cell_rows)

    tel = []
    _flatten("", {"root": rec["telemetry"], **{f"child{i}": ch["telemetry"] for i, ch in enumerate(rec["children"])}}, tel)
    _write_rows(paths[2], ["key", "value"], tel)

    data = report.all_data()
    if data:
        ecdf, hist = [], []
        for label in sorted(data):
            a, b = (np.asarray(x, dtype=float) for x in data[label])
            if len(a) == 0 or len(b) == 0:
                continue
            ecdf.extend(_ecdf_rows(label, a, b))
            hist.extend(_hist_rows(label, a, b))
        paths += [out / f"{name}.ecdf.csv", out / f"{name}.hist.csv"]
        _write_rows(paths[-2], ["cell", "x", "ecdf_lhs", "ecdf_rhs"], ecdf)
        _write_rows(paths[-1], ["cell", "bin_left", "bin_right", "count_lhs", "count_rhs"], hist)
    return paths


# --------------------------------------------------------------------------
# commands


def _run_one(source: str, seed, n, out, score: bool) -> tuple[str, int, str]:
    try:
        cfg = load_config(source)
        report = run_scenario(cfg, seed=seed, n=n)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        return source, 1, f"error: {source}: {exc}"
    if out is not None:
        write_outputs(report, Path(out))
    code = exit_code(report.verdict, cfg.get("expect", "pass"), score)
    line = f"{cfg['name']}: {report.summary()} expect={cfg.get('expect', 'pass')} exit={code}"
    return cfg["name"], code, line


def _combine(codes: list[int]) -> int:
    for c in (1, 2, 3):
        if c in codes:
            return c
    return 0


def cmd_run(args) -> int:
    jobs = max(1, args.jobs)
    tasks = [(s, args.seed, args.n, args.out, args.score) for s in args.configs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, *zip(*tasks)))
    else:
        results = [_run_one(*t) for t in tasks]
    for _, code, line in results:
        print(line, file=sys.stderr if code == 1 else sys.stdout)
    return _combine([code for _, code, _ in results])


def cmd_list(args) -> int:
    rows = list_scenarios()
    widths = [max(len(str(r[k])) for r in rows + [{k: k for k in rows[0]}]) for k in rows[0]]
    keys = list(rows[0])
    print("  ".join(k.ljust(w) for k, w in zip(keys, widths)))
    for r in rows:
        print("  ".join(str(r[k]).ljust(w) for k, w in zip(keys, widths)))
    return 0


def cmd_describe(args) -> int:
    try:
        print(describe(args.claim))
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="typicality", description="Run typicality and mass-stationarity scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenario configs or shipped scenario names")
    r.add_argument("configs", nargs="+", help="config file paths or shipped scenario names")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--out", default=None, help="directory for report and plot-data files")
    r.add_argument("--jobs", type=int, default=1, help="run several configs in parallel processes")
    r.add_argument("--n", type=int, default=None, help="override the Monte Carlo sample size")
    r.add_argument("--score", action="store_true", help="score expected-fail scenarios as passing when they fail")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list shipped scenarios")
    ls.set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="describe a claim and the scenarios exercising it")
    d.add_argument("claim")
    d.set_defaults(func=cmd_describe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
