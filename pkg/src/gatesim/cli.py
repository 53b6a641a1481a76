"""Command-line driver for single runs and seeded parameter sweeps.

Every command writes under one output directory: ``results.csv`` (one row
per run), ``summary.csv`` (mean/std per sweep point) and ``manifest.txt``
(the resolved config plus the seed list). Files are written to a temp name
and renamed, so a failed run never leaves a partial CSV behind.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import config as config_io
from .engine import run
from .io import events_csv, result_row, results_csv, summary_csv, write_atomic
from .metrics import ResultRow, summarize
from .model import InvalidConfig, MobilityMode, ScenarioConfig, SchedulerKind, validate

OUT_ENV = "GATESIM_OUT"
HOUR = 3600.0


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _schedulers(text: str) -> list[SchedulerKind]:
    try:
        return [SchedulerKind(v.strip().lower()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"schedulers must be among wpf, pf, rr; got {text!r}")


def _load(path: Optional[str]) -> ScenarioConfig:
    cfg = ScenarioConfig() if path is None else config_io.load(path)
    return validate(cfg)


def _seeds(master: int, count: int) -> list[int]:
    return [master + i for i in range(count)]


def _one(cfg: ScenarioConfig) -> ResultRow:
    return result_row(cfg, run(cfg).report)


def _run_all(cfgs: Sequence[ScenarioConfig], jobs: int) -> list[ResultRow]:
    if jobs <= 1 or len(cfgs) <= 1:
        rows = [_one(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_one, cfgs, chunksize=1))
    # completion order never leaks into the output
    return sorted(rows, key=lambda r: (r.point, r.seed))


def _manifest(cfg: ScenarioConfig, command: str, axes: dict, seeds: list[int]) -> str:
    lines = [f"command = {command}", "seed_rule = master_seed + i for i in range(seeds)",
             f"seeds = {','.join(map(str, seeds))}"]
    for name, values in axes.items():
        lines.append(f"{name} = {','.join(str(v) for v in values)}")
    lines += ["", "# resolved config (sweep axes override the matching fields per run)",
              config_io.dumps(cfg)]
    return "\n".join(lines)


def _write(out: Path, rows: list[ResultRow], manifest: str) -> None:
    write_atomic(out / "results.csv", results_csv(rows))
    write_atomic(out / "summary.csv", summary_csv(summarize(rows)))
    write_atomic(out / "manifest.txt", manifest)


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    res = run(cfg)
    row = result_row(cfg, res.report)
    _write(args.out, [row], _manifest(cfg, "run", {}, [cfg.rng_seed]))
    write_atomic(args.out / "events.csv", events_csv(res.events))
    print(f"gofe={row.gofe:.4f} f_alloc={row.f_alloc:.4f} f_byte={row.f_byte:.4f} "
          f"norm_energy={row.norm_energy:.4f} -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    base = _load(args.config)
    seeds = _seeds(base.rng_seed if args.seed is None else args.seed, args.seeds)
    cfgs = [base.replace(num_aps=a, grt_s=g * HOUR, rng_seed=s)
            for a, g, s in itertools.product(args.aps, args.grt, seeds)]
    cfgs = [validate(c) for c in cfgs]
    rows = _run_all(cfgs, args.jobs)
    _write(args.out, rows, _manifest(base, "sweep", {"aps": args.aps, "grt_h": args.grt}, seeds))
    print(f"{len(rows)} runs over {len(args.aps) * len(args.grt)} points -> {args.out}")
    return 0


def cmd_fairness(args) -> int:
    base = _load(args.config)
    if args.mobility is not None:
        base = base.replace(mobility__mode=MobilityMode(args.mobility))
    seeds = _seeds(base.rng_seed if args.seed is None else args.seed, args.seeds)
    cfgs = [validate(base.replace(scheduler=k, mobility__speed_ratio=r, num_aps=a,
                                  grt_s=g * HOUR, rng_seed=s))
            for k, r, a, g, s in itertools.product(args.schedulers, args.speed_ratios,
                                                    args.aps, args.grt, seeds)]
    rows = _run_all(cfgs, args.jobs)
    axes = {"schedulers": [k.value for k in args.schedulers], "speed_ratios": args.speed_ratios,
            "aps": args.aps, "grt_h": args.grt}
    _write(args.out, rows, _manifest(base, "fairness", axes, seeds))
    print(f"{len(rows)} runs -> {args.out}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"ok: {cfg.num_aps} APs, {cfg.num_ues} UEs, GRT {cfg.grt_s:g} s, scheduler {cfg.scheduler.value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gatesim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    default_out = os.environ.get(OUT_ENV, "out")

    def common(sp, seeds=False):
        sp.add_argument("--config", help="TOML scenario file (defaults when omitted)")
        sp.add_argument("--out", type=Path, default=Path(default_out),
                        help=f"output directory (env {OUT_ENV}, default %(default)s)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        if seeds:
            sp.add_argument("--seeds", type=int, default=20, help="runs per point, seeds master+i")
            sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    r = sub.add_parser("run", help="simulate one scenario")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="AP count x gate reaching time grid")
    common(s, seeds=True)
    s.add_argument("--aps", type=_ints, default=[1, 2, 3, 4])
    s.add_argument("--grt", type=_floats, default=[0.5, 1.0, 1.5, 2.0], help="hours")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fairness", help="scheduler x speed ratio grid")
    common(f, seeds=True)
    f.add_argument("--schedulers", type=_schedulers, default=list(SchedulerKind))
    f.add_argument("--speed-ratios", type=_floats, default=[1.0, 2.0, 4.0, 8.0])
    f.add_argument("--aps", type=_ints, default=[3])
    f.add_argument("--grt", type=_floats, default=[1.0], help="hours")
    f.add_argument("--mobility", choices=[m.value for m in MobilityMode],
                   help="override the mobility mode")
    f.set_defaults(func=cmd_fairness)

    v = sub.add_parser("validate", help="check a config file and exit")
    v.add_argument("--config", help="TOML scenario file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        for name, why in exc.errors:
            print(f"config error: {name}: {why}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
