"""Command-line entry point: ``zakfd {sweep,bench,fading,selftest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


log = logging.getLogger("zakfd")


def _grid(text: str):
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}, expected MxN") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zakfd", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a Monte-Carlo BER/NMSE sweep")
    sw.add_argument("--config", "-c", required=True, type=Path, help="YAML config file")
    sw.add_argument("--out", "-o", type=Path, help="output directory (overrides config)")
    sw.add_argument("--seed", type=int, help="master seed override")
    sw.add_argument("--trials", type=int, help="trials per point override")

    be = sub.add_parser("bench", help="time CGM and dense LMMSE against MN")
    be.add_argument("--out", "-o", type=Path, default=Path("bench"))
    be.add_argument("--grid", action="append", metavar="MxN", type=_grid,
                    help="grid to time, e.g. 31x37 (repeatable)")
    be.add_argument("--b", type=int, default=3)
    be.add_argument("--iterations", "-k", type=int, default=250)
    be.add_argument("--repeats", type=int, default=5)
    be.add_argument("--seed", type=int, default=0)

    fa = sub.add_parser("fading", help="energy per carrier for pulsone, DFT and CP-OFDM")
    fa.add_argument("--config", "-c", type=Path, help="YAML config (grid, channel, pulse)")
    fa.add_argument("--out", "-o", type=Path, default=Path("fading"))
    fa.add_argument("--seed", type=int, default=0, help="first seed")
    fa.add_argument("--trials", type=int, default=20, help="number of channel draws")

    sub.add_parser("selftest", help="run the oracle-equivalence checks")
    return p


def cmd_sweep(args) -> int:
    from .sim import SimConfig, emit_results, run_sweep

    cfg = SimConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(sweep__seed=args.seed)
    if args.trials is not None:
        cfg = cfg.replace(sweep__trials=args.trials)
    out = args.out or Path(cfg.output.directory)
    res = run_sweep(cfg, progress=lambda i, n: log.info("trial %d/%d", i, n))
    paths = emit_results(res, out)
    for row in res.curve():
        print(f"snr={row['snr_db']:g} pdr={row['pdr_db']:g} turbo={row['turbo']} "
              f"ber={row['ber']:.3e} nmse_db={row['nmse_median_db']:.2f}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def cmd_bench(args) -> int:
    from .sim import DEFAULT_BENCH_GRIDS, bench_complexity

    grids = args.grid or DEFAULT_BENCH_GRIDS
    table = bench_complexity(grids, args.b, args.iterations, args.repeats, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    table.write_csv(args.out / "bench.csv")
    for r in table.rows:
        print(f"{r.method:6s} MN={r.MN:6d}  {r.seconds * 1e3:10.3f} ms")
    print(f"slope cgm={table.slope('cgm'):.2f} dense={table.slope('dense'):.2f}")
    return 0


def cmd_fading(args) -> int:
    from .baselines import write_energy_csv
    from .sim import SimConfig, fading_study

    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    seeds = range(args.seed, args.seed + args.trials)
    study = fading_study(cfg.grid_params, cfg.pulse.build(), cfg.channel.nu_max, seeds, cfg.cp_len)
    args.out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(seeds):
        write_energy_csv(args.out / f"energy_seed{s}.csv",
                         {k: v[i] for k, v in study.energies.items()})
    for k, v in study.median_spreads().items():
        print(f"{k:8s} median relative spread {v:.3e}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run

    return 0 if run() else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handler = {"sweep": cmd_sweep, "bench": cmd_bench, "fading": cmd_fading,
               "selftest": cmd_selftest}[args.command]
    try:
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
