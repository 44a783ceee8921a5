"""Command-line entry point: ``drivenoat run | sweep | list-presets``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from drivenoat.errors import ConfigError, DrivenOATError, NumericalInvariantError
from drivenoat.experiments import (
    PRESETS,
    ScenarioConfig,
    load_config,
    preset,
    run_scenario,
    run_sweep,
    with_overrides,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="name of a built-in preset (see list-presets)")
    src.add_argument("--config", type=Path, help="INI file with scenario keys")
    p.add_argument("--out", help="output CSV path or directory (default: ./results)")
    p.add_argument("--nmax", type=int, help="override the Fock-space truncation")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from metadata")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any scenario field, repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drivenoat", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    _add_source(run)
    run.add_argument("--maps", action="store_true", help="also write Wigner maps of the fidelity peaks")

    sweep = sub.add_parser("sweep", help="run a scenario over a list of values of one field")
    _add_source(sweep)
    sweep.add_argument("--axis", required=True, help="numeric field to vary, e.g. gamma")
    sweep.add_argument("--values", required=True, help="comma-separated values")

    sub.add_parser("list-presets", help="print the built-in presets")
    return parser


def _config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    if args.nmax is not None:
        overrides["n_max"] = args.nmax
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["out"] = args.out
    if args.config is not None:
        return load_config(args.config, **overrides)
    return with_overrides(preset(args.scenario), **overrides)


def _csv_path(out: str | None, name: str) -> Path:
    if out is None:
        return Path("results") / f"{name}.csv"
    p = Path(out)
    return p if p.suffix == ".csv" else p / f"{name}.csv"


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.=" else "_" for c in name)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    series = run_scenario(cfg, sphere_maps=args.maps)
    path, side = series.write(_csv_path(cfg.out, _safe(cfg.scenario)), timestamp=not args.no_timestamp)
    for label, smap in series.maps.items():
        mp = path.with_name(f"{path.stem}_wigner_{label}.csv")
        with open(mp, "w", encoding="utf-8") as fh:
            fh.write("theta,phi,value\n")
            for i, th in enumerate(smap.theta):
                for j, ph in enumerate(smap.phi):
                    fh.write("%.17g,%.17g,%.17g\n" % (th, ph, smap.values[i, j]))
    s = series.summary()
    print(f"{cfg.scenario}: min xi2 {s['min_xi2']:.6f} at t={s['t_min_xi2']:.4f}, "
          f"max GHZ fidelity {s['max_fidelity']:.6f} at t={s['t_max_fidelity']:.4f}")
    print(f"wrote {path} and {side}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be numbers, got {args.values!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    res = run_sweep(cfg, args.axis, values, workers=cfg.workers)
    base = _csv_path(cfg.out, _safe(cfg.scenario))
    for v, s in zip(values, res.series):
        if s is not None:
            s.write(base.with_name(f"{base.stem}_{args.axis}={v:g}.csv"), timestamp=not args.no_timestamp)
    summary = res.write_summary(base.with_name(f"{base.stem}_sweep_{args.axis}.csv"))
    print(f"{args.axis:>12} {'min xi2':>12} {'max fidelity':>14}")
    for row in res.summary_rows():
        print(f"{row['value']:>12g} {row['min_xi2']:>12.6f} {row['max_fidelity']:>14.6f}")
    print(f"wrote {summary}")
    if res.failures:
        for v, err in res.failures:
            print(f"failed at {args.axis}={v:g}: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_list(_args) -> int:
    for name, cfg in PRESETS.items():
        extra = ""
        if cfg.drive == "constant":
            extra = f" omega0={cfg.omega0:g}"
        elif cfg.drive == "pulse_train":
            extra = f" duty={cfg.duty:g} period={cfg.period:g}"
        elif cfg.model == "lindblad":
            extra = f" {cfg.lindblad_kind} gamma={cfg.gamma:g}"
        print(f"{name:<30} model={cfg.model}{extra} N={cfg.N} t_end={cfg.t_end:.4g}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "list-presets": _cmd_list}[args.command]
    try:
        return handler(args)
    except NumericalInvariantError as e:
        print(f"numerical invariant violated: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DrivenOATError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
