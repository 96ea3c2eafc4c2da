"""Command-line front end: ``fpmix --preset two_diatomic --solver ode --out runs/td``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .model import ParameterRegimeError
from .scenario import PRESETS, SOLVERS, MODES, ConfigError, check_config, parse_config, preset, run_scenario

log = logging.getLogger("fpmix")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_CHECKS = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpmix", description="Run a two-species Fokker-Planck mixture scenario.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="YAML scenario file")
    src.add_argument("--preset", help=f"built-in scenario: {', '.join(PRESETS)}")
    p.add_argument("--solver", choices=SOLVERS, help="override the solver")
    p.add_argument("--t-end", type=float, help="override the final time")
    p.add_argument("--dt", type=float, help="override the time step")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: runs/<name>-<solver>)")
    p.add_argument("--seed", type=int, help="particle RNG seed (unsigned 64-bit)")
    p.add_argument("--mode", choices=MODES, help="parameter regime to validate against")
    p.add_argument("--stride", type=int, help="output every N steps")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--fail-on-check", action="store_true", help=f"exit {EXIT_CHECKS} if any invariant check fails")
    p.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.list_presets:
        print("\n".join(PRESETS))
        return EXIT_OK
    try:
        if args.config:
            cfg = parse_config(args.config.read_text(), validate=False)
        else:
            cfg = preset(args.preset or "two_diatomic")
        overrides = {k: v for k, v in (("solver", args.solver), ("t_end", args.t_end), ("dt", args.dt),
                                       ("seed", args.seed), ("mode", args.mode), ("stride", args.stride))
                     if v is not None}
        cfg = dataclasses.replace(cfg, **overrides)
        check_config(cfg)
    except (ConfigError, ParameterRegimeError, OSError) as exc:
        print(f"fpmix: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or Path("runs") / f"{cfg.name}-{cfg.solver}"
    try:
        result = run_scenario(cfg, out, figures=not args.no_figures)
    except Exception as exc:  # solver failures surface as a nonzero exit
        log.debug("solver failure", exc_info=True)
        print(f"fpmix: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for name, chk in result.summary["checks"].items():
        value = chk.get("value")
        shown = f" value={value:.3e}" if isinstance(value, float) else ""
        print(f"{chk['status'].upper():5s} {name}{shown}")
    print(f"wrote {out}/timeseries.csv, summary.json, config.yaml" + ("" if args.no_figures else ", figures/*.png"))
    if args.fail_on_check and not result.passed:
        return EXIT_CHECKS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
