"""Command-line entry point: ``run``, ``list`` and ``validate``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .config import OUTPUT_ENV, apply_overrides, default_output_dir, load_config, validate
from .errors import ConfigError, CutoffTooSmall, HybridBellError
from .experiments import list_experiments, run_and_write

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def default_config_path(name: str) -> Path:
    return Path(str(resources.files("hybridbell") / "configs" / f"{name}.toml"))


def _load(args):
    return validate(apply_overrides(load_config(args.config), args.set))


def _cmd_list(args) -> int:
    items = list_experiments()
    for it in items:
        it["default_config"] = str(default_config_path(it["name"]))
    if args.json:
        print(json.dumps(items, indent=2))
    else:
        for it in items:
            print(f"{it['name']:<20} {it['figure']:<6} {it['description']}")
            print(f"{'':<27} default config: {it['default_config']}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok: {cfg.experiment}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(args.out) if args.out else default_output_dir()
    table, (csv_path, json_path) = run_and_write(cfg, out)
    print(f"{cfg.experiment}: {table.n_rows} rows -> {csv_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridbell", description="Hybrid qubit-oscillator Bell and Wigner experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("list", help="show the experiment catalog")
    lp.add_argument("--json", action="store_true", help="machine-readable output")
    lp.set_defaults(func=_cmd_list)

    for name, func, helptext in (("validate", _cmd_validate, "check a config"), ("run", _cmd_run, "run an experiment")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="TOML config, or a result's JSON metadata")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted-key override (repeatable)")
        if name == "run":
            sp.add_argument("--out", default=None, help=f"output directory (default: ${OUTPUT_ENV} or ./results)")
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CutoffTooSmall as exc:
        print(f"numerical failure: {exc} (required cutoff: {exc.required})", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HybridBellError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
