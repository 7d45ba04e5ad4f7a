"""Command-line driver.

Subcommands mirror the pipeline stages (mesh, spectrum, plasmon, decay,
calr, report) plus compare.  Flags override config-file keys.  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys

from .errors import ConfigError, NumericalError
from .pipeline import RunConfig, compare_report, run_pipeline


def _add_run_flags(parser):
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--surface", choices=["sphere", "oblate_spheroid", "clifford_torus"])
    parser.add_argument("--radius", type=float)
    parser.add_argument("--n-u", type=int, dest="n_u")
    parser.add_argument("--n-v", type=int, dest="n_v")
    parser.add_argument("--quad-degree", type=int, dest="quad_degree")
    parser.add_argument("--region", choices=["auto", "X", "Y"])
    parser.add_argument("--eps", type=float)
    parser.add_argument("--grid-n", type=int, dest="grid_n")
    parser.add_argument("--j-max", type=int, dest="j_max")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--deterministic", action="store_true", default=None)
    parser.add_argument("--dump-eigenvectors", action="store_true", default=None,
                        dest="dump_eigenvectors")
    cache = parser.add_mutually_exclusive_group()
    cache.add_argument("--cache", dest="cache", action="store_true", default=None)
    cache.add_argument("--no-cache", dest="cache", action="store_false", default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plasmonbem",
        description="NP-operator spectra and plasmon localization on closed surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in ("mesh", "spectrum", "plasmon", "decay", "calr", "report"):
        p = sub.add_parser(stage, help=f"run the pipeline through the {stage} stage")
        _add_run_flags(p)
    cmp_p = sub.add_parser("compare", help="diff two completed run manifests")
    cmp_p.add_argument("manifest_a", help="manifest.json (or run dir) of run A")
    cmp_p.add_argument("manifest_b", help="manifest.json (or run dir) of run B")
    cmp_p.add_argument("--out", metavar="PATH", help="write the diff JSON here")
    return parser


def _load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in RunConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return RunConfig.from_dict(data)


def _manifest_path(arg):
    import os

    return arg if arg.endswith(".json") else os.path.join(arg, "manifest.json")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            diff = compare_report(_manifest_path(args.manifest_a),
                                  _manifest_path(args.manifest_b))
            text = json.dumps(diff, indent=2, sort_keys=True)
            if args.out:
                with open(args.out, "w", newline="\n") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return 0
        config = _load_config(args)
        run_pipeline(config, stage=args.command)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
