"""Command-line interface: single runs and convergence campaigns.

Two subcommands::

    aderfv solve    --system <preset> --order <2..5> --cells <N> ...
    aderfv converge --system <preset> --orders 2..5 --meshes 8,16,32,64,128 ...

Options may also come from a JSON config file (``--config``) using the same
keys as the flags; explicit flags win.  The thread count is taken from the
ADERFV_THREADS environment variable.
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import PRESET_NAMES, run_preset


def _parse_int_list(text: str, doubling: bool = False):
    """Parse "2,3,4", "2..5" (consecutive) or "8..128" (doubling meshes)."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(p) for p in text.split("..", 1))
        if doubling:
            out = []
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
            return out
        return list(range(lo, hi + 1))
    return [int(p) for p in text.split(",") if p]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--system", choices=PRESET_NAMES, help="benchmark preset")
    p.add_argument("--cfl", type=float, help="CFL number (preset default if omitted)")
    p.add_argument("--tout", type=float, help="output time")
    p.add_argument("--beta", type=float, help="source coefficient override")
    p.add_argument("--bc", choices=("periodic", "transmissive"),
                   help="boundary rule override")
    p.add_argument("--out", default="aderfv-out", help="output directory")
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--verbose", action="store_true",
                   help="per-step log lines (t, dt, lambda_abs) on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aderfv",
        description="One-dimensional ADER finite-volume solver for "
                    "hyperbolic balance laws with stiff source terms.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="single run, writes the solution profile")
    _add_common(solve)
    solve.add_argument("--order", type=int, choices=(2, 3, 4, 5),
                       help="scheme order of accuracy")
    solve.add_argument("--cells", type=int, help="number of cells")

    conv = sub.add_parser("converge", help="mesh-refinement study, writes tables")
    _add_common(conv)
    conv.add_argument("--orders", help="orders, e.g. 2..5 or 2,3,5")
    conv.add_argument("--meshes", help="cell counts, e.g. 8,16,32,64,128 or 8..128")
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    merged: dict = {}
    if args.config:
        with open(args.config) as fh:
            merged.update(json.load(fh))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None or value is False:
            continue
        merged[key] = value
    return merged


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = _merge_config(args)
    system = opts.pop("system", None)
    if system is None:
        print("error: --system is required (flag or config file)", file=sys.stderr)
        return 2
    out_dir = opts.pop("out", "aderfv-out")

    if args.command == "converge":
        if "orders" not in opts or "meshes" not in opts:
            print("error: converge needs --orders and --meshes", file=sys.stderr)
            return 2
        opts["orders"] = _parse_int_list(str(opts["orders"]))
        opts["meshes"] = _parse_int_list(str(opts["meshes"]), doubling=True)
    try:
        artifacts = run_preset(system, opts, out_dir=out_dir)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for label, path in artifacts.items():
        print(f"{label}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
