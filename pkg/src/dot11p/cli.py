"""Command-line front end for FER sweeps and bit-rate tables.

A JSON config file can preload any flag (keys match the long flag names
with dashes replaced by underscores); explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import sys

from .sim import (
    SimConfig,
    emit_bitrate_table,
    emit_csv,
    emit_manifest,
    run_sweep,
)


def _parse_esn0(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse_int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _parse_range(text: str) -> range:
    """'lo:hi' inclusive byte range, or a single upper bound starting at 1."""
    if ":" in text:
        lo, hi = text.split(":")
        return range(int(lo), int(hi) + 1)
    return range(1, int(text) + 1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dot11p-sim",
        description="Monte Carlo FER simulation of 802.11p frames with "
        "pseudo-training insertion.",
    )
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.add_argument("--mcs", type=int, help="MCS index 0..7 (default 2 = QPSK 1/2)")
    p.add_argument("--nfb-bytes", help="frame body length in bytes "
                   "(bit-rate table mode accepts 'lo:hi')")
    p.add_argument("--frame", choices=["sf", "mf"], help="frame kind")
    p.add_argument("--mp", help="training spacing in OFDM symbols "
                   "(bit-rate table mode accepts a comma list)")
    p.add_argument(
        "--receiver", choices=["ltls", "sfmmse", "mfmmse", "mbmmse", "perfect"]
    )
    p.add_argument("--velocity-kmph", type=float, help="relative speed")
    p.add_argument("--esn0", help="Es/N0 grid in dB, e.g. '10,12,14'")
    p.add_argument("--frames", type=int, help="max frames per point")
    p.add_argument("--max-errors", type=int,
                   help="stop a point after this many frame errors (0 = never)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--out", help="output CSV path (default stdout summary only)")
    p.add_argument(
        "--bitrate-table", action="store_true",
        help="emit the effective-bit-rate table instead of simulating; "
        "--nfb-bytes takes 'lo:hi' and --mp a comma list",
    )
    return p


_DEFAULTS = {
    "mcs": 2,
    "nfb_bytes": 146,
    "frame": "sf",
    "mp": "8",
    "receiver": "sfmmse",
    "velocity_kmph": 100.0,
    "esn0": "10,12,14,16,18,20,22,24,26,28,30",
    "frames": 2000,
    "max_errors": 100,
    "seed": 1,
    "workers": 1,
    "out": None,
}


def resolve_options(argv) -> dict:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as f:
            loaded = json.load(f)
        unknown = set(loaded) - set(_DEFAULTS) - {"bitrate_table"}
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        opts.update(loaded)
    for key in _DEFAULTS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            opts[key] = value
    opts["bitrate_table"] = bool(args.bitrate_table or opts.get("bitrate_table"))
    return opts


def main(argv=None) -> int:
    opts = resolve_options(sys.argv[1:] if argv is None else argv)

    if opts["bitrate_table"]:
        out = opts["out"] or "bitrate_table.csv"
        nfb = opts["nfb_bytes"]
        byte_range = _parse_range(str(nfb)) if isinstance(nfb, (str,)) else range(1, int(nfb) + 1)
        emit_bitrate_table(
            int(opts["mcs"]), _parse_int_list(str(opts["mp"])), byte_range, out
        )
        print(f"wrote bit-rate table to {out}")
        return 0

    max_errors = int(opts["max_errors"])
    cfg = SimConfig(
        mcs_index=int(opts["mcs"]),
        nfb_bytes=int(opts["nfb_bytes"]),
        frame_kind=opts["frame"],
        m_p=int(str(opts["mp"]).split(",")[0]),
        velocity_kmph=float(opts["velocity_kmph"]),
        esn0_db=_parse_esn0(str(opts["esn0"])),
        frames=int(opts["frames"]),
        max_errors=None if max_errors == 0 else max_errors,
        receiver=opts["receiver"],
        master_seed=int(opts["seed"]),
        workers=int(opts["workers"]),
    )
    results, manifest = run_sweep(cfg)
    print(f"# {cfg.frame_kind.upper()} mcs={cfg.mcs_index} nfb={cfg.nfb_bytes}B "
          f"v={cfg.velocity_kmph}km/h rx={cfg.receiver}")
    print("esn0_db fer          errors/frames  95% CI")
    for r in results:
        lo, hi = r.ci
        print(f"{r.esn0_db:7.1f} {r.fer:.6f}  {r.frame_errors:6d}/{r.frames_run:<6d} "
              f"[{lo:.6f}, {hi:.6f}]")
    if opts["out"]:
        emit_csv(cfg, results, opts["out"])
        emit_manifest(manifest, str(opts["out"]) + ".manifest.json")
        print(f"wrote {opts['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
