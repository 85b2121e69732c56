"""Command line entry point: ``flatpng <mode> [flags]``.

Exit status: 0 success, 1 invariant or comparison failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatpng", description="Flat PNG edge statistics and GOE kernel tables.")
    p.add_argument("mode", choices=harness.MODES)
    p.add_argument("--t", dest="T", type=float, default=100.0, help="time horizon T (kernel tables use T~ = 2T)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--xi-min", type=float, default=-4.0)
    p.add_argument("--xi-max", type=float, default=2.0)
    p.add_argument("--xi-step", type=float, default=0.5)
    p.add_argument("--quad-nodes", type=int, default=60)
    p.add_argument("--quad-length", type=float, default=None)
    p.add_argument("--out", default=None, help="CSV path; a JSON sidecar <out>.json is written next to it")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--input", default=None, help="compare: read a simulate CSV instead of sampling")
    p.add_argument("--inject", default=None, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = harness.ExperimentConfig(
            mode=args.mode,
            T=args.T,
            samples=args.samples,
            seed=args.seed,
            xi_min=args.xi_min,
            xi_max=args.xi_max,
            xi_step=args.xi_step,
            quad_nodes=args.quad_nodes,
            quad_length=args.quad_length,
            out=args.out,
            threads=args.threads,
            input=args.input,
        )
        if cfg.mode == "selftest":
            ok = all(r.passed for r in harness.selftest(inject=args.inject))
            return 0 if ok else 1
        return harness.run(cfg)
    except harness.UsageError as exc:
        print(f"flatpng: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"flatpng: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"flatpng: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
