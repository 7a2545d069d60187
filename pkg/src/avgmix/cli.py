"""Command-line entry point.

Subcommands: constants | profile | identities | annealed | bd-dump | gfun.
Global flags: --seed, --threads, --format {csv,json}, --out PATH, --config
FILE (JSON with ExperimentSpec fields; explicit flags override the file).
Exit codes: 0 success, 1 validation/usage error, 2 failed self-test rows.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ExperimentSpec, emit, run_experiment

__all__ = ["main", "cli_main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _int_range(text: str) -> list[int]:
    """Parse "3..12" or a comma list "3,5,9"."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x]


def _float_grid(text: str) -> list[float]:
    """Parse "-3..3:0.5" (inclusive, fixed step) or a comma list."""
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = span.split("..", 1)
        lo, hi = float(lo), float(hi)
        h = float(step) if step else 1.0
        if h <= 0 or hi < lo:
            raise ValueError(f"bad grid {text!r}")
        count = int(round((hi - lo) / h)) + 1
        return [lo + i * h for i in range(count)]
    return [float(x) for x in text.split(",") if x]


def build_parser() -> _Parser:
    parser = _Parser(prog="avgmix", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default=None)
    parser.add_argument("--config", default=None,
                        help="JSON file with spec fields; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="closed-form constants table")
    sp.add_argument("--d", default="3..12", help="degree range, e.g. 3..12")

    sp = sub.add_parser("profile", help="distance profile over an a-grid")
    sp.add_argument("--kind", choices=("avg", "crw"), default="crw")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--replicas", type=int, default=10_000)
    sp.add_argument("--a", default="-3..3:0.5", help="a-grid, e.g. -3..3:0.5")
    sp.add_argument("--p", type=float, default=2.0)

    sp = sub.add_parser("identities", help="exact-identity self-test suite")
    sp.add_argument("--fixtures", default="k4,petersen,k33")
    sp.add_argument("--times", default="0.5,1,2")
    sp.add_argument("--replicas", type=int, default=100_000)

    sp = sub.add_parser("annealed", help="tree-embeddability failure tail")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--t", default=None,
                    help="times (comma list); default log^2(n)/(2d)")
    sp.add_argument("--replicas", type=int, default=100_000)

    sp = sub.add_parser("bd-dump", help="return-coefficient dump")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--K", type=int, default=200)

    sp = sub.add_parser("gfun", help="generating-function cross-check")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--points", type=int, default=100)
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    base["seed"] = args.seed if args.seed != 0 else base.get("seed", 0)
    base["fmt"] = args.format if args.format != "csv" else base.get("fmt", "csv")
    base["out"] = args.out if args.out is not None else base.get("out")
    base["threads"] = args.threads if args.threads is not None else base.get("threads")

    cmd = args.command
    if cmd == "constants":
        base["kind"] = "constants_table"
        base["d_range"] = _int_range(args.d)
    elif cmd == "profile":
        base["kind"] = "profile_avg" if args.kind == "avg" else "profile_crw"
        base.update(n=args.n, d=args.d, replicas=args.replicas,
                    a_grid=_float_grid(args.a), p=args.p)
    elif cmd == "identities":
        base["kind"] = "identity_suite"
        base.update(fixtures=[f for f in args.fixtures.split(",") if f],
                    times=[float(x) for x in args.times.split(",") if x],
                    replicas=args.replicas)
    elif cmd == "annealed":
        base["kind"] = "annealed_tail"
        base.update(n=args.n, d=args.d, replicas=args.replicas)
        if args.t:
            base["times"] = [float(x) for x in args.t.split(",") if x]
    elif cmd == "bd-dump":
        base["kind"] = "bd_dump"
        base.update(d=args.d, K=args.K)
    elif cmd == "gfun":
        base["kind"] = "gfun"
        base.update(d=args.d, replicas=args.points)
    known = set(ExperimentSpec.__dataclass_fields__)
    return ExperimentSpec(**{k: v for k, v in base.items() if k in known})


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join "--a -3..3:0.5" into "--a=-3..3:0.5" so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--a", "--t") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def cli_main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_negative_values(list(argv))
    try:
        args = parser.parse_args(argv)
        spec = _spec_from_args(args)
        result = run_experiment(spec)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    text = emit(result, spec.fmt)
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if spec.kind == "identity_suite":
        if not all(row["passed"] for row in result.rows):
            sys.stderr.write("self-test failures present\n")
            return 2
    return 0


def main() -> None:
    raise SystemExit(cli_main())
