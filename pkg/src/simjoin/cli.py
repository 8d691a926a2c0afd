"""Command-line surface: data generation, joins, top-k probes, cost
estimation, calibration, and the benchmark suite.

Exit codes: 0 success, 1 usage/validation, 2 I/O or parse, 3
out-of-vocabulary.  Every error path prints a single "error: ..." line on
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import bench
from .core import RawRelation, Threshold
from .cost import CostParams, calibrate, choose_plan
from .embedding import SyntheticModel, load_vec_file, top_k
from .errors import OutOfVocabulary, ParseError, SimjoinError
from .join import nlj_naive, nlj_prefetch, tensor_join

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_OOV = 3

DEFAULT_BUDGET = 64 * 1024 * 1024


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ModelSpec:
    """Parsed model specification string.

    Grammar: "synthetic:seed=<u64>:dim=<n>[:latency_ns=<n>]" or
    "vec:<path>[:oov=error|synthetic]".
    """

    def __init__(self, spec: str):
        self.spec = spec
        self.seed = None
        if spec.startswith("synthetic:"):
            self.kind = "synthetic"
            fields = {}
            for part in spec.split(":")[1:]:
                key, sep, value = part.partition("=")
                if not sep or key not in ("seed", "dim", "latency_ns"):
                    raise ValueError(f"bad model spec field {part!r}")
                try:
                    fields[key] = int(value)
                except ValueError:
                    raise ValueError(f"bad model spec value {part!r}")
            if "seed" not in fields or "dim" not in fields:
                raise ValueError("synthetic model spec needs seed= and dim=")
            self.seed = fields["seed"]
            self.dim = fields["dim"]
            self.latency_ns = fields.get("latency_ns", 0)
        elif spec.startswith("vec:"):
            self.kind = "vec"
            rest = spec[len("vec:"):]
            self.oov = "error"
            head, sep, tail = rest.rpartition(":")
            if sep and tail.startswith("oov="):
                policy = tail[len("oov="):]
                if policy not in ("error", "synthetic"):
                    raise ValueError(f"bad OOV policy {policy!r}")
                self.oov = policy
                rest = head
            if not rest:
                raise ValueError("vec model spec needs a path")
            self.path = rest
        else:
            raise ValueError(f"unknown model spec {spec!r}")

    def build(self):
        if self.kind == "synthetic":
            return SyntheticModel(self.dim, seed=self.seed,
                                  latency_ns=self.latency_ns)
        return load_vec_file(self.path, oov=self.oov)


def _read_relation(path: str, name: str) -> RawRelation:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        content = fh.read()
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return RawRelation(name, lines)


def _fmt_sim(value) -> str:
    # shortest decimal that round-trips to the same fp32
    return np.format_float_positional(np.float32(value), unique=True,
                                      trim="-")


def _write_matches(path: str, matches) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for left, right, sim in matches:
            fh.write(f"{left},{right},{_fmt_sim(sim)}\n")


def cmd_gen(args) -> int:
    if args.rows < 0:
        print("error: rows must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    tokens = bench.generate_tokens(args.rows, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        for tok in tokens:
            fh.write(tok + "\n")
    return EXIT_OK


def _set_affinity(threads: int) -> None:
    try:
        cores = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, set(cores[:max(1, threads)]))
    except (AttributeError, OSError):
        pass  # unsupported platform; affinity is best-effort only


def cmd_join(args) -> int:
    try:
        theta = Threshold.of(args.theta)
    except ValueError:
        print("error: threshold out of range [-1, 1]", file=sys.stderr)
        return EXIT_USAGE
    spec = ModelSpec(args.model)
    model = spec.build()
    left = _read_relation(args.left, "left")
    right = _read_relation(args.right, "right")
    if args.affinity:
        _set_affinity(args.threads)
    if args.algo == "naive":
        matches, stats = nlj_naive(left, right, model, theta,
                                   inner=args.inner)
    elif args.algo == "prefetch":
        matches, stats = nlj_prefetch(left, right, model, theta,
                                      threads=args.threads, inner=args.inner)
    else:
        matches, stats = tensor_join(left, right, model, theta,
                                     args.budget_bytes, threads=args.threads)
    _write_matches(args.out_matches, matches)
    record = bench.RunRecord.from_stats(
        stats,
        left_rows=len(left),
        right_rows=len(right),
        dim=model.dim,
        theta=theta.value,
        model_spec=args.model,
        seed=spec.seed,
        budget_bytes=args.budget_bytes if args.algo == "tensor" else None,
    )
    with open(args.out_stats, "w", encoding="utf-8") as fh:
        json.dump(record.to_dict(), fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_topk(args) -> int:
    if args.k < 1:
        print("error: k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    spec = ModelSpec(args.model)
    model = spec.build()
    raw = _read_relation(args.relation, "relation")
    from .embedding import embed_relation

    er = embed_relation(model, raw)
    for token, sim in top_k(model, er, raw, args.probe, args.k):
        print(f"{token}\t{sim:.6f}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    with open(args.params, "r", encoding="utf-8") as fh:
        try:
            params = CostParams.from_json(fh.read())
        except (ValueError, KeyError) as exc:
            print(f"error: bad cost params: {exc}", file=sys.stderr)
            return EXIT_IO
    chosen, estimates = choose_plan(args.left_rows, args.right_rows,
                                    args.dim, args.budget_bytes, params)
    out = {
        "naive_nlj_ns": estimates["naive_nlj"],
        "prefetch_nlj_ns": estimates["prefetch_nlj"],
        "tensor_ns": estimates["tensor"],
        "chosen": chosen,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    spec = ModelSpec(args.model)
    model = spec.build()
    params = calibrate(model, args.dim, sample_sizes=(args.samples,))
    text = params.to_json() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = bench.run_experiment(args.experiment, scale=args.scale,
                                reps=args.reps)
    bench.write_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="simjoin",
                     description="cosine-threshold similarity join engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a deterministic token file")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("join", help="join two token files on cosine >= theta")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--model", required=True,
                   help="synthetic:seed=<u64>:dim=<n>[:latency_ns=<n>] "
                        "or vec:<path>[:oov=error|synthetic]")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--algo", choices=("naive", "prefetch", "tensor"),
                   default="tensor")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--budget-bytes", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--inner", choices=("left", "right"), default=None,
                   help="override inner-loop relation (default: smaller)")
    p.add_argument("--affinity", action="store_true",
                   help="best-effort: pin the process to the first N cores")
    p.add_argument("--out-matches", required=True)
    p.add_argument("--out-stats", required=True)
    p.set_defaults(fn=cmd_join)

    p = sub.add_parser("topk", help="most similar tokens to a probe")
    p.add_argument("relation")
    p.add_argument("probe")
    p.add_argument("--model", required=True)
    p.add_argument("-k", type=int, default=15)
    p.set_defaults(fn=cmd_topk)

    p = sub.add_parser("estimate", help="cost estimates and plan choice")
    p.add_argument("--left-rows", type=int, required=True)
    p.add_argument("--right-rows", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--budget-bytes", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--params", required=True, help="cost params JSON path")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("calibrate", help="measure cost params on this host")
    p.add_argument("--model", default="synthetic:seed=7:dim=100")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("bench", help="run a reproducibility experiment")
    p.add_argument("--experiment", choices=bench.EXPERIMENTS, required=True)
    p.add_argument("--scale", choices=bench.SCALES, default="desk")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OutOfVocabulary as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OOV
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SimjoinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
