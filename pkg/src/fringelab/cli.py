"""Command-line surface: ``fringelab <subcommand>``.

Every run echoes its fully resolved configuration into the output (the
``config`` object of JSON results, or a leading ``#`` comment line in CSV),
so outputs are self-describing and reproducible.  Exact rationals are
serialized as "num/den" strings, infinities as "inf"/"-inf".  All
randomness flows from --seed/--stream.

Exit codes: 0 success, 1 validation/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from .asymptotics import (
    classify_exceptional,
    equivalent_offspring,
    fringe_covariance_density,
    normalized_covariance_density,
    sg_degree_covariance,
    sg_fringe_covariance,
    tree_probability,
)
from .distributions import OffspringDistribution, WeightSequence
from .errors import FringelabError
from .exact_moments import (
    factorial_moment,
    joint_factorial_moment,
    mean_count,
)
from .mc_harness import (
    ExperimentConfig,
    StatFamily,
    composition_crosscheck,
    moment_condition_scan,
    run_experiment,
)
from .sampling import DegreeSequence, Seed, sample_labelled_tree, sample_uniform_trees
from .schemas import SCHEMA_VERSION
from .tree_core import DegreeStatistic, PlaneTree, count_trees, enumerate_trees


def encode(value):
    """Lossless JSON encoding: Fractions as 'num/den', infinities as text."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    return value


def _read_arg(text: str) -> str:
    """Flag values starting with @ are read from the named file."""
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return fh.read()
    return text


def parse_stat(text: str) -> DegreeStatistic:
    raw = json.loads(_read_arg(text))
    return DegreeStatistic.from_counts({int(k): int(v) for k, v in raw.items()})


def parse_patterns(text: str) -> list:
    body = _read_arg(text)
    chunks = [c.strip() for c in body.replace("\n", ";").split(";") if c.strip()]
    return [PlaneTree.from_text(c) for c in chunks]


def parse_offspring(text: str) -> OffspringDistribution:
    body = _read_arg(text).strip()
    if body.startswith("{"):
        raw = json.loads(body)
        return OffspringDistribution.finite(
            {int(k): Fraction(str(v)) for k, v in raw.items()}
        )
    return OffspringDistribution.from_spec(body)


def parse_weights(text: str) -> WeightSequence:
    body = _read_arg(text).strip()
    if body.startswith("{"):
        raw = json.loads(body)
        return WeightSequence.finite(
            {int(k): Fraction(str(v)) for k, v in raw.items()}
        )
    return WeightSequence.from_spec(body)


def _emit(payload: dict, out_path, fmt: str = "json") -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) if fmt == "json" else payload
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text if isinstance(text, str) else str(text))
            fh.write("\n")
    else:
        print(text)


def _emit_csv(lines, config: dict, out_path) -> None:
    header = "# " + json.dumps(config, sort_keys=True)
    body = "\n".join([header] + lines)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(body + "\n")
    else:
        print(body)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_count(args) -> int:
    stat = parse_stat(args.stat)
    config = {"subcommand": "count", "stat": stat.as_dict(), "schema": SCHEMA_VERSION}
    if args.format == "csv":
        _emit_csv([str(count_trees(stat))], encode(config), args.out)
    else:
        _emit(
            {"config": encode(config), "result": str(count_trees(stat))},
            args.out,
        )
    return 0


def _cmd_enumerate(args) -> int:
    stat = parse_stat(args.stat)
    config = {
        "subcommand": "enumerate",
        "stat": stat.as_dict(),
        "cap": args.cap,
        "schema": SCHEMA_VERSION,
    }
    trees = [t.to_text() for t in enumerate_trees(stat, cap=args.cap)]
    if args.format == "csv":
        _emit_csv(trees, encode(config), args.out)
    else:
        _emit({"config": encode(config), "result": trees}, args.out)
    return 0


def _cmd_sample(args) -> int:
    if bool(args.stat) == bool(args.dseq):
        raise ValueError("pass exactly one of --stat or --dseq")
    seed = Seed(args.seed, args.stream)
    config = {
        "subcommand": "sample",
        "reps": args.reps,
        "seed": {"value": seed.value, "stream_id": seed.stream_id},
        "format": args.format,
        "schema": SCHEMA_VERSION,
    }
    if args.stat:
        stat = parse_stat(args.stat)
        config["stat"] = stat.as_dict()
        rows = [t.to_text() for t in sample_uniform_trees(stat, args.reps, seed)]
        records = rows
    else:
        dseq = DegreeSequence(tuple(int(x) for x in _read_arg(args.dseq).split(",")))
        config["dseq"] = list(dseq.degrees)
        rows, records = [], []
        for r in range(args.reps):
            tree, labels = sample_labelled_tree(dseq, seed.generator(r))
            rows.append(f"{tree.to_text()};{','.join(map(str, labels))}")
            records.append({"tree": tree.to_text(), "labels": list(labels)})
    if args.format == "csv":
        _emit_csv(rows, encode(config), args.out)
    else:
        _emit({"config": encode(config), "result": records}, args.out)
    return 0


def _cmd_moments(args) -> int:
    stat = parse_stat(args.stat)
    patterns = parse_patterns(args.patterns)
    orders = [int(x) for x in args.q.split(",")] if args.q else [1] * len(patterns)
    if len(orders) != len(patterns):
        raise ValueError("--q must list one order per pattern")
    config = {
        "subcommand": "moments",
        "stat": stat.as_dict(),
        "patterns": [p.to_text() for p in patterns],
        "q": orders,
        "schema": SCHEMA_VERSION,
    }
    if len(patterns) == 1:
        value = (
            mean_count(stat, patterns[0])
            if orders[0] == 1
            else factorial_moment(stat, patterns[0], orders[0])
        )
    else:
        value = joint_factorial_moment(stat, patterns, orders)
    result = {"value": encode(value), "float": float(value)}
    _emit({"config": encode(config), "result": result}, args.out)
    return 0


def _cmd_asymptotics(args) -> int:
    if not args.p and not args.w:
        raise ValueError("need --p (offspring law) or --w (weight sequence)")
    if args.p:
        p = parse_offspring(args.p)
        patterns = parse_patterns(args.patterns) if args.patterns else []
        config = {
            "subcommand": "asymptotics",
            "p": p.label(),
            "patterns": [t.to_text() for t in patterns],
            "schema": SCHEMA_VERSION,
        }
        result = {"patterns": []}
        for t in patterns:
            result["patterns"].append(
                {
                    "pattern": t.to_text(),
                    "probability": encode(tree_probability(p, t)),
                    "variance_density": encode(fringe_covariance_density(p, t, t)),
                    "normalized_variance": encode(
                        normalized_covariance_density(p, t, t)
                    ),
                    "exceptional_case": classify_exceptional(t, p),
                }
            )
        if len(patterns) > 1:
            result["covariance_matrix"] = [
                [encode(fringe_covariance_density(p, a, b)) for b in patterns]
                for a in patterns
            ]
        _emit({"config": encode(config), "result": result}, args.out)
        return 0
    w = parse_weights(args.w)
    eq = equivalent_offspring(w)
    config = {
        "subcommand": "asymptotics",
        "w": w.label(),
        "schema": SCHEMA_VERSION,
    }
    result = {
        "tau": encode(eq.tau),
        "nu": encode(eq.nu),
        "sigma2": encode(eq.sigma2),
        "varsigma2": encode(eq.varsigma2),
        "theta": {
            str(i): encode(eq.theta.p(i))
            for i in eq.theta.support()
            if float(eq.theta.p(i)) > 1e-15
        },
    }
    if args.patterns:
        patterns = parse_patterns(args.patterns)
        config["patterns"] = [t.to_text() for t in patterns]
        cov = sg_fringe_covariance(w, patterns, regime=args.regime)
        result["fringe_covariance"] = [[encode(x) for x in row] for row in cov.entries]
    if args.degree_cov is not None:
        cov = sg_degree_covariance(w, args.degree_cov, regime=args.regime)
        result["degree_covariance"] = [[encode(x) for x in row] for row in cov.entries]
    _emit({"config": encode(config), "result": result}, args.out)
    return 0


def _load_experiment_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    family_name = args.family or raw.get("family", "full_binary")
    family_params = tuple(raw.get("family_params", ()))
    family = StatFamily(family_name, family_params)
    patterns = (
        parse_patterns(args.patterns)
        if args.patterns
        else [PlaneTree.from_text(t) for t in raw.get("patterns", ["2,0,0"])]
    )
    sizes = (
        [int(s) for s in args.sizes.split(",")]
        if args.sizes
        else [int(s) for s in raw.get("sizes", [10001])]
    )
    reps = args.reps or int(raw.get("replicates", 2000))
    seed_raw = raw.get("seed", {})
    seed = Seed(
        args.seed if args.seed is not None else int(seed_raw.get("value", 0)),
        args.stream if args.stream is not None else int(seed_raw.get("stream_id", 0)),
    )
    return ExperimentConfig(
        family=family,
        patterns=tuple(patterns),
        sizes=tuple(sizes),
        replicates=reps,
        seed=seed,
        tests=tuple(raw.get("tests", ("moments", "normality"))),
        standardize_with=raw.get("standardize_with", "exact_mean"),
        ks_threshold=float(raw.get("ks_threshold", 0.05)),
        var_rel_tol=float(raw.get("var_rel_tol", 0.10)),
        keep_samples=bool(args.samples_csv),
    )


def _cmd_experiment(args) -> int:
    cfg = _load_experiment_config(args)
    report = run_experiment(cfg)
    payload = report.to_dict()
    payload["schema"] = SCHEMA_VERSION
    if args.samples_csv:
        lines = ["size,pattern,replicate,standardized"]
        for entry in report.per_size:
            for pattern, samples in entry.get("standardized_samples", {}).items():
                lines.extend(
                    f"{entry['size']},{pattern},{r},{val!r}"
                    for r, val in enumerate(samples)
                )
            entry.pop("standardized_samples", None)
        _emit_csv(lines, payload["config"], args.samples_csv)
    _emit(encode(payload), args.out)
    return 0


def _cmd_check_gw(args) -> int:
    family = StatFamily(args.family)
    pattern = PlaneTree.from_text(args.pattern)
    sizes = [int(s) for s in args.sizes.split(",")]
    config = {
        "subcommand": "check-gw",
        "family": family.label(),
        "pattern": pattern.to_text(),
        "sizes": sizes,
        "c": args.c,
        "schema": SCHEMA_VERSION,
    }
    rows = moment_condition_scan(family, pattern, sizes, c=args.c)
    decreasing = all(
        rows[i]["max_deviation"] > rows[i + 1]["max_deviation"]
        for i in range(len(rows) - 1)
    )
    result = {
        "per_size": encode(rows),
        "strictly_decreasing": decreasing,
        "final_deviation": rows[-1]["max_deviation"] if rows else None,
    }
    _emit({"config": encode(config), "result": encode(result)}, args.out)
    return 0


def _cmd_crosscheck(args) -> int:
    seed = Seed(args.seed, args.stream)
    config = {
        "subcommand": "crosscheck",
        "n0": args.n0,
        "n1": args.n1,
        "reps": args.reps,
        "seed": {"value": seed.value, "stream_id": seed.stream_id},
        "schema": SCHEMA_VERSION,
    }
    result = composition_crosscheck(args.n0, args.n1, args.reps, seed)
    _emit({"config": encode(config), "result": encode(result)}, args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fringelab",
        description="Fringe-subtree statistics of random trees with given degrees",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--out", help="write output to this path instead of stdout")

    p = sub.add_parser("count", help="number of trees with a degree statistic")
    p.add_argument("--stat", required=True, help='JSON counts, e.g. {"0":3,"2":2}')
    p.add_argument("--format", choices=("json", "csv"), default="json")
    add_common(p)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("enumerate", help="list every tree with the statistic")
    p.add_argument("--stat", required=True)
    p.add_argument("--cap", type=int, default=12)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    add_common(p)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("sample", help="uniform random trees")
    p.add_argument("--stat", help="degree-count JSON for plane trees")
    p.add_argument("--dseq", help="per-label degrees d1,d2,... for labelled trees")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("moments", help="exact factorial moments of fringe counts")
    p.add_argument("--stat", required=True)
    p.add_argument(
        "--patterns",
        "--pattern",
        dest="patterns",
        required=True,
        help="semicolon-separated preorder degree lists, e.g. '2,0,0;1,0'",
    )
    p.add_argument("--q", help="comma-separated factorial orders, default all 1")
    p.add_argument(
        "--exact",
        action="store_true",
        help="rational num/den output (always on; accepted for compatibility)",
    )
    add_common(p)
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("asymptotics", help="limit-law quantities")
    p.add_argument("--p", help="offspring law: geometric:1/2 or JSON map")
    p.add_argument("--w", help="weight sequence: geometric:1 or JSON map")
    p.add_argument("--patterns", help="pattern list as in moments")
    p.add_argument("--degree-cov", type=int, default=None, metavar="K")
    p.add_argument(
        "--regime",
        choices=("auto", "finite_variance", "infinite_variance"),
        default="auto",
    )
    add_common(p)
    p.set_defaults(func=_cmd_asymptotics)

    p = sub.add_parser("experiment", help="Monte Carlo limit-law verification")
    p.add_argument("--config", help="JSON config file; flags override")
    p.add_argument("--family", help="full_binary | geometric_profile | one_hub")
    p.add_argument("--patterns")
    p.add_argument("--sizes")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)
    p.add_argument("--samples-csv", help="also dump standardized samples as CSV")
    add_common(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("check-gw", help="factorial-moment growth-condition scan")
    p.add_argument("--family", default="full_binary")
    p.add_argument("--pattern", default="2,0,0")
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--c", type=float, default=1.0)
    add_common(p)
    p.set_defaults(func=_cmd_check_gw)

    p = sub.add_parser("crosscheck", help="hub-tree sampler agreement test")
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    add_common(p)
    p.set_defaults(func=_cmd_crosscheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (FringelabError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
