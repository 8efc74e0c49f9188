"""Command-line front end: reproducible experiments with machine-readable output.

Every run embeds a manifest (subcommand, flags, seed, rng identifiers,
version, timestamp).  Data rows are a pure function of the manifest, so a
rerun with the same flags and seed is byte-identical; only the manifest line
carries the timestamp.

Exit codes: 0 success, 1 usage error, 2 size-guard refusal, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .ballsbins import (
    ExperimentConfig,
    RNG_ALGORITHM,
    SEED_SCHEME,
    build_ball_set,
    chi_square_sf,
    chi_square_statistic,
    check_e1_e2_implication,
    estimate_tail,
    event_e2,
    event_e2_direct,
    exact_expected_lbin,
    exact_tail_probability,
    generate_set,
    pairwise_independence_check,
    subspace_structure,
    substream,
)
from .bounds import (
    bound_e2,
    bound_surjective_miss,
    bound_tail,
    c_epsilon,
    ell_threshold,
    tail_bound_parameters,
    tail_exponent_margin,
)
from .gf2 import (
    GF2Vector,
    LinearMap,
    SizeGuardError,
    compose,
    count_factorizations,
    rank,
    is_surjective,
    sample_surjective,
    sample_uniform_linear,
)
from .hashtable import LinearHashTable

DEFAULT_SEED = 1
SEED_ENV_VAR = "LINBINS_SEED"

CSV_HEADER = (
    "experiment,u,b,f,set_kind,set_size,trial,seed,lbin,threshold,freq,ci_lo,ci_hi"
)
BOUNDS_HEADER = "formula,u,t,b,f,r,eps,alpha,mu,value_raw,value_clamped,vacuous"

_CSV_COLUMNS = CSV_HEADER.split(",")
_BOUNDS_COLUMNS = BOUNDS_HEADER.split(",")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise UsageError(message)


@dataclass
class RunManifest:
    subcommand: str
    flags: dict
    master_seed: int
    rng_algorithm: str = RNG_ALGORITHM
    seed_scheme: str = SEED_SCHEME
    artifact_version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def as_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "flags": self.flags,
            "master_seed": self.master_seed,
            "rng_algorithm": self.rng_algorithm,
            "seed_scheme": self.seed_scheme,
            "artifact_version": self.artifact_version,
            "timestamp": self.timestamp,
        }


def _manifest_for(args: argparse.Namespace) -> RunManifest:
    flags = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "config", "subcommand") and not callable(v)
    }
    if isinstance(flags.get("thresholds"), tuple):
        flags["thresholds"] = list(flags["thresholds"])
    return RunManifest(
        subcommand=args.subcommand, flags=flags, master_seed=args.seed
    )


def _emit(manifest: RunManifest, rows: list[dict], columns: list[str],
          fmt: str, out: str | None, summary: dict | None = None) -> None:
    if fmt == "csv":
        lines = ["# manifest: " + json.dumps(manifest.as_dict(), sort_keys=True)]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(str(row.get(col, "")) for col in columns))
        text = "\n".join(lines) + "\n"
    else:
        doc = {"manifest": manifest.as_dict(), "rows": rows}
        if summary is not None:
            doc["summary"] = summary
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise UsageError(f"empty integer list {text!r}")
    return values


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise UsageError(f"empty number list {text!r}")
    return values


def _require_dims(args: argparse.Namespace) -> None:
    if args.u is None or args.b is None:
        raise UsageError("--u and --b are required (flags or config file)")


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    _require_dims(args)
    if args.set in ("subspace", "affine"):
        if args.set_dim is None:
            raise UsageError(f"--set {args.set} requires --set-dim")
        size, dim = None, args.set_dim
    else:
        if args.set_size is None:
            raise UsageError(f"--set {args.set} requires --set-size")
        size, dim = args.set_size, None
    return ExperimentConfig(
        universe_dim=args.u,
        bin_dim=args.b,
        set_kind=args.set,
        trials=getattr(args, "trials", 1),
        master_seed=args.seed,
        thresholds=args.thresholds,
        set_size=size,
        set_dim=dim,
    )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    summary = estimate_tail(config, jobs=args.jobs)
    base = {
        "u": config.universe_dim,
        "b": config.bin_dim,
        "set_kind": config.set_kind,
        "set_size": summary.set_size,
        "seed": config.master_seed,
    }
    rows = [
        dict(base, experiment="simulate", trial=i, lbin=v)
        for i, v in enumerate(summary.lbin_values)
    ]
    for name, value in (
        ("mean", summary.mean),
        ("median", summary.median),
        ("max", summary.max_value),
        ("p90", summary.quantiles["p90"]),
        ("p99", summary.quantiles["p99"]),
    ):
        rows.append(dict(base, experiment=f"summary-{name}", lbin=value))
    for tail in summary.tails:
        rows.append(
            dict(
                base,
                experiment="summary-tail",
                threshold=tail.threshold,
                freq=tail.frequency,
                ci_lo=tail.ci_low,
                ci_hi=tail.ci_high,
            )
        )
    json_summary = {
        "set": summary.set_descriptor,
        "mean": summary.mean,
        "median": summary.median,
        "max": summary.max_value,
        "quantiles": summary.quantiles,
        "tails": [
            {
                "threshold": t.threshold,
                "frequency": t.frequency,
                "ci_lo": t.ci_low,
                "ci_hi": t.ci_high,
            }
            for t in summary.tails
        ],
    }
    _emit(_manifest_for(args), rows, _CSV_COLUMNS, args.format, args.out, json_summary)
    return 0


# ---------------------------------------------------------------------------
# exact
# ---------------------------------------------------------------------------


def cmd_exact(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    S = build_ball_set(config)
    expected = exact_expected_lbin(config.universe_dim, config.bin_dim, S)
    base = {
        "u": config.universe_dim,
        "b": config.bin_dim,
        "set_kind": config.set_kind,
        "set_size": S.size,
        "seed": config.master_seed,
    }
    rows = [dict(base, experiment="exact-mean", lbin=str(expected))]
    tails = {}
    for ell in config.thresholds:
        p = exact_tail_probability(config.universe_dim, config.bin_dim, S, ell)
        tails[ell] = str(p)
        rows.append(dict(base, experiment="exact-tail", threshold=ell, freq=str(p)))
    json_summary = {
        "set": S.descriptor,
        "expected_lbin": str(expected),
        "tails": {str(k): v for k, v in tails.items()},
    }
    _emit(_manifest_for(args), rows, _CSV_COLUMNS, args.format, args.out, json_summary)
    return 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _bound_rows(args: argparse.Namespace) -> list[dict]:
    rows = []

    def add(formula, *, value, clamped=None, **cells):
        row = dict(cells, formula=formula, value_raw=value)
        if clamped is not None:
            row["value_clamped"] = clamped
            row["vacuous"] = "yes" if clamped >= 1.0 else "no"
        rows.append(row)

    wanted = args.formula
    if wanted in ("c-epsilon", "all"):
        for eps in args.eps:
            add("c-epsilon", eps=eps, value=c_epsilon(eps))
    if wanted in ("surjective-miss", "all"):
        for u in args.u:
            for t in args.t:
                for alpha in args.alpha:
                    v = bound_surjective_miss(u, t, alpha)
                    add("surjective-miss", u=u, t=t, alpha=alpha,
                        value=v.raw, clamped=v.clamped)
    if wanted in ("e2", "all"):
        for b in args.b:
            for f in args.f:
                if f <= b:
                    continue
                raw = bound_e2(b, f)
                add("e2", b=b, f=f, mu=2.0 ** (b - f),
                    value=raw, clamped=min(1.0, raw))
    if wanted in ("tail", "all"):
        for b in args.b:
            for r in args.r:
                for eps in args.eps:
                    raw = bound_tail(b, r, eps)
                    add("tail", b=b, r=r, eps=eps,
                        value=raw, clamped=min(1.0, raw))
    if wanted in ("ell-threshold", "all"):
        for f in args.f:
            for b in args.b:
                if f < b:
                    continue
                for eps in args.eps:
                    add("ell-threshold", f=f, b=b, eps=eps,
                        value=ell_threshold(eps, f, b))
    if wanted in ("tail-params", "all"):
        for b in args.b:
            for r in args.r:
                for eps in args.eps:
                    p = tail_bound_parameters(b, r, eps)
                    add("tail-params", b=b, r=r, eps=eps, f=p.inter_dim,
                        value=p.threshold)
    if wanted in ("exponent-margin", "all"):
        for b in args.b:
            for r in args.r:
                add("exponent-margin", b=b, r=r, value=tail_exponent_margin(b, r))
    return rows


def cmd_bounds(args: argparse.Namespace) -> int:
    rows = _bound_rows(args)
    _emit(_manifest_for(args), rows, _BOUNDS_COLUMNS, args.format, args.out,
          {"rows": len(rows)})
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _all_linear_maps(in_dim, out_dim):
    mask = (1 << in_dim) - 1
    for m in range(1 << (in_dim * out_dim)):
        yield LinearMap.from_row_bits(
            in_dim, [(m >> (i * in_dim)) & mask for i in range(out_dim)]
        )


def _check_composition_uniformity(seed, samples, inject_fault):
    u, f, b = 2, 2, 1
    rng = substream(seed, "verify", "composition")
    T1 = sample_surjective(f, b, rng)
    tally = Counter()
    for _ in range(samples):
        T0 = sample_uniform_linear(u, f, rng)
        key = compose(T1, T0).row_bits
        if inject_fault:
            key = (key[0] | 1,) + key[1:]  # stuck bit collapses half the maps
        tally[key] += 1
    cells = [T.row_bits for T in _all_linear_maps(u, b)]
    observed = [tally.get(c, 0) for c in cells]
    expected = [samples / len(cells)] * len(cells)
    stat = chi_square_statistic(observed, expected)
    p = chi_square_sf(stat, len(cells) - 1)
    ok = p >= 0.001
    return ok, f"chi2={stat:.3f} df={len(cells) - 1} p={p:.5f} n={samples}"


def _check_factorization_count(seed, dims):
    mismatches = 0
    cases = 0
    for u, f, b in dims:
        surjective = [T1 for T1 in _all_linear_maps(f, b) if is_surjective(T1)]
        for T in _all_linear_maps(u, b):
            want = 1 << ((f - b) * (u - rank(T)))
            for T1 in surjective:
                cases += 1
                if count_factorizations(T, T1) != want:
                    mismatches += 1
    return mismatches == 0, f"{cases} cases, {mismatches} mismatches"


def _check_e2_equivalence(seed, instances):
    rng = substream(seed, "verify", "e2-equivalence")
    disagreements = 0
    for _ in range(instances):
        u = rng.randint(1, 4)
        f = rng.randint(1, min(u, 3))
        b = rng.randint(1, min(f, 2))
        S = generate_set("random", u, rng.randint(1, 1 << u), rng)
        T0 = sample_uniform_linear(u, f, rng)
        T1 = sample_surjective(f, b, rng)
        if event_e2(S, T0, T1) != event_e2_direct(S, T0, T1):
            disagreements += 1
    return disagreements == 0, f"{instances} instances, {disagreements} disagreements"


def _check_implication(seed, instances):
    rng = substream(seed, "verify", "implication")
    violations = 0
    for _ in range(instances):
        u = rng.randint(2, 4)
        f = rng.randint(1, min(u, 3))
        b = rng.randint(1, min(f, 2))
        S = generate_set("random", u, rng.randint(1, 1 << u), rng)
        T0 = sample_uniform_linear(u, f, rng)
        T1 = sample_surjective(f, b, rng)
        report = check_e1_e2_implication(S, T0, T1, rng.randint(1, S.size + 1))
        violations += report.violations
    return violations == 0, f"{instances} instances, {violations} violations"


def _check_pairwise(seed):
    worst = 0.0
    ok = True
    for u, b in ((2, 1), (3, 2)):
        report = pairwise_independence_check(u, b, mode="exact")
        ok = ok and report.ok
        worst = max(worst, report.max_abs_error)
    return ok, f"exact modes (2,1),(3,2), max cell error {worst}"


def _check_subspace_structure(seed, instances):
    rng = substream(seed, "verify", "subspace")
    failures = 0
    for _ in range(instances):
        u = rng.randint(2, 4)
        d = rng.randint(0, min(u, 3))
        b = rng.randint(1, 2)
        S = generate_set("subspace", u, d, rng)
        T = sample_uniform_linear(u, b, rng)
        if not subspace_structure(T, S).ok:
            failures += 1
    return failures == 0, f"{instances} instances, {failures} failures"


VERIFY_CHECKS = (
    "composition-uniformity",
    "factorization-count",
    "e2-equivalence",
    "e1-e2-implication",
    "pairwise-independence",
    "subspace-structure",
)


def cmd_verify(args: argparse.Namespace) -> int:
    if args.check and args.check not in VERIFY_CHECKS:
        raise UsageError(
            f"unknown check {args.check!r} (choose from {', '.join(VERIFY_CHECKS)})"
        )
    selected = (args.check,) if args.check else VERIFY_CHECKS
    dims = [(3, 2, 1), (2, 2, 1)]
    if args.u is not None and args.f is not None and args.b is not None:
        dims = [(args.u, args.f, args.b)]
    runners = {
        "composition-uniformity": lambda: _check_composition_uniformity(
            args.seed, args.samples, args.inject_fault
        ),
        "factorization-count": lambda: _check_factorization_count(args.seed, dims),
        "e2-equivalence": lambda: _check_e2_equivalence(args.seed, args.instances),
        "e1-e2-implication": lambda: _check_implication(args.seed, args.instances),
        "pairwise-independence": lambda: _check_pairwise(args.seed),
        "subspace-structure": lambda: _check_subspace_structure(
            args.seed, args.instances
        ),
    }
    all_ok = True
    for name in selected:
        ok, detail = runners[name]()
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all_ok else 3


# ---------------------------------------------------------------------------
# table-bench
# ---------------------------------------------------------------------------


def cmd_table_bench(args: argparse.Namespace) -> int:
    _require_dims(args)
    if args.n is None:
        raise UsageError("--n is required (flags or config file)")
    rows = []
    summaries = []
    for n in args.n:
        rng = substream(args.seed, "bench", args.keys, n)
        if n == 0:
            S = None
        elif args.keys == "subspace":
            if n & (n - 1):
                raise UsageError("subspace workloads need a power-of-two --n")
            S = generate_set("subspace", args.u, n.bit_length() - 1, rng)
        else:
            S = generate_set(args.keys, args.u, n, rng)
        table = LinearHashTable(args.u, args.b, rng)
        if S is not None:
            for i, key in enumerate(S.members):
                table.insert(key, i)
            for key in S.members:
                table.get(key)
            for _ in range(S.size):
                table.get(GF2Vector(args.u, rng.getrandbits(args.u)))
        stats = table.stats()
        base = {
            "u": args.u,
            "b": stats.bucket_bits,
            "set_kind": args.keys,
            "set_size": n,
            "seed": args.seed,
        }
        rows.append(dict(base, experiment="table-bench", lbin=stats.max_chain))
        rows.append(dict(base, experiment="table-bench-resizes", lbin=stats.resizes))
        rows.append(
            dict(base, experiment="table-bench-probes-hit", freq=stats.mean_probes_hit)
        )
        rows.append(
            dict(base, experiment="table-bench-probes-miss", freq=stats.mean_probes_miss)
        )
        summaries.append(
            {
                "n": n,
                "bucket_bits": stats.bucket_bits,
                "max_chain": stats.max_chain,
                "resizes": stats.resizes,
                "mean_probes_hit": stats.mean_probes_hit,
                "mean_probes_miss": stats.mean_probes_miss,
            }
        )
    _emit(_manifest_for(args), rows, _CSV_COLUMNS, args.format, args.out,
          {"workloads": summaries})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def build_parser(config_defaults: dict | None = None,
                 target_subcommand: str | None = None) -> _Parser:
    parser = _Parser(prog="linbins", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=_default_seed())
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None)
        sp.add_argument("--config", default=None,
                        help="JSON file with flag defaults (flags win)")

    def set_flags(sp):
        sp.add_argument("--u", type=int, default=None)
        sp.add_argument("--b", type=int, default=None)
        sp.add_argument("--set", choices=("interval", "random", "subspace",
                                          "affine", "cluster"),
                        default="interval")
        sp.add_argument("--set-size", type=int, default=None)
        sp.add_argument("--set-dim", type=int, default=None)
        sp.add_argument("--thresholds", type=_parse_int_list, default=(1,))

    sp = sub.add_parser("simulate", help="Monte Carlo largest-bin estimation")
    set_flags(sp)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--jobs", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("exact", help="exact expectation and tail, tiny dims")
    set_flags(sp)
    common(sp)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("bounds", help="closed-form bound tables over grids")
    sp.add_argument("--formula",
                    choices=("c-epsilon", "surjective-miss", "e2", "tail",
                             "ell-threshold", "tail-params", "exponent-margin",
                             "all"),
                    default="all")
    sp.add_argument("--eps", type=_parse_float_list, default=(0.5,))
    sp.add_argument("--alpha", type=_parse_float_list, default=(0.5,))
    sp.add_argument("--u", type=_parse_int_list, default=(10,))
    sp.add_argument("--t", type=_parse_int_list, default=(4,))
    sp.add_argument("--b", type=_parse_int_list, default=(8,))
    sp.add_argument("--f", type=_parse_int_list, default=(11,))
    sp.add_argument("--r", type=_parse_float_list, default=(16.0, 256.0))
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="exhaustive small-dimension self checks")
    sp.add_argument("--check", default=None,
                    help=f"run one check: {', '.join(VERIFY_CHECKS)}")
    sp.add_argument("--samples", type=int, default=20_000,
                    help="draws for the composition uniformity chi-square")
    sp.add_argument("--instances", type=int, default=1_000,
                    help="random instances for equivalence style checks")
    sp.add_argument("--u", type=int, default=None)
    sp.add_argument("--f", type=int, default=None)
    sp.add_argument("--b", type=int, default=None)
    sp.add_argument("--inject-fault", action="store_true",
                    help="negative control: corrupt the composition check")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("table-bench", help="hash table workload statistics")
    sp.add_argument("--u", type=int, default=None)
    sp.add_argument("--b", type=int, default=None)
    sp.add_argument("--keys", choices=("random", "interval", "subspace"),
                    default="random")
    sp.add_argument("--n", type=_parse_int_list, default=None)
    common(sp)
    sp.set_defaults(func=cmd_table_bench)

    parser.subparsers = sub.choices
    if config_defaults and target_subcommand:
        for action in sub.choices[target_subcommand]._actions:
            dest = action.dest
            if dest in config_defaults:
                sub.choices[target_subcommand].set_defaults(
                    **{dest: config_defaults[dest]}
                )
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            defaults = json.load(fh)
        if not isinstance(defaults, dict):
            raise UsageError("config file must hold a JSON object")
        known = {a.dest for a in parser.subparsers[args.subcommand]._actions}
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        coerced = {
            k: tuple(v) if isinstance(v, list) else v for k, v in defaults.items()
        }
        parser = build_parser(coerced, args.subcommand)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
