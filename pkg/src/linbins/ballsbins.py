"""Balls-into-bins experiments driven by random GF(2) linear maps.

Ball sets live in a u-bit universe; a map hashes them into 2^b bins.  This
module measures largest-bin sizes, checks the structural events behind the
max-load tail analysis, runs seeded Monte Carlo estimation with confidence
intervals, and provides exact small-dimension oracles.
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .gf2 import (
    GF2Vector,
    LinearMap,
    SizeGuardError,
    _apply_rows,
    _check_guard,
    _invert_rows,
    _cols_to_rows,
    _rank_of_bits,
    _xor_select,
    batch_apply_bits,
    byte_apply_tables,
    complement_basis,
    compose,
    is_surjective,
    kernel_basis,
    sample_uniform_affine,
    sample_uniform_linear,
)

SET_KINDS = ("interval", "random", "subspace", "affine", "cluster")

# Event scans iterate over the whole intermediate space.
EVENT_DIM_CAP = 24

RNG_ALGORITHM = "python-random-mt19937"
SEED_SCHEME = "sha256(master/label/index)"


# ---------------------------------------------------------------------------
# Seeding and statistics helpers
# ---------------------------------------------------------------------------


def derive_seed(master_seed: int, *path: object) -> int:
    """Stable substream seed from a master seed and a label path."""
    material = repr((master_seed,) + path).encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:16], "big")


def substream(master_seed: int, *path: object) -> random.Random:
    """Independent reproducible generator for one labelled substream."""
    return random.Random(derive_seed(master_seed, *path))


def wilson_interval(hits: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Behaves sensibly at observed frequencies of exactly 0 or 1, which are
    routine in tail estimation.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    spread = z * math.sqrt((p * (1 - p) + z2 / (4 * trials)) / trials) / denom
    return (max(0.0, center - spread), min(1.0, center + spread))


def chi_square_statistic(observed: Sequence[int], expected: Sequence[float]) -> float:
    if len(observed) != len(expected):
        raise ValueError("observed and expected lengths differ")
    return sum((o - e) ** 2 / e for o, e in zip(observed, expected))


def chi_square_sf(stat: float, df: int) -> float:
    """Upper tail P[X >= stat] for a chi-square variable, integer df.

    Closed forms: a finite exponential series for even df, erfc plus a
    half-integer series for odd df.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    if stat <= 0:
        return 1.0
    x = stat / 2.0
    if df % 2 == 0:
        term = 1.0
        total = 1.0
        for j in range(1, df // 2):
            term *= x / j
            total += term
        return min(1.0, math.exp(-x) * total)
    total = 0.0
    term = math.sqrt(x) / math.gamma(1.5)
    for j in range(1, (df - 1) // 2 + 1):
        if j > 1:
            term *= x / (j - 0.5)
        total += term
    return min(1.0, math.erfc(math.sqrt(x)) + math.exp(-x) * total)


# ---------------------------------------------------------------------------
# Ball sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallSet:
    """A deduplicated set of u-bit vectors plus provenance for outputs."""

    universe_dim: int
    members: tuple[GF2Vector, ...]
    kind: str
    basis: tuple[GF2Vector, ...] | None = None
    shift: GF2Vector | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("a ball set needs at least one member")
        seen = set()
        for v in self.members:
            if v.dim != self.universe_dim:
                raise ValueError(f"member dim {v.dim} != universe {self.universe_dim}")
            if v.bits in seen:
                raise ValueError(f"duplicate member {v}")
            seen.add(v.bits)

    @cached_property
    def member_bits(self) -> tuple[int, ...]:
        return tuple(v.bits for v in self.members)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def descriptor(self) -> str:
        params = f"u={self.universe_dim},size={self.size}"
        if self.basis is not None:
            params += f",dim={len(self.basis)}"
        return f"{self.kind}({params})"


def _sample_distinct(universe_dim: int, size: int, rng: random.Random,
                     exclude: frozenset[int] = frozenset()) -> list[int]:
    space = 1 << universe_dim
    if size + len(exclude) > space:
        raise ValueError(f"cannot pick {size} distinct vectors beyond {len(exclude)} "
                         f"excluded in a space of {space}")
    out: list[int] = []
    seen = set(exclude)
    # Dense requests in a small universe would make rejection crawl.
    if universe_dim <= 22 and 2 * (size + len(exclude)) >= space:
        pool = [x for x in range(space) if x not in seen]
        return rng.sample(pool, size)
    while len(out) < size:
        c = rng.getrandbits(universe_dim)
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def _sample_independent(universe_dim: int, dim: int, rng: random.Random) -> list[int]:
    vecs: list[int] = []
    while len(vecs) < dim:
        c = rng.getrandbits(universe_dim)
        if _rank_of_bits(vecs + [c]) == len(vecs) + 1:
            vecs.append(c)
    return vecs


def generate_set(kind: str, universe_dim: int, size_or_dim: int,
                 rng: random.Random | None = None) -> BallSet:
    """Build a ball set of the requested kind, exactly the requested size.

    Kinds: interval (first vectors in counting order), random (uniform
    distinct), subspace (span of random independent vectors, size 2^dim),
    affine (a coset of such a span), cluster (a small subspace plus random
    noise).  All kinds except interval consume the rng.
    """
    if universe_dim < 1:
        raise ValueError("universe dimension must be >= 1")
    if kind not in SET_KINDS:
        raise ValueError(f"unknown set kind {kind!r} (choose from {SET_KINDS})")
    if kind in ("subspace", "affine"):
        dim = size_or_dim
        if not 0 <= dim <= universe_dim:
            raise ValueError(f"subspace dim {dim} out of range for universe {universe_dim}")
    else:
        size = size_or_dim
        if not 1 <= size <= (1 << universe_dim):
            raise ValueError(f"size {size} out of range for universe dim {universe_dim}")
    if kind != "interval" and rng is None:
        raise ValueError(f"set kind {kind!r} requires an rng")

    if kind == "interval":
        members = tuple(GF2Vector(universe_dim, x) for x in range(size))
        return BallSet(universe_dim, members, kind)

    if kind == "random":
        bits = _sample_distinct(universe_dim, size, rng)
        return BallSet(universe_dim, tuple(GF2Vector(universe_dim, x) for x in bits), kind)

    if kind in ("subspace", "affine"):
        _check_guard(dim, "subspace enumeration")
        basis_bits = _sample_independent(universe_dim, dim, rng)
        span = [0]
        for v in basis_bits:
            span.extend(w ^ v for w in list(span))
        shift_bits = rng.getrandbits(universe_dim) if kind == "affine" else 0
        members = tuple(GF2Vector(universe_dim, x ^ shift_bits) for x in span)
        basis = tuple(GF2Vector(universe_dim, v) for v in basis_bits)
        shift = GF2Vector(universe_dim, shift_bits) if kind == "affine" else None
        return BallSet(universe_dim, members, kind, basis=basis, shift=shift)

    # cluster: a low-dimensional core subspace plus random distinct noise
    core_dim = min(universe_dim, max(0, (size.bit_length() - 1) // 2))
    while (1 << core_dim) > size:
        core_dim -= 1
    basis_bits = _sample_independent(universe_dim, core_dim, rng)
    span = [0]
    for v in basis_bits:
        span.extend(w ^ v for w in list(span))
    noise = _sample_distinct(universe_dim, size - len(span), rng, frozenset(span))
    members = tuple(GF2Vector(universe_dim, x) for x in span + noise)
    return BallSet(universe_dim, members, "cluster",
                   basis=tuple(GF2Vector(universe_dim, v) for v in basis_bits))


# ---------------------------------------------------------------------------
# Bin measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinHistogram:
    """Counts per occupied bin label; omitted labels hold zero balls."""

    bin_dim: int
    counts: Mapping[GF2Vector, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def max_count(self) -> int:
        return max(self.counts.values())

    def count_of(self, label: GF2Vector) -> int:
        return self.counts.get(label, 0)


def _images(T: LinearMap, bits: Sequence[int]) -> list[int]:
    if len(bits) >= 256:
        return batch_apply_bits(T, bits)
    return [T.apply_bits(x) for x in bits]


def _largest_bin_bits(T: LinearMap, bits: Sequence[int]) -> int:
    return max(Counter(_images(T, bits)).values())


def _check_map_vs_set(T: LinearMap, S: BallSet) -> None:
    if T.in_dim != S.universe_dim:
        raise ValueError(f"map takes {T.in_dim} bits, balls have {S.universe_dim}")


def bin_counts(T: LinearMap, S: BallSet) -> BinHistogram:
    """Histogram of how many balls land on each bin label."""
    _check_map_vs_set(T, S)
    tally = Counter(_images(T, S.member_bits))
    return BinHistogram(
        T.out_dim,
        {GF2Vector(T.out_dim, k): v for k, v in sorted(tally.items())},
    )


def largest_bin(T: LinearMap, S: BallSet) -> int:
    """Size of the fullest bin; between ceil(|S|/2^b) and |S|."""
    _check_map_vs_set(T, S)
    return _largest_bin_bits(T, S.member_bits)


def event_e1(S: BallSet, T: LinearMap, ell: int) -> bool:
    """True iff some bin holds at least ell balls."""
    if ell < 1:
        raise ValueError("threshold must be >= 1")
    return largest_bin(T, S) >= ell


def _check_event_args(S: BallSet, T0: LinearMap, T1: LinearMap) -> None:
    _check_map_vs_set(T0, S)
    if T1.in_dim != T0.out_dim:
        raise ValueError(
            f"outer map takes {T1.in_dim} bits, inner map gives {T0.out_dim}"
        )
    if T1.in_dim < T1.out_dim:
        raise ValueError("intermediate dimension must be >= output dimension")
    if not is_surjective(T1):
        raise ValueError("outer map must be surjective")
    if T1.in_dim > EVENT_DIM_CAP:
        raise SizeGuardError(
            f"event scan iterates 2^{T1.in_dim} points (cap is 2^{EVENT_DIM_CAP})"
        )


def event_e2(S: BallSet, T0: LinearMap, T1: LinearMap) -> bool:
    """True iff some bin label has its whole outer-map fiber inside T0(S).

    Computed through the complement identity: such a label exists exactly
    when the points outside T0(S) fail to cover every label under the outer
    map.  Cost is one pass over the 2^f intermediate points.
    """
    _check_event_args(S, T0, T1)
    f, b = T1.in_dim, T1.out_dim
    covered = bytearray(1 << f)
    for img in _images(T0, S.member_bits):
        covered[img] = 1
    tables = byte_apply_tables(T1)
    nchunks = len(tables)
    full = 1 << b
    seen = bytearray(full)
    remaining = full
    for x in range(1 << f):
        if covered[x]:
            continue
        acc = 0
        for c in range(nchunks):
            acc ^= tables[c][(x >> (8 * c)) & 255]
        if not seen[acc]:
            seen[acc] = 1
            remaining -= 1
            if remaining == 0:
                return False
    return True


def _fiber_bits(T1: LinearMap, label_bits: int) -> list[int]:
    """All intermediate points the outer map sends to the given label."""
    ker1 = kernel_basis(T1)
    comp1 = complement_basis(ker1)
    comp1_bits = [v.bits for v in comp1.basis]
    v_cols = [T1.apply_bits(c) for c in comp1_bits]
    vinv = _invert_rows(_cols_to_rows(v_cols, T1.out_dim), T1.out_dim)
    particular = _xor_select(comp1_bits, _apply_rows(vinv, label_bits))
    return [particular ^ k for k in ker1.span_bits()]


def event_e2_direct(S: BallSet, T0: LinearMap, T1: LinearMap) -> bool:
    """Fiber-by-fiber reference for event_e2: enumerate each fiber, test subset."""
    _check_event_args(S, T0, T1)
    image = set(_images(T0, S.member_bits))
    for label in range(1 << T1.out_dim):
        if all(x in image for x in _fiber_bits(T1, label)):
            return True
    return False


@dataclass(frozen=True)
class ImplicationWitness:
    """One overloaded bin label with the sets the implication argument uses."""

    label: GF2Vector
    hits: tuple[GF2Vector, ...]       # balls mapped to the label by the composite
    preimage: tuple[GF2Vector, ...]   # full composite preimage of the label
    fiber: tuple[GF2Vector, ...]      # outer-map fiber of the label
    fiber_covered: bool               # inner images of the hits cover the fiber


@dataclass(frozen=True)
class ImplicationReport:
    witnesses: tuple[ImplicationWitness, ...]
    e2_occurred: bool
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def check_e1_e2_implication(S: BallSet, T0: LinearMap, T1: LinearMap,
                            ell: int) -> ImplicationReport:
    """Audit: a fully covered fiber at an overloaded label must imply event_e2.

    For every label holding at least ell balls under the composite map, if the
    inner images of those balls cover the label's whole outer fiber, event_e2
    has to be true; each counterexample counts as a violation.  Vacuously
    clean when no label reaches ell.
    """
    if ell < 1:
        raise ValueError("threshold must be >= 1")
    _check_event_args(S, T0, T1)
    T = compose(T1, T0)
    u = T.in_dim
    ker = kernel_basis(T)
    _check_guard(ker.dim, "composite preimage enumeration")
    ker_span = ker.span_bits()
    e2 = event_e2(S, T0, T1)

    by_label: dict[int, list[int]] = {}
    for x, y in zip(S.member_bits, _images(T, S.member_bits)):
        by_label.setdefault(y, []).append(x)

    witnesses = []
    violations = 0
    for label_bits, balls in sorted(by_label.items()):
        if len(balls) < ell:
            continue
        fiber = _fiber_bits(T1, label_bits)
        inner_images = set(_images(T0, balls))
        covered = all(x in inner_images for x in fiber)
        if covered and not e2:
            violations += 1
        preimage = [balls[0] ^ k for k in ker_span]
        witnesses.append(
            ImplicationWitness(
                label=GF2Vector(T.out_dim, label_bits),
                hits=tuple(GF2Vector(u, x) for x in balls),
                preimage=tuple(GF2Vector(u, x) for x in sorted(preimage)),
                fiber=tuple(GF2Vector(T1.in_dim, x) for x in sorted(fiber)),
                fiber_covered=covered,
            )
        )
    return ImplicationReport(tuple(witnesses), e2, violations)


# ---------------------------------------------------------------------------
# Monte Carlo estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one tail-estimation run."""

    universe_dim: int
    bin_dim: int
    set_kind: str
    trials: int
    master_seed: int
    thresholds: tuple[int, ...]
    set_size: int | None = None
    set_dim: int | None = None

    def __post_init__(self) -> None:
        if self.universe_dim < 1 or self.bin_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.thresholds:
            raise ValueError("need at least one threshold")
        if any(t < 1 for t in self.thresholds):
            raise ValueError("thresholds must be >= 1")
        if self.set_kind not in SET_KINDS:
            raise ValueError(f"unknown set kind {self.set_kind!r}")
        if self.set_kind in ("subspace", "affine"):
            if self.set_dim is None:
                raise ValueError(f"set kind {self.set_kind!r} needs set_dim")
        elif self.set_size is None:
            raise ValueError(f"set kind {self.set_kind!r} needs set_size")


@dataclass(frozen=True)
class TailEstimate:
    threshold: int
    hits: int
    trials: int
    frequency: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class TrialSummary:
    config: ExperimentConfig
    set_descriptor: str
    set_size: int
    lbin_values: tuple[int, ...]
    mean: float
    median: float
    max_value: int
    quantiles: dict[str, int]
    tails: tuple[TailEstimate, ...]
    rng_algorithm: str = RNG_ALGORITHM
    seed_scheme: str = SEED_SCHEME


def build_ball_set(config: ExperimentConfig) -> BallSet:
    """The fixed ball set of an experiment, derived from the master seed."""
    rng = substream(config.master_seed, "set")
    arg = (
        config.set_dim
        if config.set_kind in ("subspace", "affine")
        else config.set_size
    )
    return generate_set(config.set_kind, config.universe_dim, arg, rng)


def _trial_chunk(args: tuple) -> list[int]:
    master_seed, universe_dim, bin_dim, bits, start, stop = args
    out = []
    for i in range(start, stop):
        rng = substream(master_seed, "trial", i)
        T = sample_uniform_linear(universe_dim, bin_dim, rng)
        out.append(_largest_bin_bits(T, bits))
    return out


def _quantile(sorted_values: Sequence[int], q: float) -> int:
    i = max(0, math.ceil(q * len(sorted_values)) - 1)
    return sorted_values[min(i, len(sorted_values) - 1)]


def estimate_tail(config: ExperimentConfig, jobs: int = 1) -> TrialSummary:
    """Frequency of overloaded bins over fresh uniform maps on a fixed set.

    Each trial samples its map from an index-derived substream, so the result
    is one deterministic function of the config regardless of job count.
    """
    S = build_ball_set(config)
    bits = S.member_bits
    base = (config.master_seed, config.universe_dim, config.bin_dim, bits)
    if jobs <= 1:
        values = _trial_chunk(base + (0, config.trials))
    else:
        chunk = max(1, -(-config.trials // (jobs * 4)))
        tasks = [
            base + (start, min(start + chunk, config.trials))
            for start in range(0, config.trials, chunk)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = [v for part in pool.map(_trial_chunk, tasks) for v in part]
    return summarize_trials(config, S, values)


def summarize_trials(config: ExperimentConfig, S: BallSet,
                     values: Sequence[int]) -> TrialSummary:
    ordered = sorted(values)
    tails = []
    for ell in config.thresholds:
        hits = sum(1 for v in values if v >= ell)
        lo, hi = wilson_interval(hits, len(values))
        tails.append(
            TailEstimate(ell, hits, len(values), hits / len(values), lo, hi)
        )
    return TrialSummary(
        config=config,
        set_descriptor=S.descriptor,
        set_size=S.size,
        lbin_values=tuple(values),
        mean=sum(values) / len(values),
        median=float(
            (ordered[(len(ordered) - 1) // 2] + ordered[len(ordered) // 2]) / 2
        ),
        max_value=ordered[-1],
        quantiles={
            "p50": _quantile(ordered, 0.50),
            "p90": _quantile(ordered, 0.90),
            "p99": _quantile(ordered, 0.99),
        },
        tails=tuple(tails),
    )


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


def exact_lbin_distribution(universe_dim: int, bin_dim: int,
                            S: BallSet) -> dict[int, int]:
    """Largest-bin value -> number of linear maps attaining it, over all maps."""
    if S.universe_dim != universe_dim:
        raise ValueError("ball set universe does not match")
    _check_guard(universe_dim * bin_dim, "map enumeration")
    mask = (1 << universe_dim) - 1
    bits = S.member_bits
    dist: dict[int, int] = {}
    for m in range(1 << (universe_dim * bin_dim)):
        rows = [(m >> (i * universe_dim)) & mask for i in range(bin_dim)]
        tally: dict[int, int] = {}
        best = 0
        for x in bits:
            y = _apply_rows(rows, x)
            c = tally.get(y, 0) + 1
            tally[y] = c
            if c > best:
                best = c
        dist[best] = dist.get(best, 0) + 1
    return dist


def exact_expected_lbin(universe_dim: int, bin_dim: int, S: BallSet) -> Fraction:
    """Exact mean largest bin over every linear map, as a rational."""
    dist = exact_lbin_distribution(universe_dim, bin_dim, S)
    total_maps = 1 << (universe_dim * bin_dim)
    return Fraction(sum(v * c for v, c in dist.items()), total_maps)


def exact_tail_probability(universe_dim: int, bin_dim: int, S: BallSet,
                           ell: int) -> Fraction:
    """Exact P[largest bin >= ell] under a uniform linear map."""
    if ell < 1:
        raise ValueError("threshold must be >= 1")
    dist = exact_lbin_distribution(universe_dim, bin_dim, S)
    total_maps = 1 << (universe_dim * bin_dim)
    return Fraction(sum(c for v, c in dist.items() if v >= ell), total_maps)


# ---------------------------------------------------------------------------
# Subspace structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceReport:
    """Structure audit when the balls form a linear subspace."""

    intersection_dim: int      # dim of span(S) meet Ker(T)
    expected_bin_size: int     # 2^intersection_dim
    nonempty_bins: int
    zero_label_count: int
    largest: int
    uniform_ok: bool           # every nonempty bin has the expected size
    zero_is_largest_ok: bool   # the zero label's bin is a largest one
    count_ok: bool             # nonempty bins = |S| / expected size

    @property
    def ok(self) -> bool:
        return self.uniform_ok and self.zero_is_largest_ok and self.count_ok


def subspace_structure(T: LinearMap, S: BallSet) -> SubspaceReport:
    """Check the all-bins-equal structure for subspace ball sets.

    Nonempty bins are cosets of span(S) meet Ker(T), so each holds exactly
    2^k balls where k is that intersection's dimension, and the zero label
    always realizes the maximum.
    """
    if S.kind != "subspace" or S.basis is None:
        raise ValueError("ball set must be a subspace kind with a stored basis")
    _check_map_vs_set(T, S)
    span_bits = [v.bits for v in S.basis]
    ker_bits = [v.bits for v in kernel_basis(T).basis]
    sum_rank = _rank_of_bits(span_bits + ker_bits)
    k = len(span_bits) + len(ker_bits) - sum_rank
    expected = 1 << k

    hist = bin_counts(T, S)
    zero_count = hist.count_of(GF2Vector.zero(T.out_dim))
    largest = hist.max_count
    return SubspaceReport(
        intersection_dim=k,
        expected_bin_size=expected,
        nonempty_bins=len(hist.counts),
        zero_label_count=zero_count,
        largest=largest,
        uniform_ok=all(c == expected for c in hist.counts.values()),
        zero_is_largest_ok=(zero_count == largest),
        count_ok=(len(hist.counts) * expected == S.size),
    )


# ---------------------------------------------------------------------------
# Pairwise independence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseReport:
    mode: str                  # "exact" or "sampling"
    universe_dim: int
    bin_dim: int
    pairs_checked: int
    cells_checked: int
    expected: float            # 2^(-2b)
    max_abs_error: float
    tolerance: float
    ok: bool


def pairwise_independence_check(universe_dim: int, bin_dim: int,
                                mode: str = "auto",
                                rng: random.Random | None = None,
                                samples: int = 20_000,
                                max_pairs: int = 40) -> PairwiseReport:
    """Joint distribution check for random affine maps on key pairs.

    For distinct keys x1 != x2 the pair (h(x1), h(x2)) must be uniform over
    all label pairs.  Exact mode enumerates every (matrix, offset) choice and
    demands exact equality; sampling mode draws maps and compares cell
    frequencies against a loose z-score gate.
    """
    total_bits = universe_dim * bin_dim + bin_dim
    if mode not in ("auto", "exact", "sampling"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and total_bits > 16:
        raise SizeGuardError(
            f"exact mode enumerates 2^{total_bits} affine maps (cap is 2^16)"
        )
    if mode == "auto":
        mode = "exact" if total_bits <= 16 else "sampling"

    expected = 2.0 ** (-2 * bin_dim)
    n_keys = 1 << universe_dim
    pairs = [(a, b) for a in range(n_keys) for b in range(a + 1, n_keys)]

    if mode == "exact":
        mask = (1 << universe_dim) - 1
        n_maps = 1 << total_bits
        cells = {
            pair: [0] * (1 << (2 * bin_dim)) for pair in pairs
        }
        for m in range(n_maps):
            rows = [
                (m >> (i * universe_dim)) & mask for i in range(bin_dim)
            ]
            offset = m >> (universe_dim * bin_dim)
            images = [_apply_rows(rows, x) ^ offset for x in range(n_keys)]
            for pair, tally in cells.items():
                tally[(images[pair[0]] << bin_dim) | images[pair[1]]] += 1
        target = n_maps * expected
        max_err = max(
            abs(c - target) / n_maps
            for tally in cells.values()
            for c in tally
        )
        return PairwiseReport(
            mode="exact",
            universe_dim=universe_dim,
            bin_dim=bin_dim,
            pairs_checked=len(pairs),
            cells_checked=len(pairs) * (1 << (2 * bin_dim)),
            expected=expected,
            max_abs_error=max_err,
            tolerance=0.0,
            ok=(max_err == 0.0),
        )

    rng = rng if rng is not None else random.Random(0)
    if len(pairs) > max_pairs:
        pairs = rng.sample(pairs, max_pairs)
    tallies = {pair: [0] * (1 << (2 * bin_dim)) for pair in pairs}
    for _ in range(samples):
        h = sample_uniform_affine(universe_dim, bin_dim, rng)
        for pair, tally in tallies.items():
            tally[(h.apply_bits(pair[0]) << bin_dim) | h.apply_bits(pair[1])] += 1
    max_err = max(
        abs(c / samples - expected)
        for tally in tallies.values()
        for c in tally
    )
    # 5 sigma on a binomial cell keeps false alarms negligible across cells
    tolerance = 5.0 * math.sqrt(expected * (1 - expected) / samples)
    return PairwiseReport(
        mode="sampling",
        universe_dim=universe_dim,
        bin_dim=bin_dim,
        pairs_checked=len(pairs),
        cells_checked=len(pairs) * (1 << (2 * bin_dim)),
        expected=expected,
        max_abs_error=max_err,
        tolerance=tolerance,
        ok=(max_err <= tolerance),
    )
