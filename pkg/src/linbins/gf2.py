"""Bit-packed linear algebra over GF(2).

Vectors are Python ints used as bitsets (bit i = coordinate i), wrapped in
GF2Vector for dimension safety.  Matrices are stored row-major as packed
words; applying a map is one AND plus a popcount parity per output bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


class SizeGuardError(ValueError):
    """Raised when an exhaustive operation would enumerate too many objects."""


# Exhaustive helpers refuse above roughly this many enumerated objects.
SIZE_GUARD_BITS = 22


def _check_guard(bits: int, what: str) -> None:
    if bits > SIZE_GUARD_BITS:
        raise SizeGuardError(
            f"{what} would enumerate 2^{bits} objects (guard is 2^{SIZE_GUARD_BITS})"
        )


@dataclass(frozen=True)
class GF2Vector:
    """A dim-bit vector over GF(2), packed into an int (bit i = coordinate i)."""

    dim: int
    bits: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"vector dimension must be >= 1, got {self.dim}")
        if self.bits < 0 or self.bits >> self.dim:
            raise ValueError(f"bits 0x{self.bits:x} not canonical for dim {self.dim}")

    @classmethod
    def from_bits(cls, coords: Iterable[int]) -> "GF2Vector":
        """Build from coordinates, coords[i] becoming bit i."""
        coords = list(coords)
        bits = 0
        for i, c in enumerate(coords):
            if c & 1:
                bits |= 1 << i
        return cls(len(coords), bits)

    @classmethod
    def zero(cls, dim: int) -> "GF2Vector":
        return cls(dim, 0)

    @classmethod
    def unit(cls, dim: int, i: int) -> "GF2Vector":
        """Standard basis vector with a single 1 at coordinate i."""
        if not 0 <= i < dim:
            raise ValueError(f"coordinate {i} out of range for dim {dim}")
        return cls(dim, 1 << i)

    def bit(self, i: int) -> int:
        return (self.bits >> i) & 1

    def to_bits(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.dim))

    def __xor__(self, other: "GF2Vector") -> "GF2Vector":
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return GF2Vector(self.dim, self.bits ^ other.bits)

    # Addition over GF(2) is XOR.
    __add__ = __xor__

    def __str__(self) -> str:
        return f"{self.bits:0{self.dim}b}"


@dataclass(frozen=True)
class LinearMap:
    """A map x -> Ax (+ a) between bit-vector spaces.

    rows[i] is row i of the matrix A; translation is the optional affine
    offset a (None means a linear map, a = 0).
    """

    in_dim: int
    out_dim: int
    rows: tuple[GF2Vector, ...]
    translation: GF2Vector | None = None

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("map dimensions must be >= 1")
        if len(self.rows) != self.out_dim:
            raise ValueError(f"expected {self.out_dim} rows, got {len(self.rows)}")
        for r in self.rows:
            if r.dim != self.in_dim:
                raise ValueError(f"row dim {r.dim} != in_dim {self.in_dim}")
        if self.translation is not None and self.translation.dim != self.out_dim:
            raise ValueError(
                f"translation dim {self.translation.dim} != out_dim {self.out_dim}"
            )

    @classmethod
    def from_rows(
        cls, rows: Sequence[GF2Vector], translation: GF2Vector | None = None
    ) -> "LinearMap":
        if not rows:
            raise ValueError("a map needs at least one row")
        return cls(rows[0].dim, len(rows), tuple(rows), translation)

    @classmethod
    def from_row_bits(
        cls,
        in_dim: int,
        row_bits: Sequence[int],
        translation_bits: int | None = None,
    ) -> "LinearMap":
        rows = tuple(GF2Vector(in_dim, r) for r in row_bits)
        trans = (
            None
            if translation_bits is None
            else GF2Vector(len(row_bits), translation_bits)
        )
        return cls(in_dim, len(row_bits), rows, trans)

    @classmethod
    def from_column_bits(
        cls,
        in_dim: int,
        out_dim: int,
        col_bits: Sequence[int],
        translation_bits: int | None = None,
    ) -> "LinearMap":
        rows = _cols_to_rows(col_bits, out_dim)
        trans = None if translation_bits is None else translation_bits
        return cls.from_row_bits(in_dim, rows, trans)

    @property
    def is_linear(self) -> bool:
        return self.translation is None or self.translation.bits == 0

    @cached_property
    def row_bits(self) -> tuple[int, ...]:
        return tuple(r.bits for r in self.rows)

    @cached_property
    def column_bits(self) -> tuple[int, ...]:
        """column_bits[j] is the packed image of the j-th standard basis vector."""
        return tuple(_rows_to_cols(self.row_bits, self.in_dim))

    def apply_bits(self, xbits: int) -> int:
        """Apply to a packed input, returning packed output bits."""
        out = 0
        for i, row in enumerate(self.row_bits):
            out |= ((row & xbits).bit_count() & 1) << i
        if self.translation is not None:
            out ^= self.translation.bits
        return out

    def apply(self, x: GF2Vector) -> GF2Vector:
        if x.dim != self.in_dim:
            raise ValueError(f"input dim {x.dim} != in_dim {self.in_dim}")
        return GF2Vector(self.out_dim, self.apply_bits(x.bits))

    __call__ = apply

    def drop_translation(self) -> "LinearMap":
        """The linear part of this map."""
        if self.translation is None:
            return self
        return LinearMap(self.in_dim, self.out_dim, self.rows, None)


@dataclass(frozen=True)
class SubspaceBasis:
    """Linearly independent vectors spanning a subspace (possibly empty)."""

    ambient_dim: int
    basis: tuple[GF2Vector, ...]

    def __post_init__(self) -> None:
        if self.ambient_dim < 1:
            raise ValueError("ambient dimension must be >= 1")
        for v in self.basis:
            if v.dim != self.ambient_dim:
                raise ValueError(f"basis vector dim {v.dim} != ambient {self.ambient_dim}")
        if _rank_of_bits([v.bits for v in self.basis]) != len(self.basis):
            raise ValueError("basis vectors are not linearly independent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def span_bits(self) -> list[int]:
        """All packed vectors in the span, in subset-XOR order."""
        _check_guard(self.dim, "span enumeration")
        out = [0]
        for v in self.basis:
            out.extend(w ^ v.bits for w in list(out))
        return out

    def contains_bits(self, xbits: int) -> bool:
        vecs = [v.bits for v in self.basis]
        return _rank_of_bits(vecs + [xbits]) == len(self.basis)


# ---------------------------------------------------------------------------
# Row-bit helpers (rows are ints, bit j = column j)
# ---------------------------------------------------------------------------


def _rank_of_bits(rows: Sequence[int]) -> int:
    """Rank over GF(2) by elimination on packed rows."""
    pivots: list[int] = []
    for row in rows:
        for p in pivots:
            low = p & -p
            if row & low:
                row ^= p
        if row:
            pivots.append(row)
    return len(pivots)


def _rref_bits(rows: Sequence[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot column of each)."""
    work = list(rows)
    pivots: list[int] = []
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for r in range(len(work)):
            if r != rank and ((work[r] >> col) & 1):
                work[r] ^= work[rank]
        pivots.append(col)
        rank += 1
    return work[:rank], pivots


def _invert_rows(rows: Sequence[int], n: int) -> list[int]:
    """Inverse of an n x n matrix given as packed rows; raises if singular."""
    work = list(rows)
    inv = [1 << i for i in range(n)]
    rank = 0
    for col in range(n):
        pivot = None
        for r in range(rank, n):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            raise ValueError("matrix is singular over GF(2)")
        work[rank], work[pivot] = work[pivot], work[rank]
        inv[rank], inv[pivot] = inv[pivot], inv[rank]
        for r in range(n):
            if r != rank and ((work[r] >> col) & 1):
                work[r] ^= work[rank]
                inv[r] ^= inv[rank]
        rank += 1
    return inv


def _apply_rows(rows: Sequence[int], xbits: int) -> int:
    out = 0
    for i, row in enumerate(rows):
        out |= ((row & xbits).bit_count() & 1) << i
    return out


def _rows_to_cols(rows: Sequence[int], ncols: int) -> list[int]:
    cols = [0] * ncols
    for i, row in enumerate(rows):
        r = row
        while r:
            low = r & -r
            cols[low.bit_length() - 1] |= 1 << i
            r ^= low
    return cols


def _cols_to_rows(cols: Sequence[int], nrows: int) -> list[int]:
    return _rows_to_cols(cols, nrows)


def _xor_select(vectors: Sequence[int], mask: int) -> int:
    """XOR of vectors[i] for every bit i set in mask."""
    acc = 0
    while mask:
        low = mask & -mask
        acc ^= vectors[low.bit_length() - 1]
        mask ^= low
    return acc


# ---------------------------------------------------------------------------
# Map constructors and operations
# ---------------------------------------------------------------------------


def identity(dim: int) -> LinearMap:
    return LinearMap.from_row_bits(dim, [1 << i for i in range(dim)])


def zero_map(in_dim: int, out_dim: int) -> LinearMap:
    return LinearMap.from_row_bits(in_dim, [0] * out_dim)


def compose(outer: LinearMap, inner: LinearMap) -> LinearMap:
    """The map x -> outer(inner(x)); both maps must be linear."""
    if outer.in_dim != inner.out_dim:
        raise ValueError(
            f"cannot compose: outer takes {outer.in_dim} bits, inner gives {inner.out_dim}"
        )
    if not (outer.is_linear and inner.is_linear):
        raise ValueError("compose requires linear maps (no translation)")
    inner_rows = inner.row_bits
    rows = [_xor_select(inner_rows, orow) for orow in outer.row_bits]
    return LinearMap.from_row_bits(inner.in_dim, rows)


def rank(T: LinearMap) -> int:
    """Row rank over GF(2) via Gaussian elimination."""
    return _rank_of_bits(T.row_bits)


def kernel_basis(T: LinearMap) -> SubspaceBasis:
    """Basis of {x : T(x) = 0}; length is in_dim - rank(T)."""
    rref, pivots = _rref_bits(T.row_bits, T.in_dim)
    pivot_set = set(pivots)
    basis = []
    for free in range(T.in_dim):
        if free in pivot_set:
            continue
        v = 1 << free
        for r, pc in enumerate(pivots):
            if (rref[r] >> free) & 1:
                v |= 1 << pc
        basis.append(GF2Vector(T.in_dim, v))
    return SubspaceBasis(T.in_dim, tuple(basis))


def image_basis(T: LinearMap) -> SubspaceBasis:
    """Basis of the column span; length is rank(T)."""
    reduced, _ = _rref_bits(T.column_bits, T.out_dim)
    return SubspaceBasis(T.out_dim, tuple(GF2Vector(T.out_dim, v) for v in reduced))


def is_surjective(T: LinearMap) -> bool:
    return rank(T) == T.out_dim


def complement_basis(sub: SubspaceBasis) -> SubspaceBasis:
    """A direct-sum complement: independent of sub, together spanning everything.

    Built from standard basis vectors that are independent of the running
    span, so complement vectors are always unit vectors.
    """
    n = sub.ambient_dim
    echelon: list[int] = []

    def reduce(v: int) -> int:
        for w in echelon:
            low = w & -w
            if v & low:
                v ^= w
        return v

    for v in sub.basis:
        echelon.append(reduce(v.bits))
    complement = []
    for i in range(n):
        r = reduce(1 << i)
        if r:
            complement.append(GF2Vector(n, 1 << i))
            echelon.append(r)
    return SubspaceBasis(n, tuple(complement))


def byte_apply_tables(T: LinearMap) -> list[list[int]]:
    """Per-byte lookup tables: XOR of table[c][chunk c of x] applies the matrix."""
    cols = T.column_bits
    nchunks = (T.in_dim + 7) // 8
    tables = []
    for c in range(nchunks):
        base = 8 * c
        width = min(8, T.in_dim - base)
        tbl = [0] * (1 << width)
        for v in range(1, 1 << width):
            low = v & -v
            tbl[v] = tbl[v ^ low] ^ cols[base + low.bit_length() - 1]
        tables.append(tbl)
    return tables


def batch_apply_bits(T: LinearMap, xs: Iterable[int]) -> list[int]:
    """Apply T to many packed inputs using per-byte lookup tables.

    Agrees bit for bit with apply_bits; worthwhile once the input count
    clears a few hundred.
    """
    tables = byte_apply_tables(T)
    nchunks = len(tables)
    init = 0 if T.translation is None else T.translation.bits
    if nchunks == 1:
        t0 = tables[0]
        return [init ^ t0[x] for x in xs]
    if nchunks == 2:
        t0, t1 = tables
        return [init ^ t0[x & 255] ^ t1[x >> 8] for x in xs]
    out = []
    for x in xs:
        acc = init
        for c in range(nchunks):
            acc ^= tables[c][(x >> (8 * c)) & 255]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_uniform_linear(in_dim: int, out_dim: int, rng: random.Random) -> LinearMap:
    """Uniform over all 2^(in_dim*out_dim) matrices: every bit an independent coin."""
    if in_dim < 1 or out_dim < 1:
        raise ValueError("map dimensions must be >= 1")
    return LinearMap.from_row_bits(
        in_dim, [rng.getrandbits(in_dim) for _ in range(out_dim)]
    )


def sample_uniform_affine(in_dim: int, out_dim: int, rng: random.Random) -> LinearMap:
    """Uniform matrix plus an independent uniform translation vector."""
    base = sample_uniform_linear(in_dim, out_dim, rng)
    trans = GF2Vector(out_dim, rng.getrandbits(out_dim))
    return LinearMap(in_dim, out_dim, base.rows, trans)


def sample_surjective(in_dim: int, out_dim: int, rng: random.Random) -> LinearMap:
    """Uniform over surjective maps, by rejection.

    Acceptance probability is at least prod_{i>=1}(1 - 2^-i) > 0.288, so the
    expected number of draws is below 4 regardless of dimensions.
    """
    if in_dim < out_dim:
        raise ValueError(
            f"no surjective maps from {in_dim} bits onto {out_dim} bits"
        )
    while True:
        T = sample_uniform_linear(in_dim, out_dim, rng)
        if is_surjective(T):
            return T


# ---------------------------------------------------------------------------
# Factorization through an intermediate space
# ---------------------------------------------------------------------------


def _check_factor_args(T: LinearMap, T1: LinearMap) -> None:
    if not (T.is_linear and T1.is_linear):
        raise ValueError("factorization requires linear maps")
    if T1.out_dim != T.out_dim:
        raise ValueError(
            f"output dims differ: inner target {T.out_dim}, outer {T1.out_dim}"
        )
    if not T.in_dim >= T1.in_dim >= T1.out_dim:
        raise ValueError(
            "need in_dim >= intermediate dim >= out_dim "
            f"(got {T.in_dim}, {T1.in_dim}, {T1.out_dim})"
        )
    if not is_surjective(T1):
        raise ValueError("outer map must be surjective")


def sample_factor_t0(T: LinearMap, T1: LinearMap, rng: random.Random) -> LinearMap:
    """Sample a factor map T0 with T1 after T0 equal to T.

    Construction: fix direct-sum complements of both kernels; the complement
    part of x goes to the unique complement-side preimage of T(x) under T1,
    and the kernel part goes through a uniformly random map from Ker(T) to
    Ker(T1).  Each of the 2^((f-b)*dim Ker(T)) kernel-to-kernel maps yields
    one canonical factor map, sampled uniformly.
    """
    _check_factor_args(T, T1)
    u, f, b = T.in_dim, T1.in_dim, T1.out_dim

    ker = kernel_basis(T)
    comp = complement_basis(ker)
    ker1 = kernel_basis(T1)
    comp1 = complement_basis(ker1)

    # Domain change of basis: kernel vectors first, complement after.
    full = [v.bits for v in ker.basis] + [v.bits for v in comp.basis]
    pinv = _invert_rows(_cols_to_rows(full, u), u)

    # T1 restricted to the complement of its kernel is a bijection onto the
    # output space; invert it on the complement coordinates.
    comp1_bits = [v.bits for v in comp1.basis]
    v_cols = [T1.apply_bits(c) for c in comp1_bits]
    vinv = _invert_rows(_cols_to_rows(v_cols, b), b)

    k_dim = ker.dim
    k1_dim = ker1.dim
    ker1_bits = [v.bits for v in ker1.basis]
    kmask = (1 << k_dim) - 1
    m_rows = [rng.getrandbits(k_dim) if k_dim else 0 for _ in range(k1_dim)]

    t_cols = T.column_bits
    t0_cols = []
    for j in range(u):
        k_coords = _apply_rows(pinv, 1 << j) & kmask
        through_kernel = _xor_select(ker1_bits, _apply_rows(m_rows, k_coords))
        comp_coords = _apply_rows(vinv, t_cols[j])
        q = _xor_select(comp1_bits, comp_coords)
        t0_cols.append(q ^ through_kernel)
    return LinearMap.from_column_bits(u, f, t0_cols)


def _iter_factor_rows(T: LinearMap, T1: LinearMap):
    """Yield the packed rows of every inner map whose composite with T1 is T."""
    u, f = T.in_dim, T1.in_dim
    _check_guard(u * f, "factorization count")
    mask = (1 << u) - 1
    t1_rows = T1.row_bits
    t_rows = T.row_bits
    for m in range(1 << (u * f)):
        cand_rows = [(m >> (i * u)) & mask for i in range(f)]
        if all(
            _xor_select(cand_rows, t1r) == t_rows[i]
            for i, t1r in enumerate(t1_rows)
        ):
            yield cand_rows


def count_factorizations(T: LinearMap, T1: LinearMap) -> int:
    """Count factor maps of T through T1 up to agreement on the kernel of T.

    Brute force over all 2^(in_dim*intermediate_dim) candidates, keeping one
    representative per kernel restriction.  Two factor maps with the same
    restriction to Ker(T) differ only by a map that vanishes on Ker(T), so
    this counts the kernel-to-kernel maps realized by the factor set: exactly
    2^((f-b)*dim Ker(T)) when the outer map is surjective.
    """
    _check_factor_args(T, T1)
    ker_bits = [v.bits for v in kernel_basis(T).basis]
    seen = set()
    for cand_rows in _iter_factor_rows(T, T1):
        seen.add(tuple(_apply_rows(cand_rows, v) for v in ker_bits))
    return len(seen)


def count_factor_maps(T: LinearMap, T1: LinearMap) -> int:
    """Raw exhaustive count of inner maps whose composite with T1 equals T.

    Exceeds count_factorizations by the constant factor 2^((f-b)*rank(T)):
    the off-kernel part of a factor map can absorb any map into Ker(T1).
    For surjective T1 the total is 2^((f-b)*in_dim), one independent kernel
    coset choice per matrix column.
    """
    _check_factor_args(T, T1)
    return sum(1 for _ in _iter_factor_rows(T, T1))
