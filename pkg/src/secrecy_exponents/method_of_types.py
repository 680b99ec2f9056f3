r"""Method-of-types machinery: n-types, joint n-types, and type-class counting.

An *n-type* on a k-symbol alphabet is an empirical distribution with
denominator n, stored here as integer counts summing to n.  A *joint n-type*
on X x Z is an integer count matrix summing to n.  Enumerators stream types
lazily in deterministic lexicographic order (row-major for joint types);
consumers must not assume random access.

Type-class sizes are handled in the log domain through ``math.lgamma``
(log-multinomial coefficients).  For n <= 64 this agrees with exact integer
counting to better than 1e-9 relative error, which is all the downstream
exponent arithmetic needs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .prob import Distribution

__all__ = [
    "ENUMERATION_CAP",
    "EnumerationBudgetError",
    "NType",
    "JointNType",
    "enumerate_ntypes",
    "enumerate_joint_ntypes",
    "log_type_class_size",
    "quantize_to_ntype",
]

#: enumerations refusing to produce more candidates than this
ENUMERATION_CAP = 10**8


class EnumerationBudgetError(RuntimeError):
    """A type enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class NType:
    """Empirical distribution with denominator ``n``, stored as counts."""

    counts: tuple[int, ...]
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength n must be >= 1")
        if any(c < 0 or c != int(c) for c in self.counts):
            raise ValueError("counts must be nonnegative integers")
        if sum(self.counts) != self.n:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected n={self.n}")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    def distribution(self) -> Distribution:
        return Distribution(np.asarray(self.counts, dtype=np.float64) / self.n)


@dataclass(frozen=True)
class JointNType:
    """Joint empirical distribution on X x Z with denominator ``n``."""

    counts: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        object.__setattr__(
            self, "counts", tuple(tuple(int(c) for c in row) for row in self.counts)
        )
        if self.n < 1:
            raise ValueError("blocklength n must be >= 1")
        flat = [c for row in self.counts for c in row]
        if any(c < 0 for c in flat):
            raise ValueError("counts must be nonnegative")
        if sum(flat) != self.n:
            raise ValueError(f"counts sum to {sum(flat)}, expected n={self.n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.counts), len(self.counts[0]))

    def x_marginal(self) -> NType:
        return NType(tuple(sum(row) for row in self.counts), self.n)

    def z_marginal(self) -> NType:
        nz = len(self.counts[0])
        return NType(
            tuple(sum(row[z] for row in self.counts) for z in range(nz)), self.n
        )

    def joint_distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.n


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``,
    in lexicographically increasing order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_ntypes(alphabet_size: int, n: int) -> Iterator[NType]:
    """Stream all n-types on a ``alphabet_size``-symbol alphabet.

    Exactly C(n + k - 1, k - 1) types are produced, lexicographically.
    Raises :class:`EnumerationBudgetError` if that count exceeds the cap.
    """
    if alphabet_size < 1 or n < 1:
        raise ValueError("alphabet_size and n must be >= 1")
    count = math.comb(n + alphabet_size - 1, alphabet_size - 1)
    if count > ENUMERATION_CAP:
        raise EnumerationBudgetError(
            f"{count} types on k={alphabet_size}, n={n} exceeds cap {ENUMERATION_CAP}"
        )
    for c in _compositions(n, alphabet_size):
        yield NType(c, n)


def _joint_tables(
    row_budgets: Sequence[int] | None,
    col_budgets: list[int],
    nx: int,
    nz: int,
    total: int,
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Recursive row-by-row fill of count matrices.

    ``row_budgets`` fixes every row sum when given; otherwise rows split the
    remaining total freely.  ``col_budgets`` carries remaining column
    capacity (n per column when the z-marginal is unconstrained).
    """

    def fill_row(x: int, remaining: int, cols: list[int], prefix):
        if x == nx:
            # remaining == 0 forces every column to hit its budget exactly
            # whenever the budgets themselves sum to the grand total
            if remaining == 0:
                yield tuple(prefix)
            return
        row_sum_options = (
            [row_budgets[x]] if row_budgets is not None else range(remaining + 1)
        )
        for s in row_sum_options:
            if s > remaining:
                continue
            # enumerate this row subject to column capacities
            for row in _row_fill(s, cols, nz):
                new_cols = [cols[z] - row[z] for z in range(nz)]
                yield from fill_row(x + 1, remaining - s, new_cols, prefix + [row])

    def _row_fill(s: int, cols: list[int], width: int) -> Iterator[tuple[int, ...]]:
        if width == 1:
            if s <= cols[0]:
                yield (s,)
            return
        for first in range(min(s, cols[0]) + 1):
            for rest in _row_fill(s - first, cols[1:], width - 1):
                yield (first,) + rest

    yield from fill_row(0, total, list(col_budgets), [])


def enumerate_joint_ntypes(
    nx: int,
    nz: int,
    n: int,
    fixed_x_marginal: NType | None = None,
    fixed_z_marginal: NType | None = None,
) -> Iterator[JointNType]:
    """Stream joint n-types on an nx-by-nz alphabet, optionally with fixed marginals.

    The order is deterministic (row-major lexicographic).  An infeasible
    marginal pair (sums that disagree) yields an empty stream with a warning.
    """
    if nx < 1 or nz < 1 or n < 1:
        raise ValueError("alphabet sizes and n must be >= 1")
    if fixed_x_marginal is not None:
        if fixed_x_marginal.alphabet_size != nx or fixed_x_marginal.n != n:
            raise ValueError("fixed_x_marginal is not an n-type on the input alphabet")
    if fixed_z_marginal is not None:
        if fixed_z_marginal.alphabet_size != nz or fixed_z_marginal.n != n:
            raise ValueError("fixed_z_marginal is not an n-type on the output alphabet")
    if (
        fixed_x_marginal is not None
        and fixed_z_marginal is not None
        and sum(fixed_x_marginal.counts) != sum(fixed_z_marginal.counts)
    ):
        warnings.warn("infeasible marginal pair: sums differ; empty enumeration")
        return

    # cap check on an upper bound of the stream length
    if fixed_x_marginal is None and fixed_z_marginal is None:
        bound = math.comb(n + nx * nz - 1, nx * nz - 1)
    elif fixed_x_marginal is not None:
        bound = 1
        for c in fixed_x_marginal.counts:
            bound *= math.comb(c + nz - 1, nz - 1)
    else:
        bound = 1
        for c in fixed_z_marginal.counts:
            bound *= math.comb(c + nx - 1, nx - 1)
    if bound > ENUMERATION_CAP:
        raise EnumerationBudgetError(
            f"joint type enumeration bound {bound} exceeds cap {ENUMERATION_CAP}"
        )

    row_budgets = fixed_x_marginal.counts if fixed_x_marginal is not None else None
    col_budgets = (
        list(fixed_z_marginal.counts) if fixed_z_marginal is not None else [n] * nz
    )
    for table in _joint_tables(row_budgets, col_budgets, nx, nz, n):
        yield JointNType(table, n)


def log_type_class_size(t: NType | JointNType) -> float:
    """Natural log of |T_t|, the number of sequences (or pairs) of type ``t``.

    Computed as a log-multinomial via lgamma; satisfies the standard bounds
    (n+1)^{-k} e^{n H} <= |T_t| <= e^{n H}.
    """
    if isinstance(t, NType):
        counts = t.counts
    else:
        counts = tuple(c for row in t.counts for c in row)
    val = math.lgamma(t.n + 1)
    for c in counts:
        val -= math.lgamma(c + 1)
    return val


def quantize_to_ntype(P: Distribution, n: int) -> NType:
    """Largest-remainder rounding of nP to an n-type, preserving support.

    Every symbol with positive mass keeps a count of at least one (feasible
    whenever ``n`` is at least the support size; otherwise an error is
    raised).  When a zero-rounded support symbol must be bumped to one, the
    donated count comes from the currently most over-allocated symbol, which
    keeps each per-symbol error below 1/n whenever such a donor exists.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    support = P.support()
    if n < support.size:
        raise ValueError(
            f"cannot preserve a support of size {support.size} with n={n}"
        )
    target = P.masses * n
    counts = np.floor(target).astype(int)
    remainder = n - int(counts.sum())
    # distribute leftovers by largest fractional part, lowest index first on ties
    fracs = target - counts
    order = np.lexsort((np.arange(P.size), -fracs))
    for i in order[:remainder]:
        counts[i] += 1
    # support preservation
    for x in support:
        if counts[x] == 0:
            margin = counts - target
            donors = np.flatnonzero(counts >= 2)
            if donors.size == 0:
                raise ValueError("no donor available to preserve support")
            over = donors[margin[donors] > 0]
            pool = over if over.size else donors
            donor = pool[np.argmax(margin[pool])]
            counts[donor] -= 1
            counts[x] = 1
    return NType(tuple(int(c) for c in counts), n)
