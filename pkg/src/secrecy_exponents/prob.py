r"""Exact probability and information primitives on finite alphabets.

Everything downstream (exponent solvers, type enumeration, codebook
simulation) speaks the vocabulary defined here:

- ``Distribution``: a probability mass function on a finite alphabet.
- ``Channel``: a stochastic matrix, one output distribution per input symbol.
- ``JointDistribution``: a pmf on a product alphabet X x Z.

All information quantities are returned in **nats** (natural log).  The
conventions below are applied uniformly:

- ``0 * log 0 = 0`` everywhere,
- a divergence D(P||Q) with P not absolutely continuous w.r.t. Q is the
  float ``+inf`` (a legitimate value, never an exception),
- the weighted log-likelihood sum (``expected_log_likelihood``) is ``-inf``
  when positive mass hits a zero of the reference channel.

Inputs must already be normalized: masses are validated to sum to one
within ``1e-12`` and are never renormalized silently.  Values are immutable
after construction (arrays are copied and marked read-only), so they are
safe to share across threads; every function in this module is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PROB_ATOL",
    "AlphabetMismatchError",
    "Distribution",
    "Channel",
    "JointDistribution",
    "entropy",
    "kl_divergence",
    "conditional_divergence",
    "mutual_information",
    "output_marginal",
    "expected_log_likelihood",
    "mean_information_density",
    "compose_prefix",
]

#: absolute tolerance for "masses sum to one" validation
PROB_ATOL = 1e-12


class AlphabetMismatchError(ValueError):
    """Operands are defined on incompatible alphabets."""


def _as_readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _check_masses(masses: np.ndarray, what: str) -> None:
    if masses.size == 0:
        raise ValueError(f"{what}: empty alphabet")
    if not np.all(np.isfinite(masses)):
        raise ValueError(f"{what}: non-finite mass")
    if np.any(masses < 0):
        raise ValueError(f"{what}: negative mass {masses.min()!r}")
    total = float(masses.sum())
    if abs(total - 1.0) > PROB_ATOL:
        raise ValueError(
            f"{what}: masses sum to {total!r}, expected 1 within {PROB_ATOL}"
            " (inputs are not renormalized)"
        )


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability mass function on a finite alphabet.

    Degenerate single-symbol alphabets are accepted (entropy 0).
    """

    masses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "masses", _as_readonly(self.masses))
        if self.masses.ndim != 1:
            raise ValueError("Distribution masses must be a 1-D array")
        _check_masses(self.masses, "Distribution")

    @property
    def size(self) -> int:
        return self.masses.shape[0]

    def support(self) -> np.ndarray:
        """Indices of symbols with positive mass."""
        return np.flatnonzero(self.masses > 0)

    @staticmethod
    def uniform(k: int) -> "Distribution":
        return Distribution(np.full(k, 1.0 / k))

    @staticmethod
    def point_mass(k: int, at: int) -> "Distribution":
        m = np.zeros(k)
        m[at] = 1.0
        return Distribution(m)


@dataclass(frozen=True, eq=False)
class Channel:
    """Stochastic matrix; row ``x`` is the output distribution given input ``x``.

    Row validity is enforced at construction.  Output coverage (every output
    symbol reachable from some input) is an assumption on the channel under
    study, not on arbitrary conditionals such as reconstructed minimizers;
    solvers check it at their entry points via :meth:`require_output_coverage`.
    """

    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", _as_readonly(self.rows))
        if self.rows.ndim != 2:
            raise ValueError("Channel rows must form a 2-D matrix")
        for x in range(self.rows.shape[0]):
            _check_masses(self.rows[x], f"Channel row {x}")

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def row(self, x: int) -> Distribution:
        return Distribution(self.rows[x])

    def require_output_coverage(self) -> None:
        """Raise unless every output symbol is reachable from some input."""
        dead = np.flatnonzero(self.rows.max(axis=0) <= 0)
        if dead.size:
            raise ValueError(
                f"channel has unreachable output symbols {dead.tolist()};"
                " drop them from the alphabet"
            )

    @staticmethod
    def identity(k: int) -> "Channel":
        return Channel(np.eye(k))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Pmf on a product alphabet, indexed ``masses[x, z]``.

    Marginals are exact sums of the stored masses; nothing is renormalized.
    """

    masses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "masses", _as_readonly(self.masses))
        if self.masses.ndim != 2:
            raise ValueError("JointDistribution masses must be a 2-D array")
        flat = self.masses.reshape(-1)
        _check_masses(flat, "JointDistribution")

    @property
    def shape(self) -> tuple[int, int]:
        return self.masses.shape

    def x_marginal(self) -> Distribution:
        return Distribution(self.masses.sum(axis=1))

    def z_marginal(self) -> Distribution:
        return Distribution(self.masses.sum(axis=0))

    @staticmethod
    def from_input_and_channel(P: Distribution, V: Channel) -> "JointDistribution":
        _check_compatible(P, V)
        return JointDistribution(P.masses[:, None] * V.rows)


def _check_compatible(P: Distribution, V: Channel) -> None:
    if P.size != V.input_size:
        raise AlphabetMismatchError(
            f"input distribution has {P.size} symbols, channel expects {V.input_size}"
        )


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise AlphabetMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------------------
# scalar information measures (array-level workers, public typed wrappers)
# ---------------------------------------------------------------------------


def _entropy_arr(p: np.ndarray) -> float:
    pos = p > 0
    return float(-(p[pos] * np.log(p[pos])).sum())


def _kl_arr(p: np.ndarray, q: np.ndarray) -> float:
    pos = p > 0
    if np.any(q[pos] <= 0):
        return math.inf
    val = float((p[pos] * np.log(p[pos] / q[pos])).sum())
    # guard against float-noise tiny negatives for near-identical inputs
    return 0.0 if -1e-12 < val < 0.0 else val


def entropy(P: Distribution) -> float:
    """H(P) = -sum p log p, in nats."""
    return _entropy_arr(P.masses)


def kl_divergence(P: Distribution, Q: Distribution) -> float:
    """D(P||Q) in nats; ``+inf`` iff P is not absolutely continuous w.r.t. Q."""
    _check_same_shape(P.masses, Q.masses, "kl_divergence")
    return _kl_arr(P.masses, Q.masses)


def conditional_divergence(V: Channel, W: Channel, P: Distribution) -> float:
    """D(V||W|P) = sum_x P(x) D(V(.|x)||W(.|x)); equals D(P x V || P x W)."""
    _check_same_shape(V.rows, W.rows, "conditional_divergence")
    _check_compatible(P, V)
    total = 0.0
    for x in P.support():
        d = _kl_arr(V.rows[x], W.rows[x])
        if d == math.inf:
            return math.inf
        total += float(P.masses[x]) * d
    return total


def mutual_information(P: Distribution, V: Channel) -> float:
    """I(P, V) in nats; zero iff the rows of V coincide on the support of P."""
    _check_compatible(P, V)
    pz = P.masses @ V.rows
    total = 0.0
    for x in P.support():
        row = V.rows[x]
        pos = row > 0
        total += float(P.masses[x]) * float(
            (row[pos] * np.log(row[pos] / pz[pos])).sum()
        )
    return 0.0 if -1e-12 < total < 0.0 else total


def output_marginal(P: Distribution, V: Channel) -> Distribution:
    """The output distribution of V under input P (P o V); linear in P."""
    _check_compatible(P, V)
    return Distribution(P.masses @ V.rows)


def expected_log_likelihood(V: Channel, W: Channel, P: Distribution) -> float:
    """sum_{x,z} P(x) V(z|x) log W(z|x), with 0 log 0 = 0.

    Returns ``-inf`` iff some (x, z) carries positive P(x)V(z|x) mass where
    W(z|x) = 0.  This is the per-letter exponent of the n-fold channel
    likelihood of an output sequence with conditional type V.
    """
    _check_same_shape(V.rows, W.rows, "expected_log_likelihood")
    _check_compatible(P, V)
    joint = P.masses[:, None] * V.rows
    pos = joint > 0
    if np.any(W.rows[pos] <= 0):
        return -math.inf
    return float((joint[pos] * np.log(W.rows[pos])).sum())


def mean_information_density(Q: JointDistribution, ref: JointDistribution) -> float:
    """Expectation under Q of the information density of a reference joint.

    Computes sum_{x,z} Q(x,z) log[ ref(x,z) / (ref_X(x) ref_Z(z)) ].  When
    ``Q == ref`` this is the mutual information of ``ref``.  Returns ``-inf``
    if Q puts mass where ``ref`` has none (the log argument vanishes there).
    """
    _check_same_shape(Q.masses, ref.masses, "mean_information_density")
    q = Q.masses
    r = ref.masses
    rx = r.sum(axis=1)
    rz = r.sum(axis=0)
    pos = q > 0
    if np.any(r[pos] <= 0):
        return -math.inf
    dens = np.log(r[pos]) - np.log(rx[:, None] * rz[None, :])[pos]
    return float((q[pos] * dens).sum())


def compose_prefix(Pxu: Channel, W: Channel) -> Channel:
    """Compose an auxiliary prefix channel U -> X with W: X -> Z.

    Row u of the result is sum_x Pxu(x|u) W(.|x), the effective channel seen
    from the auxiliary input alphabet.
    """
    if Pxu.output_size != W.input_size:
        raise AlphabetMismatchError(
            f"prefix output alphabet ({Pxu.output_size}) must match"
            f" channel input alphabet ({W.input_size})"
        )
    return Channel(Pxu.rows @ W.rows)
