"""Random-coding ensembles: how codewords of length n are drawn.

Two codeword laws are supported, both depending on a sequence only through
its type:

- i.i.d.: symbols drawn independently from a fixed input distribution;
- constant-composition: codewords drawn uniformly from one type class.

The helpers here give exact log-probabilities of whole type classes and the
per-codeword joint-type success probabilities used by the finite-blocklength
sums (a single random codeword lands in the joint type class of Q with a
fixed output sequence with probability
|T_Q| / (|T_{Q_Z}| |T_{Q_X}|) * P(T_{Q_X}), and zero unless the output
marginal of Q matches the sequence type).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .method_of_types import JointNType, NType, log_type_class_size, quantize_to_ntype
from .prob import Distribution

__all__ = [
    "IIDEnsemble",
    "ConstantCompositionEnsemble",
    "Ensemble",
    "ensemble_for_blocklength",
    "log_prob_x_type_class",
    "success_probability",
]


@dataclass(frozen=True)
class IIDEnsemble:
    """Codeword symbols drawn i.i.d. from ``input_dist``."""

    input_dist: Distribution
    label = "iid"

    @property
    def alphabet_size(self) -> int:
        return self.input_dist.size


@dataclass(frozen=True)
class ConstantCompositionEnsemble:
    """Codewords drawn uniformly from the type class of ``composition``."""

    composition: NType
    label = "cc"

    @property
    def alphabet_size(self) -> int:
        return self.composition.alphabet_size

    @property
    def n(self) -> int:
        return self.composition.n


Ensemble = IIDEnsemble | ConstantCompositionEnsemble


def ensemble_for_blocklength(
    kind: str, P: Distribution, n: int
) -> IIDEnsemble | ConstantCompositionEnsemble:
    """Build the ensemble for one blocklength from a target input distribution.

    For the constant-composition family the target is quantized to an n-type
    (support preserving), mirroring how a sequence of compositions converging
    to P is chosen.
    """
    if kind == "iid":
        return IIDEnsemble(P)
    if kind == "cc":
        return ConstantCompositionEnsemble(quantize_to_ntype(P, n))
    raise ValueError(f"unknown ensemble kind {kind!r}")


def log_prob_x_type_class(ensemble: Ensemble, x_type: NType) -> float:
    """ln P_{X^n}(T) for the type class T of ``x_type``; ``-inf`` for zero mass."""
    if isinstance(ensemble, IIDEnsemble):
        P = ensemble.input_dist.masses
        if x_type.alphabet_size != P.shape[0]:
            raise ValueError("x_type alphabet does not match the ensemble")
        val = log_type_class_size(x_type)
        for x, c in enumerate(x_type.counts):
            if c == 0:
                continue
            if P[x] <= 0:
                return -math.inf
            val += c * math.log(P[x])
        return val
    if x_type.n != ensemble.n or x_type.alphabet_size != ensemble.alphabet_size:
        raise ValueError("x_type does not match the composition's alphabet or n")
    return 0.0 if x_type.counts == ensemble.composition.counts else -math.inf


def success_probability(Q: JointNType, ensemble: Ensemble) -> float:
    """Probability that one codeword forms joint type Q with a fixed output
    sequence of type Q_Z.

    Computed in the log domain and exponentiated; lies in [0, 1].
    """
    qx = Q.x_marginal()
    lp = log_prob_x_type_class(ensemble, qx)
    if lp == -math.inf:
        return 0.0
    log_p = (
        log_type_class_size(Q)
        - log_type_class_size(Q.z_marginal())
        - log_type_class_size(qx)
        + lp
    )
    return float(min(1.0, math.exp(log_p)))
