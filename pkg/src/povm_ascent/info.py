"""Mutual information, its gradient operators, and the Holevo bound (all in bits)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DimensionMismatch, InvalidEnsemble
from .linalg import hermitian_part, von_neumann_entropy
from .model import Ensemble, ProbTable, validate_ensemble

LN2 = np.log(2.0)

# Probabilities below this are clamped inside the gradient's logarithm so a
# vanishing outcome exerts a bounded pull.
GRADIENT_PROB_FLOOR = 1e-15
WEIGHT_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class GradientSet:
    """Hermitian gradient operators R_k, one per outcome, shape ``(K, N, N)``."""

    rks: np.ndarray

    @property
    def num_outcomes(self) -> int:
        return self.rks.shape[0]

    def max_norm(self) -> float:
        if self.rks.size == 0:
            return 0.0
        return float(np.linalg.norm(self.rks, ord=2, axis=(1, 2)).max())


def mutual_information(t: ProbTable) -> float:
    """Sum over p_jk > 0 of p_jk log2(p_jk / (p_j. p_.k))."""
    denom = np.outer(t.row_marginals, t.col_marginals)
    ratio = np.divide(t.joint, denom, out=np.ones_like(t.joint), where=t.joint > 0)
    return float(np.sum(xlogy(t.joint, ratio)) / LN2)


def gradient_operators(e: Ensemble, t: ProbTable) -> GradientSet:
    """R_k = sum_j rho_j log2(p_jk / (p_j. p_.k)) with clamped logarithms.

    Entries with ``p_jk <= 1e-15`` use ``1e-15`` in the numerator. The
    denominator ``p_j. p_.k`` is floored at ``1e-15`` as well: without it a
    null outcome (``p_.k = 0``) would divide by zero. With both clamps such
    an outcome gets ``R_k = 0``.
    """
    if t.joint.shape[0] != e.num_ops:
        raise DimensionMismatch(
            f"Table has {t.joint.shape[0]} rows but the ensemble has {e.num_ops} operators"
        )
    numer = np.maximum(t.joint, GRADIENT_PROB_FLOOR)
    denom = np.maximum(np.outer(t.row_marginals, t.col_marginals), GRADIENT_PROB_FLOOR)
    coeffs = np.log2(numer / denom)
    rks = np.einsum("jk,jab->kab", coeffs, e.stacked)
    return GradientSet(rks=hermitian_part(rks))


def binary_entropy(x: float) -> float:
    """h2(x) in bits."""
    p = np.array([x, 1.0 - x], dtype=np.float64)
    return float(-np.sum(xlogy(p, p)) / LN2)


def holevo_bound(e: Ensemble) -> float:
    """S(sum_j rho_j) - sum_j w_j S(rho_j / w_j), in bits.

    Raises:
        InvalidEnsemble: if the ensemble fails validation.
    """
    report = validate_ensemble(e)
    if not report.is_valid:
        raise InvalidEnsemble(report)
    chi = von_neumann_entropy(e.average_state)
    for op, w in zip(e.ops, e.weights):
        if w <= WEIGHT_FLOOR:
            continue
        chi -= w * von_neumann_entropy(op / w)
    return float(chi)
