"""Shrink a converged POVM to the fewest outcomes that carry the same information."""

from __future__ import annotations

import logging

import numpy as np

from .errors import EmptyPovm
from .linalg import dagger, inv_sqrt_psd, sqrt_psd
from .model import Ensemble, Povm, ProbTable, probability_table

logger = logging.getLogger(__name__)

DEFAULT_MERGE_TOL = 1e-8
DEFAULT_NULL_TOL = 1e-10


def _equivalent(joint: np.ndarray, k1: int, k2: int, rel_tol: float) -> bool:
    """p_jk1 p_.k2 == p_.k1 p_jk2 for every j, relative to p_.k1 p_.k2."""
    c1, c2 = joint[:, k1], joint[:, k2]
    q1, q2 = c1.sum(), c2.sum()
    return bool(np.all(np.abs(c1 * q2 - q1 * c2) <= rel_tol * q1 * q2))


def _first_equivalent_pair(joint: np.ndarray, rel_tol: float) -> tuple[int, int] | None:
    num = joint.shape[1]
    for k1 in range(num):
        for k2 in range(k1 + 1, num):
            if _equivalent(joint, k1, k2, rel_tol):
                return k1, k2
    return None


def merge_equivalent_outcomes(
    p: Povm, t: ProbTable, rel_tol: float = DEFAULT_MERGE_TOL
) -> Povm:
    """Replace outcome pairs with proportional probability columns by their sum.

    Pairs are merged lowest index first, repeatedly, until none qualifies.
    The merged outcome's factor is the PSD square root of Pi_k1 + Pi_k2.
    """
    factors = list(p.factors)
    elements = list(p.elements)
    joint = np.array(t.joint, dtype=np.float64, copy=True)

    while (pair := _first_equivalent_pair(joint, rel_tol)) is not None:
        k1, k2 = pair
        merged = elements[k1] + elements[k2]
        elements[k1] = merged
        factors[k1] = sqrt_psd(merged)
        joint[:, k1] += joint[:, k2]
        del elements[k2], factors[k2]
        joint = np.delete(joint, k2, axis=1)
        logger.debug("Merged outcome %d into %d, %d outcomes left", k2 + 1, k1 + 1, len(factors))

    if len(factors) == p.num_outcomes:
        return p
    return Povm(np.stack(factors))


def drop_null_outcomes(p: Povm, abs_tol: float = DEFAULT_NULL_TOL) -> Povm:
    """Remove outcomes with tr Pi_k <= abs_tol and restore completeness.

    Raises:
        EmptyPovm: if every outcome is null.
    """
    traces = np.real(np.trace(p.elements, axis1=1, axis2=2))
    keep = traces > abs_tol
    if not keep.any():
        raise EmptyPovm(f"All {p.num_outcomes} outcomes have trace <= {abs_tol}")
    if keep.all():
        return p
    factors = p.factors[keep]
    s = np.sum(dagger(factors) @ factors, axis=0)
    logger.debug("Dropped %d null outcome(s)", int((~keep).sum()))
    return Povm(factors @ inv_sqrt_psd(s))


def reduce_povm(
    p: Povm,
    e: Ensemble,
    rel_tol: float = DEFAULT_MERGE_TOL,
    abs_tol: float = DEFAULT_NULL_TOL,
) -> Povm:
    """Drop null outcomes, then merge equivalent ones to a fixpoint."""
    kept = drop_null_outcomes(p, abs_tol)
    return merge_equivalent_outcomes(kept, probability_table(e, kept), rel_tol)
