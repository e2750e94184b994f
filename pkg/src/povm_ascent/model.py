"""Ensembles, POVMs, and the joint-probability table that connects them."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch
from .linalg import CMatrix, dagger, hermitian_eig, hermiticity_defect, sqrt_psd

TRACE_SUM_TOL = 1e-8
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A set of statistical operators; each trace is that letter's weight."""

    dim: int
    ops: tuple[CMatrix, ...]

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray]) -> "Ensemble":
        """Build an ensemble; the dimension is taken from the first matrix."""
        ops = tuple(_frozen(np.atleast_2d(m)) for m in matrices)
        dim = ops[0].shape[0] if ops else 0
        return cls(dim=dim, ops=ops)

    @property
    def num_ops(self) -> int:
        return len(self.ops)

    @cached_property
    def stacked(self) -> np.ndarray:
        """All operators as one ``(J, N, N)`` array."""
        for j, op in enumerate(self.ops):
            if op.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"Operator {j + 1} has shape {op.shape}, expected ({self.dim}, {self.dim})"
                )
        return np.stack(self.ops) if self.ops else np.zeros((0, self.dim, self.dim), complex)

    @property
    def weights(self) -> np.ndarray:
        return np.real(np.trace(self.stacked, axis1=1, axis2=2))

    @property
    def average_state(self) -> CMatrix:
        return self.stacked.sum(axis=0)


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement given by factors A_k with outcomes Pi_k = A_k^dagger A_k."""

    factors: np.ndarray  # (K, N, N)

    def __post_init__(self) -> None:
        factors = np.asarray(self.factors, dtype=np.complex128)
        if factors.ndim != 3 or factors.shape[1] != factors.shape[2]:
            raise DimensionMismatch(f"POVM factors must have shape (K, N, N), got {factors.shape}")
        object.__setattr__(self, "factors", _frozen(factors))

    @classmethod
    def from_elements(cls, elements: Sequence[np.ndarray]) -> "Povm":
        """Build a POVM from outcome operators, using PSD square roots as factors."""
        return cls(np.stack([sqrt_psd(np.asarray(pi, dtype=np.complex128)) for pi in elements]))

    @property
    def dim(self) -> int:
        return self.factors.shape[1]

    @property
    def num_outcomes(self) -> int:
        return self.factors.shape[0]

    @cached_property
    def elements(self) -> np.ndarray:
        """Outcome operators Pi_k, shape ``(K, N, N)``."""
        pis = dagger(self.factors) @ self.factors
        return 0.5 * (pis + dagger(pis))

    def completeness_residual(self) -> float:
        """Spectral norm of ``sum_k Pi_k - 1``."""
        total = self.elements.sum(axis=0) - np.eye(self.dim)
        return float(np.linalg.norm(total, ord=2))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(pi)[0] for pi in self.elements))


@dataclass(frozen=True, eq=False)
class ProbTable:
    """Joint probabilities p_jk = tr(rho_j Pi_k) and their marginals."""

    joint: np.ndarray  # (J, K)
    row_marginals: np.ndarray  # p_j.
    col_marginals: np.ndarray  # p_.k

    @classmethod
    def from_joint(cls, joint: np.ndarray) -> "ProbTable":
        joint = np.asarray(joint, dtype=np.float64)
        return cls(joint=joint, row_marginals=joint.sum(axis=1), col_marginals=joint.sum(axis=0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.joint.shape  # type: ignore[return-value]


@dataclass
class Violation:
    """One broken ensemble constraint."""

    kind: str  # dimension | hermiticity | positivity | trace-sum | empty
    index: int | None  # 1-based operator index, None for ensemble-wide checks
    magnitude: float
    message: str


@dataclass
class ValidationReport:
    """Every constraint an ensemble violates; empty means valid."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.is_valid

    def kinds(self) -> list[str]:
        return [v.kind for v in self.violations]


def validate_ensemble(e: Ensemble) -> ValidationReport:
    """Check dimensions, hermiticity, positivity and unit total weight."""
    report = ValidationReport()
    if not e.ops:
        report.violations.append(Violation("empty", None, 0.0, "ensemble has no operators"))
        return report

    total = 0.0
    for j, op in enumerate(e.ops, 1):
        if op.shape != (e.dim, e.dim):
            report.violations.append(
                Violation(
                    "dimension",
                    j,
                    float(max(op.shape) - e.dim),
                    f"operator {j} has shape {op.shape}, expected ({e.dim}, {e.dim})",
                )
            )
            continue
        total += float(np.real(np.trace(op)))
        defect = hermiticity_defect(op)
        if defect > HERMITIAN_TOL:
            report.violations.append(
                Violation("hermiticity", j, defect, f"operator {j} is not hermitian "
                          f"(max |rho - rho^dagger| = {defect:.3e})")
            )
            continue
        lowest = float(hermitian_eig(op)[0][0])
        if lowest < -PSD_TOL:
            report.violations.append(
                Violation("positivity", j, lowest,
                          f"operator {j} has negative eigenvalue {lowest:.6g}")
            )

    if abs(total - 1.0) > TRACE_SUM_TOL:
        report.violations.append(
            Violation(
                "trace-sum",
                None,
                total,
                f"trace sum = {total!r}; the traces are the statistical weights, "
                "which must add to unity",
            )
        )
    return report


def probability_table(e: Ensemble, m: Povm) -> ProbTable:
    """Joint table ``Re tr(rho_j Pi_k)`` clamped to [0, 1], with marginals."""
    if e.dim != m.dim:
        raise DimensionMismatch(f"Ensemble dimension {e.dim} != POVM dimension {m.dim}")
    joint = np.einsum("jab,kba->jk", e.stacked, m.elements).real
    joint = np.clip(joint, 0.0, 1.0)
    return ProbTable.from_joint(joint)
