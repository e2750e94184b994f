"""Built-in ensembles with known accessible information, plus random ensembles for testing."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .info import binary_entropy
from .linalg import random_gaussian_matrix
from .model import Ensemble


def _projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=np.complex128)
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def pure_state_ensemble(kets: list[np.ndarray], weights: list[float] | None = None) -> Ensemble:
    """Weighted pure states; equal weights by default."""
    if weights is None:
        weights = [1.0 / len(kets)] * len(kets)
    return Ensemble.from_matrices([w * _projector(k) for k, w in zip(kets, weights)])


def orthogonal_pair() -> Ensemble:
    return Ensemble.from_matrices([np.diag([0.5, 0.0]), np.diag([0.0, 0.5])])


def two_pure_states(alpha: float = math.pi / 4) -> Ensemble:
    """|0> and cos(alpha)|0> + sin(alpha)|1>, weight 1/2 each."""
    kets = [np.array([1.0, 0.0]), np.array([math.cos(alpha), math.sin(alpha)])]
    return pure_state_ensemble(kets)


def two_pure_states_ai(alpha: float) -> float:
    """Accessible information of :func:`two_pure_states`: 1 - h2((1 + sin alpha) / 2)."""
    return 1.0 - binary_entropy((1.0 + math.sin(alpha)) / 2.0)


def trine_states() -> Ensemble:
    """Three equiprobable real qubit states 120 degrees apart on the Bloch sphere."""
    kets = [np.array([math.cos(t), math.sin(t)]) for t in (0.0, math.pi / 3, 2 * math.pi / 3)]
    return pure_state_ensemble(kets)


def tetrad_states() -> Ensemble:
    """Four equiprobable qubit states forming a regular tetrahedron (SIC states)."""
    a = math.sqrt(1.0 / 3.0)
    b = math.sqrt(2.0 / 3.0)
    kets = [np.array([1.0, 0.0])] + [
        np.array([a, b * np.exp(2j * math.pi * m / 3)]) for m in range(3)
    ]
    return pure_state_ensemble(kets)


def bb84_states() -> Ensemble:
    """The four BB84 states |0>, |1>, |+>, |->, equiprobable."""
    s = 1.0 / math.sqrt(2.0)
    kets = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([s, s]), np.array([s, -s])]
    return pure_state_ensemble(kets)


def random_ensemble(
    dim: int,
    count: int,
    rng: np.random.Generator,
    rank: int | None = None,
) -> Ensemble:
    """Random mixed states G G^dagger with Dirichlet weights.

    ``rank`` limits each state's rank (1 gives pure states); default full rank.
    """
    rank = dim if rank is None else rank
    weights = rng.dirichlet(np.ones(count))
    ops = []
    for w in weights:
        g = random_gaussian_matrix(dim, rng)[:, :rank]
        rho = g @ g.conj().T
        ops.append(w * rho / np.real(np.trace(rho)))
    return Ensemble.from_matrices(ops)


@dataclass(frozen=True)
class NamedEnsemble:
    """A built-in ensemble with its analytic accessible information, if known."""

    name: str
    description: str
    build: Callable[[], Ensemble]
    accessible_information: float | None = None
    k_init: int | None = None


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------
ENSEMBLES: dict[str, NamedEnsemble] = {
    "orthogonal-pair": NamedEnsemble(
        name="orthogonal-pair",
        description="Two orthogonal qubit states, equal weights",
        build=orthogonal_pair,
        accessible_information=1.0,
        k_init=2,
    ),
    "two-pure": NamedEnsemble(
        name="two-pure",
        description="|0> and (|0> + |1>)/sqrt(2), equal weights",
        build=two_pure_states,
        accessible_information=two_pure_states_ai(math.pi / 4),
        k_init=2,
    ),
    "trine": NamedEnsemble(
        name="trine",
        description="Three qubit states at 120 degrees, equal weights",
        build=trine_states,
        accessible_information=math.log2(3.0) - 1.0,
        k_init=4,
    ),
    "tetrad": NamedEnsemble(
        name="tetrad",
        description="Four qubit states on a regular tetrahedron, equal weights",
        build=tetrad_states,
        k_init=4,
    ),
    "bb84": NamedEnsemble(
        name="bb84",
        description="The four BB84 states, equal weights",
        build=bb84_states,
        k_init=4,
    ),
}


def get_ensemble(name: str) -> NamedEnsemble:
    """Get a built-in ensemble by name. Raises KeyError if not found."""
    if name not in ENSEMBLES:
        available = ", ".join(ENSEMBLES.keys())
        raise KeyError(f"Unknown ensemble '{name}'. Available: {available}")
    return ENSEMBLES[name]
