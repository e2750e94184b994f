"""Iterative POVM ascent: steepest ascent with conjugate gradients and golden-section search.

One iteration:

1. Build the probability table and its mutual information.
2. Compute the gradient operators R_k and the factor-space gradient
   Gamma_k = A_k R_k.
3. Draw u from the run's generator; use the plain gradient when
   ``u < steepest_prob``, else a Polak-Ribiere conjugate direction.
4. Normalize the direction to unit largest spectral norm and maximize the
   mutual information of ``apply_step`` over eps in ``[0, bracket_max]``.
5. Stop when the gain passes the relative tolerance test.

Random draws per restart, in order: the K initial factors (retries draw
fresh factors), then one uniform number per iteration.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, InvalidEnsemble, RankDeficient
from .info import GradientSet, gradient_operators, mutual_information
from .linalg import (
    FLOOR_FACTOR,
    dagger,
    make_rng,
    random_gaussian_matrix,
)
from .model import Ensemble, Povm, ProbTable, probability_table, validate_ensemble
from .reduce import DEFAULT_MERGE_TOL, DEFAULT_NULL_TOL, reduce_povm

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
MAX_INIT_ATTEMPTS = 5
# Gradients below this are round-off; the POVM is stationary.
STATIONARY_TOL = 1e-12

ProgressCallback = Callable[[int, int, float], None]


@dataclass(frozen=True)
class LineSearchConfig:
    """Golden-section settings; the bracket is ``[0, bracket_max]``."""

    bracket_max: float = 1.0
    shrink_tol: float = 1e-6
    max_evals: int = 100

    def __post_init__(self) -> None:
        if not self.bracket_max > 0:
            raise ConfigError(f"bracket_max must be > 0, got {self.bracket_max}")
        if not self.shrink_tol > 0:
            raise ConfigError(f"shrink_tol must be > 0, got {self.shrink_tol}")
        if self.max_evals < 4:
            raise ConfigError(f"max_evals must be >= 4, got {self.max_evals}")


@dataclass(frozen=True)
class OptimizerConfig:
    """Parameters of an optimization run."""

    steepest_prob: float = 0.02
    tolerance: float = 1e-9
    seed: int = 0
    max_iterations: int = 10000
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    restarts: int = 1
    merge_tol: float = DEFAULT_MERGE_TOL
    null_tol: float = DEFAULT_NULL_TOL

    def __post_init__(self) -> None:
        if not 0.0 <= self.steepest_prob <= 1.0:
            raise ConfigError(f"steepest_prob must be in [0, 1], got {self.steepest_prob}")
        if self.tolerance < 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        data = dict(data)
        line_search = LineSearchConfig(**data.pop("line_search", {}))
        return cls(line_search=line_search, **data)


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Factor-space search direction D_k, shape ``(K, N, N)``."""

    directions: np.ndarray
    steepest: bool = True
    beta: float = 0.0

    def max_norm(self) -> float:
        """Largest spectral norm over the outcomes."""
        if self.directions.size == 0:
            return 0.0
        return float(np.linalg.norm(self.directions, ord=2, axis=(1, 2)).max())

    def scaled(self, factor: float) -> "DirectionSet":
        return DirectionSet(self.directions * factor, self.steepest, self.beta)


@dataclass(frozen=True, eq=False)
class ConjugateMemory:
    """Previous gradient and direction for the Polak-Ribiere update."""

    gradient: np.ndarray
    direction: np.ndarray


@dataclass
class RunReport:
    """Outcome of :func:`run`; POVMs and trace come from the best restart."""

    mi_trace: list[float]
    final_povm: Povm
    reduced_povm: Povm
    iterations: int
    converged: bool
    config_echo: OptimizerConfig
    k_init: int
    initial_mi: float = 0.0
    best_restart: int = 0
    restart_mis: list[float] = field(default_factory=list)
    steepest_steps: int = 0

    @property
    def accessible_information(self) -> float:
        return self.mi_trace[-1] if self.mi_trace else self.initial_mi

    @property
    def seed(self) -> int:
        """Seed of the restart that produced the reported POVM."""
        return self.config_echo.seed + self.best_restart


@dataclass
class _Trajectory:
    mi_trace: list[float]
    povm: Povm
    converged: bool
    initial_mi: float
    steepest_steps: int

    @property
    def final_mi(self) -> float:
        return self.mi_trace[-1] if self.mi_trace else self.initial_mi


def _inner(x: np.ndarray, y: np.ndarray) -> float:
    """sum_k Re tr(X_k^dagger Y_k)."""
    return float(np.real(np.vdot(x, y)))


def _completion_inverse(s: np.ndarray) -> np.ndarray:
    """S^(-1/2) from a single eigendecomposition of the completeness operator.

    S is hermitian by construction; ``eigh`` reads only its lower triangle.

    Raises:
        RankDeficient: if the smallest eigenvalue is at or below 1e-12 of the largest.
    """
    eigenvalues, vecs = np.linalg.eigh(s)
    if eigenvalues[0] <= FLOOR_FACTOR * max(float(eigenvalues[-1]), 0.0):
        raise RankDeficient(f"Completeness operator is singular (smallest eigenvalue "
                            f"{eigenvalues[0]:.3e})")
    return (vecs / np.sqrt(eigenvalues)) @ dagger(vecs)


def _complete(b: np.ndarray) -> Povm:
    """Renormalize raw factors B_k to A_k = B_k S^(-1/2), S = sum_k B_k^dagger B_k."""
    return Povm(b @ _completion_inverse(np.sum(dagger(b) @ b, axis=0)))


def init_random_povm(dim: int, k: int, rng: np.random.Generator) -> Povm:
    """Random complete POVM from K Gaussian factors.

    Raises:
        RankDeficient: if five draws in a row give a singular S.
    """
    if dim < 1 or k < 1:
        raise ValueError(f"dim and k must be >= 1, got dim={dim}, k={k}")
    for attempt in range(1, MAX_INIT_ATTEMPTS + 1):
        raw = np.stack([random_gaussian_matrix(dim, rng) for _ in range(k)])
        try:
            return _complete(raw)
        except RankDeficient:
            logger.debug("Singular random start (attempt %d/%d)", attempt, MAX_INIT_ATTEMPTS)
    raise RankDeficient(f"No invertible random start after {MAX_INIT_ATTEMPTS} attempts")


def ascent_direction(
    p: Povm,
    g: GradientSet,
    memory: ConjugateMemory | None,
    use_steepest: bool,
) -> tuple[DirectionSet, ConjugateMemory]:
    """Plain or Polak-Ribiere direction from the factor gradient Gamma_k = A_k R_k.

    The returned memory always starts from this iteration, so a steepest
    step discards the previous conjugate chain.
    """
    gamma = p.factors @ g.rks
    beta = 0.0
    steepest = use_steepest or memory is None
    if steepest:
        direction = gamma
    else:
        assert memory is not None
        denom = _inner(memory.gradient, memory.gradient)
        if denom > 0:
            beta = max(0.0, _inner(gamma - memory.gradient, gamma) / denom)
        direction = gamma + beta * memory.direction
    return (
        DirectionSet(direction, steepest=steepest, beta=beta),
        ConjugateMemory(gradient=gamma, direction=direction),
    )


def apply_step(p: Povm, d: DirectionSet, eps: float) -> Povm:
    """Move the factors along ``d`` and restore completeness.

    ``B_k = A_k + eps D_k``, then ``A'_k = B_k S^(-1/2)``.

    Raises:
        RankDeficient: if S is singular.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    return _complete(p.factors + eps * d.directions)


def outcome_derivatives(p: Povm, d: DirectionSet) -> np.ndarray:
    """dPi_k/deps at eps = 0 along :func:`apply_step`, shape ``(K, N, N)``."""
    a, dd = p.factors, d.directions
    m = dagger(dd) @ a + dagger(a) @ dd
    t = m.sum(axis=0)
    pis = p.elements
    return m - 0.5 * (t @ pis + pis @ t)


def directional_slope(p: Povm, d: DirectionSet, g: GradientSet) -> float:
    """Analytic derivative of the mutual information along ``d``: sum_k Re tr(dPi_k R_k)."""
    dpis = outcome_derivatives(p, d)
    return float(np.real(np.einsum("kab,kba->", dpis, g.rks)))


def golden_section_max(
    f: Callable[[float], float],
    b: float,
    shrink_tol: float = 1e-6,
    max_evals: int = 100,
) -> tuple[float, float]:
    """Golden-section maximization of ``f`` on ``[0, b]``.

    Both endpoints are sampled, and the best point seen is returned, so the
    result is never worse than ``f(0)``. Ties keep the earliest sample.
    """
    if not b > 0:
        raise ValueError(f"b must be > 0, got {b}")

    best_x, best_f = 0.0, f(0.0)
    evals = 1

    def consider(x: float, fx: float) -> None:
        nonlocal best_x, best_f
        if fx > best_f:
            best_x, best_f = x, fx

    consider(b, f(b))
    lo, hi = 0.0, b
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    evals += 3
    consider(c, fc)
    consider(d, fd)

    while hi - lo > shrink_tol * b and evals < max_evals:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
            consider(c, fc)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
            consider(d, fd)
        evals += 1

    return best_x, best_f


def is_converged(previous_mi: float, current_mi: float, tolerance: float) -> bool:
    """Stop when 2 (current - previous) <= tolerance (current + previous) + 1e-25."""
    return 2.0 * (current_mi - previous_mi) <= tolerance * (current_mi + previous_mi) + 1.0e-25


def _line_objective(e: Ensemble, p: Povm, d: DirectionSet) -> Callable[[float], float]:
    """Mutual information of ``apply_step(p, d, eps)`` as a function of eps.

    B_k^dagger B_k is a quadratic in eps, so its coefficients are formed once
    and each evaluation needs one N x N eigendecomposition. The joint table
    uses tr(rho_j X Q_k X) = tr((X rho_j X) Q_k) with X = S^(-1/2).
    """
    a, dd = p.factors, d.directions
    k = a.shape[0]
    quad = (
        dagger(a) @ a,
        dagger(dd) @ a + dagger(a) @ dd,
        dagger(dd) @ dd,
    )
    s0, s1, s2 = (q.sum(axis=0) for q in quad)
    q0, q1, q2 = (np.swapaxes(q, 1, 2).reshape(k, -1) for q in quad)
    rhos = e.stacked
    num_ops = rhos.shape[0]

    def objective(eps: float) -> float:
        try:
            x = _completion_inverse(s0 + eps * (s1 + eps * s2))
        except RankDeficient:
            return -math.inf
        sigma = (x @ rhos @ x).reshape(num_ops, -1)
        joint = (sigma @ (q0 + eps * (q1 + eps * q2)).T).real
        return mutual_information(ProbTable.from_joint(np.clip(joint, 0.0, 1.0)))

    return objective


def _ascend(
    e: Ensemble,
    cfg: OptimizerConfig,
    k: int,
    restart: int,
    on_progress: ProgressCallback | None,
) -> _Trajectory:
    seed = cfg.seed + restart
    rng = make_rng(seed)
    povm = init_random_povm(e.dim, k, rng)
    table = probability_table(e, povm)
    mi = mutual_information(table)
    initial_mi = mi
    logger.debug("Restart %d (seed %d): initial MI %.12g", restart, seed, mi)

    ls = cfg.line_search
    memory: ConjugateMemory | None = None
    trace: list[float] = []
    steepest_steps = 0
    converged = False

    for iteration in range(1, cfg.max_iterations + 1):
        grads = gradient_operators(e, table)
        use_steepest = bool(rng.random() < cfg.steepest_prob)
        direction, memory = ascent_direction(povm, grads, memory, use_steepest)
        if not direction.steepest and directional_slope(povm, direction, grads) <= 0:
            logger.debug("Iteration %d: conjugate direction not ascending, using gradient",
                         iteration)
            direction, memory = ascent_direction(povm, grads, None, True)
        if direction.steepest:
            steepest_steps += 1

        new_mi = mi
        norm = direction.max_norm()
        if norm > 0 and grads.max_norm() > STATIONARY_TOL:
            unit = direction.scaled(1.0 / norm)
            eps, best = golden_section_max(
                _line_objective(e, povm, unit), ls.bracket_max, ls.shrink_tol, ls.max_evals
            )
            if eps > 0 and best > mi:
                povm = apply_step(povm, unit, eps)
                table = probability_table(e, povm)
                new_mi = mutual_information(table)

        trace.append(new_mi)
        if on_progress:
            on_progress(restart, iteration, new_mi)
        if is_converged(mi, new_mi, cfg.tolerance):
            converged = True
            mi = new_mi
            break
        mi = new_mi

    logger.debug("Restart %d: %d iterations, MI %.12g, converged=%s",
                 restart, len(trace), mi, converged)
    return _Trajectory(trace, povm, converged, initial_mi, steepest_steps)


def run(
    e: Ensemble,
    cfg: OptimizerConfig,
    k_init: int | None = None,
    on_progress: ProgressCallback | None = None,
) -> RunReport:
    """Maximize the mutual information over POVMs with ``cfg.restarts`` random starts.

    Args:
        e: Valid ensemble.
        cfg: Run parameters.
        k_init: Initial number of outcomes; defaults to N^2.
        on_progress: Optional callback(restart, iteration, mi).

    Returns:
        RunReport for the restart with the highest final MI (lowest index on ties).

    Raises:
        InvalidEnsemble: if ``e`` fails validation.
        RankDeficient: if a random start cannot be completed.
    """
    report = validate_ensemble(e)
    if not report.is_valid:
        raise InvalidEnsemble(report)
    k = e.dim**2 if k_init is None else k_init
    if k < 1:
        raise ValueError(f"k_init must be >= 1, got {k}")

    trajectories = [_ascend(e, cfg, k, r, on_progress) for r in range(cfg.restarts)]
    best = 0
    for i, traj in enumerate(trajectories):
        if traj.final_mi > trajectories[best].final_mi:
            best = i
    winner = trajectories[best]

    return RunReport(
        mi_trace=winner.mi_trace,
        final_povm=winner.povm,
        reduced_povm=reduce_povm(winner.povm, e, cfg.merge_tol, cfg.null_tol),
        iterations=len(winner.mi_trace),
        converged=winner.converged,
        config_echo=cfg,
        k_init=k,
        initial_mi=winner.initial_mi,
        best_restart=best,
        restart_mis=[t.final_mi for t in trajectories],
        steepest_steps=winner.steepest_steps,
    )
