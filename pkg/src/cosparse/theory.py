"""Closed-form recovery conditions and error-bound constants.

All functions are plain formula evaluators.  Restricted isometry
constants are inputs; certifying them for a concrete matrix is not
attempted.

Notation used throughout:

``block_ratio``
    The ratio ``rho >= 2`` between the block sizes used in the error
    analysis (not the smoothing shrink factor of the solver).
``gap``
    ``kappa**-q * rho**(1 - q/2) - 1``.  Recovery guarantees need
    ``gap > 1``, i.e. ``kappa < rho**(1/q - 1/2) / 2**(1/q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConditionNumberError, TheoryInapplicableError

__all__ = [
    "BoundConstants",
    "DEFAULT_Q_GRID",
    "DEFAULT_RHO_GRID",
    "TheoryInputs",
    "bound_constants",
    "check_condition",
    "condition_gap",
    "lq_sparsity_level",
    "min_feasible_q",
    "solver_error_bound",
    "strong_threshold",
]

DEFAULT_Q_GRID = tuple(round(0.05 * k, 2) for k in range(20, 0, -1))
DEFAULT_RHO_GRID = tuple(range(2, 101))


@dataclass(frozen=True)
class TheoryInputs:
    """Inputs for :func:`check_condition` and :func:`bound_constants`.

    ``delta_rhoS`` and ``delta_rho1S`` are the restricted isometry
    constants at orders ``rho*S`` and ``(rho+1)*S``; they are taken as
    independent values.
    """

    delta_rhoS: float
    delta_rho1S: float
    kappa: float
    block_ratio: float
    q: float
    S: int = 1
    sigma_min: float = 1.0

    def __post_init__(self):
        for name in ("delta_rhoS", "delta_rho1S"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if not self.kappa >= 1.0:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if not self.block_ratio >= 2.0:
            raise ValueError(f"block_ratio must be >= 2, got {self.block_ratio}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.S < 1:
            raise ValueError("S must be positive")
        if not self.sigma_min > 0.0:
            raise ValueError("sigma_min must be positive; rank-deficient operators are not covered")


@dataclass(frozen=True)
class BoundConstants:
    c1: float
    c2: float


def condition_gap(kappa, q, block_ratio):
    return kappa ** (-q) * block_ratio ** (1.0 - q / 2.0) - 1.0


def _gap_power(kappa, q, block_ratio):
    t = condition_gap(kappa, q, block_ratio)
    if t <= 0.0:
        raise ConditionNumberError(
            f"condition number {kappa} too large for q={q}, rho={block_ratio} (gap {t:.6g} <= 0)")
    return t ** (2.0 / q)


def check_condition(inputs):
    """Restricted-isometry condition for stable lq-analysis recovery.

    True iff ``delta_rhoS + T * delta_rho1S < T - 1`` with
    ``T = gap ** (2/q)``.  Since the left side is nonnegative this also
    enforces ``T > 1``, the condition-number hypothesis.
    """
    T = _gap_power(inputs.kappa, inputs.q, inputs.block_ratio)
    return inputs.delta_rhoS + T * inputs.delta_rho1S < T - 1.0


def strong_threshold(kappa, q, block_ratio):
    """Largest ``delta_(rho+1)S`` allowed by the simplified condition.

    ``(T - 1) / (T + 1)`` with ``T = gap ** (2/q)``.  Saturates at 1.0 in
    double precision once ``T`` exceeds about ``2**53``.
    """
    T = _gap_power(kappa, q, block_ratio)
    return (T - 1.0) / (T + 1.0)


def bound_constants(inputs):
    """Constants ``(C1, C2)`` of the stable-recovery error bound.

    ``||x - x_bar||^q <= C1 (2 eps)^q + C2 ||omega x - (omega x)_S||_q^q / S^(q/2 - 1)``

    Evaluated with numerator and denominator multiplied by
    ``rho**(1 - q/2)``, which is algebraically identical and exact for
    integer-valued intermediate results.
    """
    q, rho, kappa = inputs.q, inputs.block_ratio, inputs.kappa
    rq = rho ** (1.0 - q / 2.0)
    kq = kappa ** q
    lo = (1.0 - inputs.delta_rho1S) ** (q / 2.0)
    hi = (1.0 + inputs.delta_rhoS) ** (q / 2.0)
    denom = lo * (rq - kq) - kq * hi
    if not denom > 0.0 or not rq - kq > 0.0:
        raise TheoryInapplicableError(f"C1 denominator {denom / rq:.6g} is not positive")
    c1 = rq / denom
    c2 = 2.0 * inputs.sigma_min ** (-q) / (rq - kq) * (c1 * hi + 1.0)
    return BoundConstants(c1, c2)


def lq_sparsity_level(s1, rho1, q):
    """Sparsity reachable with ``q`` given an l1 guarantee at ``(s1, rho1)``.

    Returns ``(s_q, rho_q)`` with
    ``s_q = floor((rho1 + 1) / (rho1**(1/(2-q)) + 1)) * s1`` and ``rho_q``
    chosen so that ``(rho_q + 1) * s_q == (rho1 + 1) * s1`` exactly;
    ``rho_q`` is returned as a :class:`~fractions.Fraction`.
    """
    s1 = int(s1)
    if s1 < 1:
        raise ValueError("s1 must be a positive integer")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    rho1_f = float(rho1)
    if rho1_f < 2.0:
        raise ValueError("rho1 must be >= 2")
    total = (rho1_f + 1.0) * s1
    L = round(total)
    if abs(total - L) > 1e-9 * max(1.0, total):
        raise ValueError(f"(rho1 + 1) * s1 = {total} is not an integer")
    factor = math.floor((rho1_f + 1.0) / (rho1_f ** (1.0 / (2.0 - q)) + 1.0))
    s_q = factor * s1
    if s_q < 1:
        raise TheoryInapplicableError("no valid S_q: the floor collapses to zero")
    return s_q, Fraction(L, s_q) - 1


def min_feasible_q(delta, kappa, q_grid=DEFAULT_Q_GRID, rho_grid=DEFAULT_RHO_GRID):
    """Scan ``q`` downward for the first point where recovery is guaranteed.

    Returns ``(q, rho)`` for the first ``q`` in ``q_grid`` (sorted
    descending) having some ``rho`` in ``rho_grid`` with
    ``strong_threshold(kappa, q, rho) > delta``, i.e. the least
    nonconvex ``q`` that suffices, with the smallest witnessing ``rho``.
    Returns ``None`` if no grid point qualifies.
    """
    q_grid = sorted(q_grid, reverse=True)
    rho_grid = sorted(rho_grid)
    if not q_grid or not rho_grid:
        raise ValueError("grids must be non-empty")
    for q in q_grid:
        for rho in rho_grid:
            if condition_gap(kappa, q, rho) <= 0.0:
                continue
            if strong_threshold(kappa, q, rho) > delta:
                return q, rho
    return None


def solver_error_bound(delta_2l_p, F0, noise=0.0):
    """Worst-case distance between the solver output and the true signal.

    ``(sqrt(2 F0) + noise) / sqrt(1 - delta)`` where ``F0`` is the
    smoothed objective at the starting point (``lam * sum_i (|w_i . x0|^2
    + eps0^2)^(q/2)`` for an interpolating start) and ``delta`` the
    restricted isometry constant over pairs of cosparse signals.
    """
    if F0 < 0:
        raise ValueError("F0 must be nonnegative")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    if not 0.0 <= delta_2l_p < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta_2l_p}")
    return (math.sqrt(2.0 * F0) + noise) / math.sqrt(1.0 - delta_2l_p)
