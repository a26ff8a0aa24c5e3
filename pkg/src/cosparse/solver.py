"""Iteratively reweighted least squares for lq-analysis recovery (CoIRLq).

Minimises the smoothed objective

    F(x, eps) = 1/2 ||y - A x||^2 + lam * sum_i (|w_i . x|^alpha + eps^alpha)^(q/alpha)

by alternating three closed-form steps:

1. weights      eta_i = (|w_i . x|^alpha + eps^alpha)^(q/alpha - 1)
2. signal       x = argmin 1/2 ||y - A x||^2 + (lam q / alpha) sum_i eta_i |w_i . x|^alpha
3. smoothing    eps = min(eps, shrink * r_l(|omega x|))

where ``w_i`` is the i-th row of the analysis operator ``omega`` and
``r_l`` is the l-th smallest magnitude.  Each sweep does not increase
``F``; the iteration stops once ``eps`` has reached zero and the iterate
has stalled.

Floating point has no exact zeros, so ``eps <= eps_floor`` is treated as
zero and the weights are formed with ``max(eps, eps_floor)`` to stay
finite.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from . import linops
from .errors import ConfigError, DimensionError, InfiniteWeightError, LinearSolveError

__all__ = [
    "SolverConfig",
    "SolverResult",
    "TraceRow",
    "coirlq_step",
    "epsilon_update",
    "lq_penalty",
    "objective",
    "solve",
    "variational_objective",
    "weight_update",
    "x_update",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs for :func:`solve`.

    ``l`` is the cosparsity level driving the smoothing update and
    ``shrink`` the factor in ``(0, 1)`` applied to the l-th smallest
    analysis coefficient.
    """

    q: float
    l: int
    lam: float = 1e-4
    alpha: float = 2.0
    shrink: float = 0.5
    tau: float = 1e-8
    eps0: float = 1.0
    eps_floor: float = 1e-12
    max_iter: int = 1000
    descent_rtol: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ConfigError(f"q must lie in (0, 1], got {self.q}")
        if self.alpha < 1.0:
            raise ConfigError(f"alpha must be >= 1, got {self.alpha}")
        if not self.lam > 0.0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if int(self.l) != self.l or self.l < 1:
            raise ConfigError(f"l must be a positive integer, got {self.l}")
        if not 0.0 < self.shrink < 1.0:
            raise ConfigError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not self.eps0 > 0.0:
            raise ConfigError(f"eps0 must be positive, got {self.eps0}")
        if self.eps_floor < 0.0:
            raise ConfigError("eps_floor must be nonnegative")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter}")

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return SolverConfig(**values)

    def to_dict(self):
        return asdict(self)


class TraceRow(NamedTuple):
    k: int
    F: float
    eps: float
    diff_inf: float


@dataclass
class SolverResult:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    initial_objective: float = math.nan
    objective: float = math.nan
    eps: float = math.nan
    warnings: list = field(default_factory=list)

    def objectives(self):
        """Objective sequence including the starting point."""
        return np.array([self.initial_objective] + [row.F for row in self.trace])

    def write_trace(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TraceRow._fields)
            for row in self.trace:
                writer.writerow([row.k, f"{row.F:.17g}", f"{row.eps:.17g}", f"{row.diff_inf:.17g}"])


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def weight_update(z, eps, q, alpha=2.0):
    """Minimising weights ``(|z|^alpha + eps^alpha)^(q/alpha - 1)``."""
    z = np.asarray(z, dtype=float)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    base = np.abs(z) ** alpha + eps ** alpha
    if np.any(base == 0.0):
        raise InfiniteWeightError("zero coefficient with zero smoothing gives an infinite weight")
    return base ** (q / alpha - 1.0)


# Above this weight spread the normal equations lose the signal subspace
# to rounding; switch to QR on the stacked system.
_CHOLESKY_SPREAD = 1e4


def _min_eig(M):
    return float(np.linalg.eigvalsh(M)[0]) if np.all(np.isfinite(M)) else math.nan


def _stacked_qr_solve(A, y, omega, eta, c):
    """Least squares on ``[sqrt(c eta) * omega; A] x ~ [0; y]``.

    Rows are ordered by decreasing weight, which keeps Householder QR
    accurate when the weights span many orders of magnitude.
    """
    w = np.sqrt(c * eta)
    order = np.argsort(-w, kind="stable")
    B = np.vstack([omega[order] * w[order, None], A])
    rhs = np.concatenate([np.zeros(w.size), y])
    Q, R = sla.qr(B, mode="economic", check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.size < B.shape[1] or diag.min() <= B.shape[0] * np.finfo(float).eps * diag.max():
        M = B.T @ B
        raise LinearSolveError(
            f"weighted system is singular (min eigenvalue {_min_eig(M):.3g})", min_eig=_min_eig(M))
    return sla.solve_triangular(R, Q.T @ rhs, check_finite=False)


def _weighted_ls_solve(A, y, AtA, Aty, omega, eta, c):
    """Minimise ``1/2 ||y - A x||^2 + (c/2) sum_i eta_i (w_i . x)^2``.

    Cholesky on the normal equations
    ``(A^T A + c omega^T diag(eta) omega) x = A^T y`` while the weights are
    moderate, stacked QR once they are not.
    """
    scale = max(1.0, float(np.trace(AtA)) / AtA.shape[0])
    if c * float(np.max(eta, initial=0.0)) <= _CHOLESKY_SPREAD * scale:
        M = AtA + c * ((omega.T * eta) @ omega)
        try:
            return sla.cho_solve(sla.cho_factor(M, check_finite=False), Aty, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            log.debug("Cholesky failed, falling back to QR")
    return _stacked_qr_solve(A, y, omega, eta, c)


def x_update(A, y, omega, eta, lam, q):
    """Weighted least-squares step for ``alpha = 2``.

    Minimises ``1/2 ||y - A x||^2 + (lam q / 2) sum_i eta_i (w_i . x)^2``
    whose normal equations are
    ``(A^T A + lam q omega^T diag(eta) omega) x = A^T y``.
    """
    A = linops.as_matrix(A, "A")
    omega = linops.as_matrix(omega, "omega")
    y = linops.as_vector(y, "y")
    eta = np.asarray(eta, dtype=float)
    _check_shapes(A, y, omega)
    if eta.shape != (omega.shape[0],):
        raise DimensionError(f"eta has shape {eta.shape}, expected ({omega.shape[0]},)")
    if np.any(eta < 0):
        raise ValueError("weights must be nonnegative")
    return _weighted_ls_solve(A, y, A.T @ A, A.T @ y, omega, eta, lam * q)


def epsilon_update(z, eps_prev, shrink, l, eps_floor=1e-12):
    """``min(eps_prev, shrink * r_l)`` with ``r_l`` the l-th smallest ``|z_i|``.

    Results at or below ``eps_floor`` are snapped to exactly zero.
    """
    z = np.abs(np.asarray(z, dtype=float))
    l = int(l)
    if not 1 <= l <= z.size:
        raise ValueError(f"l={l} outside [1, {z.size}]")
    r_l = np.partition(z, l - 1)[l - 1]
    eps = min(eps_prev, shrink * r_l)
    return 0.0 if eps <= eps_floor else float(eps)


def lq_penalty(z, q):
    """``sum_i |z_i|^q``."""
    return float(np.sum(np.abs(np.asarray(z, dtype=float)) ** q))


def objective(x, eps, A, y, omega, lam, q, alpha=2.0):
    """Smoothed objective ``F(x, eps)`` with the weights at their minimiser."""
    r = y - A @ x
    z = omega @ x
    return float(0.5 * (r @ r) + lam * np.sum((np.abs(z) ** alpha + eps ** alpha) ** (q / alpha)))


def variational_objective(x, eps, eta, A, y, omega, lam, q, alpha=2.0):
    """Objective for explicit weights ``eta``, before minimising over them.

    Equals :func:`objective` when ``eta`` comes from :func:`weight_update`,
    and is larger for any other positive ``eta``.
    """
    if alpha <= q:
        raise ValueError("variational form needs alpha > q")
    eta = np.asarray(eta, dtype=float)
    r = y - A @ x
    z = omega @ x
    inner = eta * (np.abs(z) ** alpha + eps ** alpha) + (alpha - q) / q * eta ** (-q / (alpha - q))
    return float(0.5 * (r @ r) + lam * q / alpha * np.sum(inner))


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------

def _check_shapes(A, y, omega):
    if A.shape[1] != omega.shape[1]:
        raise DimensionError(f"A has {A.shape[1]} columns but omega has {omega.shape[1]}")
    if y.size != A.shape[0]:
        raise DimensionError(f"y has length {y.size} but A has {A.shape[0]} rows")


def coirlq_step(x, eps, A, y, omega, config, AtA=None, Aty=None):
    """One sweep: weights from ``(x, eps)``, then signal, then smoothing.

    Returns the new ``(x, eps)``.  A pure function of its inputs;
    ``AtA``/``Aty`` are optional precomputed products.
    """
    if AtA is None:
        AtA, Aty = A.T @ A, A.T @ y
    eps_w = max(eps, config.eps_floor)
    eta = weight_update(omega @ x, eps_w, config.q, config.alpha)
    x_new = _weighted_ls_solve(A, y, AtA, Aty, omega, eta, config.lam * config.q)
    eps_new = epsilon_update(omega @ x_new, eps, config.shrink, config.l, config.eps_floor)
    return x_new, eps_new


def solve(A, y, omega, config, x0=None):
    """Recover a cosparse signal from ``y ~ A x``.

    Parameters
    ----------
    A : ndarray, shape (m, d)
    y : ndarray, shape (m,)
    omega : ndarray, shape (p, d)
    config : SolverConfig
    x0 : ndarray, optional
        Starting point.  Defaults to the minimum-norm solution of
        ``A x = y``.

    Returns
    -------
    SolverResult
        ``trace`` holds one row per sweep.  Its objective column is
        evaluated at the smoothing level used for the weights,
        ``max(eps, eps_floor)``, which makes the sequence monotone;
        ``objective`` is ``F(x_hat, eps)`` at the final ``eps``.
    """
    A = linops.as_matrix(A, "A")
    omega = linops.as_matrix(omega, "omega")
    y = linops.as_vector(y, "y")
    _check_shapes(A, y, omega)
    if config.alpha != 2.0:
        raise ConfigError("the signal step is implemented for alpha = 2 only")
    if config.l > omega.shape[0]:
        raise ConfigError(f"l={config.l} exceeds the {omega.shape[0]} rows of omega")

    q, lam, floor = config.q, config.lam, config.eps_floor
    AtA = A.T @ A
    Aty = A.T @ y
    if x0 is None:
        x = np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        x = linops.as_vector(x0, "x0").copy()
    eps = float(config.eps0)

    F_prev = objective(x, max(eps, floor), A, y, omega, lam, q)
    result = SolverResult(x_hat=x, iterations=0, converged=False, initial_objective=F_prev)
    for k in range(1, config.max_iter + 1):
        x_new, eps = coirlq_step(x, eps, A, y, omega, config, AtA, Aty)
        diff = float(np.max(np.abs(x_new - x)))
        x = x_new
        F = objective(x, max(eps, floor), A, y, omega, lam, q)
        if F > F_prev + config.descent_rtol * (1.0 + F_prev):
            msg = f"objective increased at k={k}: {F_prev:.17g} -> {F:.17g}"
            log.warning(msg)
            result.warnings.append(msg)
        result.trace.append(TraceRow(k, F, eps, diff))
        F_prev = F
        if diff <= config.tau and eps <= floor:
            result.converged = True
            break
    result.x_hat = x
    result.iterations = k
    result.eps = eps
    result.objective = objective(x, eps, A, y, omega, lam, q)
    return result
