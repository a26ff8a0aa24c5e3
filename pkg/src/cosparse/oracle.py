"""Exhaustive global solver for tiny lq-analysis problems.

Solves ``min ||omega x||_q^q  s.t.  ||y - A x||_2 <= noise_bound`` by
walking the union of subspaces ``{x : omega_L x = 0}`` over every
cosupport ``L`` with ``|L| >= l_min``.  Within each subspace the
least-squares point is the candidate; among feasible candidates the
smallest penalty wins.

For noiseless data and ``l_min <= d - m`` this is the exact global
minimum: the penalty is concave on every sign cell of ``omega x`` (or
linear when ``q = 1``), so it is minimised at a vertex of the feasible
set, and every vertex has at least ``d - m`` zero analysis coefficients.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linops
from .errors import CombinatorialGuardError, DimensionError
from .model import null_space

__all__ = ["OracleResult", "brute_force_lq", "MAX_ROWS", "MAX_FREE_ROWS"]

MAX_ROWS = 24
MAX_FREE_ROWS = 8
FEASIBILITY_SLACK = 1e-9
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    x_star: np.ndarray | None
    objective: float
    cosupport: tuple
    feasible: bool
    candidates: int = 0

    def to_dict(self):
        return {
            "x_star": None if self.x_star is None else [float(v) for v in self.x_star],
            "objective": self.objective,
            "cosupport": list(self.cosupport),
            "feasible": self.feasible,
            "candidates": self.candidates,
        }


def _better(obj, lam, best_obj, best_lam):
    if best_lam is None:
        return True
    tol = _TIE_RTOL * max(1.0, abs(best_obj))
    if obj < best_obj - tol:
        return True
    if obj > best_obj + tol:
        return False
    if len(lam) != len(best_lam):
        return len(lam) > len(best_lam)
    return lam < best_lam


def brute_force_lq(A, y, omega, q, noise_bound=0.0, l_min=1):
    """Global minimiser of ``||omega x||_q^q`` over a residual ball.

    Parameters
    ----------
    A, y, omega : arrays
    q : float in (0, 1]
    noise_bound : float
        Radius of the residual constraint.
    l_min : int
        Smallest cosupport size enumerated.

    Ties in the objective are broken by the larger cosupport, then by
    the lexicographically smaller one.
    """
    A = linops.as_matrix(A, "A")
    omega = linops.as_matrix(omega, "omega")
    y = linops.as_vector(y, "y")
    if A.shape[1] != omega.shape[1] or y.size != A.shape[0]:
        raise DimensionError("A, y and omega have incompatible shapes")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    if noise_bound < 0:
        raise ValueError("noise_bound must be nonnegative")
    p, d = omega.shape
    l_min = int(l_min)
    if l_min < 1 or l_min > p:
        raise ValueError(f"l_min={l_min} outside [1, {p}]")
    if p > MAX_ROWS or p - l_min > MAX_FREE_ROWS:
        raise CombinatorialGuardError(
            f"enumeration too large: p={p} (max {MAX_ROWS}), p - l_min={p - l_min} (max {MAX_FREE_ROWS})")

    limit = noise_bound + FEASIBILITY_SLACK
    best = (np.inf, None, None)
    seen = 0
    for size in range(p, l_min - 1, -1):
        for lam in itertools.combinations(range(p), size):
            seen += 1
            basis = null_space(omega[list(lam)])
            if basis.shape[1] == 0:
                x = np.zeros(d)
            else:
                coef = np.linalg.lstsq(A @ basis, y, rcond=None)[0]
                x = basis @ coef
            if np.linalg.norm(y - A @ x) > limit:
                continue
            z = omega @ x
            z[list(lam)] = 0.0  # exact zeros by construction
            obj = float(np.sum(np.abs(z) ** q))
            if _better(obj, lam, best[0], best[2]):
                best = (obj, x, lam)
    obj, x, lam = best
    if lam is None:
        return OracleResult(None, np.inf, (), False, seen)
    return OracleResult(x, obj, tuple(lam), True, seen)
