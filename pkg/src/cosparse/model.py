"""Random cosparse recovery problems and recovery metrics.

A problem instance is ``y = A x + sigma * e`` where ``omega`` applied to
``x`` has at least ``l`` zero entries, ``A`` is Gaussian with unit-norm
columns and ``e`` is standard normal noise.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import linops
from .errors import DimensionError, InfeasibleCosparsityError

__all__ = [
    "Problem",
    "RecoveryMetrics",
    "SUCCESS_THRESHOLD",
    "gaussian_measurement",
    "gen_cosparse_signal",
    "load_problem",
    "make_problem",
    "null_space",
    "observe",
    "recovery_metrics",
    "relative_error",
    "save_problem",
]

SUCCESS_THRESHOLD = 1e-4
# relative singular value cutoff shared with the brute-force oracle
RANK_RTOL = 1e-10


def null_space(mat, rtol=RANK_RTOL):
    """Orthonormal basis (as columns) of the null space of ``mat``.

    Singular values at or below ``rtol * sigma_max`` count as zero.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    d = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(mat, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(d)
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:].T.copy()


def gen_cosparse_signal(omega, l, seed=None):
    """Draw a unit-norm signal annihilated by ``l`` random rows of ``omega``.

    Returns
    -------
    x : ndarray, shape (d,)
    lam : ndarray of int
        The sorted cosupport that was drawn.

    Raises
    ------
    InfeasibleCosparsityError
        If the selected rows have full column rank.
    """
    omega = linops.as_matrix(omega, "omega")
    p, d = omega.shape
    l = int(l)
    if not 1 <= l <= p:
        raise DimensionError(f"cosparsity l={l} outside [1, {p}]")
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.choice(p, size=l, replace=False))
    basis = null_space(omega[lam])
    if basis.shape[1] == 0:
        raise InfeasibleCosparsityError(
            f"rows {lam.tolist()} of omega have rank {d}; no nonzero {l}-cosparse signal")
    x = basis @ rng.standard_normal(basis.shape[1])
    x /= np.linalg.norm(x)
    return x, lam


def gaussian_measurement(m, d, seed=None):
    """``m x d`` Gaussian matrix with columns scaled to unit Euclidean norm."""
    m, d = int(m), int(d)
    if m < 1 or d < 1:
        raise DimensionError("m and d must be positive")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, d))
    return a / np.linalg.norm(a, axis=0)


def observe(A, x, sigma=0.0, seed=None):
    """Noisy observation ``A @ x + sigma * e`` with ``e ~ N(0, I)``."""
    A = linops.as_matrix(A, "A")
    x = linops.as_vector(x, "x")
    if A.shape[1] != x.size:
        raise DimensionError(f"A has {A.shape[1]} columns but x has length {x.size}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    y = A @ x
    if sigma > 0:
        y = y + sigma * np.random.default_rng(seed).standard_normal(y.size)
    return y


def relative_error(x_hat, x_true):
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise DimensionError(f"shape mismatch {x_hat.shape} vs {x_true.shape}")
    ref = np.linalg.norm(x_true)
    if ref == 0.0:
        raise ValueError("relative error undefined for a zero reference signal")
    return float(np.linalg.norm(x_hat - x_true) / ref)


@dataclass(frozen=True)
class RecoveryMetrics:
    relative_error: float
    success: bool
    iterations: int


def recovery_metrics(x_hat, x_true, iterations=0, threshold=SUCCESS_THRESHOLD):
    err = relative_error(x_hat, x_true)
    return RecoveryMetrics(err, bool(err <= threshold), int(iterations))


@dataclass
class Problem:
    A: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    x_true: np.ndarray
    cosupport_target: np.ndarray
    sigma: float
    seed: int

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def p(self):
        return self.omega.shape[0]

    @property
    def l(self):
        return int(self.cosupport_target.size)


def make_problem(m, d, p, l, sigma=0.0, seed=0, omega=None):
    """Generate a complete problem instance from a single seed.

    The seed is split into independent streams for the operator, the
    signal, the measurement matrix and the noise, so e.g. changing ``m``
    leaves the operator and signal unchanged.  A caller-supplied
    ``omega`` replaces the random tight frame.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]
    if omega is None:
        omega = linops.random_tight_frame(p, d, streams[0])
    else:
        omega = linops.as_matrix(omega, "omega")
        if omega.shape != (p, d):
            raise DimensionError(f"omega has shape {omega.shape}, expected {(p, d)}")
    x, lam = gen_cosparse_signal(omega, l, streams[1])
    A = gaussian_measurement(m, d, streams[2])
    y = observe(A, x, sigma, streams[3])
    return Problem(A=A, y=y, omega=omega, x_true=x, cosupport_target=lam,
                   sigma=float(sigma), seed=int(seed))


def save_problem(problem, directory):
    """Write ``A``, ``y``, ``omega``, ``x_true`` and ``meta.json`` to a directory."""
    os.makedirs(directory, exist_ok=True)
    linops.write_matrix(problem.A, os.path.join(directory, "A.txt"))
    linops.write_vector(problem.y, os.path.join(directory, "y.txt"))
    linops.write_matrix(problem.omega, os.path.join(directory, "omega.txt"))
    linops.write_vector(problem.x_true, os.path.join(directory, "x_true.txt"))
    meta = {
        "m": problem.m, "d": problem.d, "p": problem.p, "l": problem.l,
        "sigma": problem.sigma, "seed": problem.seed,
        "cosupport": [int(i) for i in problem.cosupport_target],
    }
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_problem(directory):
    with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    return Problem(
        A=linops.read_matrix(os.path.join(directory, "A.txt")),
        y=linops.read_vector(os.path.join(directory, "y.txt")),
        omega=linops.read_matrix(os.path.join(directory, "omega.txt")),
        x_true=linops.read_vector(os.path.join(directory, "x_true.txt")),
        cosupport_target=np.asarray(meta["cosupport"], dtype=int),
        sigma=float(meta["sigma"]),
        seed=int(meta["seed"]),
    )
