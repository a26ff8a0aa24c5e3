"""Analysis operators and dense matrix/vector plumbing.

Matrices are plain 2-D ``float64`` numpy arrays and vectors 1-D arrays.
The text format used by :func:`read_matrix`/:func:`write_matrix` is::

    <rows> <cols>
    a11 a12 ...
    a21 a22 ...

with whitespace-separated entries in row-major order.  Vectors use a
single ``<len>`` header.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, EntryCountError, HeaderError, TokenError

__all__ = [
    "OperatorSpectrum",
    "as_matrix",
    "as_vector",
    "cosupport",
    "default_zero_tol",
    "fd2d_operator",
    "fd2d_rows",
    "random_tight_frame",
    "read_matrix",
    "read_vector",
    "spectrum",
    "write_matrix",
    "write_vector",
]

FLOAT_FMT = "{:.17g}"


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float array, raising on bad input."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


# ---------------------------------------------------------------------------
# Operator construction
# ---------------------------------------------------------------------------

def random_tight_frame(p, d, seed=None):
    """Random ``p x d`` operator with orthonormal columns.

    A standard normal ``p x d`` matrix is orthonormalised by a thin QR
    decomposition, so ``omega.T @ omega == I_d`` up to rounding.  The
    signs of ``R``'s diagonal are folded back into ``Q`` so the result
    is Haar distributed rather than biased by the QR convention.

    Parameters
    ----------
    p, d : int
        Number of rows (analysis coefficients) and columns (signal length).
    seed : int or numpy.random.Generator, optional

    Returns
    -------
    omega : ndarray, shape (p, d)
    """
    p, d = int(p), int(d)
    if d < 1 or p < 1:
        raise DimensionError("p and d must be positive")
    if p < d:
        raise DimensionError(f"a tight frame needs p >= d, got p={p}, d={d}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((p, d))
    q, r = np.linalg.qr(g, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def fd2d_rows(h, w):
    """Number of adjacent-pixel differences in an ``h x w`` image."""
    return h * (w - 1) + w * (h - 1)


def fd2d_operator(h, w, sparse=False):
    """2-D finite difference operator for row-major ``h x w`` images.

    Horizontal differences ``x[i, j+1] - x[i, j]`` come first in
    row-major scan order, followed by vertical differences
    ``x[i+1, j] - x[i, j]``.

    Dense output is the default.  Pass ``sparse=True`` for a CSR matrix
    when the image is too large to hold the operator densely (a 256x256
    image gives a 130560 x 65536 operator).
    """
    h, w = int(h), int(w)
    if h < 1 or w < 1 or h * w < 2:
        raise DimensionError(f"image {h}x{w} has no adjacent pixel pairs")
    idx = np.arange(h * w).reshape(h, w)
    left = idx[:, :-1].ravel()
    right = idx[:, 1:].ravel()
    top = idx[:-1, :].ravel()
    bottom = idx[1:, :].ravel()
    minus = np.concatenate([left, top])
    plus = np.concatenate([right, bottom])
    p = minus.size
    rows = np.repeat(np.arange(p), 2)
    cols = np.column_stack([plus, minus]).ravel()
    vals = np.tile([1.0, -1.0], p)
    op = sp.csr_matrix((vals, (rows, cols)), shape=(p, h * w))
    return op if sparse else op.toarray()


def default_zero_tol(z):
    return 1e-12 * (1.0 + float(np.max(np.abs(z))))


def cosupport(omega, x, tol=None):
    """Indices ``j`` with ``|<omega_j, x>| <= tol``, as a sorted int array.

    With ``tol=None`` the threshold is ``1e-12 * (1 + max|omega @ x|)``.
    The cosparsity is the length of the result.
    """
    omega = as_matrix(omega, "omega")
    x = as_vector(x, "x")
    if omega.shape[1] != x.size:
        raise DimensionError(f"omega has {omega.shape[1]} columns but x has length {x.size}")
    z = omega @ x
    if tol is None:
        tol = default_zero_tol(z)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return np.flatnonzero(np.abs(z) <= tol)


@dataclass(frozen=True)
class OperatorSpectrum:
    sigma_max: float
    sigma_min: float
    kappa: float  # math.inf when sigma_min == 0

    @property
    def full_column_rank(self):
        return self.sigma_min > 0.0


def spectrum(omega):
    """Extreme singular values and condition number of ``omega``.

    Singular values below ``max(p, d) * eps * sigma_max`` are reported as
    exactly zero; an operator with fewer rows than columns always has
    ``sigma_min == 0``.
    """
    omega = as_matrix(omega, "omega")
    p, d = omega.shape
    s = np.linalg.svd(omega, compute_uv=False)
    smax = float(s[0])
    smin = float(s[-1]) if p >= d else 0.0
    if smin <= max(p, d) * np.finfo(float).eps * smax:
        smin = 0.0
    kappa = smax / smin if smin > 0 else math.inf
    return OperatorSpectrum(smax, smin, kappa)


# ---------------------------------------------------------------------------
# Text I/O
# ---------------------------------------------------------------------------

def _parse(path, header_len):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise HeaderError("missing header", line=1)
    head = lines[0].split()
    if len(head) != header_len:
        raise HeaderError(f"expected {header_len} header field(s), got {len(head)}", line=1)
    dims = []
    for k, tok in enumerate(head, start=1):
        try:
            n = int(tok)
        except ValueError:
            raise HeaderError(f"non-integer dimension {tok!r}", line=1, column=k) from None
        if n < 1:
            raise HeaderError(f"dimension must be positive, got {n}", line=1, column=k)
        dims.append(n)
    values = []
    count = 0
    for lineno, text in enumerate(lines[1:], start=2):
        for tok in text.split():
            count += 1
            try:
                v = float(tok)
            except ValueError:
                raise TokenError(f"non-numeric token {tok!r}", line=lineno, column=count) from None
            if not math.isfinite(v):
                raise TokenError(f"non-finite token {tok!r}", line=lineno, column=count)
            values.append(v)
    expected = math.prod(dims)
    if count != expected:
        raise EntryCountError(f"header announces {expected} entries, found {count}")
    return dims, np.array(values, dtype=float)


def read_matrix(path):
    (rows, cols), vals = _parse(path, 2)
    return vals.reshape(rows, cols)


def read_vector(path):
    _, vals = _parse(path, 1)
    return vals


def write_matrix(matrix, path):
    matrix = as_matrix(matrix)
    rows, cols = matrix.shape
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(f"{rows} {cols}\n")
        for row in matrix:
            fh.write(" ".join(FLOAT_FMT.format(v) for v in row))
            fh.write("\n")


def write_vector(vector, path):
    vector = as_vector(vector)
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(f"{vector.size}\n")
        fh.write("\n".join(FLOAT_FMT.format(v) for v in vector))
        fh.write("\n")
