"""Exact hafnian evaluation for complex symmetric matrices.

Two independent routes are provided and cross-validated in the test suite:

* :func:`hafnian_naive` sums over all perfect matchings by recursive
  first-row pairing.  Cost grows as ``(2n - 1)!!`` which keeps it honest
  only up to 16 x 16, but it is trivially correct and serves as the
  reference oracle.
* :func:`hafnian_powertrace` uses the inclusion-exclusion formula over
  subsets of index pairs, with the per-subset term assembled from power
  traces of the pair-swapped submatrix.  Cost is ``O(2^n poly(n))`` which
  handles desk-scale matrices up to 32 x 32.

:func:`hafnian` dispatches between the two on size.

The subset loop of the power-trace method can be partitioned across
worker threads.  Every subset contribution is written to a fixed slot and
the final reduction runs over a deterministic pairwise tree with
compensated accumulation, so the result is bitwise identical for any
worker count.  The default worker count is 1; the ``HYBRID_SAMPLER_THREADS``
environment variable raises the cap.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np

__all__ = [
    "hafnian",
    "hafnian_naive",
    "hafnian_powertrace",
    "HafnianSizeError",
    "THREADS_ENV_VAR",
    "NAIVE_MAX_DIM",
    "POWERTRACE_MAX_DIM",
]

THREADS_ENV_VAR = "HYBRID_SAMPLER_THREADS"

NAIVE_MAX_DIM = 16
POWERTRACE_MAX_DIM = 32

# Subsets are processed in fixed-size batches so that the work split never
# depends on how many workers consume the batches.
_BATCH = 2048


class HafnianSizeError(ValueError):
    """The input matrix exceeds the evaluation budget of the method."""


def resolve_workers(workers=None):
    """Return the effective worker count.

    Explicit arguments win, then the ``HYBRID_SAMPLER_THREADS`` environment
    variable, then the serial default of 1.
    """
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return max(1, int(env))
    return 1


def _checked_matrix(mat, tol_symmetry, max_dim, caller):
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("The input matrix is not square")
    n = a.shape[0]
    if n % 2 != 0:
        raise ValueError(
            "The input matrix has odd dimension %d; hafnians are defined "
            "for even-dimensional symmetric matrices" % n
        )
    if n > max_dim:
        raise HafnianSizeError(
            "%s supports matrices up to %d x %d, got %d x %d"
            % (caller, max_dim, max_dim, n, n)
        )
    if n:
        residual = np.max(np.abs(a - a.T))
        scale = max(1.0, np.max(np.abs(a)))
        if residual > tol_symmetry * scale:
            raise ValueError(
                "The input matrix is not symmetric: max |A - A^T| = %.3e" % residual
            )
        a = 0.5 * (a + a.T)
    return a


def hafnian_naive(mat, *, tol_symmetry=1e-8):
    """Hafnian by explicit summation over perfect matchings.

    Args:
        mat (array): even-dimensional complex symmetric matrix, at most
            16 x 16
        tol_symmetry (float): largest tolerated relative asymmetry

    Returns:
        complex: the hafnian
    """
    a = _checked_matrix(mat, tol_symmetry, NAIVE_MAX_DIM, "hafnian_naive")
    return _matching_sum(a, tuple(range(a.shape[0])))


def _matching_sum(a, idx):
    if not idx:
        return 1.0 + 0.0j
    first = idx[0]
    rest = idx[1:]
    total = 0.0 + 0.0j
    for pos, j in enumerate(rest):
        aij = a[first, j]
        if aij != 0:
            total += aij * _matching_sum(a, rest[:pos] + rest[pos + 1 :])
    return total


def hafnian_powertrace(mat, *, tol_symmetry=1e-8, workers=None):
    """Hafnian by the inclusion-exclusion power-trace formula.

    For each nonempty subset S of the n index pairs, the eigenvalues of
    the pair-swapped submatrix give its power traces; the degree-n
    coefficient of ``exp(sum_k tr((XA_S)^k) z^k / (2k))`` enters the sum
    with sign ``(-1)^(n - |S|)``.

    Args:
        mat (array): even-dimensional complex symmetric matrix, at most
            32 x 32
        tol_symmetry (float): largest tolerated relative asymmetry
        workers (int): thread count for the subset loop; defaults to the
            ``HYBRID_SAMPLER_THREADS`` environment variable or 1.  The
            result does not depend on it.

    Returns:
        complex: the hafnian
    """
    a = _checked_matrix(mat, tol_symmetry, POWERTRACE_MAX_DIM, "hafnian_powertrace")
    dim = a.shape[0]
    if dim == 0:
        return 1.0 + 0.0j
    n = dim // 2

    # Exact power-of-two rescaling keeps eigenvalue powers in range for
    # large-entry matrices without perturbing any mantissa bits.
    peak = np.max(np.abs(a))
    scale = 1.0
    if peak > 4.0:
        scale = 2.0 ** math.ceil(math.log2(peak))
        a = a / scale

    tasks = []
    offset = 0
    for m in range(1, n + 1):
        combos = list(combinations(range(n), m))
        for start in range(0, len(combos), _BATCH):
            block = combos[start : start + _BATCH]
            tasks.append((m, block, offset + start))
        offset += len(combos)
    contributions = np.empty(offset, dtype=complex)

    nworkers = resolve_workers(workers)
    if nworkers == 1 or len(tasks) == 1:
        for task in tasks:
            _subset_batch(a, n, task, contributions)
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            list(pool.map(lambda t: _subset_batch(a, n, t, contributions), tasks))

    value = _compensated_sum(contributions)
    if scale != 1.0:
        value *= scale**n
    return value


def _power_sums_by_matmul(mats, n):
    """Power traces tr(B^k), k = 1..n, by explicit batched matrix powers."""
    powers = np.empty((mats.shape[0], n), dtype=complex)
    cur = mats
    powers[:, 0] = np.trace(cur, axis1=1, axis2=2)
    for k in range(1, n):
        cur = cur @ mats
        powers[:, k] = np.trace(cur, axis1=1, axis2=2)
    return powers


def _subset_batch(a, n, task, out):
    """Evaluate one fixed batch of subsets and store the signed terms."""
    m, block, start = task
    b = len(block)
    pairs = np.asarray(block)
    # Expand pair labels to matrix indices: pair p covers rows 2p, 2p + 1.
    cols = np.empty((b, 2 * m), dtype=np.intp)
    cols[:, 0::2] = 2 * pairs
    cols[:, 1::2] = 2 * pairs + 1
    sub = a[cols[:, :, None], cols[:, None, :]]
    # Left-multiplying by the direct sum of pair swaps permutes rows
    # within each pair.
    perm = np.arange(2 * m).reshape(-1, 2)[:, ::-1].ravel()
    swapped = sub[:, perm, :]

    # Power sums tr((XA_S)^k) for k = 1..n.
    try:
        lam = np.linalg.eigvals(swapped)
    except np.linalg.LinAlgError:
        # The eigensolver can fail to converge on heavily replicated
        # rank-deficient blocks; matrix powers need no eigendecomposition
        # and the failure is input-determined, so determinism holds.
        powers = _power_sums_by_matmul(swapped, n)
    else:
        powers = np.empty((b, n), dtype=complex)
        cur = lam.copy()
        powers[:, 0] = cur.sum(axis=1)
        for k in range(1, n):
            cur *= lam
            powers[:, k] = cur.sum(axis=1)

    # Degree-n coefficient of exp(sum_k powers_k z^k / (2k)), batched.
    coeff = np.zeros((b, n + 1), dtype=complex)
    coeff[:, 0] = 1.0
    for k in range(1, n + 1):
        factor = powers[:, k - 1] / (2 * k)
        prev = coeff.copy()
        powfactor = np.ones(b, dtype=complex)
        for j in range(1, n // k + 1):
            powfactor = powfactor * factor / j
            coeff[:, k * j :] += prev[:, : n + 1 - k * j] * powfactor[:, None]

    sign = -1.0 if (n - m) % 2 else 1.0
    out[start : start + b] = sign * coeff[:, n]


def _compensated_sum(values):
    """Deterministic pairwise reduction with Kahan compensation at leaves."""
    n = len(values)
    if n == 0:
        return 0.0 + 0.0j
    if n <= 128:
        total = 0.0 + 0.0j
        comp = 0.0 + 0.0j
        for v in values:
            y = v - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total
    mid = n // 2
    return _compensated_sum(values[:mid]) + _compensated_sum(values[mid:])


def hafnian(mat, *, tol_symmetry=1e-8, workers=None):
    """Hafnian of an even-dimensional complex symmetric matrix.

    Dispatches to the matching sum for matrices up to 8 x 8 and to the
    power-trace method above that.
    """
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("The input matrix is not square")
    if a.shape[0] <= 8:
        return hafnian_naive(a, tol_symmetry=tol_symmetry)
    return hafnian_powertrace(a, tol_symmetry=tol_symmetry, workers=workers)
